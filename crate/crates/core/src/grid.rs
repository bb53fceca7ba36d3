//! Rectangular parameter grids over `(u, v, r)` used by the spectrum search
//! and the correlation maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dim, TargetParams};

/// One grid axis: a single value or `n` evenly spaced values on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Fixed(f64),
    Range { lo: f64, hi: f64, n: usize },
}

impl Axis {
    pub fn range(lo: f64, hi: f64, n: usize) -> Self {
        Axis::Range { lo, hi, n }
    }

    pub fn len(&self) -> usize {
        match *self {
            Axis::Fixed(_) => 1,
            Axis::Range { n, .. } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        match *self {
            Axis::Range { lo, hi, n } if n > 1 => (hi - lo) / (n - 1) as f64,
            _ => 0.0,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        match *self {
            Axis::Fixed(v) => v,
            Axis::Range { lo, hi, n } => {
                if n <= 1 {
                    lo
                } else if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            }
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        match *self {
            Axis::Fixed(v) if v.is_nan() => Err(Error::Domain(format!("{name}: NaN value"))),
            Axis::Range { lo, hi, n } if n == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() => {
                Err(Error::Domain(format!("{name}: bad range [{lo}, {hi}] with {n} points")))
            }
            _ => Ok(()),
        }
    }
}

/// Cartesian product of three axes, traversed row-major in `(u, v, r)`
/// order (r fastest). Linear grids carry `v = Fixed(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub dim: Dim,
    pub u: Axis,
    pub v: Axis,
    pub r: Axis,
}

impl ParamGrid {
    pub fn linear(u: Axis, r: Axis) -> Result<Self> {
        let g = ParamGrid {
            dim: Dim::Linear,
            u,
            v: Axis::Fixed(0.0),
            r,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn planar(u: Axis, v: Axis, r: Axis) -> Result<Self> {
        let g = ParamGrid {
            dim: Dim::Planar,
            u,
            v,
            r,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        self.u.validate("u")?;
        self.v.validate("v")?;
        self.r.validate("r")?;
        if self.dim == Dim::Linear && self.v != Axis::Fixed(0.0) {
            return Err(Error::DimensionMismatch("linear grids have no v axis".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.u.len(), self.v.len(), self.r.len()]
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, iu: usize, iv: usize, ir: usize) -> usize {
        let [_, nv, nr] = self.shape();
        (iu * nv + iv) * nr + ir
    }

    pub fn unflat(&self, i: usize) -> [usize; 3] {
        let [_, nv, nr] = self.shape();
        [i / (nv * nr), (i / nr) % nv, i % nr]
    }

    pub fn params(&self, i: usize) -> TargetParams {
        let [iu, iv, ir] = self.unflat(i);
        let (u, v, r) = (self.u.value(iu), self.v.value(iv), self.r.value(ir));
        match self.dim {
            Dim::Linear => TargetParams::linear(u, r),
            Dim::Planar => TargetParams::planar(u, v, r),
        }
    }

    /// Axes that vary, in `(u, v, r)` order, as indices 0, 1, 2.
    pub fn free_axes(&self) -> Vec<usize> {
        self.shape()
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 1)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn axis(&self, k: usize) -> &Axis {
        match k {
            0 => &self.u,
            1 => &self.v,
            _ => &self.r,
        }
    }

    /// The same grid re-centred on `center` with half-width `half` (clamped
    /// to the original bounds) and `n` points per free axis.
    pub fn refine(&self, center: &TargetParams, half: [f64; 3], n: usize) -> ParamGrid {
        let (cu, cv, cr) = center.uvr();
        let c = [cu, cv, cr];
        let sub = |k: usize| -> Axis {
            match *self.axis(k) {
                Axis::Fixed(v) => Axis::Fixed(v),
                Axis::Range { lo, hi, .. } => {
                    let a = (c[k] - half[k]).max(lo);
                    let b = (c[k] + half[k]).min(hi);
                    Axis::Range { lo: a, hi: b, n }
                }
            }
        };
        ParamGrid {
            dim: self.dim,
            u: sub(0),
            v: sub(1),
            r: sub(2),
        }
    }
}
