//! Steering-vector correlation `R(η′) = |α(η)ᴴα(η′)|²/N²` and lobe metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::steering_from_points;
use crate::error::{Error, Result};
use crate::geometry::{Dim, Geometry, TargetParams};
use crate::grid::ParamGrid;

/// Cells within this of the maximum count as global peaks.
pub const PEAK_TIE_TOL: f64 = 1e-12;

/// Normalized squared inner product of two steering vectors.
pub fn correlation_value(geom: &Geometry, eta_ref: &TargetParams, eta_q: &TargetParams, wavelength: f64) -> f64 {
    let pts = geom.points();
    let a = steering_from_points(&pts, eta_ref, wavelength);
    let b = steering_from_points(&pts, eta_q, wavelength);
    let n = pts.len() as f64;
    a.inner(&b).norm_sqr() / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Projection {
    #[default]
    Parameter,
    /// `(ru, r√(1−u²))` for linear arrays, `(ru, rv)` for planar arrays.
    Cartesian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMap {
    pub reference: TargetParams,
    pub grid: ParamGrid,
    pub values: Vec<f64>,
    pub cartesian: Option<Vec<[f64; 2]>>,
}

impl CorrelationMap {
    /// Largest value over cells whose parameters satisfy `keep`.
    pub fn max_where(&self, keep: impl Fn(&TargetParams) -> bool) -> Option<(TargetParams, f64)> {
        let mut best: Option<(TargetParams, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            let p = self.grid.params(i);
            if keep(&p) && best.is_none_or(|(_, b)| v > b) {
                best = Some((p, v));
            }
        }
        best
    }

    /// Rows `u,v,r,R` plus `x,y` when projected.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.cartesian.is_some() { "u,v,r,R,x,y\n" } else { "u,v,r,R\n" });
        for (i, val) in self.values.iter().enumerate() {
            let (u, v, r) = self.grid.params(i).uvr();
            out.push_str(&format!("{u:.12e},{v:.12e},{r:.12e},{val:.12e}"));
            if let Some(c) = &self.cartesian {
                out.push_str(&format!(",{:.12e},{:.12e}", c[i][0], c[i][1]));
            }
            out.push('\n');
        }
        out
    }
}

fn project(p: &TargetParams) -> [f64; 2] {
    let (u, v, r) = p.uvr();
    match p.dim() {
        Dim::Linear => [r * u, r * (1.0 - u * u).max(0.0).sqrt()],
        Dim::Planar => [r * u, r * v],
    }
}

/// `R` over every grid cell, in grid order.
pub fn correlation_map(
    geom: &Geometry,
    eta_ref: &TargetParams,
    grid: &ParamGrid,
    projection: Projection,
    wavelength: f64,
) -> Result<CorrelationMap> {
    grid.validate()?;
    if grid.dim != geom.dim() || eta_ref.dim() != geom.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} geometry with a {} grid",
            geom.dim(),
            grid.dim
        )));
    }
    let pts = geom.points();
    let n = pts.len() as f64;
    let a = steering_from_points(&pts, eta_ref, wavelength);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let b = steering_from_points(&pts, &grid.params(i), wavelength);
            a.inner(&b).norm_sqr() / (n * n)
        })
        .collect();
    let cartesian = match projection {
        Projection::Parameter => None,
        Projection::Cartesian => Some((0..grid.len()).map(|i| project(&grid.params(i))).collect()),
    };
    Ok(CorrelationMap {
        reference: *eta_ref,
        grid: grid.clone(),
        values,
        cartesian,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisLobe {
    pub axis: String,
    /// Full width at half peak (−3 dB), interpolated between cells.
    pub width_3db: f64,
    /// Main-lobe edges at the first local minima on either side.
    pub main_lobe: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidelobe {
    pub params: TargetParams,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LobeMetrics {
    pub peak: TargetParams,
    pub peak_value: f64,
    pub axes: Vec<AxisLobe>,
    /// Highest value outside the main-lobe box.
    pub peak_sidelobe: Option<Sidelobe>,
    /// Local maxima outside the main lobe, strongest first (at most 16).
    pub sidelobes: Vec<Sidelobe>,
}

const AXIS_NAMES: [&str; 3] = ["u", "v", "r"];

/// Main-lobe widths, peak sidelobe and sidelobe locations of a map with a
/// unique global peak.
pub fn lobe_metrics(map: &CorrelationMap) -> Result<LobeMetrics> {
    let vals = &map.values;
    if vals.is_empty() {
        return Err(Error::Domain("empty map".into()));
    }
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let peaks: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] >= max - PEAK_TIE_TOL).collect();
    if peaks.len() > 1 {
        return Err(Error::AmbiguousPeak { peaks });
    }
    let pk = peaks[0];
    let g = &map.grid;
    let shape = g.shape();
    let pidx = g.unflat(pk);
    let mut boxes = [[pidx[0]; 2], [pidx[1]; 2], [pidx[2]; 2]];
    let mut axes = Vec::new();
    for k in g.free_axes() {
        let cut: Vec<f64> = (0..shape[k])
            .map(|j| {
                let mut ix = pidx;
                ix[k] = j;
                vals[g.flat(ix[0], ix[1], ix[2])]
            })
            .collect();
        let c = pidx[k];
        let mut lo = c;
        while lo > 0 && cut[lo - 1] < cut[lo] {
            lo -= 1;
        }
        let mut hi = c;
        while hi + 1 < cut.len() && cut[hi + 1] < cut[hi] {
            hi += 1;
        }
        boxes[k] = [lo, hi];
        let axis = g.axis(k);
        let half = cut[c] / 2.0;
        let cross = |from: usize, to: usize| -> f64 {
            // first cell below half going from the peak toward `to`
            let step: isize = if to < from { -1 } else { 1 };
            let mut j = from as isize;
            while j != to as isize {
                let nx = j + step;
                let (a, b) = (cut[j as usize], cut[nx as usize]);
                if b < half {
                    let t = (a - half) / (a - b);
                    let (xa, xb) = (axis.value(j as usize), axis.value(nx as usize));
                    return xa + t * (xb - xa);
                }
                j = nx;
            }
            axis.value(to)
        };
        let left = cross(c, lo);
        let right = cross(c, hi);
        axes.push(AxisLobe {
            axis: AXIS_NAMES[k].to_string(),
            width_3db: (right - left).abs(),
            main_lobe: [axis.value(lo), axis.value(hi)],
        });
    }
    let inside = |ix: [usize; 3]| (0..3).all(|k| ix[k] >= boxes[k][0] && ix[k] <= boxes[k][1]);
    let mut peak_sidelobe: Option<Sidelobe> = None;
    let mut sidelobes = Vec::new();
    let free = g.free_axes();
    for (i, &v) in vals.iter().enumerate() {
        let ix = g.unflat(i);
        if inside(ix) {
            continue;
        }
        if peak_sidelobe.as_ref().is_none_or(|s| v > s.value) {
            peak_sidelobe = Some(Sidelobe {
                params: g.params(i),
                value: v,
            });
        }
        let is_local_max = free.iter().all(|&k| {
            let mut ok = true;
            if ix[k] > 0 {
                let mut j = ix;
                j[k] -= 1;
                ok &= vals[g.flat(j[0], j[1], j[2])] <= v;
            }
            if ix[k] + 1 < shape[k] {
                let mut j = ix;
                j[k] += 1;
                ok &= vals[g.flat(j[0], j[1], j[2])] <= v;
            }
            ok
        });
        if is_local_max {
            sidelobes.push(Sidelobe {
                params: g.params(i),
                value: v,
            });
        }
    }
    sidelobes.sort_by(|a, b| b.value.total_cmp(&a.value));
    sidelobes.truncate(16);
    Ok(LobeMetrics {
        peak: g.params(pk),
        peak_value: vals[pk],
        axes,
        peak_sidelobe,
        sidelobes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{benchmark_geometry, ApvLinear, Benchmark, Scenario};
    use crate::grid::Axis;
    use approx::assert_relative_eq;

    #[test]
    fn self_correlation_is_one() {
        let sc = Scenario::reference_linear();
        let g = benchmark_geometry(Benchmark::SparseUla, &sc).unwrap();
        let eta = TargetParams::linear(0.71, 4.0);
        assert_relative_eq!(correlation_value(&g, &eta, &eta, sc.wavelength), 1.0, epsilon = 1e-12);
        let one: Geometry = ApvLinear::new(vec![0.1]).into();
        let q = TargetParams::linear(0.2, 9.0);
        assert_relative_eq!(correlation_value(&one, &eta, &q, sc.wavelength), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn flat_map_is_ambiguous() {
        let one: Geometry = ApvLinear::new(vec![0.1]).into();
        let grid = ParamGrid::linear(Axis::range(-1.0, 1.0, 11), Axis::Fixed(4.0)).unwrap();
        let m = correlation_map(&one, &TargetParams::linear(0.0, 4.0), &grid, Projection::Parameter, 0.02).unwrap();
        assert!(matches!(lobe_metrics(&m), Err(Error::AmbiguousPeak { .. })));
    }

    #[test]
    fn ula_far_field_first_null() {
        let lam = 0.02;
        let n = 16;
        let g: Geometry = ApvLinear::new((0..n).map(|i| i as f64 * lam / 2.0).collect()).into();
        let grid = ParamGrid::linear(Axis::range(-0.5, 0.5, 2001), Axis::Fixed(f64::INFINITY)).unwrap();
        let m = correlation_map(&g, &TargetParams::linear(0.0, f64::INFINITY), &grid, Projection::Parameter, lam).unwrap();
        let lm = lobe_metrics(&m).unwrap();
        let [lo, hi] = lm.axes[0].main_lobe;
        assert!((hi - 2.0 / n as f64).abs() < 1e-3, "{hi}");
        assert!((lo + 2.0 / n as f64).abs() < 1e-3, "{lo}");
    }

    #[test]
    fn cartesian_projection() {
        let g: Geometry = ApvLinear::new(vec![0.0, 0.01, 0.05]).into();
        let grid = ParamGrid::linear(Axis::Fixed(0.6), Axis::Fixed(5.0)).unwrap();
        let m = correlation_map(&g, &TargetParams::linear(0.6, 5.0), &grid, Projection::Cartesian, 0.02).unwrap();
        let c = m.cartesian.unwrap()[0];
        assert_relative_eq!(c[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(c[1], 4.0, epsilon = 1e-12);
    }
}
