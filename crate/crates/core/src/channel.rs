//! Near-field channel under the Fresnel approximation.
//!
//! Linear arrays are handled as planar arrays with `y = 0` and `v = 0`, so a
//! single set of formulas covers both. The phase of antenna `n` relative to
//! the reference point is
//!
//! ```text
//! φ_n = x_n u + y_n v − (x_n² + y_n² − (x_n u + y_n v)²) / (2r)
//! ```
//!
//! which is `r − r_n` to second order. `r = ∞` gives the far-field plane wave.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Scenario, TargetParams};

/// Estimated parameter selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    U,
    V,
    R,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::U => "u",
            Param::V => "v",
            Param::R => "r",
        }
    }
}

fn check_r(eta: &TargetParams) -> Result<()> {
    let r = eta.r();
    if !(r > 0.0) {
        return Err(Error::Domain(format!("target range must be > 0 (got {r})")));
    }
    Ok(())
}

/// Euclidean distance from antenna `pos` (in the array plane) to the target.
pub fn exact_distance(pos: [f64; 2], eta: &TargetParams) -> f64 {
    let (u, v, r) = eta.uvr();
    let [x, y] = pos;
    let p = x * u + y * v;
    (r * r - 2.0 * r * p + x * x + y * y).max(0.0).sqrt()
}

/// Second-order Fresnel expansion of [`exact_distance`].
pub fn fresnel_distance_approx(pos: [f64; 2], eta: &TargetParams) -> f64 {
    let (u, v, r) = eta.uvr();
    let [x, y] = pos;
    let p = x * u + y * v;
    r - p + (x * x + y * y - p * p) / (2.0 * r)
}

/// Path-difference phase term φ_n in meters (multiply by 2π/λ for radians).
pub fn phase(pos: [f64; 2], eta: &TargetParams) -> f64 {
    let (u, v, r) = eta.uvr();
    let [x, y] = pos;
    let p = x * u + y * v;
    if r.is_infinite() {
        p
    } else {
        p - (x * x + y * y - p * p) / (2.0 * r)
    }
}

/// Unit-modulus phase response of an array toward a point source.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
}

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Complex64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `selfᴴ other`.
    pub fn inner(&self, other: &SteeringVector) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// One row per antenna: `index,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,re,im\n");
        for (i, z) in self.entries.iter().enumerate() {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", i, z.re, z.im));
        }
        out
    }
}

/// Steering vector for arbitrary plane coordinates. Works for `r = ∞`.
pub fn steering_from_points(points: &[[f64; 2]], eta: &TargetParams, wavelength: f64) -> SteeringVector {
    let k = 2.0 * PI / wavelength;
    SteeringVector {
        entries: points
            .iter()
            .map(|&p| Complex64::from_polar(1.0, k * phase(p, eta)))
            .collect(),
    }
}

pub fn steering_vector(geom: &Geometry, eta: &TargetParams, wavelength: f64) -> SteeringVector {
    steering_from_points(&geom.points(), eta, wavelength)
}

/// Complex path gain β = |β|·exp(−j2πr/λ).
pub fn path_gain(sc: &Scenario, r: f64) -> Complex64 {
    Complex64::from_polar(sc.channel_gain_sq.sqrt(), -2.0 * PI * r / sc.wavelength)
}

/// `h = β α`.
pub fn channel_vector(sc: &Scenario, geom: &Geometry, eta: &TargetParams) -> Result<Vec<Complex64>> {
    check_r(eta)?;
    let beta = path_gain(sc, eta.r());
    Ok(steering_vector(geom, eta, sc.wavelength)
        .into_entries()
        .into_iter()
        .map(|a| beta * a)
        .collect())
}

/// Derivative coefficient of φ_n with respect to `param`.
#[inline]
pub fn coeff(param: Param, pos: [f64; 2], u: f64, v: f64, r: f64) -> f64 {
    let [x, y] = pos;
    let p = x * u + y * v;
    match param {
        Param::U => x + x * p / r,
        Param::V => y + y * p / r,
        Param::R => (x * x + y * y - p * p) / (2.0 * r * r),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivVectors1D {
    pub zeta_u: Vec<f64>,
    pub zeta_r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivVectors2D {
    pub xi: Vec<f64>,
    pub pi: Vec<f64>,
    pub rho: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DerivVectors {
    Linear(DerivVectors1D),
    Planar(DerivVectors2D),
}

impl DerivVectors {
    /// Coefficient vector of one parameter; `None` for `v` on a linear array.
    pub fn get(&self, param: Param) -> Option<&[f64]> {
        match (self, param) {
            (DerivVectors::Linear(d), Param::U) => Some(&d.zeta_u),
            (DerivVectors::Linear(d), Param::R) => Some(&d.zeta_r),
            (DerivVectors::Linear(_), Param::V) => None,
            (DerivVectors::Planar(d), Param::U) => Some(&d.xi),
            (DerivVectors::Planar(d), Param::V) => Some(&d.pi),
            (DerivVectors::Planar(d), Param::R) => Some(&d.rho),
        }
    }
}

fn coeff_vec(points: &[[f64; 2]], param: Param, eta: &TargetParams) -> Vec<f64> {
    let (u, v, r) = eta.uvr();
    points.iter().map(|&p| coeff(param, p, u, v, r)).collect()
}

/// Real coefficient vectors whose Hadamard product with `j(2π/λ)h` gives ψ.
pub fn deriv_vectors(geom: &Geometry, eta: &TargetParams) -> Result<DerivVectors> {
    check_r(eta)?;
    if geom.dim() != eta.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} geometry with {} target parameters",
            geom.dim(),
            eta.dim()
        )));
    }
    let pts = geom.points();
    Ok(match geom {
        Geometry::Linear(_) => DerivVectors::Linear(DerivVectors1D {
            zeta_u: coeff_vec(&pts, Param::U, eta),
            zeta_r: coeff_vec(&pts, Param::R, eta),
        }),
        Geometry::Planar(_) => DerivVectors::Planar(DerivVectors2D {
            xi: coeff_vec(&pts, Param::U, eta),
            pi: coeff_vec(&pts, Param::V, eta),
            rho: coeff_vec(&pts, Param::R, eta),
        }),
    })
}

/// ψ_p = ∂h/∂p with β held fixed (β is a known nuisance constant).
pub fn psi(sc: &Scenario, geom: &Geometry, eta: &TargetParams, param: Param) -> Result<Vec<Complex64>> {
    let h = channel_vector(sc, geom, eta)?;
    let c = coeff_vec(&geom.points(), param, eta);
    let k = Complex64::new(0.0, 2.0 * PI / sc.wavelength);
    Ok(h.iter().zip(&c).map(|(hn, cn)| k * cn * hn).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ApmPlanar, ApvLinear};
    use approx::assert_relative_eq;

    fn lin(x: &[f64]) -> Geometry {
        Geometry::Linear(ApvLinear::new(x.to_vec()))
    }

    #[test]
    fn distances() {
        let t = TargetParams::linear(0.5, 4.0);
        assert_eq!(exact_distance([0.0, 0.0], &t), 4.0);
        let t = TargetParams::linear(0.0, 4.0);
        assert_relative_eq!(exact_distance([0.2, 0.0], &t), 16.04f64.sqrt());
        assert_relative_eq!(fresnel_distance_approx([0.2, 0.0], &t), 4.005);
        let t = TargetParams::linear(0.71, 4.0);
        assert_relative_eq!(exact_distance([0.2, 0.0], &t), 14.904f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn fresnel_relative_error_small() {
        let sc = Scenario::reference_linear();
        for i in 0..=20 {
            let x = 0.2 * i as f64 / 20.0;
            for j in 0..=10 {
                let u = 0.95 * j as f64 / 10.0;
                for (r, tol) in [(sc.r_min, 1.5e-2), (4.0 * sc.r_min, 3e-4)] {
                    let t = TargetParams::linear(u, r);
                    let e = exact_distance([x, 0.0], &t);
                    let a = fresnel_distance_approx([x, 0.0], &t);
                    assert!(((e - a) / e).abs() < tol);
                }
            }
        }
    }

    #[test]
    fn steering_basics() {
        let t = TargetParams::linear(0.3, 2.0);
        let a = steering_vector(&lin(&[0.0]), &t, 0.02);
        assert_eq!(a.entries(), &[Complex64::new(1.0, 0.0)]);

        let lam = 0.02;
        let far = TargetParams::linear(1.0, f64::INFINITY);
        let a = steering_vector(&lin(&[0.0, lam / 2.0]), &far, lam);
        assert_relative_eq!(a.entries()[1].re, -1.0, epsilon = 1e-12);
        assert!(a.entries()[1].im.abs() < 1e-12);

        let x = [0.0, 0.013, 0.21, 0.4];
        let near = steering_vector(&lin(&x), &TargetParams::linear(0.4, 1e12), lam);
        let far = steering_vector(&lin(&x), &TargetParams::linear(0.4, f64::INFINITY), lam);
        for (a, b) in near.entries().iter().zip(far.entries()) {
            assert!((a - b).norm() < 1e-9);
            assert!((a.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deriv_special_points() {
        let x = [0.0, 0.1, 0.3];
        let g = lin(&x);
        let DerivVectors::Linear(d) = deriv_vectors(&g, &TargetParams::linear(0.0, 3.0)).unwrap() else {
            panic!()
        };
        assert_eq!(d.zeta_u, x.to_vec());
        let DerivVectors::Linear(d) = deriv_vectors(&g, &TargetParams::linear(1.0, 3.0)).unwrap() else {
            panic!()
        };
        assert!(d.zeta_r.iter().all(|&z| z == 0.0));

        let s = Geometry::Planar(ApmPlanar::new(vec![[0.1, -0.2], [0.05, 0.15]]));
        let DerivVectors::Planar(d) = deriv_vectors(&s, &TargetParams::planar(0.0, 0.0, 2.0)).unwrap() else {
            panic!()
        };
        assert_eq!(d.xi, vec![0.1, 0.05]);
        assert_eq!(d.pi, vec![-0.2, 0.15]);
        assert_relative_eq!(d.rho[0], 0.05 / 8.0);
        assert!(deriv_vectors(&s, &TargetParams::linear(0.0, 2.0)).is_err());
    }

    #[test]
    fn psi_matches_finite_difference() {
        let sc = Scenario::reference_planar();
        let g = Geometry::Planar(ApmPlanar::new(vec![[-0.2, 0.1], [0.15, -0.05], [0.03, 0.19]]));
        let eta = TargetParams::planar(0.3, 0.4, 2.5);
        let beta = path_gain(&sc, eta.r());
        let h = |u: f64, v: f64, r: f64| -> Vec<Complex64> {
            steering_vector(&g, &TargetParams::planar(u, v, r), sc.wavelength)
                .into_entries()
                .into_iter()
                .map(|a| beta * a)
                .collect()
        };
        for (p, eps) in [(Param::U, 1e-7), (Param::V, 1e-7), (Param::R, 1e-7 * 2.5)] {
            let (mut a, mut b) = ((0.3, 0.4, 2.5), (0.3, 0.4, 2.5));
            match p {
                Param::U => {
                    a.0 += eps;
                    b.0 -= eps
                }
                Param::V => {
                    a.1 += eps;
                    b.1 -= eps
                }
                Param::R => {
                    a.2 += eps;
                    b.2 -= eps
                }
            }
            let (ha, hb) = (h(a.0, a.1, a.2), h(b.0, b.1, b.2));
            let an = psi(&sc, &g, &eta, p).unwrap();
            let num: f64 = ha
                .iter()
                .zip(&hb)
                .zip(&an)
                .map(|((x, y), z)| ((x - y) / (2.0 * eps) - z).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let den: f64 = an.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(num / den < 1e-5, "{p:?}: {}", num / den);
        }
    }
}
