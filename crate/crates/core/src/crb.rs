//! Cramér–Rao bounds: closed forms for the six estimation cases, the
//! projector-based Fisher-information oracle, worst-case parameter points and
//! an exhaustive worst-case search.
//!
//! Every closed form reduces to population moments of the derivative
//! coefficient vectors: the FIM over the unknowns is `Cov(coeff) / κ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, coeff, Param};
use crate::error::{Error, Result};
use crate::geometry::{ApmPlanar, ApvLinear, Dim, Geometry, Scenario, TargetParams};

/// Relative determinant threshold below which a FIM is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Condition number above which the oracle reports a singular FIM.
pub const ORACLE_MAX_CONDITION: f64 = 1e12;

/// The six estimation cases: `1x` linear, `2x` planar; `x1` angle only,
/// `x2` range only, `x3` joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    C11,
    C12,
    C13,
    C21,
    C22,
    C23,
}

impl Case {
    pub const ALL: [Case; 6] = [Case::C11, Case::C12, Case::C13, Case::C21, Case::C22, Case::C23];

    pub fn dim(self) -> Dim {
        match self {
            Case::C11 | Case::C12 | Case::C13 => Dim::Linear,
            _ => Dim::Planar,
        }
    }

    pub fn unknowns(self) -> &'static [Param] {
        match self {
            Case::C11 => &[Param::U],
            Case::C12 | Case::C22 => &[Param::R],
            Case::C13 => &[Param::U, Param::R],
            Case::C21 => &[Param::U, Param::V],
            Case::C23 => &[Param::U, Param::V, Param::R],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Case::C11 => "c11",
            Case::C12 => "c12",
            Case::C13 => "c13",
            Case::C21 => "c21",
            Case::C22 => "c22",
            Case::C23 => "c23",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown case `{s}` (expected c11..c13, c21..c23)")))
    }
}

/// `κ = σ²λ² / (8π² T P N |β|²)`.
pub fn kappa(sc: &Scenario) -> f64 {
    sc.noise_power * sc.wavelength.powi(2)
        / (8.0
            * PI
            * PI
            * sc.snapshots as f64
            * sc.tx_power
            * sc.antenna_count as f64
            * sc.channel_gain_sq)
}

/// Population moments (divide by N) of a few real vectors of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub labels: Vec<String>,
    pub means: Vec<f64>,
    /// Row-major k×k covariance.
    pub cov: Vec<f64>,
    /// Raw second moments `(1/N)Σa²`, the scale for singularity checks.
    pub raw2: Vec<f64>,
}

impl MomentSet {
    pub fn from_vectors(labels: &[&str], vecs: &[&[f64]]) -> Self {
        let k = vecs.len();
        let n = vecs.first().map_or(0, |v| v.len()) as f64;
        let means: Vec<f64> = vecs.iter().map(|v| v.iter().sum::<f64>() / n).collect();
        let raw2 = vecs
            .iter()
            .map(|v| v.iter().map(|a| a * a).sum::<f64>() / n)
            .collect();
        let mut cov = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                let c = vecs[i]
                    .iter()
                    .zip(vecs[j])
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / n;
                cov[i * k + j] = c;
                cov[j * k + i] = c;
            }
        }
        MomentSet {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            means,
            cov,
            raw2,
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    pub fn var(&self, i: usize) -> f64 {
        self.cov[i * self.len() + i]
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.len() + j]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.len(), &self.cov)
    }

    /// `cov(a,b)² ≤ var(a)var(b)` for every pair, up to round-off.
    pub fn satisfies_cauchy_schwarz(&self) -> bool {
        let k = self.len();
        (0..k).all(|i| self.var(i) >= -1e-15 * self.raw2[i])
            && (0..k).all(|i| {
                (0..k).all(|j| {
                    let lhs = self.cov(i, j).powi(2);
                    let rhs = self.var(i) * self.var(j);
                    lhs <= rhs * (1.0 + 1e-12) + 1e-30 * self.raw2[i] * self.raw2[j]
                })
            })
    }

    /// Ratio of extreme eigenvalues of the covariance matrix.
    pub fn condition_number(&self) -> f64 {
        condition_number(&self.matrix())
    }

    fn var_ok(&self, i: usize) -> bool {
        self.var(i) > SINGULAR_TOL * self.raw2[i]
    }

    fn singular(&self) -> Error {
        Error::SingularFim {
            condition: self.condition_number(),
        }
    }

    /// Errors when any variance or the determinant falls below tolerance.
    pub fn check_nonsingular(&self) -> Result<()> {
        let k = self.len();
        if !(0..k).all(|i| self.var_ok(i)) {
            return Err(self.singular());
        }
        let diag: f64 = (0..k).map(|i| self.var(i)).product();
        let det = self.matrix().determinant();
        if !(det > SINGULAR_TOL * diag) {
            return Err(self.singular());
        }
        Ok(())
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Moments of `x` and `x̃ = x ⊙ x`.
pub fn moments_linear(x: &ApvLinear) -> MomentSet {
    let xt = x.squared();
    MomentSet::from_vectors(&["x", "x~"], &[x.positions(), &xt])
}

/// Moments of ξ, π and ρ at `eta`.
pub fn moments_planar(s: &ApmPlanar, eta: &TargetParams) -> MomentSet {
    let (u, v, r) = eta.uvr();
    let pts = s.positions();
    let xi: Vec<f64> = pts.iter().map(|&p| coeff(Param::U, p, u, v, r)).collect();
    let pi: Vec<f64> = pts.iter().map(|&p| coeff(Param::V, p, u, v, r)).collect();
    let rho: Vec<f64> = pts.iter().map(|&p| coeff(Param::R, p, u, v, r)).collect();
    MomentSet::from_vectors(&["xi", "pi", "rho"], &[&xi, &pi, &rho])
}

/// Geometry moments: `(x, x̃)` for linear arrays, `(ξ, π, ρ)` at `eta` for
/// planar arrays.
pub fn moments(geom: &Geometry, eta: Option<&TargetParams>) -> Result<MomentSet> {
    match geom {
        Geometry::Linear(x) => Ok(moments_linear(x)),
        Geometry::Planar(s) => {
            let eta = eta.ok_or_else(|| {
                Error::Domain("planar moments need target parameters".into())
            })?;
            Ok(moments_planar(s, eta))
        }
    }
}

/// Moments of the derivative coefficients of `unknowns`; the FIM is
/// `cov / κ`.
pub fn fim_moments(geom: &Geometry, eta: &TargetParams, unknowns: &[Param]) -> MomentSet {
    let (u, v, r) = eta.uvr();
    let pts = geom.points();
    let vecs: Vec<Vec<f64>> = unknowns
        .iter()
        .map(|&p| pts.iter().map(|&q| coeff(p, q, u, v, r)).collect())
        .collect();
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    let labels: Vec<&str> = unknowns.iter().map(|p| p.name()).collect();
    MomentSet::from_vectors(&labels, &refs)
}

fn check_u(u: f64) -> Result<()> {
    if !(u.abs() < 1.0) {
        return Err(Error::SingularFim {
            condition: f64::INFINITY,
        });
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("range must be finite and > 0 (got {r})")));
    }
    Ok(())
}

/// Angle-only CRB for a linear array with known range `r_star`.
pub fn crb_case11(sc: &Scenario, x: &ApvLinear, u: f64, r_star: f64) -> Result<f64> {
    check_r(r_star)?;
    let m = moments_linear(x);
    let f_u = m.var(0) + 2.0 * u / r_star * m.cov(0, 1) + u * u / (r_star * r_star) * m.var(1);
    let zeta: Vec<f64> = x
        .positions()
        .iter()
        .map(|&p| p + p * p * u / r_star)
        .collect();
    let scale = zeta.iter().map(|z| z * z).sum::<f64>() / zeta.len() as f64;
    if !(f_u > SINGULAR_TOL * scale) {
        return Err(Error::SingularFim {
            condition: f64::INFINITY,
        });
    }
    Ok(kappa(sc) / f_u)
}

/// Range-only CRB for a linear array with known direction `u_star`.
pub fn crb_case12(sc: &Scenario, x: &ApvLinear, u_star: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    check_u(u_star)?;
    let m = moments_linear(x);
    if !m.var_ok(1) {
        return Err(m.singular());
    }
    let f_r = ((1.0 - u_star * u_star) / (2.0 * r * r)).powi(2) * m.var(1);
    Ok(kappa(sc) / f_r)
}

/// Joint angle/range CRBs `(crb_u, crb_r)` for a linear array.
pub fn crb_case13(sc: &Scenario, x: &ApvLinear, u: f64, r: f64) -> Result<(f64, f64)> {
    check_r(r)?;
    check_u(u)?;
    let m = moments_linear(x);
    m.check_nonsingular()?;
    let (vx, vt, c) = (m.var(0), m.var(1), m.cov(0, 1));
    let det = vx * vt - c * c;
    let k = kappa(sc);
    let crb_u = k * vt / det;
    let crb_r = k
        * (4.0 * r.powi(4) * vx + 8.0 * u * r.powi(3) * c + 4.0 * u * u * r * r * vt)
        / ((1.0 - u * u).powi(2) * det);
    Ok((crb_u, crb_r))
}

/// Planar angle-only CRBs `(crb_u, crb_v)` with known range `r_star`.
pub fn crb_case21(sc: &Scenario, s: &ApmPlanar, u: f64, v: f64, r_star: f64) -> Result<(f64, f64)> {
    check_r(r_star)?;
    let m = moments_planar(s, &TargetParams::planar(u, v, r_star));
    let (vxi, vpi, c) = (m.var(0), m.var(1), m.cov(0, 1));
    if !(m.var_ok(0) && m.var_ok(1)) {
        return Err(m.singular());
    }
    let det = vxi * vpi - c * c;
    if !(det > SINGULAR_TOL * vxi * vpi) {
        return Err(Error::SingularFim {
            condition: condition_number(&DMatrix::from_row_slice(2, 2, &[vxi, c, c, vpi])),
        });
    }
    let k = kappa(sc);
    Ok((k / (vxi - c * c / vpi), k / (vpi - c * c / vxi)))
}

/// Planar range-only CRB with known direction `(u_star, v_star)`.
pub fn crb_case22(sc: &Scenario, s: &ApmPlanar, u_star: f64, v_star: f64, r: f64) -> Result<f64> {
    check_r(r)?;
    let m = moments_planar(s, &TargetParams::planar(u_star, v_star, r));
    if !m.var_ok(2) {
        return Err(Error::SingularFim {
            condition: f64::INFINITY,
        });
    }
    Ok(kappa(sc) / m.var(2))
}

/// Planar joint CRBs `(crb_u, crb_v, crb_r)` by Cramer's rule on the 3×3
/// moment matrix.
pub fn crb_case23(sc: &Scenario, s: &ApmPlanar, eta: &TargetParams) -> Result<(f64, f64, f64)> {
    check_r(eta.r())?;
    let m = moments_planar(s, eta);
    m.check_nonsingular()?;
    let (a, b, c) = (m.var(0), m.var(1), m.var(2));
    let (xp, xr, pr) = (m.cov(0, 1), m.cov(0, 2), m.cov(1, 2));
    let det = a * b * c + 2.0 * xp * xr * pr - a * pr * pr - b * xr * xr - c * xp * xp;
    let k = kappa(sc);
    Ok((
        k * (b * c - pr * pr) / det,
        k * (a * c - xr * xr) / det,
        k * (a * b - xp * xp) / det,
    ))
}

/// Per-parameter CRB values of one case.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CrbValues {
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub r: Option<f64>,
}

impl CrbValues {
    pub fn sum(&self) -> f64 {
        self.u.unwrap_or(0.0) + self.v.unwrap_or(0.0) + self.r.unwrap_or(0.0)
    }

    pub fn get(&self, p: Param) -> Option<f64> {
        match p {
            Param::U => self.u,
            Param::V => self.v,
            Param::R => self.r,
        }
    }

    pub fn as_map(&self) -> BTreeMap<&'static str, f64> {
        [("u", self.u), ("v", self.v), ("r", self.r)]
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub case: Case,
    pub crb: CrbValues,
    /// Parameter point the bound was evaluated at.
    pub params: TargetParams,
    pub kappa: f64,
    pub fim: Vec<Vec<f64>>,
    pub fim_condition_number: f64,
}

impl CrbReport {
    /// Worst-case objective `G`: the CRB, or the sum of CRBs for joint cases.
    pub fn total(&self) -> f64 {
        self.crb.sum()
    }
}

fn check_dims(case: Case, geom: &Geometry, eta: &TargetParams) -> Result<()> {
    if geom.dim() != case.dim() || eta.dim() != case.dim() {
        return Err(Error::DimensionMismatch(format!(
            "case {case} needs {} geometry and parameters (got {} and {})",
            case.dim(),
            geom.dim(),
            eta.dim()
        )));
    }
    Ok(())
}

/// Closed-form CRBs of `case` at `eta`. For the single-parameter cases the
/// known parameters are read from `eta` too.
pub fn crb(case: Case, sc: &Scenario, geom: &Geometry, eta: &TargetParams) -> Result<CrbReport> {
    check_dims(case, geom, eta)?;
    let (u, v, r) = eta.uvr();
    let mut vals = CrbValues::default();
    match case {
        Case::C11 => vals.u = Some(crb_case11(sc, geom.as_linear()?, u, r)?),
        Case::C12 => vals.r = Some(crb_case12(sc, geom.as_linear()?, u, r)?),
        Case::C13 => {
            let (a, b) = crb_case13(sc, geom.as_linear()?, u, r)?;
            vals.u = Some(a);
            vals.r = Some(b);
        }
        Case::C21 => {
            let (a, b) = crb_case21(sc, geom.as_planar()?, u, v, r)?;
            vals.u = Some(a);
            vals.v = Some(b);
        }
        Case::C22 => vals.r = Some(crb_case22(sc, geom.as_planar()?, u, v, r)?),
        Case::C23 => {
            let (a, b, c) = crb_case23(sc, geom.as_planar()?, eta)?;
            vals.u = Some(a);
            vals.v = Some(b);
            vals.r = Some(c);
        }
    }
    let k = kappa(sc);
    let m = fim_moments(geom, eta, case.unknowns());
    let n = m.len();
    let fim = (0..n)
        .map(|i| (0..n).map(|j| m.cov(i, j) / k).collect())
        .collect();
    Ok(CrbReport {
        case,
        crb: vals,
        params: *eta,
        kappa: k,
        fim,
        fim_condition_number: m.condition_number(),
    })
}

/// The analytic worst-case parameter point of each case. Known parameters
/// come from `sc.target`.
pub fn worst_case_params(case: Case, sc: &Scenario) -> TargetParams {
    let t = sc.target;
    match case {
        Case::C11 => TargetParams::linear(0.0, t.r),
        Case::C12 => TargetParams::linear(t.u, sc.r_max),
        Case::C13 => TargetParams::linear(sc.u_max, sc.r_max),
        Case::C21 => TargetParams::planar(0.0, 0.0, t.r),
        Case::C22 => TargetParams::planar(t.u, t.v, sc.r_max),
        Case::C23 => TargetParams::planar(0.0, sc.v_max, sc.r_max),
    }
}

/// CRBs at the analytic worst-case point.
pub fn worst_case_crb(case: Case, sc: &Scenario, geom: &Geometry) -> Result<CrbReport> {
    crb(case, sc, geom, &worst_case_params(case, sc))
}

/// Result of [`worst_case_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseSearch {
    pub params: TargetParams,
    pub value: f64,
    /// Objective at the analytic worst-case point.
    pub analytic_value: f64,
    /// `(value − analytic_value) / value`.
    pub gap: f64,
    pub evaluated: usize,
    /// Cells skipped because the FIM was singular or `u² + v² ≥ 1`.
    pub skipped: Vec<TargetParams>,
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Exhaustive grid argmax of the worst-case objective over the free
/// parameters of `case`; known parameters are taken from `sc.target`.
/// Ties go to the lowest row-major (u, v, r) index.
pub fn worst_case_search(case: Case, sc: &Scenario, geom: &Geometry, resolution: usize) -> Result<WorstCaseSearch> {
    if resolution < 2 {
        return Err(Error::Domain("worst-case search needs >= 2 points per axis".into()));
    }
    let t = sc.target;
    let free = case.unknowns();
    let us = if free.contains(&Param::U) { axis(0.0, sc.u_max, resolution) } else { vec![t.u] };
    let vs = match case.dim() {
        Dim::Linear => vec![0.0],
        Dim::Planar if free.contains(&Param::V) => axis(0.0, sc.v_max, resolution),
        Dim::Planar => vec![t.v],
    };
    let rs = if free.contains(&Param::R) { axis(sc.r_min, sc.r_max, resolution) } else { vec![t.r] };
    let cells: Vec<TargetParams> = us
        .iter()
        .flat_map(|&u| {
            let rs = &rs;
            vs.iter().flat_map(move |&v| {
                rs.iter().map(move |&r| match case.dim() {
                    Dim::Linear => TargetParams::linear(u, r),
                    Dim::Planar => TargetParams::planar(u, v, r),
                })
            })
        })
        .collect();
    let values: Vec<Option<f64>> = cells
        .par_iter()
        .map(|eta| {
            let (u, v, _) = eta.uvr();
            if u * u + v * v >= 1.0 {
                return None;
            }
            crb(case, sc, geom, eta).ok().map(|rep| rep.total())
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    let mut skipped = Vec::new();
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(g) if g.is_finite() => {
                if best.is_none_or(|(_, b)| *g > b) {
                    best = Some((i, *g));
                }
            }
            _ => skipped.push(cells[i]),
        }
    }
    let (idx, value) = best.ok_or(Error::SingularFim {
        condition: f64::INFINITY,
    })?;
    let analytic_value = worst_case_crb(case, sc, geom)?.total();
    Ok(WorstCaseSearch {
        params: cells[idx],
        value,
        analytic_value,
        gap: (value - analytic_value) / value,
        evaluated: cells.len() - skipped.len(),
        skipped,
    })
}

/// Reference FIM `(2TP/σ²)·Re{Ψᴴ(I − hhᴴ/(N|β|²))Ψ}` built from complex
/// channel and derivative vectors. Used to validate the closed forms.
pub fn fim_matrix(sc: &Scenario, geom: &Geometry, eta: &TargetParams, unknowns: &[Param]) -> Result<DMatrix<f64>> {
    let h = channel::channel_vector(sc, geom, eta)?;
    let hh: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let psis: Vec<Vec<Complex64>> = unknowns
        .iter()
        .map(|&p| channel::psi(sc, geom, eta, p))
        .collect::<Result<_>>()?;
    // projected derivative: ψ − h (hᴴψ)/(hᴴh)
    let proj: Vec<Vec<Complex64>> = psis
        .iter()
        .map(|psi| {
            let hp: Complex64 = h.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
            let c = if hh > 0.0 { hp / hh } else { Complex64::new(0.0, 0.0) };
            psi.iter().zip(&h).map(|(p, hn)| p - hn * c).collect()
        })
        .collect();
    let scale = 2.0 * sc.snapshots as f64 * sc.tx_power / sc.noise_power;
    let k = unknowns.len();
    let mut fim = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let s: Complex64 = psis[i].iter().zip(&proj[j]).map(|(a, b)| a.conj() * b).sum();
            fim[(i, j)] = scale * s.re;
        }
    }
    Ok(fim)
}

/// Inverse of [`fim_matrix`]; errors when the condition number exceeds
/// [`ORACLE_MAX_CONDITION`].
pub fn fim_oracle(sc: &Scenario, geom: &Geometry, eta: &TargetParams, unknowns: &[Param]) -> Result<DMatrix<f64>> {
    let fim = fim_matrix(sc, geom, eta, unknowns)?;
    // a diagonal entry that vanishes next to the unprojected ‖ψ‖² means the
    // parameter is unobservable, whatever the condition number says
    let scale = 2.0 * sc.snapshots as f64 * sc.tx_power / sc.noise_power;
    for (i, &p) in unknowns.iter().enumerate() {
        let raw: f64 = channel::psi(sc, geom, eta, p)?.iter().map(|z| z.norm_sqr()).sum::<f64>() * scale;
        if !(fim[(i, i)] > SINGULAR_TOL * raw) {
            return Err(Error::SingularFim {
                condition: f64::INFINITY,
            });
        }
    }
    let sym = (&fim + fim.transpose()) * 0.5;
    let cond = condition_number(&sym);
    if !(cond <= ORACLE_MAX_CONDITION) {
        return Err(Error::SingularFim { condition: cond });
    }
    sym.lu()
        .try_inverse()
        .ok_or(Error::SingularFim { condition: cond })
}

/// `var(x̃)` of the endpoint-grouped layout `(n−1)d | A − (N−n)d` in closed
/// form, with `N_l = ⌊N/2⌋` antennas at the left end and `N_r = N − N_l`
/// at the right end.
pub fn var_tilde_closed_form(a: f64, n: usize, d: f64) -> Result<f64> {
    if n < 2 || !(a > 0.0) || !(d >= 0.0) || (n as f64 - 1.0) * d > a * (1.0 + 1e-12) {
        return Err(Error::Domain(format!(
            "infeasible layout (A={a}, N={n}, d={d})"
        )));
    }
    let nl = (n / 2) as f64;
    let nr = n as f64 - nl;
    let nf = n as f64;
    let sum_n2 = |m: f64| (m - 1.0) * m * (2.0 * m - 1.0) / 6.0;
    let sum_n4 = |m: f64| (m - 1.0) * m * (2.0 * m - 1.0) * (3.0 * m * m - 3.0 * m - 1.0) / 30.0;
    let sum_n3 = |m: f64| ((m - 1.0) * m / 2.0).powi(2);
    let sum_n1 = |m: f64| (m - 1.0) * m / 2.0;
    // right group: x = A − k d, k = 0..N_r−1
    let s4 = d.powi(4) * sum_n4(nl)
        + nr * a.powi(4)
        - 4.0 * a.powi(3) * d * sum_n1(nr)
        + 6.0 * a * a * d * d * sum_n2(nr)
        - 4.0 * a * d.powi(3) * sum_n3(nr)
        + d.powi(4) * sum_n4(nr);
    let s2 = d * d * sum_n2(nl) + nr * a * a - 2.0 * a * d * sum_n1(nr) + d * d * sum_n2(nr);
    Ok(s4 / nf - (s2 / nf).powi(2))
}
