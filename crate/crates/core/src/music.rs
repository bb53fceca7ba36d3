//! Snapshot simulation, sample covariance, noise subspace and MUSIC
//! spectrum search, plus seeded Monte Carlo MSE estimation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, steering_from_points};
use crate::crb::{self, Case, CrbValues};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, Scenario, TargetParams};
use crate::grid::{Axis, ParamGrid};

/// Spectrum denominators below this are clipped.
pub const DENOM_FLOOR: f64 = 1e-15;

/// `N × T` received snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotBlock {
    pub y: DMatrix<Complex64>,
    pub true_params: TargetParams,
    pub seed: u64,
    pub stream: u64,
}

/// Deterministic generator for `(seed, stream)`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Y = h sᵀ + W` with constant-modulus `s_t = √P e^{jφ_t}` and
/// `W ~ CN(0, σ²I)`.
pub fn simulate_snapshots(sc: &Scenario, geom: &Geometry, eta: &TargetParams, seed: u64) -> Result<SnapshotBlock> {
    simulate_snapshots_stream(sc, geom, eta, seed, 0)
}

pub fn simulate_snapshots_stream(
    sc: &Scenario,
    geom: &Geometry,
    eta: &TargetParams,
    seed: u64,
    stream: u64,
) -> Result<SnapshotBlock> {
    let h = channel::channel_vector(sc, geom, eta)?;
    let n = h.len();
    let t = sc.snapshots;
    let mut rng = trial_rng(seed, stream);
    let amp = sc.tx_power.sqrt();
    let sd = (sc.noise_power / 2.0).sqrt();
    let mut y = DMatrix::<Complex64>::zeros(n, t);
    for col in 0..t {
        let phi: f64 = rng.random::<f64>() * 2.0 * PI;
        let s = Complex64::from_polar(amp, phi);
        for row in 0..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            y[(row, col)] = h[row] * s + Complex64::new(sd * re, sd * im);
        }
    }
    Ok(SnapshotBlock {
        y,
        true_params: *eta,
        seed,
        stream,
    })
}

/// `R = YYᴴ/T`, symmetrized.
pub fn sample_covariance(block: &SnapshotBlock) -> DMatrix<Complex64> {
    let t = block.y.ncols() as f64;
    let r = &block.y * block.y.adjoint() / Complex64::new(t, 0.0);
    (&r + r.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Orthonormal basis of the noise subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSubspace {
    pub u_w: DMatrix<Complex64>,
    /// All eigenvalues of the covariance, ascending.
    pub eigenvalues: Vec<f64>,
}

impl NoiseSubspace {
    /// `αᴴ U_w U_wᴴ α = ‖U_wᴴ α‖²`.
    pub fn projection(&self, alpha: &[Complex64]) -> f64 {
        let a = DVector::from_column_slice(alpha);
        (self.u_w.adjoint() * a).norm_squared()
    }
}

/// Eigenvectors of the `N − signal_dim` smallest eigenvalues of `r`.
pub fn noise_subspace(r: &DMatrix<Complex64>, signal_dim: usize) -> Result<NoiseSubspace> {
    let n = r.nrows();
    if n != r.ncols() || signal_dim >= n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} covariance with signal dimension {signal_dim}",
            n,
            r.ncols()
        )));
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite covariance entry".into()));
    }
    let eig = r.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = n - signal_dim;
    let mut u_w = DMatrix::<Complex64>::zeros(n, k);
    for (c, &j) in order.iter().take(k).enumerate() {
        u_w.set_column(c, &eig.eigenvectors.column(j));
    }
    Ok(NoiseSubspace {
        u_w,
        eigenvalues: order.iter().map(|&j| eig.eigenvalues[j]).collect(),
    })
}

/// MUSIC pseudo-spectrum sampled on a parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub grid: ParamGrid,
    pub values: Vec<f64>,
    /// Set when any denominator fell below [`DENOM_FLOOR`].
    pub clipped: bool,
}

impl SpectrumGrid {
    /// Grid index of the largest value; lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn peak(&self) -> TargetParams {
        self.grid.params(self.argmax())
    }

    /// Rows `u,v,r,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,v,r,p\n");
        for (i, p) in self.values.iter().enumerate() {
            let (u, v, r) = self.grid.params(i).uvr();
            out.push_str(&format!("{u:.12e},{v:.12e},{r:.12e},{p:.12e}\n"));
        }
        out
    }
}

/// `p(η) = 1/(αᴴ U_w U_wᴴ α)` at every grid point.
pub fn spectrum(geom: &Geometry, ns: &NoiseSubspace, grid: &ParamGrid, wavelength: f64) -> SpectrumGrid {
    let pts = geom.points();
    let vals: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let a = steering_from_points(&pts, &grid.params(i), wavelength);
            let d = ns.projection(a.entries());
            if d < DENOM_FLOOR {
                (1.0 / DENOM_FLOOR, true)
            } else {
                (1.0 / d, false)
            }
        })
        .collect();
    SpectrumGrid {
        grid: grid.clone(),
        clipped: vals.iter().any(|v| v.1),
        values: vals.into_iter().map(|v| v.0).collect(),
    }
}

/// Coarse grid sizes and refinement schedule for [`estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpec {
    /// Points per free axis when one parameter is searched.
    pub points_1d: usize,
    /// Points per free axis when two parameters are searched.
    pub points_2d: usize,
    /// Points per free axis when three parameters are searched.
    pub points_3d: usize,
    /// Nested local refinements, each `factor`× finer over ±2 cells.
    pub refine_passes: usize,
    pub refine_factor: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec {
            points_1d: 1001,
            points_2d: 201,
            points_3d: 41,
            refine_passes: 4,
            refine_factor: 10,
        }
    }
}

impl SearchSpec {
    /// Coarse grid for `case`; unknowns span the scenario box, known
    /// parameters are taken from `known`.
    pub fn coarse_grid(&self, case: Case, sc: &Scenario, known: &TargetParams) -> Result<ParamGrid> {
        let k = case.unknowns().len();
        let n = match k {
            1 => self.points_1d,
            2 => self.points_2d,
            _ => self.points_3d,
        };
        let (u, v, r) = known.uvr();
        let free = |p| case.unknowns().contains(&p);
        use crate::channel::Param;
        let ua = if free(Param::U) { Axis::range(0.0, sc.u_max, n) } else { Axis::Fixed(u) };
        let ra = if free(Param::R) { Axis::range(sc.r_min, sc.r_max, n) } else { Axis::Fixed(r) };
        match case.dim() {
            crate::geometry::Dim::Linear => ParamGrid::linear(ua, ra),
            crate::geometry::Dim::Planar => {
                let va = if free(Param::V) { Axis::range(0.0, sc.v_max, n) } else { Axis::Fixed(v) };
                ParamGrid::planar(ua, va, ra)
            }
        }
    }
}

/// Estimate with its search diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub params: TargetParams,
    pub clipped: bool,
}

/// Coarse MUSIC grid search followed by nested local refinements. Known
/// parameters of `case` are read from `block.true_params`.
pub fn estimate(sc: &Scenario, geom: &Geometry, block: &SnapshotBlock, case: Case, spec: &SearchSpec) -> Result<Estimate> {
    let r = sample_covariance(block);
    let ns = noise_subspace(&r, 1)?;
    let mut grid = spec.coarse_grid(case, sc, &block.true_params)?;
    let mut sp = spectrum(geom, &ns, &grid, sc.wavelength);
    let mut clipped = sp.clipped;
    let mut best = sp.peak();
    for _ in 0..spec.refine_passes {
        let steps = [grid.u.step(), grid.v.step(), grid.r.step()];
        if steps.iter().all(|&s| s == 0.0) {
            break;
        }
        let half = steps.map(|s| 2.0 * s);
        let n = 4 * spec.refine_factor.max(1) + 1;
        grid = grid.refine(&best, half, n);
        sp = spectrum(geom, &ns, &grid, sc.wavelength);
        clipped |= sp.clipped;
        best = sp.peak();
    }
    Ok(Estimate {
        params: best,
        clipped,
    })
}

/// Empirical MSE per unknown with 95% normal-approximation half-widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseResult {
    pub case: Case,
    pub trials: usize,
    pub seed: u64,
    pub snr_db: f64,
    pub mse: CrbValues,
    pub ci95: CrbValues,
    pub crb: CrbValues,
    pub clipped_trials: usize,
}

/// Seeded Monte Carlo MSE; trial `i` uses stream `i` of `seed`, so results
/// do not depend on thread count.
pub fn monte_carlo_mse(
    sc: &Scenario,
    geom: &Geometry,
    eta: &TargetParams,
    case: Case,
    trials: usize,
    seed: u64,
    spec: &SearchSpec,
) -> Result<MseResult> {
    if trials == 0 {
        return Err(Error::Domain("trials must be >= 1".into()));
    }
    let bound = crb::crb(case, sc, geom, eta)?.crb;
    let per: Vec<Result<([f64; 3], bool)>> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let block = simulate_snapshots_stream(sc, geom, eta, seed, i)?;
            let est = estimate(sc, geom, &block, case, spec)?;
            let (u, v, r) = est.params.uvr();
            let (tu, tv, tr) = eta.uvr();
            Ok(([(u - tu).powi(2), (v - tv).powi(2), (r - tr).powi(2)], est.clipped))
        })
        .collect();
    let mut sq = Vec::with_capacity(trials);
    let mut clipped_trials = 0;
    for p in per {
        let (e, c) = p?;
        sq.push(e);
        clipped_trials += c as usize;
    }
    let nt = trials as f64;
    let mut mean = [0.0; 3];
    for e in &sq {
        for k in 0..3 {
            mean[k] += e[k];
        }
    }
    mean.iter_mut().for_each(|m| *m /= nt);
    let mut half = [0.0; 3];
    if trials > 1 {
        for k in 0..3 {
            let var = sq.iter().map(|e| (e[k] - mean[k]).powi(2)).sum::<f64>() / (nt - 1.0);
            half[k] = 1.96 * (var / nt).sqrt();
        }
    }
    let pick = |a: [f64; 3]| CrbValues {
        u: bound.u.map(|_| a[0]),
        v: bound.v.map(|_| a[1]),
        r: bound.r.map(|_| a[2]),
    };
    Ok(MseResult {
        case,
        trials,
        seed,
        snr_db: sc.snr_db(),
        mse: pick(mean),
        ci95: pick(half),
        crb: bound,
        clipped_trials,
    })
}
