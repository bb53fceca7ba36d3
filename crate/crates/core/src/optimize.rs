//! Antenna-position optimizers: the closed-form endpoint layout and the
//! sequential per-antenna grid search for the non-convex cases.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::coeff;
use crate::crb::{self, kappa, worst_case_params, Case};
use crate::error::{Error, Result};
use crate::geometry::{
    benchmark_geometry, validate_apm, validate_apv, ApmPlanar, ApvLinear, Benchmark, Dim, Geometry,
    Scenario, SPACING_TOL,
};

/// Endpoint-grouped layout: `⌊N/2⌋` antennas at pitch `d` from 0, the rest
/// at pitch `d` ending at `A`. Optimal for the angle-only and range-only
/// linear cases.
pub fn closed_form_apv(sc: &Scenario) -> Result<ApvLinear> {
    let n = sc.antenna_count;
    let (a, d) = (sc.aperture, sc.min_spacing);
    if n < 2 || (n as f64 - 1.0) * d > a + SPACING_TOL {
        return Err(Error::InvalidScenario(vec![format!(
            "(N-1)d = {} exceeds the aperture {a}",
            (n as f64 - 1.0) * d
        )]));
    }
    let nl = n / 2;
    let x = (1..=n)
        .map(|i| {
            if i <= nl {
                (i - 1) as f64 * d
            } else {
                a - (n - i) as f64 * d
            }
        })
        .collect();
    Ok(ApvLinear::new(x))
}

/// Scalar objective of `case` at its analytic worst-case point; larger is
/// better. Angle-only and range-only cases use `κ/CRB` (a plain moment),
/// joint cases the reciprocal CRB sum. Singular geometries give `−∞`.
pub fn objective(case: Case, sc: &Scenario, geom: &Geometry) -> f64 {
    match crb::worst_case_crb(case, sc, geom) {
        Ok(rep) => match case {
            Case::C11 | Case::C12 | Case::C22 => rep.kappa / rep.total(),
            _ => 1.0 / rep.total(),
        },
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Uniform 1D grid `{iA/M : i = 0..=M}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid1D {
    pub intervals: usize,
    pub step: f64,
    pub aperture: f64,
}

impl SamplingGrid1D {
    pub fn new(aperture: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 || !(aperture > 0.0) {
            return Err(Error::Domain("1D grid needs M >= 1 and A > 0".into()));
        }
        Ok(SamplingGrid1D {
            intervals,
            step: aperture / intervals as f64,
            aperture,
        })
    }

    pub fn default_intervals(sc: &Scenario) -> usize {
        10 * (sc.antenna_count - 1) + 1
    }

    pub fn for_scenario(sc: &Scenario) -> Result<Self> {
        Self::new(sc.aperture, Self::default_intervals(sc))
    }

    /// Smallest interval count `≥ min_intervals` whose step divides `d`
    /// (when `A/d` is an integer), so half-wavelength groups are exact.
    pub fn aligned(sc: &Scenario, min_intervals: usize) -> Result<Self> {
        let ratio = sc.aperture / sc.min_spacing;
        let k = ratio.round();
        if (ratio - k).abs() > 1e-9 * ratio || k < 1.0 {
            return Self::new(sc.aperture, min_intervals);
        }
        let k = k as usize;
        let m = min_intervals.div_ceil(k) * k;
        Self::new(sc.aperture, m)
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.aperture
        } else {
            i as f64 * self.step
        }
    }

    pub fn nearest(&self, x: f64) -> usize {
        ((x / self.step).round().max(0.0) as usize).min(self.intervals)
    }
}

/// Uniform `M × M` grid over `[−A/2, A/2]²` with `M` odd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingGrid2D {
    pub m: usize,
    pub step: f64,
    pub aperture: f64,
    /// Requested size when an even `M` was bumped to the next odd value.
    pub adjusted_from: Option<usize>,
}

impl SamplingGrid2D {
    pub fn new(aperture: f64, m: usize) -> Result<Self> {
        if m < 2 || !(aperture > 0.0) {
            return Err(Error::Domain("2D grid needs M >= 2 and A > 0".into()));
        }
        let (m, adjusted_from) = if m.is_multiple_of(2) { (m + 1, Some(m)) } else { (m, None) };
        Ok(SamplingGrid2D {
            m,
            step: aperture / (m - 1) as f64,
            aperture,
            adjusted_from,
        })
    }

    pub fn for_scenario(sc: &Scenario) -> Result<Self> {
        Self::new(sc.aperture, 10 * (sc.antenna_count - 1) + 1)
    }

    pub fn len(&self) -> usize {
        self.m * self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn coord(&self, k: usize) -> f64 {
        let h = (self.m - 1) / 2;
        if k == 0 {
            -self.aperture / 2.0
        } else if k == self.m - 1 {
            self.aperture / 2.0
        } else {
            (k as f64 - h as f64) * self.step
        }
    }

    /// Point of flat index `idx = l·M + k` (k along x, l along y).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        [self.coord(idx % self.m), self.coord(idx / self.m)]
    }

    fn nearest_axis(&self, c: f64) -> usize {
        let h = ((self.m - 1) / 2) as f64;
        ((c / self.step + h).round().max(0.0) as usize).min(self.m - 1)
    }

    pub fn nearest(&self, p: [f64; 2]) -> usize {
        self.nearest_axis(p[1]) * self.m + self.nearest_axis(p[0])
    }
}

/// Grid points at distance `≥ d` from every fixed position.
pub fn feasible_points_1d(grid: &SamplingGrid1D, fixed: &[f64], d: f64) -> Vec<usize> {
    let mut mask = vec![true; grid.len()];
    for &f in fixed {
        block_1d(grid, f, d, &mut mask);
    }
    (0..grid.len()).filter(|&i| mask[i]).collect()
}

/// Grid points at Euclidean distance `≥ d` from every fixed position.
pub fn feasible_points_2d(grid: &SamplingGrid2D, fixed: &[[f64; 2]], d: f64) -> Vec<usize> {
    let mut mask = vec![true; grid.len()];
    for &f in fixed {
        block_2d(grid, f, d, &mut mask);
    }
    (0..grid.len()).filter(|&i| mask[i]).collect()
}

fn block_1d(grid: &SamplingGrid1D, f: f64, d: f64, mask: &mut [bool]) {
    let lo = ((f - d) / grid.step).floor().max(0.0) as usize;
    let hi = (((f + d) / grid.step).ceil().max(0.0) as usize).min(grid.intervals);
    for (i, m) in mask.iter_mut().enumerate().take(hi + 1).skip(lo) {
        if (grid.point(i) - f).abs() < d - SPACING_TOL {
            *m = false;
        }
    }
}

fn block_2d(grid: &SamplingGrid2D, f: [f64; 2], d: f64, mask: &mut [bool]) {
    let h = ((grid.m - 1) / 2) as f64;
    let span = |c: f64| {
        let lo = ((c - d) / grid.step + h).floor().max(0.0) as usize;
        let hi = (((c + d) / grid.step + h).ceil().max(0.0) as usize).min(grid.m - 1);
        (lo, hi)
    };
    let (x0, x1) = span(f[0]);
    let (y0, y1) = span(f[1]);
    for l in y0..=y1 {
        for k in x0..=x1 {
            let idx = l * grid.m + k;
            let p = grid.point(idx);
            if (p[0] - f[0]).hypot(p[1] - f[1]) < d - SPACING_TOL {
                mask[idx] = false;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum SweepMode {
    /// One pass over all antennas.
    #[default]
    Single,
    /// Repeat passes until the objective improves by less than 1e−10
    /// (relative) over a pass.
    UntilConverged { max_sweeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "order", rename_all = "kebab-case")]
pub enum UpdateOrder {
    #[default]
    Ascending,
    Shuffled { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub sweeps: SweepMode,
    pub order: UpdateOrder,
}

impl SamplingOptions {
    pub fn converge() -> Self {
        SamplingOptions {
            sweeps: SweepMode::UntilConverged { max_sweeps: 100 },
            order: UpdateOrder::Ascending,
        }
    }
}

/// One per-antenna update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub sweep: usize,
    pub antenna: usize,
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub moved: bool,
    pub candidates: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    pub case: Case,
    pub initial_objective: f64,
    pub steps: Vec<StepRecord>,
    pub sweeps: usize,
    pub converged: bool,
    pub geometry: Geometry,
}

impl OptimizationTrace {
    pub fn final_objective(&self) -> f64 {
        self.steps.last().map_or(self.initial_objective, |s| s.objective)
    }

    /// Objective values, starting with the initial one.
    pub fn objectives(&self) -> Vec<f64> {
        std::iter::once(self.initial_objective)
            .chain(self.steps.iter().map(|s| s.objective))
            .collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.objectives().windows(2).all(|w| w[1] >= w[0])
    }
}

enum Space<'a> {
    Line(&'a SamplingGrid1D),
    Plane(&'a SamplingGrid2D),
}

impl Space<'_> {
    fn len(&self) -> usize {
        match self {
            Space::Line(g) => g.len(),
            Space::Plane(g) => g.len(),
        }
    }

    fn point(&self, i: usize) -> [f64; 2] {
        match self {
            Space::Line(g) => [g.point(i), 0.0],
            Space::Plane(g) => g.point(i),
        }
    }

    fn block(&self, p: [f64; 2], d: f64, mask: &mut [bool]) {
        match self {
            Space::Line(g) => block_1d(g, p[0], d, mask),
            Space::Plane(g) => block_2d(g, p, d, mask),
        }
    }

    fn geometry(&self, idx: &[usize]) -> Geometry {
        match self {
            Space::Line(g) => Geometry::Linear(ApvLinear::new(idx.iter().map(|&i| g.point(i)).collect())),
            Space::Plane(g) => Geometry::Planar(ApmPlanar::new(idx.iter().map(|&i| g.point(i)).collect())),
        }
    }
}

/// Objective from the (shifted) first and second coefficient sums over N
/// antennas; mirrors [`objective`] up to round-off.
struct MomentObjective {
    k: usize,
    kappa: f64,
    n: f64,
    scale: [f64; 3],
}

impl MomentObjective {
    fn eval(&self, s1: &[f64; 3], s2: &[f64; 9]) -> f64 {
        let k = self.k;
        let n = self.n;
        let c = |i: usize, j: usize| s2[i * 3 + j] / n - s1[i] * s1[j] / (n * n);
        for i in 0..k {
            if !(c(i, i) > 1e-12 * self.scale[i]) {
                return f64::NEG_INFINITY;
            }
        }
        match k {
            1 => c(0, 0),
            2 => {
                let (a, b, x) = (c(0, 0), c(1, 1), c(0, 1));
                let det = a * b - x * x;
                if !(det > crb::SINGULAR_TOL * a * b) {
                    return f64::NEG_INFINITY;
                }
                det / (self.kappa * (a + b))
            }
            _ => {
                let (a, b, cc) = (c(0, 0), c(1, 1), c(2, 2));
                let (xp, xr, pr) = (c(0, 1), c(0, 2), c(1, 2));
                let det = a * b * cc + 2.0 * xp * xr * pr - a * pr * pr - b * xr * xr - cc * xp * xp;
                if !(det > crb::SINGULAR_TOL * a * b * cc) {
                    return f64::NEG_INFINITY;
                }
                let tr = (b * cc - pr * pr) + (a * cc - xr * xr) + (a * b - xp * xp);
                det / (self.kappa * tr)
            }
        }
    }
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

fn run_sampling(case: Case, sc: &Scenario, space: Space<'_>, init: Vec<usize>, opts: SamplingOptions) -> Result<OptimizationTrace> {
    let n = init.len();
    let eta = worst_case_params(case, sc);
    let (u, v, r) = eta.uvr();
    let params = case.unknowns();
    let kdim = params.len();
    let npts = space.len();

    // per-point coefficients, shifted by their grid mean to limit cancellation
    let mut coef = vec![[0.0f64; 3]; npts];
    let mut shift = [0.0f64; 3];
    let mut scale = [0.0f64; 3];
    for (i, c) in coef.iter_mut().enumerate() {
        let p = space.point(i);
        for (j, &par) in params.iter().enumerate() {
            c[j] = coeff(par, p, u, v, r);
        }
    }
    for j in 0..kdim {
        shift[j] = coef.iter().map(|c| c[j]).sum::<f64>() / npts as f64;
        for c in coef.iter_mut() {
            c[j] -= shift[j];
        }
        scale[j] = coef.iter().map(|c| c[j] * c[j]).fold(0.0, f64::max);
    }
    let mo = MomentObjective {
        k: kdim,
        kappa: kappa(sc),
        n: n as f64,
        scale,
    };

    let mut idx = init;
    let geom0 = space.geometry(&idx);
    check_feasible(&geom0, sc)?;
    let initial_objective = objective(case, sc, &geom0);
    let mut current = initial_objective;

    let mut rng = match opts.order {
        UpdateOrder::Shuffled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        UpdateOrder::Ascending => None,
    };
    let max_sweeps = match opts.sweeps {
        SweepMode::Single => 1,
        SweepMode::UntilConverged { max_sweeps } => max_sweeps.max(1),
    };

    let mut steps = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut mask = vec![true; npts];
    while sweeps < max_sweeps {
        sweeps += 1;
        let start_obj = current;
        let mut moved_any = false;
        let mut order: Vec<usize> = (0..n).collect();
        if let Some(rng) = rng.as_mut() {
            order.shuffle(rng);
        }
        for &a in &order {
            // sums over the other antennas
            let mut s1 = [0.0f64; 3];
            let mut s2 = [0.0f64; 9];
            for (b, &pi) in idx.iter().enumerate() {
                if b == a {
                    continue;
                }
                let c = &coef[pi];
                for i in 0..kdim {
                    s1[i] += c[i];
                    for j in 0..kdim {
                        s2[i * 3 + j] += c[i] * c[j];
                    }
                }
            }
            mask.iter_mut().for_each(|m| *m = true);
            for (b, &pi) in idx.iter().enumerate() {
                if b != a {
                    space.block(space.point(pi), sc.min_spacing, &mut mask);
                }
            }
            let eval = |pi: usize| {
                let c = &coef[pi];
                let mut t1 = s1;
                let mut t2 = s2;
                for i in 0..kdim {
                    t1[i] += c[i];
                    for j in 0..kdim {
                        t2[i * 3 + j] += c[i] * c[j];
                    }
                }
                mo.eval(&t1, &t2)
            };
            let inc = eval(idx[a]);
            let candidates = mask.iter().filter(|&&m| m).count();
            if candidates == 0 {
                return Err(Error::EmptyCandidateSet { antenna: a + 1 });
            }
            let best = (0..npts)
                .into_par_iter()
                .filter(|&i| mask[i])
                .map(|i| (eval(i), i))
                .reduce(|| (f64::NEG_INFINITY, usize::MAX), better);
            let from = space.point(idx[a]);
            let improves = best.1 != usize::MAX
                && best.1 != idx[a]
                && (best.0 > inc + 1e-12 * inc.abs() || (inc == f64::NEG_INFINITY && best.0.is_finite()));
            if improves {
                let prev = idx[a];
                idx[a] = best.1;
                let obj = objective(case, sc, &space.geometry(&idx));
                if obj < current {
                    // fast path and closed form disagree at round-off level
                    idx[a] = prev;
                } else {
                    current = obj;
                    moved_any = true;
                }
            }
            steps.push(StepRecord {
                sweep: sweeps,
                antenna: a + 1,
                from,
                to: space.point(idx[a]),
                moved: space.point(idx[a]) != from,
                candidates,
                objective: current,
            });
        }
        let rel = if start_obj.is_finite() && start_obj != 0.0 {
            (current - start_obj) / start_obj.abs()
        } else if current.is_finite() && !start_obj.is_finite() {
            f64::INFINITY
        } else {
            0.0
        };
        if !moved_any || rel < 1e-10 {
            converged = true;
            break;
        }
    }

    let mut geometry = space.geometry(&idx);
    if let Geometry::Linear(x) = geometry {
        geometry = Geometry::Linear(x.sorted());
    }
    check_feasible(&geometry, sc)?;
    Ok(OptimizationTrace {
        case,
        initial_objective,
        steps,
        sweeps,
        converged,
        geometry,
    })
}

fn check_feasible(geom: &Geometry, sc: &Scenario) -> Result<()> {
    let res = match geom {
        Geometry::Linear(x) => validate_apv(&x.clone().sorted(), sc),
        Geometry::Planar(s) => validate_apm(s, sc),
    };
    res.map_err(Error::InfeasibleGeometry)
}

fn check_case(case: Case, dim: Dim) -> Result<()> {
    if case.dim() != dim {
        return Err(Error::DimensionMismatch(format!("case {case} is not a {dim} case")));
    }
    Ok(())
}

/// Sequential per-antenna grid search for linear arrays. The initial APV is
/// snapped to the nearest grid points; the result is sorted ascending.
pub fn optimize_sampling_1d(
    case: Case,
    sc: &Scenario,
    init: &ApvLinear,
    grid: &SamplingGrid1D,
    opts: SamplingOptions,
) -> Result<OptimizationTrace> {
    check_case(case, Dim::Linear)?;
    let idx: Vec<usize> = init.positions().iter().map(|&x| grid.nearest(x)).collect();
    run_sampling(case, sc, Space::Line(grid), idx, opts)
}

/// Planar analog of [`optimize_sampling_1d`] with Euclidean spacing.
pub fn optimize_sampling_2d(
    case: Case,
    sc: &Scenario,
    init: &ApmPlanar,
    grid: &SamplingGrid2D,
    opts: SamplingOptions,
) -> Result<OptimizationTrace> {
    check_case(case, Dim::Planar)?;
    let idx: Vec<usize> = init.positions().iter().map(|&p| grid.nearest(p)).collect();
    run_sampling(case, sc, Space::Plane(grid), idx, opts)
}

/// Default starting layout: the full-span uniform array (linear) or the
/// full-span uniform planar array; for non-square `N` the first `N` points
/// of the `⌈√N⌉²` full-span grid.
pub fn default_init(sc: &Scenario) -> Result<Geometry> {
    match sc.dim {
        Dim::Linear => benchmark_geometry(Benchmark::SparseUla, sc),
        Dim::Planar => {
            let n = sc.antenna_count;
            let k = (n as f64).sqrt().ceil() as usize;
            if k * k == n {
                return benchmark_geometry(Benchmark::SparseUpa, sc);
            }
            let pitch = sc.aperture / (k as f64 - 1.0);
            let h = sc.aperture / 2.0;
            let pts = (0..n)
                .map(|i| [-h + (i % k) as f64 * pitch, -h + (i / k) as f64 * pitch])
                .collect();
            Ok(Geometry::Planar(ApmPlanar::new(pts)))
        }
    }
}

/// Sampling optimization from [`default_init`] on the default grid.
pub fn optimize_sampling(case: Case, sc: &Scenario, opts: SamplingOptions) -> Result<OptimizationTrace> {
    sc.validate()?;
    let init = default_init(sc)?;
    match init {
        Geometry::Linear(x) => optimize_sampling_1d(case, sc, &x, &SamplingGrid1D::for_scenario(sc)?, opts),
        Geometry::Planar(s) => optimize_sampling_2d(case, sc, &s, &SamplingGrid2D::for_scenario(sc)?, opts),
    }
}

/// A uniformly spread random APV satisfying every constraint.
pub fn random_feasible_apv<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> ApvLinear {
    let n = sc.antenna_count;
    let slack = (sc.aperture - (n as f64 - 1.0) * sc.min_spacing).max(0.0);
    let mut cuts: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * slack).collect();
    cuts.sort_by(f64::total_cmp);
    let x = cuts
        .iter()
        .enumerate()
        .map(|(i, c)| (c + i as f64 * sc.min_spacing).min(sc.aperture))
        .collect();
    ApvLinear::new(x)
}

/// A random APM by sequential rejection sampling; `None` if `N` points did
/// not fit within the attempt budget.
pub fn random_feasible_apm<R: Rng + ?Sized>(sc: &Scenario, rng: &mut R) -> Option<ApmPlanar> {
    let h = sc.aperture / 2.0;
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(sc.antenna_count);
    let mut attempts = 0;
    while pts.len() < sc.antenna_count {
        attempts += 1;
        if attempts > 100_000 {
            return None;
        }
        let p = [rng.random_range(-h..=h), rng.random_range(-h..=h)];
        if pts
            .iter()
            .all(|q| (p[0] - q[0]).hypot(p[1] - q[1]) >= sc.min_spacing)
        {
            pts.push(p);
        }
    }
    Some(ApmPlanar::new(pts))
}
