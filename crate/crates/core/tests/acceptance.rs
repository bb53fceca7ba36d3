//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use nma::channel::{self, coeff, path_gain, steering_vector, Param};
use nma::cli::{self, RunConfig, Scheme, SweepAxis};
use nma::cli::config::Quantity;
use nma::correlation::{correlation_map, lobe_metrics, Projection};
use nma::crb::{self, fim_oracle, moments, moments_linear, var_tilde_closed_form, Case};
use nma::geometry::{
    benchmark_geometry, fresnel_distance, rayleigh_distance, Benchmark, Dim, Geometry, Scenario,
    TargetParams,
};
use nma::grid::{Axis, ParamGrid};
use nma::music::{monte_carlo_mse, simulate_snapshots_stream, SearchSpec};
use nma::optimize::{
    closed_form_apv, optimize_sampling, random_feasible_apm, random_feasible_apv, SamplingOptions, UpdateOrder,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn manifest(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn load(rel: &str) -> RunConfig {
    RunConfig::load(&manifest(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Random scenario, layout and in-box target for `case`.
fn random_instance(case: Case, rng: &mut ChaCha8Rng) -> (Scenario, Geometry, TargetParams) {
    loop {
        let lam = rng.random_range(0.005..0.05);
        let a = lam * rng.random_range(5.0..40.0);
        let mut sc = match case.dim() {
            Dim::Linear => Scenario::reference_linear(),
            Dim::Planar => Scenario::reference_planar(),
        };
        sc.wavelength = lam;
        sc.aperture = a;
        sc.min_spacing = lam / 2.0;
        sc.snapshots = rng.random_range(10..200);
        sc.set_snr_db(rng.random_range(0.0..30.0));
        sc.fresnel_dim = None;
        sc.r_min = fresnel_distance(a, lam, sc.dim).unwrap();
        sc.r_max = rayleigh_distance(a, lam, sc.dim).unwrap() / 2.0;
        let r = rng.random_range(sc.r_min..sc.r_max);
        let (geom, eta) = match sc.dim {
            Dim::Linear => {
                let cap = ((a / sc.min_spacing).floor() as usize + 1).min(30);
                sc.antenna_count = rng.random_range(3..=cap.max(3));
                if (sc.antenna_count - 1) as f64 * sc.min_spacing > a {
                    continue;
                }
                let g = Geometry::Linear(random_feasible_apv(&sc, rng));
                (g, TargetParams::linear(rng.random_range(0.0..sc.u_max), r))
            }
            Dim::Planar => {
                sc.antenna_count = rng.random_range(4..=25);
                let Some(s) = random_feasible_apm(&sc, rng) else { continue };
                let (u, v) = loop {
                    let u = rng.random_range(0.0..sc.u_max);
                    let v = rng.random_range(0.0..sc.v_max);
                    if u * u + v * v < 0.95 {
                        break (u, v);
                    }
                };
                (Geometry::Planar(s), TargetParams::planar(u, v, r))
            }
        };
        return (sc, geom, eta);
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ac1e);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for case in Case::ALL {
        for trial in 0..200 {
            let (sc, g, eta) = random_instance(case, &mut rng);
            let closed = crb::crb(case, &sc, &g, &eta);
            let oracle = fim_oracle(&sc, &g, &eta, case.unknowns());
            match (closed, oracle) {
                (Ok(c), Ok(o)) => {
                    for (i, &p) in case.unknowns().iter().enumerate() {
                        let e = rel_err(c.crb.get(p).unwrap(), o[(i, i)]);
                        worst = worst.max(e);
                        if e > 1e-9 {
                            failures.push(format!("{case}#{trial} {} rel {e:.2e}", p.name()));
                        }
                    }
                }
                (c, o) => failures.push(format!(
                    "{case}#{trial}: closed {:?} oracle {:?}",
                    c.err().map(|e| e.to_string()),
                    o.err().map(|e| e.to_string())
                )),
            }
        }
    }
    let head: Vec<_> = failures.iter().take(3).cloned().collect();
    outcome(
        failures.is_empty(),
        format!("6 cases x 200 instances, max rel err {worst:.2e}, {} mismatches {head:?}", failures.len()),
    )
}

fn reductions(cfg: &RunConfig) -> (f64, f64) {
    let run = cli::run_crb(cfg).expect("crb run");
    let pick = |s: Scheme| run.reductions.iter().find(|r| r.versus == s).map(|r| r.percent).unwrap();
    (pick(Scheme::Ula), pick(Scheme::SparseUla))
}

fn criterion_2() -> Outcome {
    let mut cfg = load("scenarios/linear_short.toml");
    let want = [(Case::C11, 55.3, 20.5, 0.5), (Case::C12, 74.2, 18.4, 0.5), (Case::C13, 73.0, 18.1, 1.0)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (case, b1, b2, tol) in want {
        cfg.case = case;
        cfg.geometry.method = None;
        cfg.crb.snr_db = vec![20.0];
        let (r1, r2) = reductions(&cfg);
        pass &= (r1 - b1).abs() <= tol && (r2 - b2).abs() <= tol;
        parts.push(format!("{case} {r1:.2}/{r2:.2} (want {b1}/{b2} ±{tol})"));
    }
    outcome(pass, parts.join(", "))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_3() -> Outcome {
    // r bounds and SNR fixed across the sweep so only the layout changes
    let mut sc = Scenario::reference_linear();
    sc.antenna_count = 4;
    sc.near_field_check = false;
    let (mut la, mut l11, mut l12) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..10 {
        let ratio = 10f64.powf(1.0 + i as f64 / 9.0);
        sc.aperture = ratio * sc.wavelength;
        let g = Geometry::Linear(closed_form_apv(&sc).unwrap());
        la.push(sc.aperture.ln());
        l11.push(crb::worst_case_crb(Case::C11, &sc, &g).unwrap().total().ln());
        l12.push(crb::worst_case_crb(Case::C12, &sc, &g).unwrap().total().ln());
    }
    let (s11, s12) = (slope(&la, &l11), slope(&la, &l12));
    outcome(
        (s11 + 2.0).abs() <= 0.05 && (s12 + 4.0).abs() <= 0.05,
        format!("slopes {s11:.3} (angle, want -2±0.05), {s12:.3} (range, want -4±0.05)"),
    )
}

fn criterion_4() -> Outcome {
    let lam = 0.02;
    let mut worst = 0.0f64;
    let mut checked = 0;
    for n in 4..=40usize {
        for k in 5..=50 {
            let mut sc = Scenario::reference_linear();
            sc.antenna_count = n;
            sc.aperture = k as f64 * lam;
            if (n - 1) as f64 * sc.min_spacing > sc.aperture {
                continue;
            }
            let x = closed_form_apv(&sc).unwrap();
            let numeric = moments_linear(&x).var(1);
            let closed = var_tilde_closed_form(sc.aperture, n, sc.min_spacing).unwrap();
            worst = worst.max(rel_err(numeric, closed));
            checked += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{checked} feasible (N, A) pairs, max rel err {worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let cfg = load("scenarios/asymmetric_c21.toml");
    let (g, _) = cli::scheme_geometry(&cfg, &cfg.scenario, Scheme::Proposed).unwrap();
    let w = crb::worst_case_search(Case::C21, &cfg.scenario, &g, cfg.crb.search_resolution).unwrap();
    let (u, v, _) = w.params.uvr();
    let theta = v.acos().to_degrees();
    let phi = (u / theta.to_radians().sin()).acos().to_degrees();
    outcome(
        (theta - 86.4).abs() <= 0.5 && (phi - 90.0).abs() <= 0.5 && w.gap < 0.01,
        format!("argmax theta {theta:.2}°, phi {phi:.2}°, gap to broadside {:.2e}", w.gap),
    )
}

fn criterion_6() -> Outcome {
    let cfg = load("scenarios/linear_reference.toml");
    let res = cli::run_music(&cfg).unwrap().0;
    let mut pass = true;
    let mut parts = Vec::new();
    for m in &res {
        let (mse, ci, bound) = (m.mse.u.unwrap(), m.ci95.u.unwrap(), m.crb.u.unwrap());
        let db = 10.0 * (mse / bound).log10();
        let gated = m.snr_db >= 20.0;
        if gated {
            pass &= mse >= bound && db <= 5.0;
        }
        parts.push(format!(
            "{} dB: MSE/CRB {db:+.2} dB (ci ±{:.1}%){}",
            m.snr_db,
            100.0 * ci / mse,
            if gated { "" } else { " [reported]" }
        ));
    }
    outcome(pass, format!("{} trials; {}", res[0].trials, parts.join(", ")))
}

fn criterion_7() -> Outcome {
    let sc = Scenario::reference_linear();
    let eta = TargetParams::linear(0.71, sc.target.r);
    let grid = ParamGrid::linear(Axis::range(-1.0, 1.0, 2001), Axis::Fixed(sc.target.r)).unwrap();
    let in_window = |p: &TargetParams| (-0.28..=-0.18).contains(&p.u());
    let sparse = benchmark_geometry(Benchmark::SparseUla, &sc).unwrap();
    let map = correlation_map(&sparse, &eta, &grid, Projection::Parameter, sc.wavelength).unwrap();
    let lobes = lobe_metrics(&map).unwrap();
    let grating = lobes
        .sidelobes
        .iter()
        .filter(|s| in_window(&s.params) && s.value > 0.5)
        .map(|s| (s.params.u(), s.value))
        .next();
    let proposed = Geometry::Linear(closed_form_apv(&sc).unwrap());
    let pmap = correlation_map(&proposed, &eta, &grid, Projection::Parameter, sc.wavelength).unwrap();
    let pmax = pmap.max_where(in_window).map(|(_, v)| v).unwrap();
    match grating {
        Some((u, v)) => outcome(
            pmax < v,
            format!("sparse ULA lobe R={v:.3} at u'={u:.3}; proposed max in window {pmax:.3}"),
        ),
        None => outcome(false, "no sidelobe above 0.5 in [-0.28, -0.18]".into()),
    }
}

fn criterion_8() -> Outcome {
    let mut n_cfg = load("scenarios/planar_sweep_n.toml");
    n_cfg.sweep.values = vec![Quantity::Num(9.0), Quantity::Num(64.0)];
    let rows = cli::run_sweep(&n_cfg).unwrap();
    let sum = |rows: &[cli::SweepRow], value: f64, s: Scheme| {
        rows.iter().find(|r| r.value == value && r.scheme == s).and_then(|r| r.sum).unwrap()
    };
    let p9 = sum(&rows, 9.0, Scheme::Proposed);
    let r_sparse = 100.0 * (1.0 - p9 / sum(&rows, 9.0, Scheme::SparseUpa));
    let mut big = n_cfg.scenario.clone();
    big.antenna_count = 100;
    let upa100 = benchmark_geometry(Benchmark::Upa, &big).unwrap();
    let r_upa = 100.0 * (1.0 - p9 / crb::worst_case_crb(Case::C23, &big, &upa100).unwrap().total());

    let mut a_cfg = load("scenarios/planar_sweep_a.toml");
    assert_eq!(a_cfg.sweep.axis, SweepAxis::A);
    a_cfg.sweep.values = vec![Quantity::Num(0.2), Quantity::Num(0.4)];
    let rows = cli::run_sweep(&a_cfg).unwrap();
    let p = sum(&rows, 0.2, Scheme::Proposed);
    let r_b3 = 100.0 * (1.0 - p / sum(&rows, 0.2, Scheme::Upa));
    let r_b4 = 100.0 * (1.0 - p / sum(&rows, 0.2, Scheme::SparseUpa));
    let flat = rel_err(sum(&rows, 0.2, Scheme::Upa), sum(&rows, 0.4, Scheme::Upa)) < 1e-12;

    let checks = [(r_sparse, 24.5), (r_upa, 98.8), (r_b3, 99.2), (r_b4, 45.5)];
    let pass = flat && checks.iter().all(|(got, want)| (got - want).abs() <= 3.0);
    outcome(
        pass,
        format!(
            "N=9 vs sparse UPA {r_sparse:.2}% (24.5), vs UPA N=100 {r_upa:.2}% (98.8); \
             A=0.2 vs UPA {r_b3:.2}% (99.2), vs sparse UPA {r_b4:.2}% (45.5); UPA flat in A: {flat}"
        ),
    )
}

/// Central-difference check of ψ with the path gain held fixed.
fn psi_fd_error(sc: &Scenario, g: &Geometry, eta: &TargetParams, p: Param) -> f64 {
    let beta = path_gain(sc, eta.r());
    let (u, v, r) = eta.uvr();
    let h = match p {
        Param::U => 1e-6,
        Param::V => 1e-6,
        Param::R => 1e-6 * r,
    };
    let shift = |s: f64| match p {
        Param::U => eta.with_uvr(u + s, v, r),
        Param::V => eta.with_uvr(u, v + s, r),
        Param::R => eta.with_uvr(u, v, r + s),
    };
    let ap = steering_vector(g, &shift(h), sc.wavelength);
    let am = steering_vector(g, &shift(-h), sc.wavelength);
    let psi = channel::psi(sc, g, eta, p).unwrap();
    let mut num = 0.0;
    let mut den = 0.0;
    for ((a, b), z) in ap.entries().iter().zip(am.entries()).zip(&psi) {
        let fd: Complex64 = beta * (a - b) / (2.0 * h);
        num += (fd - z).norm_sqr();
        den += z.norm_sqr();
    }
    (num / den).sqrt()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut fails: Vec<String> = Vec::new();
    let mut worst_fd = 0.0f64;
    let mut moment_sets = 0;
    for case in Case::ALL {
        for _ in 0..50 {
            let (sc, g, eta) = random_instance(case, &mut rng);
            for &p in case.unknowns() {
                let e = psi_fd_error(&sc, &g, &eta, p);
                worst_fd = worst_fd.max(e);
                if e > 1e-5 {
                    fails.push(format!("fd {case} {} {e:.1e}", p.name()));
                }
                let pts = g.points();
                let (u, v, r) = eta.uvr();
                if pts.iter().any(|&q| !coeff(p, q, u, v, r).is_finite()) {
                    fails.push(format!("non-finite coefficient {case}"));
                }
            }
            let m = moments(&g, Some(&eta)).unwrap();
            moment_sets += 1;
            if !m.satisfies_cauchy_schwarz() {
                fails.push(format!("cauchy-schwarz {case}"));
            }
        }
    }
    // optimizer traces: monotone, feasible, reproducible
    let mut lin = Scenario::reference_linear();
    lin.antenna_count = 10;
    let mut pla = Scenario::reference_planar();
    pla.antenna_count = 16;
    let mut traces = 0;
    for (case, sc) in [
        (Case::C11, &lin),
        (Case::C12, &lin),
        (Case::C13, &lin),
        (Case::C21, &pla),
        (Case::C22, &pla),
        (Case::C23, &pla),
    ] {
        for opts in [
            SamplingOptions::default(),
            SamplingOptions::converge(),
            SamplingOptions {
                order: UpdateOrder::Shuffled { seed: 3 },
                ..SamplingOptions::converge()
            },
        ] {
            let a = optimize_sampling(case, sc, opts).unwrap();
            let b = optimize_sampling(case, sc, opts).unwrap();
            traces += 1;
            if !a.is_monotone() {
                fails.push(format!("non-monotone trace {case}"));
            }
            if let Err(v) = a.geometry.validate(sc) {
                fails.push(format!("infeasible optimizer output {case}: {v:?}"));
            }
            if a != b {
                fails.push(format!("optimizer not reproducible {case}"));
            }
            if let Geometry::Planar(s) = &a.geometry {
                let m = crb::moments_planar(s, &crb::worst_case_params(case, sc));
                moment_sets += 1;
                if !m.satisfies_cauchy_schwarz() {
                    fails.push(format!("cauchy-schwarz on optimized {case}"));
                }
            }
        }
    }
    // seeded simulation and Monte Carlo determinism
    let sc = Scenario::reference_linear();
    let g = benchmark_geometry(Benchmark::SparseUla, &sc).unwrap();
    let eta = TargetParams::linear(0.3, sc.target.r);
    let b1 = simulate_snapshots_stream(&sc, &g, &eta, 42, 5).unwrap();
    let b2 = simulate_snapshots_stream(&sc, &g, &eta, 42, 5).unwrap();
    if b1.y != b2.y {
        fails.push("snapshots not reproducible".into());
    }
    let spec = SearchSpec::default();
    let m1 = monte_carlo_mse(&sc, &g, &eta, Case::C11, 20, 11, &spec).unwrap();
    let m2 = monte_carlo_mse(&sc, &g, &eta, Case::C11, 20, 11, &spec).unwrap();
    if m1 != m2 {
        fails.push("monte carlo not reproducible".into());
    }
    outcome(
        fails.is_empty(),
        format!(
            "max psi fd err {worst_fd:.1e}, {moment_sets} moment sets, {traces} traces, {} failures {:?}",
            fails.len(),
            fails.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed forms equal the FIM oracle", criterion_1, Duration::from_secs(60)),
        ("1D benchmark reductions at 20 dB", criterion_2, Duration::from_secs(300)),
        ("CRB scaling with aperture", criterion_3, Duration::from_secs(10)),
        ("var of squared positions in closed form", criterion_4, Duration::from_secs(5)),
        ("asymmetric layout worst-case direction", criterion_5, Duration::from_secs(120)),
        ("MUSIC MSE against the CRB", criterion_6, Duration::from_secs(600)),
        ("grating lobe of the sparse ULA", criterion_7, Duration::from_secs(30)),
        ("2D sweep spot checks", criterion_8, Duration::from_secs(1800)),
        ("property suite", criterion_9, Duration::from_secs(300)),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = f();
        let dt = t.elapsed();
        let pass = o.pass && dt <= *budget;
        failed += !pass as usize;
        println!(
            "{} {}. {name}: {} [{:.1}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            dt.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
