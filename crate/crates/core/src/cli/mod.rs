//! Batch front end: config-driven verbs producing CSV and JSON artifacts.

pub mod config;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

pub use config::{Method, RunConfig, Scheme, SweepAxis};

use crate::channel::steering_vector;
use crate::correlation::{correlation_map, lobe_metrics, Projection};
use crate::crb::{self, Case, CrbReport, WorstCaseSearch};
use crate::error::{Error, Result};
use crate::geometry::{benchmark_geometry, Dim, Geometry, Scenario, TargetParams};
use crate::grid::ParamGrid;
use crate::music::{self, MseResult};
use crate::optimize::{
    closed_form_apv, default_init, objective, optimize_sampling_1d, optimize_sampling_2d,
    OptimizationTrace, SamplingGrid1D, SamplingGrid2D,
};
use crate::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    Crb,
    Optimize,
    Music,
    Correlation,
    Sweep,
}

#[derive(Debug, Parser)]
#[command(name = "nma", version, about = "Near-field movable-antenna CRB toolkit")]
pub struct Cli {
    pub verb: Verb,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "NMA_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Also write the steering vector of the evaluated layout at the target.
    #[arg(long)]
    pub dump_steering: bool,
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub summary: String,
    /// False when any sweep cell or scheme failed.
    pub all_ok: bool,
}

fn csv_header(cfg: &RunConfig) -> String {
    format!("# nma {VERSION}\n# config: {}\n", cfg.to_json())
}

fn meta(cfg: &RunConfig) -> serde_json::Value {
    json!({ "version": VERSION, "config": cfg })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

/// Layout of `scheme` for scenario `sc`, with the optimizer trace when one
/// ran.
pub fn scheme_geometry(cfg: &RunConfig, sc: &Scenario, scheme: Scheme) -> Result<(Geometry, Option<OptimizationTrace>)> {
    if let Some(b) = scheme.benchmark() {
        return Ok((benchmark_geometry(b, sc)?, None));
    }
    if let Some(path) = &cfg.geometry.file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let g = Geometry::from_csv(&text)?;
        g.validate(sc).map_err(Error::InfeasibleGeometry)?;
        return Ok((g, None));
    }
    match cfg.method() {
        Method::ClosedForm => match cfg.case {
            Case::C11 | Case::C12 => Ok((Geometry::Linear(closed_form_apv(sc)?), None)),
            c => Err(Error::Domain(format!("no closed-form layout for case {c}; use sampling"))),
        },
        Method::Sampling => {
            let opts = cfg.optimize.options(cfg.seed);
            let tr = match default_init(sc)? {
                Geometry::Linear(x) => {
                    let m = cfg.optimize.grid.unwrap_or_else(|| SamplingGrid1D::default_intervals(sc));
                    let grid = if cfg.optimize.aligned {
                        SamplingGrid1D::aligned(sc, m)?
                    } else {
                        SamplingGrid1D::new(sc.aperture, m)?
                    };
                    optimize_sampling_1d(cfg.case, sc, &x, &grid, opts)?
                }
                Geometry::Planar(s) => {
                    let grid = match cfg.optimize.grid {
                        Some(m) => SamplingGrid2D::new(sc.aperture, m)?,
                        None => SamplingGrid2D::for_scenario(sc)?,
                    };
                    optimize_sampling_2d(cfg.case, sc, &s, &grid, opts)?
                }
            };
            Ok((tr.geometry.clone(), Some(tr)))
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrbEntry {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub report: Option<CrbReport>,
    pub search: Option<WorstCaseSearch>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub snr_db: f64,
    pub versus: Scheme,
    /// `1 − proposed/benchmark` of the worst-case objective, in percent.
    pub percent: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrbRun {
    pub entries: Vec<CrbEntry>,
    pub reductions: Vec<Reduction>,
}

/// Worst-case CRBs of every scheme at every SNR.
pub fn run_crb(cfg: &RunConfig) -> Result<CrbRun> {
    cfg.scenario.validate()?;
    let mut geoms = Vec::new();
    for &s in &cfg.crb.schemes {
        geoms.push((s, scheme_geometry(cfg, &cfg.scenario, s).map(|g| g.0)));
    }
    let mut entries = Vec::new();
    for &snr in &cfg.crb.snr_db {
        let sc = cfg.scenario.clone().with_snr_db(snr);
        for (scheme, g) in &geoms {
            let mut e = CrbEntry {
                scheme: *scheme,
                snr_db: snr,
                report: None,
                search: None,
                error: None,
            };
            match g {
                Err(err) => e.error = Some(err.to_string()),
                Ok(g) => match crb::worst_case_crb(cfg.case, &sc, g) {
                    Ok(rep) => {
                        e.report = Some(rep);
                        if cfg.crb.search_resolution >= 2 {
                            match crb::worst_case_search(cfg.case, &sc, g, cfg.crb.search_resolution) {
                                Ok(s) => e.search = Some(s),
                                Err(err) => e.error = Some(err.to_string()),
                            }
                        }
                    }
                    Err(err) => e.error = Some(err.to_string()),
                },
            }
            entries.push(e);
        }
    }
    let mut reductions = Vec::new();
    for &snr in &cfg.crb.snr_db {
        let at = |s: Scheme| {
            entries
                .iter()
                .find(|e| e.snr_db == snr && e.scheme == s)
                .and_then(|e| e.report.as_ref())
                .map(|r| r.total())
        };
        if let Some(p) = at(Scheme::Proposed) {
            for &s in cfg.crb.schemes.iter().filter(|&&s| s != Scheme::Proposed) {
                if let Some(b) = at(s) {
                    reductions.push(Reduction {
                        snr_db: snr,
                        versus: s,
                        percent: 100.0 * (1.0 - p / b),
                    });
                }
            }
        }
    }
    Ok(CrbRun { entries, reductions })
}

fn render_crb(cfg: &RunConfig, run: &CrbRun) -> RunOutput {
    let sc = &cfg.scenario;
    let mut csv = csv_header(cfg);
    csv.push_str("scheme,case,N,A,snr_db,u,v,r,crb_u,crb_v,crb_r,sum,search_sum,search_gap,error\n");
    let mut all_ok = true;
    for e in &run.entries {
        let (p, c) = match &e.report {
            Some(r) => (Some(r.params), Some(r.crb)),
            None => (None, None),
        };
        let (u, v, r) = p.map_or((None, None, None), |p| {
            let (u, v, r) = p.uvr();
            (Some(u), Some(v), Some(r))
        });
        all_ok &= e.error.is_none();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            e.scheme.name(),
            cfg.case,
            sc.antenna_count,
            sc.aperture,
            e.snr_db,
            opt(u),
            opt(v),
            opt(r),
            opt(c.and_then(|c| c.u)),
            opt(c.and_then(|c| c.v)),
            opt(c.and_then(|c| c.r)),
            opt(c.map(|c| c.sum())),
            opt(e.search.as_ref().map(|s| s.value)),
            opt(e.search.as_ref().map(|s| s.gap)),
            e.error.clone().unwrap_or_default().replace(',', ";"),
        );
    }
    let body = json!({ "meta": meta(cfg), "entries": run.entries, "reductions": run.reductions });
    let mut summary = String::new();
    for r in &run.reductions {
        let _ = writeln!(
            summary,
            "{} @ {:.1} dB: proposed reduces the worst-case CRB by {:.2}% vs {}",
            cfg.case,
            r.snr_db,
            r.percent,
            r.versus.name()
        );
    }
    RunOutput {
        artifacts: vec![
            Artifact {
                name: "crb.csv".into(),
                contents: csv,
            },
            Artifact {
                name: "crb.json".into(),
                contents: serde_json::to_string_pretty(&body).expect("json"),
            },
        ],
        summary,
        all_ok,
    }
}

fn run_optimize(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.scenario.validate()?;
    let (g, trace) = scheme_geometry(cfg, &cfg.scenario, Scheme::Proposed)?;
    let obj = objective(cfg.case, &cfg.scenario, &g);
    let mut csv = csv_header(cfg);
    csv.push_str(&g.to_csv());
    let body = json!({
        "meta": meta(cfg),
        "method": cfg.method(),
        "objective": obj,
        "trace": trace,
        "geometry": g,
    });
    let summary = format!(
        "{} layout with {} antennas, objective {:.6e}{}\n",
        match cfg.method() {
            Method::ClosedForm => "closed-form",
            Method::Sampling => "sampled",
        },
        g.len(),
        obj,
        trace
            .as_ref()
            .map(|t| format!(" after {} sweep(s)", t.sweeps))
            .unwrap_or_default()
    );
    Ok(RunOutput {
        artifacts: vec![
            Artifact {
                name: "geometry.csv".into(),
                contents: csv,
            },
            Artifact {
                name: "trace.json".into(),
                contents: serde_json::to_string_pretty(&body).expect("json"),
            },
        ],
        summary,
        all_ok: true,
    })
}

/// Monte Carlo MSE of the configured scheme at each music SNR.
pub fn run_music(cfg: &RunConfig) -> Result<(Vec<MseResult>, Vec<Artifact>)> {
    cfg.scenario.validate()?;
    let (g, _) = scheme_geometry(cfg, &cfg.scenario, cfg.music.scheme)?;
    let t = cfg.scenario.target;
    let eta = match cfg.scenario.dim {
        Dim::Linear => TargetParams::linear(t.u, t.r),
        Dim::Planar => TargetParams::planar(t.u, t.v, t.r),
    };
    let mut out = Vec::new();
    let mut extra = Vec::new();
    for &snr in &cfg.music.snr_db {
        let sc = cfg.scenario.clone().with_snr_db(snr);
        out.push(music::monte_carlo_mse(&sc, &g, &eta, cfg.case, cfg.music.trials, cfg.seed, &cfg.music.search)?);
        if cfg.music.dump_spectrum {
            let b = music::simulate_snapshots_stream(&sc, &g, &eta, cfg.seed, 0)?;
            let ns = music::noise_subspace(&music::sample_covariance(&b), 1)?;
            let grid = cfg.music.search.coarse_grid(cfg.case, &sc, &eta)?;
            let sp = music::spectrum(&g, &ns, &grid, sc.wavelength);
            extra.push(Artifact {
                name: format!("spectrum_{snr}dB.csv"),
                contents: format!("{}{}", csv_header(cfg), sp.to_csv()),
            });
        }
    }
    Ok((out, extra))
}

fn render_music(cfg: &RunConfig, res: &[MseResult], extra: Vec<Artifact>) -> RunOutput {
    let mut csv = csv_header(cfg);
    csv.push_str("snr,trials,mse_u,mse_v,mse_r,ci95_u,ci95_v,ci95_r,crb_u,crb_v,crb_r\n");
    let mut summary = String::new();
    for m in res {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            m.snr_db,
            m.trials,
            opt(m.mse.u),
            opt(m.mse.v),
            opt(m.mse.r),
            opt(m.ci95.u),
            opt(m.ci95.v),
            opt(m.ci95.r),
            opt(m.crb.u),
            opt(m.crb.v),
            opt(m.crb.r),
        );
        let _ = writeln!(
            summary,
            "{:.1} dB: MSE sum {:.4e}, CRB sum {:.4e} ({} trials)",
            m.snr_db,
            m.mse.sum(),
            m.crb.sum(),
            m.trials
        );
    }
    let mut artifacts = vec![Artifact {
        name: "mse.csv".into(),
        contents: csv,
    }];
    artifacts.extend(extra);
    RunOutput {
        artifacts,
        summary,
        all_ok: true,
    }
}

fn run_correlation(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.scenario.validate()?;
    let sc = &cfg.scenario;
    let c = &cfg.correlation;
    let (u, v, r) = (c.u.expect("resolved"), c.v.expect("resolved"), c.r.expect("resolved"));
    let grid = match sc.dim {
        Dim::Linear => ParamGrid::linear(u, r)?,
        Dim::Planar => ParamGrid::planar(u, v, r)?,
    };
    let t = sc.target;
    let eta = match sc.dim {
        Dim::Linear => TargetParams::linear(t.u, t.r),
        Dim::Planar => TargetParams::planar(t.u, t.v, t.r),
    };
    let proj = match c.projection {
        config::ProjectionKind::Parameter => Projection::Parameter,
        config::ProjectionKind::Cartesian => Projection::Cartesian,
    };
    let mut artifacts = Vec::new();
    let mut lobes = Vec::new();
    let mut summary = String::new();
    let mut all_ok = true;
    for &s in &c.schemes {
        let res = scheme_geometry(cfg, sc, s).and_then(|(g, _)| correlation_map(&g, &eta, &grid, proj, sc.wavelength));
        match res {
            Ok(map) => {
                let lm = lobe_metrics(&map);
                if let Ok(lm) = &lm {
                    let _ = writeln!(
                        summary,
                        "{}: peak sidelobe {}",
                        s.name(),
                        lm.peak_sidelobe
                            .as_ref()
                            .map(|p| format!("{:.4} at u={:.4}", p.value, p.params.u()))
                            .unwrap_or_else(|| "none".into())
                    );
                }
                lobes.push(json!({
                    "scheme": s,
                    "metrics": lm.as_ref().ok(),
                    "error": lm.as_ref().err().map(|e| e.to_string()),
                }));
                artifacts.push(Artifact {
                    name: format!("correlation_{}.csv", s.name()),
                    contents: format!("{}{}", csv_header(cfg), map.to_csv()),
                });
            }
            Err(e) => {
                all_ok = false;
                lobes.push(json!({ "scheme": s, "metrics": null, "error": e.to_string() }));
            }
        }
    }
    artifacts.push(Artifact {
        name: "lobes.json".into(),
        contents: serde_json::to_string_pretty(&json!({ "meta": meta(cfg), "lobes": lobes })).expect("json"),
    });
    Ok(RunOutput {
        artifacts,
        summary,
        all_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheme: Scheme,
    pub case: Case,
    pub n: usize,
    pub a: f64,
    pub snr_db: f64,
    pub crb_u: Option<f64>,
    pub crb_v: Option<f64>,
    pub crb_r: Option<f64>,
    pub sum: Option<f64>,
    pub error: Option<String>,
}

fn sweep_scenario(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut sc = base.clone();
    match axis {
        SweepAxis::Snr => sc.set_snr_db(value),
        SweepAxis::N => {
            if value < 2.0 || value.fract() != 0.0 {
                return Err(Error::Domain(format!("antenna count must be an integer >= 2 (got {value})")));
            }
            sc.antenna_count = value as usize;
        }
        SweepAxis::A => sc.aperture = value,
    }
    sc.validate()?;
    Ok(sc)
}

/// One row per (axis value, scheme). Failed cells carry an error and the
/// run continues. Layouts are optimized per distinct geometry (the SNR
/// does not change the optimizer's argmax).
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.scenario.validate()?;
    let axis = cfg.sweep.axis;
    let values: Vec<f64> = cfg
        .sweep
        .values
        .iter()
        .map(|q| match q {
            config::Quantity::Num(v) => Ok(*v),
            config::Quantity::Text(t) => t
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("sweep.values: cannot parse `{t}`"))),
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Parse("sweep.values is empty".into()));
    }
    let geo_key = |i: usize| if axis == SweepAxis::Snr { 0 } else { i };
    let mut keys: Vec<usize> = (0..values.len()).map(geo_key).collect();
    keys.dedup();
    let proposed: HashMap<usize, std::result::Result<Geometry, String>> = keys
        .par_iter()
        .map(|&k| {
            let g = sweep_scenario(&cfg.scenario, axis, values[k])
                .and_then(|sc| scheme_geometry(cfg, &sc, Scheme::Proposed))
                .map(|g| g.0)
                .map_err(|e| e.to_string());
            (k, g)
        })
        .collect();
    let cells: Vec<(usize, Scheme)> = (0..values.len())
        .flat_map(|i| cfg.sweep.schemes.iter().map(move |&s| (i, s)))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(i, scheme)| {
            let value = values[i];
            let mut row = SweepRow {
                axis,
                value,
                scheme,
                case: cfg.case,
                n: cfg.scenario.antenna_count,
                a: cfg.scenario.aperture,
                snr_db: cfg.scenario.snr_db(),
                crb_u: None,
                crb_v: None,
                crb_r: None,
                sum: None,
                error: None,
            };
            let res = sweep_scenario(&cfg.scenario, axis, value).and_then(|sc| {
                row.n = sc.antenna_count;
                row.a = sc.aperture;
                row.snr_db = sc.snr_db();
                let g = match scheme {
                    Scheme::Proposed => proposed[&geo_key(i)].clone().map_err(Error::Numeric)?,
                    s => scheme_geometry(cfg, &sc, s)?.0,
                };
                crb::worst_case_crb(cfg.case, &sc, &g)
            });
            match res {
                Ok(rep) => {
                    row.crb_u = rep.crb.u;
                    row.crb_v = rep.crb.v;
                    row.crb_r = rep.crb.r;
                    row.sum = Some(rep.total());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(rows)
}

fn render_sweep(cfg: &RunConfig, rows: &[SweepRow]) -> RunOutput {
    let mut csv = csv_header(cfg);
    csv.push_str("axis,value,scheme,case,N,A,SNR,crb_u,crb_v,crb_r,sum,error\n");
    let mut summary = String::new();
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            match r.axis {
                SweepAxis::Snr => "snr",
                SweepAxis::N => "n",
                SweepAxis::A => "a",
            },
            r.value,
            r.scheme.name(),
            r.case,
            r.n,
            r.a,
            r.snr_db,
            opt(r.crb_u),
            opt(r.crb_v),
            opt(r.crb_r),
            opt(r.sum),
            r.error.clone().unwrap_or_default().replace(',', ";"),
        );
        let _ = writeln!(
            summary,
            "{:>10} {:>12} {}",
            r.value,
            r.scheme.name(),
            r.sum.map(|s| format!("{s:.4e}")).or(r.error.clone()).unwrap_or_default()
        );
    }
    RunOutput {
        artifacts: vec![Artifact {
            name: "sweep.csv".into(),
            contents: csv,
        }],
        summary,
        all_ok: rows.iter().all(|r| r.error.is_none()),
    }
}

/// Runs one verb and returns its artifacts without touching the disk.
pub fn execute(verb: Verb, cfg: &RunConfig, dump_steering: bool) -> Result<RunOutput> {
    let mut out = match verb {
        Verb::Crb => render_crb(cfg, &run_crb(cfg)?),
        Verb::Optimize => run_optimize(cfg)?,
        Verb::Music => {
            let (res, extra) = run_music(cfg)?;
            render_music(cfg, &res, extra)
        }
        Verb::Correlation => run_correlation(cfg)?,
        Verb::Sweep => render_sweep(cfg, &run_sweep(cfg)?),
    };
    if dump_steering {
        let (g, _) = scheme_geometry(cfg, &cfg.scenario, Scheme::Proposed)?;
        let t = cfg.scenario.target;
        let eta = match g.dim() {
            Dim::Linear => TargetParams::linear(t.u, t.r),
            Dim::Planar => TargetParams::planar(t.u, t.v, t.r),
        };
        out.artifacts.push(Artifact {
            name: "steering.csv".into(),
            contents: format!(
                "{}{}",
                csv_header(cfg),
                steering_vector(&g, &eta, cfg.scenario.wavelength).to_csv()
            ),
        });
    }
    Ok(out)
}

/// Writes every artifact via a temporary file and rename.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for a in artifacts {
        let tmp = dir.join(format!(".{}.tmp", a.name));
        std::fs::write(&tmp, &a.contents)?;
        staged.push((tmp, dir.join(&a.name)));
    }
    let mut paths = Vec::new();
    for (tmp, dst) in staged {
        std::fs::rename(&tmp, &dst)?;
        paths.push(dst);
    }
    Ok(paths)
}

/// Entry point of the `nma` binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return 2;
        }
    }
    let mut cfg = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.method {
        cfg.geometry.method = Some(m);
    }
    if let Some(from) = match cfg.optimize.grid {
        Some(m) if cfg.scenario.dim == Dim::Planar && m.is_multiple_of(2) => Some(m),
        _ => None,
    } {
        eprintln!("warning: 2D grid size {from} is even; using {}", from + 1);
        cfg.optimize.grid = Some(from + 1);
    }
    match execute(cli.verb, &cfg, cli.dump_steering) {
        Ok(out) => {
            if let Err(e) = write_artifacts(&cli.out, &out.artifacts) {
                eprintln!("error: {e}");
                return 1;
            }
            print!("{}", out.summary);
            if out.all_ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    main_with(Cli::parse())
}
