use std::path::{Path, PathBuf};

use nma::cli::{self, execute, main_with, Cli, RunConfig, Scheme, Verb};
use nma::geometry::Geometry;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn run(verb: Verb, config: &Path, out: &Path) -> i32 {
    main_with(Cli {
        verb,
        config: config.to_path_buf(),
        out: out.to_path_buf(),
        seed: None,
        threads: None,
        method: None,
        dump_steering: false,
    })
}

fn embedded_config(text: &str) -> &str {
    text.lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .expect("config header")
}

const TINY_1D: &str = r#"
case = "c11"
[scenario]
dim = "1d"
wavelength = 0.02
aperture = "10 lambda"
antenna_count = 8
snr_db = 20.0
[music]
trials = 20
snr_db = [20.0]
"#;

#[test]
fn infeasible_scenario_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, TINY_1D.replace("antenna_count = 8", "antenna_count = 40")).unwrap();
    let out = dir.path().join("out");
    assert_ne!(run(Verb::Crb, &cfg, &out), 0);
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn unknown_key_reports_line() {
    let err = RunConfig::parse(&format!("{TINY_1D}\n[crb]\nsnr = 3\n"), None).unwrap_err();
    assert!(err.to_string().contains("line"), "{err}");
}

#[test]
fn crb_snr_grid_scales_one_decade_per_ten_db() {
    let cfg = RunConfig::load(&scenario("linear_reference.toml")).unwrap();
    let run = cli::run_crb(&cfg).unwrap();
    let proposed: Vec<_> = run
        .entries
        .iter()
        .filter(|e| e.scheme == Scheme::Proposed)
        .map(|e| (e.snr_db, e.report.as_ref().unwrap().total()))
        .collect();
    assert_eq!(proposed.len(), 7);
    for w in proposed.windows(2) {
        let decades = (w[0].1 / w[1].1).log10();
        assert!((decades - (w[1].0 - w[0].0) / 10.0).abs() < 1e-12);
    }
}

#[test]
fn music_rerun_and_embedded_config_are_byte_identical() {
    let cfg = RunConfig::parse(TINY_1D, None).unwrap();
    let a = execute(Verb::Music, &cfg, false).unwrap();
    let b = execute(Verb::Music, &cfg, false).unwrap();
    assert_eq!(a, b);
    let csv = &a.artifacts[0].contents;
    let again = RunConfig::parse(embedded_config(csv), None).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(execute(Verb::Music, &again, false).unwrap().artifacts, a.artifacts);
}

#[test]
fn optimize_writes_layout_and_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c13.toml");
    std::fs::write(&cfg, TINY_1D.replace("c11", "c13")).unwrap();
    assert_eq!(run(Verb::Optimize, &cfg, dir.path()), 0);
    let csv = std::fs::read_to_string(dir.path().join("geometry.csv")).unwrap();
    assert!(csv.starts_with("# nma "));
    assert_eq!(Geometry::from_csv(&csv).unwrap().len(), 8);
    let trace: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    let objs: Vec<f64> = std::iter::once(&trace["trace"]["initial_objective"])
        .chain(trace["trace"]["steps"].as_array().unwrap().iter().map(|s| &s["objective"]))
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(objs.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn planar_sampling_keeps_corner_antennas() {
    let cfg = RunConfig::load(&scenario("planar_reference.toml")).unwrap();
    let (g, trace) = cli::scheme_geometry(&cfg, &cfg.scenario, Scheme::Proposed).unwrap();
    assert!(trace.unwrap().is_monotone());
    let h = cfg.scenario.aperture / 2.0;
    let pts = g.points();
    for c in [[-h, -h], [-h, h], [h, -h], [h, h]] {
        assert!(
            pts.iter().any(|p| (p[0] - c[0]).abs() < 1e-12 && (p[1] - c[1]).abs() < 1e-12),
            "corner {c:?} missing"
        );
    }
}

#[test]
fn sweep_records_failed_cells_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(&cfg, format!("{TINY_1D}\n[sweep]\naxis = \"n\"\nvalues = [6, 40, 8]\n")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(run(Verb::Sweep, &cfg, &out), 1);
    let rows = cli::run_sweep(&RunConfig::load(&cfg).unwrap()).unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().filter(|r| r.value == 40.0).all(|r| r.error.is_some()));
    assert!(rows.iter().filter(|r| r.value != 40.0).all(|r| r.sum.is_some()));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 10);
}

#[test]
fn correlation_and_steering_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.toml");
    std::fs::write(&cfg_path, TINY_1D).unwrap();
    let status = main_with(Cli {
        verb: Verb::Correlation,
        config: cfg_path,
        out: dir.path().to_path_buf(),
        seed: Some(1),
        threads: None,
        method: None,
        dump_steering: true,
    });
    assert_eq!(status, 0);
    for f in ["correlation_proposed.csv", "correlation_ula.csv", "correlation_sparse-ula.csv", "lobes.json", "steering.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let steer = std::fs::read_to_string(dir.path().join("steering.csv")).unwrap();
    assert_eq!(steer.lines().filter(|l| !l.starts_with('#')).count(), 9);
}
