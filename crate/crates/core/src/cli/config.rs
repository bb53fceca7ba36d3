//! Run configuration: TOML or JSON files, unit-suffixed lengths, defaults.
//!
//! Lengths accept plain meters or strings such as `"20lambda"`, `"0.5 λ"`,
//! `"12cm"`, `"4mm"`. Range bounds additionally accept `"fresnel"`,
//! `"rayleigh"` and multiples like `"0.5 rayleigh"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crb::Case;
use crate::error::{Error, Result};
use crate::geometry::{fresnel_distance, rayleigh_distance, Benchmark, Dim, Scenario, Target};
use crate::grid::Axis;
use crate::music::SearchSpec;
use crate::optimize::{SamplingOptions, SweepMode, UpdateOrder};

/// A number in meters or a unit-suffixed string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Num(f64),
    Text(String),
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Num(v)
    }
}

impl From<&str> for Quantity {
    fn from(v: &str) -> Self {
        Quantity::Text(v.to_string())
    }
}

/// Context needed to resolve relative lengths.
#[derive(Debug, Clone, Copy)]
pub struct LengthContext {
    pub wavelength: Option<f64>,
    pub aperture: Option<f64>,
    pub dim: Dim,
    pub fresnel_dim: Dim,
}

fn split_unit(s: &str) -> (String, String) {
    let s = s.trim().to_lowercase().replace('*', " ");
    // longest numeric prefix
    let cut = s
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(s.len()))
        .rev()
        .find(|&i| s[..i].trim().parse::<f64>().is_ok())
        .unwrap_or(0);
    (s[..cut].trim().to_string(), s[cut..].trim().to_string())
}

impl Quantity {
    /// Resolves to meters.
    pub fn meters(&self, key: &str, ctx: &LengthContext) -> Result<f64> {
        let text = match self {
            Quantity::Num(v) => return Ok(*v),
            Quantity::Text(t) => t,
        };
        let (num, unit) = split_unit(text);
        let factor = if num.is_empty() {
            1.0
        } else {
            num.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: cannot parse `{text}`")))?
        };
        let need = |v: Option<f64>, what: &str| {
            v.ok_or_else(|| Error::Parse(format!("{key}: `{text}` needs {what} to be known")))
        };
        let base = match unit.as_str() {
            "" | "m" => 1.0,
            "cm" => 1e-2,
            "mm" => 1e-3,
            "lambda" | "λ" | "wavelength" | "wavelengths" => need(ctx.wavelength, "the wavelength")?,
            "fresnel" => fresnel_distance(need(ctx.aperture, "the aperture")?, need(ctx.wavelength, "the wavelength")?, ctx.fresnel_dim)?,
            "rayleigh" => rayleigh_distance(need(ctx.aperture, "the aperture")?, need(ctx.wavelength, "the wavelength")?, ctx.dim)?,
            other => return Err(Error::Parse(format!("{key}: unknown unit `{other}` in `{text}`"))),
        };
        Ok(factor * base)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTarget {
    pub u: Option<f64>,
    pub v: Option<f64>,
    pub r: Option<Quantity>,
    pub theta_deg: Option<f64>,
    pub phi_deg: Option<f64>,
}

/// Scenario as written in a config file; a superset of the serialized
/// [`Scenario`], so resolved configs load back unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub dim: Dim,
    pub wavelength: Quantity,
    pub aperture: Quantity,
    pub antenna_count: usize,
    pub min_spacing: Option<Quantity>,
    pub snapshots: Option<usize>,
    pub snr_db: Option<f64>,
    pub tx_power: Option<f64>,
    pub noise_power: Option<f64>,
    pub channel_gain_sq: Option<f64>,
    pub u_max: Option<f64>,
    pub v_max: Option<f64>,
    pub r_min: Option<Quantity>,
    pub r_max: Option<Quantity>,
    #[serde(default)]
    pub target: RawTarget,
    pub fresnel_dim: Option<Dim>,
    pub near_field_check: Option<bool>,
}

impl RawScenario {
    pub fn resolve(&self) -> Result<Scenario> {
        let mut ctx = LengthContext {
            wavelength: None,
            aperture: None,
            dim: self.dim,
            fresnel_dim: self.fresnel_dim.unwrap_or(self.dim),
        };
        let lambda = self.wavelength.meters("scenario.wavelength", &ctx)?;
        ctx.wavelength = Some(lambda);
        let aperture = self.aperture.meters("scenario.aperture", &ctx)?;
        ctx.aperture = Some(aperture);
        let min_spacing = match &self.min_spacing {
            Some(q) => q.meters("scenario.min_spacing", &ctx)?,
            None => lambda / 2.0,
        };
        let r_min = self
            .r_min
            .clone()
            .unwrap_or_else(|| "fresnel".into())
            .meters("scenario.r_min", &ctx)?;
        let r_max = self
            .r_max
            .clone()
            .unwrap_or_else(|| "0.5 rayleigh".into())
            .meters("scenario.r_max", &ctx)?;

        let t = &self.target;
        let r = t
            .r
            .clone()
            .unwrap_or_else(|| "0.25 rayleigh".into())
            .meters("scenario.target.r", &ctx)?;
        let (u, v) = match (t.u, t.theta_deg) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse("scenario.target: give either u/v or theta_deg/phi_deg".into()))
            }
            (Some(u), None) => (u, t.v.unwrap_or(0.0)),
            (None, Some(th)) => {
                let th = th.to_radians();
                match self.dim {
                    Dim::Linear => (th.cos(), 0.0),
                    Dim::Planar => {
                        let ph = t.phi_deg.unwrap_or(0.0).to_radians();
                        (th.sin() * ph.cos(), th.cos())
                    }
                }
            }
            (None, None) => match self.dim {
                Dim::Linear => (0.71, 0.0),
                Dim::Planar => (0.5, 0.71),
            },
        };

        let power_given = self.tx_power.is_some() || self.noise_power.is_some() || self.channel_gain_sq.is_some();
        if power_given && self.snr_db.is_some() {
            return Err(Error::Parse(
                "scenario: give either snr_db or tx_power/noise_power/channel_gain_sq".into(),
            ));
        }
        let mut sc = Scenario {
            dim: self.dim,
            wavelength: lambda,
            aperture,
            antenna_count: self.antenna_count,
            min_spacing,
            snapshots: self.snapshots.unwrap_or(100),
            tx_power: self.tx_power.unwrap_or(1.0),
            noise_power: self.noise_power.unwrap_or(1.0),
            channel_gain_sq: self.channel_gain_sq.unwrap_or(1.0),
            u_max: self.u_max.unwrap_or(0.95),
            v_max: self.v_max.unwrap_or(if self.dim == Dim::Planar { 0.95 } else { 0.0 }),
            r_min,
            r_max,
            target: Target { u, v, r },
            fresnel_dim: self.fresnel_dim,
            near_field_check: self.near_field_check.unwrap_or(true),
        };
        if !power_given {
            sc.set_snr_db(self.snr_db.unwrap_or(20.0));
        }
        Ok(sc)
    }
}

/// Which layout a row or file refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Proposed,
    Ula,
    SparseUla,
    Upa,
    SparseUpa,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Ula => "ula",
            Scheme::SparseUla => "sparse-ula",
            Scheme::Upa => "upa",
            Scheme::SparseUpa => "sparse-upa",
        }
    }

    pub fn benchmark(self) -> Option<Benchmark> {
        match self {
            Scheme::Proposed => None,
            Scheme::Ula => Some(Benchmark::Ula),
            Scheme::SparseUla => Some(Benchmark::SparseUla),
            Scheme::Upa => Some(Benchmark::Upa),
            Scheme::SparseUpa => Some(Benchmark::SparseUpa),
        }
    }

    /// Proposed plus the two benchmarks of the dimensionality.
    pub fn defaults(dim: Dim) -> Vec<Scheme> {
        match dim {
            Dim::Linear => vec![Scheme::Proposed, Scheme::Ula, Scheme::SparseUla],
            Dim::Planar => vec![Scheme::Proposed, Scheme::Upa, Scheme::SparseUpa],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Sampling,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    /// Defaults to closed form for c11/c12, sampling otherwise.
    pub method: Option<Method>,
    /// CSV layout used instead of optimizing the proposed scheme.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    #[default]
    Single,
    Converge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderKind {
    #[default]
    Ascending,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeSpec {
    pub sweeps: SweepKind,
    pub max_sweeps: usize,
    pub order: OrderKind,
    /// 1D interval count or 2D points per dimension; default 10(N−1)+1.
    pub grid: Option<usize>,
    /// 1D only: round the interval count up so the step divides `d`.
    pub aligned: bool,
}

impl Default for OptimizeSpec {
    fn default() -> Self {
        OptimizeSpec {
            sweeps: SweepKind::Single,
            max_sweeps: 100,
            order: OrderKind::Ascending,
            grid: None,
            aligned: false,
        }
    }
}

impl OptimizeSpec {
    pub fn options(&self, seed: u64) -> SamplingOptions {
        SamplingOptions {
            sweeps: match self.sweeps {
                SweepKind::Single => SweepMode::Single,
                SweepKind::Converge => SweepMode::UntilConverged {
                    max_sweeps: self.max_sweeps,
                },
            },
            order: match self.order {
                OrderKind::Ascending => UpdateOrder::Ascending,
                OrderKind::Shuffled => UpdateOrder::Shuffled { seed },
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrbSpec {
    /// SNR values in dB; empty means the scenario SNR only.
    pub snr_db: Vec<f64>,
    /// Empty means proposed plus both benchmarks.
    pub schemes: Vec<Scheme>,
    /// Grid points per axis for the exhaustive worst-case search; 0 skips it.
    pub search_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MusicSpec {
    pub trials: usize,
    pub snr_db: Vec<f64>,
    pub scheme: Scheme,
    pub search: SearchSpec,
    /// Write the spectrum of the first trial at each SNR.
    pub dump_spectrum: bool,
}

impl Default for MusicSpec {
    fn default() -> Self {
        MusicSpec {
            trials: 500,
            snr_db: Vec::new(),
            scheme: Scheme::Proposed,
            search: SearchSpec::default(),
            dump_spectrum: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionKind {
    #[default]
    Parameter,
    Cartesian,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationSpec {
    pub u: Option<Axis>,
    pub v: Option<Axis>,
    pub r: Option<Axis>,
    pub projection: ProjectionKind,
    pub schemes: Vec<Scheme>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    #[default]
    Snr,
    N,
    A,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// dB for `snr`, antenna counts for `n`, lengths for `a`.
    pub values: Vec<Quantity>,
    pub schemes: Vec<Scheme>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    case: Option<Case>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    geometry: GeometrySpec,
    #[serde(default)]
    optimize: OptimizeSpec,
    #[serde(default)]
    crb: CrbSpec,
    #[serde(default)]
    music: MusicSpec,
    #[serde(default)]
    correlation: CorrelationSpec,
    #[serde(default)]
    sweep: SweepSpec,
}

/// Fully resolved configuration; its JSON form is itself a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub case: Case,
    pub seed: u64,
    pub geometry: GeometrySpec,
    pub optimize: OptimizeSpec,
    pub crb: CrbSpec,
    pub music: MusicSpec,
    pub correlation: CorrelationSpec,
    pub sweep: SweepSpec,
}

impl RunConfig {
    /// Parses TOML (or JSON when the text starts with `{`) and fills every
    /// default. Relative geometry paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<RunConfig> {
        let raw: RawConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?
        };
        let scenario = raw.scenario.resolve()?;
        let case = raw.case.unwrap_or(match scenario.dim {
            Dim::Linear => Case::C13,
            Dim::Planar => Case::C23,
        });
        if case.dim() != scenario.dim {
            return Err(Error::Parse(format!("case {case} does not match a {} scenario", scenario.dim)));
        }
        let mut geometry = raw.geometry;
        if geometry.method.is_none() {
            geometry.method = Some(match case {
                Case::C11 | Case::C12 => Method::ClosedForm,
                _ => Method::Sampling,
            });
        }
        if let (Some(f), Some(base)) = (&geometry.file, base_dir) {
            if f.is_relative() {
                geometry.file = Some(base.join(f));
            }
        }
        let defaults = Scheme::defaults(scenario.dim);
        let mut crb = raw.crb;
        if crb.schemes.is_empty() {
            crb.schemes = defaults.clone();
        }
        if crb.snr_db.is_empty() {
            crb.snr_db = vec![scenario.snr_db()];
        }
        let mut music = raw.music;
        if music.snr_db.is_empty() {
            music.snr_db = vec![scenario.snr_db()];
        }
        let mut correlation = raw.correlation;
        if correlation.schemes.is_empty() {
            correlation.schemes = defaults.clone();
        }
        let t = scenario.target;
        correlation.u.get_or_insert(Axis::range(-1.0, 1.0, 401));
        correlation.r.get_or_insert(Axis::Fixed(t.r));
        correlation.v.get_or_insert(match scenario.dim {
            Dim::Linear => Axis::Fixed(0.0),
            Dim::Planar => Axis::range(-1.0, 1.0, 401),
        });
        let mut sweep = raw.sweep;
        if sweep.schemes.is_empty() {
            sweep.schemes = defaults;
        }
        // normalize sweep lengths to meters
        if sweep.axis == SweepAxis::A {
            let ctx = LengthContext {
                wavelength: Some(scenario.wavelength),
                aperture: Some(scenario.aperture),
                dim: scenario.dim,
                fresnel_dim: scenario.fresnel_dim.unwrap_or(scenario.dim),
            };
            sweep.values = sweep
                .values
                .iter()
                .map(|q| q.meters("sweep.values", &ctx).map(Quantity::Num))
                .collect::<Result<_>>()?;
        }
        Ok(RunConfig {
            scenario,
            case,
            seed: raw.seed,
            geometry,
            optimize: raw.optimize,
            crb,
            music,
            correlation,
            sweep,
        })
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        RunConfig::parse(&text, path.parent()).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn method(&self) -> Method {
        self.geometry.method.unwrap_or(match self.case {
            Case::C11 | Case::C12 => Method::ClosedForm,
            _ => Method::Sampling,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BASIC: &str = r#"
case = "c11"
[scenario]
dim = "1d"
wavelength = 0.02
aperture = "20lambda"
antenna_count = 20
min_spacing = "0.5 lambda"
snr_db = 20
[scenario.target]
theta_deg = 45
"#;

    #[test]
    fn units_resolve() {
        let cfg = RunConfig::parse(BASIC, None).unwrap();
        let sc = &cfg.scenario;
        assert_relative_eq!(sc.aperture, 0.4, max_relative = 1e-15);
        assert_relative_eq!(sc.min_spacing, 0.01, max_relative = 1e-15);
        assert_relative_eq!(sc.r_max, 8.0, max_relative = 1e-12);
        assert_relative_eq!(sc.target.r, 4.0, max_relative = 1e-12);
        assert_relative_eq!(sc.target.u, 0.5f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(sc.channel_gain_sq, 100.0, max_relative = 1e-12);
        assert_eq!(cfg.geometry.method, Some(Method::ClosedForm));
    }

    #[test]
    fn resolved_json_round_trips() {
        let cfg = RunConfig::parse(BASIC, None).unwrap();
        let again = RunConfig::parse(&cfg.to_json(), None).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn length_parsing() {
        let ctx = LengthContext {
            wavelength: Some(0.02),
            aperture: Some(0.4),
            dim: Dim::Linear,
            fresnel_dim: Dim::Linear,
        };
        let m = |s: &str| Quantity::from(s).meters("k", &ctx).unwrap();
        assert_relative_eq!(m("12cm"), 0.12, max_relative = 1e-15);
        assert_relative_eq!(m("4 mm"), 0.004, max_relative = 1e-15);
        assert_relative_eq!(m("1e-2 m"), 0.01, max_relative = 1e-15);
        assert_relative_eq!(m("2.5λ"), 0.05, max_relative = 1e-15);
        assert_relative_eq!(m("rayleigh"), 16.0, max_relative = 1e-12);
        assert_relative_eq!(m("0.5*rayleigh"), 8.0, max_relative = 1e-12);
        assert!(Quantity::from("3 parsecs").meters("k", &ctx).is_err());
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = RunConfig::parse(&format!("{BASIC}\nbogus = 1\n"), None).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }
}
