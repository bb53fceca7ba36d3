//! Array geometries, scenario bounds and feasibility checks.
//!
//! Conventions: a linear array lives on `[0, A]` with its origin at the left
//! end; a planar array lives on `[-A/2, A/2]²` with its origin at the plane
//! center. All positions are in meters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack on the minimum-spacing constraint, meters.
pub const SPACING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dim {
    #[serde(rename = "1d")]
    Linear,
    #[serde(rename = "2d")]
    Planar,
}

impl fmt::Display for Dim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim::Linear => f.write_str("1d"),
            Dim::Planar => f.write_str("2d"),
        }
    }
}

/// Ground-truth target parameters. In the single-parameter cases these are
/// also the values treated as known (e.g. `r` in the AoA-only case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub u: f64,
    #[serde(default)]
    pub v: f64,
    pub r: f64,
}

/// Physical constants, bounds and array size of one sensing setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub dim: Dim,
    pub wavelength: f64,
    /// Segment length (1D) or side length (2D).
    pub aperture: f64,
    pub antenna_count: usize,
    pub min_spacing: f64,
    pub snapshots: usize,
    pub tx_power: f64,
    pub noise_power: f64,
    /// |β|², folded path loss.
    pub channel_gain_sq: f64,
    pub u_max: f64,
    #[serde(default)]
    pub v_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub target: Target,
    /// Which Fresnel formula bounds `r_min`; defaults to `dim`.
    #[serde(default)]
    pub fresnel_dim: Option<Dim>,
    /// Enforce `r_min >= Fresnel` and `r_max <= Rayleigh` in [`Scenario::validate`].
    #[serde(default = "default_true")]
    pub near_field_check: bool,
}

fn default_true() -> bool {
    true
}

impl Scenario {
    /// 1D setup: λ = 2 cm, d = λ/2, N = 20, A = 20λ, 20 dB SNR, θ = 45°,
    /// r = R_RL/4 and r ∈ [R_FS, R_RL/2], u_max = 0.95.
    pub fn reference_linear() -> Self {
        let lambda = 0.02;
        let a = 20.0 * lambda;
        let rl = rayleigh_distance(a, lambda, Dim::Linear).expect("positive");
        let fs = fresnel_distance(a, lambda, Dim::Linear).expect("positive");
        let mut sc = Scenario {
            dim: Dim::Linear,
            wavelength: lambda,
            aperture: a,
            antenna_count: 20,
            min_spacing: lambda / 2.0,
            snapshots: 100,
            tx_power: 1.0,
            noise_power: 1.0,
            channel_gain_sq: 1.0,
            u_max: 0.95,
            v_max: 0.0,
            r_min: fs,
            r_max: rl / 2.0,
            target: Target {
                u: 0.71,
                v: 0.0,
                r: rl / 4.0,
            },
            fresnel_dim: None,
            near_field_check: true,
        };
        sc.set_snr_db(20.0);
        sc
    }

    /// 2D setup: N = 64 on a 20λ square, θ = φ = 45° (u = 0.50, v = 0.71),
    /// r = R_RL/4, r_min = 0.54 m (linear Fresnel formula), r_max = R_RL/2.
    pub fn reference_planar() -> Self {
        let lambda = 0.02;
        let a = 20.0 * lambda;
        let rl = rayleigh_distance(a, lambda, Dim::Planar).expect("positive");
        let fs = fresnel_distance(a, lambda, Dim::Linear).expect("positive");
        let mut sc = Scenario {
            dim: Dim::Planar,
            wavelength: lambda,
            aperture: a,
            antenna_count: 64,
            min_spacing: lambda / 2.0,
            snapshots: 100,
            tx_power: 1.0,
            noise_power: 1.0,
            channel_gain_sq: 1.0,
            u_max: 0.95,
            v_max: 0.95,
            r_min: fs,
            r_max: rl / 2.0,
            target: Target {
                u: 0.50,
                v: 0.71,
                r: rl / 4.0,
            },
            fresnel_dim: Some(Dim::Linear),
            near_field_check: true,
        };
        sc.set_snr_db(10.0);
        sc
    }

    /// Sets P = σ² = 1 and |β|² = SNR (linear).
    pub fn set_snr_db(&mut self, snr_db: f64) {
        self.tx_power = 1.0;
        self.noise_power = 1.0;
        self.channel_gain_sq = 10f64.powf(snr_db / 10.0);
    }

    pub fn with_snr_db(mut self, snr_db: f64) -> Self {
        self.set_snr_db(snr_db);
        self
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.tx_power * self.channel_gain_sq / self.noise_power).log10()
    }

    /// Checks every scenario invariant and collects all failures.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let finite = [
            self.wavelength,
            self.aperture,
            self.min_spacing,
            self.tx_power,
            self.noise_power,
            self.channel_gain_sq,
            self.u_max,
            self.v_max,
            self.r_min,
            self.r_max,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            errs.push("non-finite scenario value".to_string());
            return Err(Error::InvalidScenario(errs));
        }
        if self.wavelength <= 0.0 {
            errs.push(format!("wavelength must be > 0 (got {})", self.wavelength));
        }
        if self.aperture <= 0.0 {
            errs.push(format!("aperture must be > 0 (got {})", self.aperture));
        }
        if self.min_spacing <= 0.0 {
            errs.push(format!("min_spacing must be > 0 (got {})", self.min_spacing));
        }
        if self.antenna_count < 2 {
            errs.push(format!("antenna_count must be >= 2 (got {})", self.antenna_count));
        }
        if self.snapshots == 0 {
            errs.push("snapshots must be >= 1".to_string());
        }
        if self.tx_power <= 0.0 || self.noise_power <= 0.0 || self.channel_gain_sq <= 0.0 {
            errs.push("tx_power, noise_power and channel_gain_sq must be > 0".to_string());
        }
        if !(0.0..1.0).contains(&self.u_max) {
            errs.push(format!("u_max must lie in [0, 1) (got {})", self.u_max));
        }
        if self.dim == Dim::Planar && !(0.0..1.0).contains(&self.v_max) {
            errs.push(format!("v_max must lie in [0, 1) (got {})", self.v_max));
        }
        if self.r_min <= 0.0 || self.r_min > self.r_max {
            errs.push(format!(
                "need 0 < r_min <= r_max (got {}, {})",
                self.r_min, self.r_max
            ));
        }
        if !errs.is_empty() {
            return Err(Error::InvalidScenario(errs));
        }

        if self.near_field_check {
            let fdim = self.fresnel_dim.unwrap_or(self.dim);
            let fs = fresnel_distance(self.aperture, self.wavelength, fdim)?;
            let rl = rayleigh_distance(self.aperture, self.wavelength, self.dim)?;
            // relative slack for values typed with a few digits (0.54 m)
            if self.r_min < fs * (1.0 - 1e-2) {
                errs.push(format!(
                    "r_min {} below the Fresnel distance {:.4}",
                    self.r_min, fs
                ));
            }
            if self.r_max > rl * (1.0 + 1e-9) {
                errs.push(format!(
                    "r_max {} beyond the Rayleigh distance {:.4}",
                    self.r_max, rl
                ));
            }
        }

        match self.dim {
            Dim::Linear => {
                let need = (self.antenna_count as f64 - 1.0) * self.min_spacing;
                if need > self.aperture + SPACING_TOL {
                    errs.push(format!(
                        "(N-1)d = {need} exceeds the aperture {}",
                        self.aperture
                    ));
                }
            }
            Dim::Planar => {
                // sufficient, not necessary: the sparse k×k grid must respect d
                let k = (self.antenna_count as f64).sqrt().ceil();
                let pitch = self.aperture / (k - 1.0);
                if pitch + SPACING_TOL < self.min_spacing {
                    errs.push(format!(
                        "{} antennas do not fit a {k}x{k} grid with spacing {} in side {}",
                        self.antenna_count, self.min_spacing, self.aperture
                    ));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidScenario(errs))
        }
    }
}

/// Antenna position vector of a linear array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApvLinear {
    positions: Vec<f64>,
}

impl ApvLinear {
    pub fn new(positions: Vec<f64>) -> Self {
        ApvLinear { positions }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Elementwise squares x̃.
    pub fn squared(&self) -> Vec<f64> {
        self.positions.iter().map(|x| x * x).collect()
    }

    pub fn sorted(mut self) -> Self {
        self.positions.sort_by(f64::total_cmp);
        self
    }

    pub fn translated(&self, offset: f64) -> Self {
        ApvLinear::new(self.positions.iter().map(|x| x + offset).collect())
    }
}

/// Antenna position matrix of a planar array, one `[x, y]` per antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApmPlanar {
    positions: Vec<[f64; 2]>,
}

impl ApmPlanar {
    pub fn new(positions: Vec<[f64; 2]>) -> Self {
        ApmPlanar { positions }
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Swaps the x and y coordinates of every antenna.
    pub fn transposed(&self) -> Self {
        ApmPlanar::new(self.positions.iter().map(|&[x, y]| [y, x]).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "positions", rename_all = "lowercase")]
pub enum Geometry {
    Linear(ApvLinear),
    Planar(ApmPlanar),
}

impl Geometry {
    pub fn dim(&self) -> Dim {
        match self {
            Geometry::Linear(_) => Dim::Linear,
            Geometry::Planar(_) => Dim::Planar,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Geometry::Linear(g) => g.len(),
            Geometry::Planar(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Antenna coordinates in the array plane; linear arrays get `y = 0`.
    pub fn points(&self) -> Vec<[f64; 2]> {
        match self {
            Geometry::Linear(g) => g.positions().iter().map(|&x| [x, 0.0]).collect(),
            Geometry::Planar(g) => g.positions().to_vec(),
        }
    }

    pub fn as_linear(&self) -> Result<&ApvLinear> {
        match self {
            Geometry::Linear(g) => Ok(g),
            Geometry::Planar(_) => Err(Error::DimensionMismatch(
                "expected a linear array".into(),
            )),
        }
    }

    pub fn as_planar(&self) -> Result<&ApmPlanar> {
        match self {
            Geometry::Planar(g) => Ok(g),
            Geometry::Linear(_) => Err(Error::DimensionMismatch(
                "expected a planar array".into(),
            )),
        }
    }

    pub fn validate(&self, sc: &Scenario) -> std::result::Result<(), Vec<Violation>> {
        match self {
            Geometry::Linear(g) => validate_apv(g, sc),
            Geometry::Planar(g) => validate_apm(g, sc),
        }
    }

    /// One antenna per row: `index,x` (1D) or `index,x,y` (2D).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self {
            Geometry::Linear(g) => {
                out.push_str("index,x\n");
                for (i, x) in g.positions().iter().enumerate() {
                    out.push_str(&format!("{},{:.17e}\n", i, x));
                }
            }
            Geometry::Planar(g) => {
                out.push_str("index,x,y\n");
                for (i, [x, y]) in g.positions().iter().enumerate() {
                    out.push_str(&format!("{},{:.17e},{:.17e}\n", i, x, y));
                }
            }
        }
        out
    }

    /// Parses the CSV layout written by [`Geometry::to_csv`]. Lines starting
    /// with `#` are ignored; the header decides the dimensionality.
    pub fn from_csv(text: &str) -> Result<Geometry> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty geometry file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let planar = match cols.as_slice() {
            ["index", "x"] => false,
            ["index", "x", "y"] => true,
            _ => {
                return Err(Error::Parse(format!(
                    "unexpected geometry header `{header}`"
                )))
            }
        };
        let mut xs = Vec::new();
        let mut pts = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let want = if planar { 3 } else { 2 };
            if fields.len() != want {
                return Err(Error::Parse(format!(
                    "line {}: expected {want} fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| {
                    Error::Parse(format!("line {}: `{s}`: {e}", lineno + 1))
                })
            };
            if planar {
                pts.push([num(fields[1])?, num(fields[2])?]);
            } else {
                xs.push(num(fields[1])?);
            }
        }
        Ok(if planar {
            Geometry::Planar(ApmPlanar::new(pts))
        } else {
            Geometry::Linear(ApvLinear::new(xs))
        })
    }
}

impl From<ApvLinear> for Geometry {
    fn from(g: ApvLinear) -> Self {
        Geometry::Linear(g)
    }
}

impl From<ApmPlanar> for Geometry {
    fn from(g: ApmPlanar) -> Self {
        Geometry::Planar(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams1D {
    pub u: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetParams2D {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl TargetParams2D {
    /// Elevation θ and azimuth φ in degrees, from u = sinθ·cosφ, v = cosθ.
    pub fn angles_deg(&self) -> (f64, f64) {
        let theta = self.v.clamp(-1.0, 1.0).acos();
        let s = theta.sin();
        let phi = if s > 0.0 {
            (self.u / s).clamp(-1.0, 1.0).acos()
        } else {
            0.0
        };
        (theta.to_degrees(), phi.to_degrees())
    }

    pub fn from_angles_deg(theta: f64, phi: f64, r: f64) -> Self {
        let (t, p) = (theta.to_radians(), phi.to_radians());
        TargetParams2D {
            u: t.sin() * p.cos(),
            v: t.cos(),
            r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetParams {
    Planar(TargetParams2D),
    Linear(TargetParams1D),
}

impl TargetParams {
    pub fn linear(u: f64, r: f64) -> Self {
        TargetParams::Linear(TargetParams1D { u, r })
    }

    pub fn planar(u: f64, v: f64, r: f64) -> Self {
        TargetParams::Planar(TargetParams2D { u, v, r })
    }

    pub fn dim(&self) -> Dim {
        match self {
            TargetParams::Linear(_) => Dim::Linear,
            TargetParams::Planar(_) => Dim::Planar,
        }
    }

    /// `(u, v, r)`, with `v = 0` for linear targets.
    pub fn uvr(&self) -> (f64, f64, f64) {
        match *self {
            TargetParams::Linear(p) => (p.u, 0.0, p.r),
            TargetParams::Planar(p) => (p.u, p.v, p.r),
        }
    }

    pub fn u(&self) -> f64 {
        self.uvr().0
    }

    pub fn v(&self) -> f64 {
        self.uvr().1
    }

    pub fn r(&self) -> f64 {
        self.uvr().2
    }

    pub fn with_uvr(&self, u: f64, v: f64, r: f64) -> Self {
        match self {
            TargetParams::Linear(_) => TargetParams::linear(u, r),
            TargetParams::Planar(_) => TargetParams::planar(u, v, r),
        }
    }

    /// Checks the parameter box of `sc`.
    pub fn in_bounds(&self, sc: &Scenario) -> bool {
        let (u, v, r) = self.uvr();
        let tol = 1e-12;
        let u_ok = u >= -tol && u <= sc.u_max + tol;
        let r_ok = r >= sc.r_min * (1.0 - tol) && r <= sc.r_max * (1.0 + tol);
        match self {
            TargetParams::Linear(_) => u_ok && r_ok,
            TargetParams::Planar(_) => {
                u_ok && r_ok && v >= -tol && v <= sc.v_max + tol && u * u + v * v < 1.0
            }
        }
    }
}

/// One broken geometry constraint. Indices are 1-based, as in the CSV rows
/// they refer to plus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    TooFewAntennas { count: usize },
    CountMismatch { expected: usize, found: usize },
    NonFinite { index: usize },
    Bounds { index: usize },
    Order { index: usize },
    Spacing { i: usize, j: usize, distance: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewAntennas { count } => write!(f, "N>=2 (found {count})"),
            Violation::CountMismatch { expected, found } => {
                write!(f, "count (expected {expected}, found {found})")
            }
            Violation::NonFinite { index } => write!(f, "finite({index})"),
            Violation::Bounds { index } => write!(f, "bounds({index})"),
            Violation::Order { index } => write!(f, "order({index})"),
            Violation::Spacing { i, j, distance } => {
                write!(f, "spacing({i},{j}) = {distance:.6e}")
            }
        }
    }
}

/// Checks a linear APV against `[0, A]`, strict ordering and spacing `d`.
pub fn validate_apv(x: &ApvLinear, sc: &Scenario) -> std::result::Result<(), Vec<Violation>> {
    let pos = x.positions();
    let mut v = Vec::new();
    if pos.len() < 2 {
        v.push(Violation::TooFewAntennas { count: pos.len() });
    }
    for (i, &p) in pos.iter().enumerate() {
        if !p.is_finite() {
            v.push(Violation::NonFinite { index: i + 1 });
        } else if p < 0.0 || p > sc.aperture {
            v.push(Violation::Bounds { index: i + 1 });
        }
    }
    for i in 1..pos.len() {
        let (a, b) = (pos[i - 1], pos[i]);
        if !(a.is_finite() && b.is_finite()) {
            continue;
        }
        // exact comparison for the ordering invariant
        if a >= b {
            v.push(Violation::Order { index: i + 1 });
        }
        let gap = (b - a).abs();
        if gap < sc.min_spacing - SPACING_TOL {
            v.push(Violation::Spacing {
                i,
                j: i + 1,
                distance: gap,
            });
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Checks a planar APM against the square `[-A/2, A/2]²` and pairwise
/// Euclidean spacing `d`.
pub fn validate_apm(s: &ApmPlanar, sc: &Scenario) -> std::result::Result<(), Vec<Violation>> {
    let pos = s.positions();
    let half = sc.aperture / 2.0;
    let mut v = Vec::new();
    if pos.len() < 2 {
        v.push(Violation::TooFewAntennas { count: pos.len() });
    }
    for (i, &[x, y]) in pos.iter().enumerate() {
        if !(x.is_finite() && y.is_finite()) {
            v.push(Violation::NonFinite { index: i + 1 });
        } else if x.abs() > half + SPACING_TOL || y.abs() > half + SPACING_TOL {
            v.push(Violation::Bounds { index: i + 1 });
        }
    }
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let dist = (pos[i][0] - pos[j][0]).hypot(pos[i][1] - pos[j][1]);
            if dist.is_finite() && dist < sc.min_spacing - SPACING_TOL {
                v.push(Violation::Spacing {
                    i: i + 1,
                    j: j + 1,
                    distance: dist,
                });
            }
        }
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

fn check_positive(a: f64, lambda: f64) -> Result<()> {
    if !(a > 0.0 && lambda > 0.0 && a.is_finite() && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "aperture and wavelength must be positive (got {a}, {lambda})"
        )));
    }
    Ok(())
}

/// Lower edge of the radiating near field: `(A⁴/8λ)^(1/3)` for a segment,
/// `(A⁴/2λ)^(1/3)` for a square.
pub fn fresnel_distance(aperture: f64, wavelength: f64, dim: Dim) -> Result<f64> {
    check_positive(aperture, wavelength)?;
    let denom = match dim {
        Dim::Linear => 8.0,
        Dim::Planar => 2.0,
    };
    Ok((aperture.powi(4) / (denom * wavelength)).cbrt())
}

/// Upper edge of the radiating near field: `2A²/λ` (segment), `4A²/λ` (square).
pub fn rayleigh_distance(aperture: f64, wavelength: f64, dim: Dim) -> Result<f64> {
    check_positive(aperture, wavelength)?;
    let k = match dim {
        Dim::Linear => 2.0,
        Dim::Planar => 4.0,
    };
    Ok(k * aperture * aperture / wavelength)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    /// Uniform linear array with pitch `d`.
    Ula,
    /// Uniform linear array spanning the full segment.
    SparseUla,
    /// Half-wavelength uniform planar array, centered.
    Upa,
    /// Uniform planar array spanning the full square, centered.
    SparseUpa,
}

impl Benchmark {
    pub fn dim(self) -> Dim {
        match self {
            Benchmark::Ula | Benchmark::SparseUla => Dim::Linear,
            Benchmark::Upa | Benchmark::SparseUpa => Dim::Planar,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Ula => "ula",
            Benchmark::SparseUla => "sparse-ula",
            Benchmark::Upa => "upa",
            Benchmark::SparseUpa => "sparse-upa",
        }
    }
}

fn perfect_square_side(n: usize) -> Result<usize> {
    let k = (n as f64).sqrt().round() as usize;
    if k * k != n {
        return Err(Error::Domain(format!(
            "planar benchmark needs a perfect-square antenna count (got {n})"
        )));
    }
    Ok(k)
}

fn centered_grid(k: usize, pitch: f64) -> Vec<[f64; 2]> {
    let off = (k as f64 - 1.0) / 2.0;
    let mut pts = Vec::with_capacity(k * k);
    for row in 0..k {
        for col in 0..k {
            pts.push([(col as f64 - off) * pitch, (row as f64 - off) * pitch]);
        }
    }
    pts
}

/// The fixed-position reference layouts.
pub fn benchmark_geometry(kind: Benchmark, sc: &Scenario) -> Result<Geometry> {
    if kind.dim() != sc.dim {
        return Err(Error::DimensionMismatch(format!(
            "benchmark {} needs a {} scenario",
            kind.name(),
            kind.dim()
        )));
    }
    let n = sc.antenna_count;
    if n < 2 {
        return Err(Error::Domain("benchmarks need N >= 2".into()));
    }
    Ok(match kind {
        Benchmark::Ula => Geometry::Linear(ApvLinear::new(
            (0..n).map(|i| i as f64 * sc.min_spacing).collect(),
        )),
        Benchmark::SparseUla => {
            let pitch = sc.aperture / (n as f64 - 1.0);
            let mut x: Vec<f64> = (0..n).map(|i| i as f64 * pitch).collect();
            x[n - 1] = sc.aperture;
            Geometry::Linear(ApvLinear::new(x))
        }
        Benchmark::Upa => {
            let k = perfect_square_side(n)?;
            Geometry::Planar(ApmPlanar::new(centered_grid(k, sc.wavelength / 2.0)))
        }
        Benchmark::SparseUpa => {
            let k = perfect_square_side(n)?;
            let pitch = sc.aperture / (k as f64 - 1.0);
            Geometry::Planar(ApmPlanar::new(centered_grid(k, pitch)))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sc1() -> Scenario {
        Scenario::reference_linear()
    }

    #[test]
    fn fresnel_values() {
        let f = fresnel_distance(0.4, 0.02, Dim::Linear).unwrap();
        assert_relative_eq!(f, 0.542_883_523_318_981_4, max_relative = 1e-12);
        let f2 = fresnel_distance(0.4, 0.02, Dim::Planar).unwrap();
        assert!((f2 - 0.8618).abs() < 5e-5);
        // A⁴ = 8λ⁴ is a fixed point
        let lam = 0.3;
        let a = lam * 8f64.powf(0.25);
        assert_relative_eq!(
            fresnel_distance(a, lam, Dim::Linear).unwrap(),
            lam,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rayleigh_values() {
        assert_relative_eq!(
            rayleigh_distance(0.4, 0.02, Dim::Linear).unwrap(),
            16.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            rayleigh_distance(0.4, 0.02, Dim::Planar).unwrap(),
            32.0,
            max_relative = 1e-12
        );
        assert_eq!(rayleigh_distance(1.0, 2.0, Dim::Linear).unwrap(), 1.0);
    }

    #[test]
    fn distances_reject_nonpositive() {
        assert!(fresnel_distance(0.0, 0.02, Dim::Linear).is_err());
        assert!(rayleigh_distance(0.4, -1.0, Dim::Planar).is_err());
    }

    #[test]
    fn fresnel_below_rayleigh() {
        for k in 5..=100 {
            let lam = 0.01;
            let a = k as f64 * lam;
            for dim in [Dim::Linear, Dim::Planar] {
                assert!(
                    fresnel_distance(a, lam, dim).unwrap() < rayleigh_distance(a, lam, dim).unwrap()
                );
            }
        }
    }

    #[test]
    fn apv_validation() {
        let sc = sc1();
        let (d, a) = (sc.min_spacing, sc.aperture);
        assert!(validate_apv(&ApvLinear::new(vec![0.0, d, a]), &sc).is_ok());
        let err = validate_apv(&ApvLinear::new(vec![0.0, d / 2.0]), &sc).unwrap_err();
        assert!(matches!(err[0], Violation::Spacing { i: 1, j: 2, .. }));
        let err = validate_apv(&ApvLinear::new(vec![0.0, a + 1e-6]), &sc).unwrap_err();
        assert_eq!(err, vec![Violation::Bounds { index: 2 }]);
        let err = validate_apv(&ApvLinear::new(vec![0.2, 0.1]), &sc).unwrap_err();
        assert!(err.contains(&Violation::Order { index: 2 }));
        let err = validate_apv(&ApvLinear::new(vec![f64::NAN, 0.1]), &sc).unwrap_err();
        assert!(err.contains(&Violation::NonFinite { index: 1 }));
    }

    #[test]
    fn apm_validation() {
        let sc = Scenario::reference_planar();
        let h = sc.aperture / 2.0;
        assert!(validate_apm(&ApmPlanar::new(vec![[-h, -h], [h, h]]), &sc).is_ok());
        let err = validate_apm(
            &ApmPlanar::new(vec![[0.0, 0.0], [0.0, sc.min_spacing / 2.0]]),
            &sc,
        )
        .unwrap_err();
        assert!(matches!(err[0], Violation::Spacing { i: 1, j: 2, .. }));
        let err = validate_apm(&ApmPlanar::new(vec![[sc.aperture, 0.0]]), &sc).unwrap_err();
        assert!(err.contains(&Violation::Bounds { index: 1 }));
        assert!(err.contains(&Violation::TooFewAntennas { count: 1 }));
    }

    #[test]
    fn benchmark_layouts() {
        let mut sc = sc1();
        sc.antenna_count = 3;
        sc.min_spacing = 0.01;
        let g = benchmark_geometry(Benchmark::Ula, &sc).unwrap();
        assert_eq!(g.as_linear().unwrap().positions(), &[0.0, 0.01, 0.02]);
        let g = benchmark_geometry(Benchmark::SparseUla, &sc).unwrap();
        assert_eq!(g.as_linear().unwrap().positions(), &[0.0, 0.2, 0.4]);

        let mut sc2 = Scenario::reference_planar();
        sc2.antenna_count = 4;
        let g = benchmark_geometry(Benchmark::SparseUpa, &sc2).unwrap();
        let pts = g.as_planar().unwrap().positions();
        for p in pts {
            assert_relative_eq!(p[0].abs(), 0.2, max_relative = 1e-12);
            assert_relative_eq!(p[1].abs(), 0.2, max_relative = 1e-12);
        }
        sc2.antenna_count = 5;
        assert!(benchmark_geometry(Benchmark::Upa, &sc2).is_err());
        assert!(benchmark_geometry(Benchmark::Ula, &sc2).is_err());
    }

    #[test]
    fn benchmarks_pass_validators() {
        let sc = sc1();
        for b in [Benchmark::Ula, Benchmark::SparseUla] {
            assert!(benchmark_geometry(b, &sc).unwrap().validate(&sc).is_ok());
        }
        let sc2 = Scenario::reference_planar();
        for b in [Benchmark::Upa, Benchmark::SparseUpa] {
            assert!(benchmark_geometry(b, &sc2).unwrap().validate(&sc2).is_ok());
        }
    }

    #[test]
    fn reference_scenarios_validate() {
        sc1().validate().unwrap();
        Scenario::reference_planar().validate().unwrap();
        let mut bad = sc1();
        bad.antenna_count = 100;
        assert!(bad.validate().is_err());
        let mut bad = sc1();
        bad.r_max = 100.0;
        assert!(bad.validate().is_err());
        bad.near_field_check = false;
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn csv_round_trip() {
        let g = Geometry::Planar(ApmPlanar::new(vec![[0.1, -0.2], [0.3, 0.125]]));
        assert_eq!(Geometry::from_csv(&g.to_csv()).unwrap(), g);
        assert!(Geometry::from_csv("index,z\n0,1").is_err());
    }

    #[test]
    fn angles_round_trip() {
        let p = TargetParams2D::from_angles_deg(86.4, 90.0, 8.0);
        assert!(p.u.abs() < 1e-15);
        let (t, f) = p.angles_deg();
        assert_relative_eq!(t, 86.4, max_relative = 1e-12);
        assert_relative_eq!(f, 90.0, max_relative = 1e-12);
    }
}
