use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scenario: {}", .0.join("; "))]
    InvalidScenario(Vec<String>),

    #[error("infeasible geometry: {}", format_violations(.0))]
    InfeasibleGeometry(Vec<Violation>),

    #[error("singular Fisher information matrix (condition number {condition:.3e})")]
    SingularFim { condition: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no feasible sampling point for antenna {antenna}")]
    EmptyCandidateSet { antenna: usize },

    #[error("ambiguous map: {} global peaks at cells {peaks:?}", .peaks.len())]
    AmbiguousPeak { peaks: Vec<usize> },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
