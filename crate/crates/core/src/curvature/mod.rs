//! Curvature results shared by the linear (exact) and nonlinear (estimated)
//! solvers.

use serde::Serialize;
use thiserror::Error;

use crate::graph::VertexFunction;
use crate::lp::LpError;
use crate::transport::TransportError;

pub mod linear;
pub mod nonlinear;

/// A curvature value: finite, or negative infinity when no transport map
/// exists.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum Value {
    Finite(f64),
    NegInfinity,
}

impl Value {
    pub fn is_finite(self) -> bool {
        matches!(self, Value::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::NegInfinity => None,
        }
    }

    /// Numeric comparisons with `NegInfinity` below every finite value.
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Finite(v) => v,
            Value::NegInfinity => f64::NEG_INFINITY,
        }
    }

    /// JSON form: a number, or the string `"-inf"`.
    pub fn to_json(self) -> serde_json::Value {
        match self {
            Value::Finite(v) => serde_json::json!(v),
            Value::NegInfinity => serde_json::json!("-inf"),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Finite(v) => write!(f, "{v}"),
            Value::NegInfinity => write!(f, "-inf"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Linear,
    Ollivier,
    Quadratic,
    Exponential,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Linear => "linear",
            Variant::Ollivier => "ollivier",
            Variant::Quadratic => "quadratic",
            Variant::Exponential => "exponential",
        }
    }
}

/// How a reported number relates to the true curvature.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Exact,
    UpperEstimate,
    LowerCertificate,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Exact => "exact",
            BoundKind::UpperEstimate => "upper_estimate",
            BoundKind::LowerCertificate => "lower_certificate",
        }
    }
}

/// Output of the exact solvers. The witness attains the reported value; it
/// is defined on the whole vertex set but only its restriction to `support`
/// enters the objective.
#[derive(Clone, Debug)]
pub struct CurvatureResult {
    pub variant: Variant,
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    pub value: Value,
    pub witness: Option<VertexFunction>,
    pub support: Vec<usize>,
    pub kind: BoundKind,
}

/// Output of the nonlinear estimators: a certified lower bound from the
/// transport defect and a feasible-point upper estimate.
#[derive(Clone, Debug)]
pub struct SandwichResult {
    pub variant: Variant,
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    pub lower: Value,
    pub upper: Value,
    pub witness: Option<VertexFunction>,
    pub support: Vec<usize>,
    /// Difference `upper - lower` when both are finite.
    pub gap: Option<f64>,
    /// The exponential variant reads its sup-norm constraint on the support
    /// only; the flag records that truncation.
    pub truncated_support: bool,
    pub converged: bool,
    pub diagnostics: OptimizerDiagnostics,
}

/// Bookkeeping from the multistart optimizer behind a [`SandwichResult`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct OptimizerDiagnostics {
    /// Best value after the first scale-grid pass (exponential variant).
    pub first_pass: Option<f64>,
    /// Best value after grid refinement; never above `first_pass`.
    pub refined_pass: Option<f64>,
    pub runs: usize,
    pub converged_runs: usize,
}

#[derive(Debug, Error)]
pub enum CurvatureError {
    #[error("curvature requires two distinct vertices, got x = y = {0}")]
    IdenticalPair(usize),
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("pair ({x},{y}) is at distance {dist}, beyond radius {radius}")]
    PairTooFar { x: usize, y: usize, dist: String, radius: u32 },
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    UnknownVertex { vertex: usize, n: usize },
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("linear program solve failed: {0}")]
    Lp(#[from] LpError),
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub(crate) fn validate_pair(
    g: &crate::graph::WeightedGraph,
    x: usize,
    y: usize,
    radius: u32,
) -> Result<(), CurvatureError> {
    let n = g.n();
    for vertex in [x, y] {
        if vertex >= n {
            return Err(CurvatureError::UnknownVertex { vertex, n });
        }
    }
    if radius == 0 {
        return Err(CurvatureError::ZeroRadius);
    }
    if x == y {
        return Err(CurvatureError::IdenticalPair(x));
    }
    match g.distance(x, y) {
        Some(d) if d <= radius => Ok(()),
        Some(d) => Err(CurvatureError::PairTooFar { x, y, dist: d.to_string(), radius }),
        None => Err(CurvatureError::PairTooFar { x, y, dist: "inf".into(), radius }),
    }
}
