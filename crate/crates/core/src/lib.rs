//! Large-scale Ricci curvature on weighted graphs.
//!
//! The crate computes three curvature variants for a vertex pair `(x, y)`
//! at scale `R`: the linear gradient-contraction curvature (exact, via a
//! linear program), and quadratic and exponential variants (numerical upper
//! estimates sandwiched against transport-map lower certificates). A
//! companion heat-semigroup module verifies the gradient estimates,
//! monotonicity and decay bounds these curvatures are equivalent to.

#![forbid(unsafe_code)]

pub mod canonical;
pub mod curvature;
pub mod generators;
pub mod graph;
pub mod lp;
pub mod matching;
pub mod semigroup;
pub mod transport;

pub use curvature::{
    BoundKind, CurvatureError, CurvatureResult, OptimizerDiagnostics, SandwichResult, Value,
    Variant,
};
pub use graph::{GraphError, VertexFunction, WeightedGraph};
pub use semigroup::{HeatOperator, SemigroupError, VerificationTrace};
pub use transport::{Defect, TransportCertificate, TransportInstance};
