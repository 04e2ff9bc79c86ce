//! Exact heat semigroup on a finite weighted graph and numerical checks of
//! the gradient estimates that curvature lower bounds imply for it.
//!
//! The generator is the graph Laplacian. Conjugating by the square root of
//! the vertex measure turns it into a symmetric matrix, so one eigendecomposition
//! yields `P_t = e^{t L}` for every `t` at solver precision. All checks here
//! report margins of the form `RHS - LHS`; a verification passes when every
//! margin stays above `-tolerance`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{VertexFunction, WeightedGraph};
use crate::transport::{defect, Defect};

/// Margins this far below zero are still a pass; an order above eigensolver
/// noise on the graph sizes handled here.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error("time must be finite and nonnegative, got {0}")]
    InvalidTime(f64),
    #[error("function has {got} values but the graph has {expected} vertices")]
    WrongLength { got: usize, expected: usize },
    #[error("function must be strictly positive, found {value} at vertex {vertex}")]
    NonPositive { vertex: usize, value: f64 },
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("vertex {vertex} out of range for {n} vertices")]
    BadVertex { vertex: usize, n: usize },
    #[error("curvature hypothesis not certified: {0}")]
    Hypothesis(String),
}

/// Heat semigroup `P_t` of a fixed graph, realized through the spectral
/// factorization of the measure-symmetrized Laplacian. Immutable after
/// construction, so concurrent applications are safe.
pub struct HeatOperator {
    n: usize,
    /// Eigenvalues of the negated Laplacian, ascending; the first is 0 for a
    /// connected graph (up to solver noise) with constant eigenfunction.
    lambdas: Vec<f64>,
    /// Orthonormal eigenbasis of the symmetrized Laplacian, columns matching
    /// `lambdas`.
    basis: DMatrix<f64>,
    sqrt_m: Vec<f64>,
    inv_sqrt_m: Vec<f64>,
}

impl HeatOperator {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.n();
        let sqrt_m: Vec<f64> = g.vertices().map(|x| g.measure(x).sqrt()).collect();
        let inv_sqrt_m: Vec<f64> = sqrt_m.iter().map(|s| 1.0 / s).collect();
        // Symmetrization: entry (x,y) is w(x,y)/sqrt(m(x)m(y)), diagonal -Deg(x).
        let mut s = DMatrix::<f64>::zeros(n, n);
        for x in g.vertices() {
            for &(y, w) in g.neighbors(x) {
                s[(x, y)] = w * inv_sqrt_m[x] * inv_sqrt_m[y];
            }
            s[(x, x)] = -g.degree(x);
        }
        let eig = SymmetricEigen::new(s);
        // Sort ascending by eigenvalue of the negated Laplacian; clamp the
        // tiny positive drift the solver can put on the kernel eigenvalue.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| (-eig.eigenvalues[i]).total_cmp(&-eig.eigenvalues[j]));
        let lambdas: Vec<f64> = order.iter().map(|&i| (-eig.eigenvalues[i]).max(0.0)).collect();
        let mut basis = DMatrix::<f64>::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            basis.set_column(col, &eig.eigenvectors.column(i));
        }
        HeatOperator { n, lambdas, basis, sqrt_m, inv_sqrt_m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Eigenvalues of the negated Laplacian, ascending and nonnegative.
    pub fn spectrum(&self) -> Vec<f64> {
        self.lambdas.clone()
    }

    /// Eigenpairs of the negated Laplacian. The functions are orthonormal in
    /// the measure-weighted inner product.
    pub fn eigenpairs(&self) -> Vec<(f64, VertexFunction)> {
        (0..self.n)
            .map(|k| {
                let f = VertexFunction::from_fn(self.n, |x| {
                    self.inv_sqrt_m[x] * self.basis[(x, k)]
                });
                (self.lambdas[k], f)
            })
            .collect()
    }

    /// `P_t f` through the spectral factorization.
    pub fn apply(&self, t: f64, f: &VertexFunction) -> Result<VertexFunction, SemigroupError> {
        if !t.is_finite() || t < 0.0 {
            return Err(SemigroupError::InvalidTime(t));
        }
        if f.len() != self.n {
            return Err(SemigroupError::WrongLength { got: f.len(), expected: self.n });
        }
        let v = DVector::from_fn(self.n, |i, _| self.sqrt_m[i] * f[i]);
        let mut coeffs = self.basis.transpose() * v;
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c *= (-self.lambdas[k] * t).exp();
        }
        let w = &self.basis * coeffs;
        Ok(VertexFunction::from_fn(self.n, |i| self.inv_sqrt_m[i] * w[i]))
    }
}

/// Full spectrum of the negated Laplacian, ascending.
pub fn spectrum(g: &WeightedGraph) -> Vec<f64> {
    HeatOperator::new(g).spectrum()
}

/// Sampled record of one verification sweep. `verdict` holds exactly when
/// every margin is at least `-tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationTrace {
    pub label: String,
    /// Grid the sweep ran over: times, interpolation parameters, or
    /// eigenvalues, depending on the check.
    pub grid: Vec<f64>,
    /// Tracked quantity per grid point (worst margin at that point, or the
    /// monotone quantity itself).
    pub values: Vec<f64>,
    /// Margin per grid point; `RHS - LHS` or a per-step increment.
    pub margins: Vec<f64>,
    pub tolerance: f64,
    pub worst_margin: f64,
    pub verdict: bool,
}

impl VerificationTrace {
    fn build(
        label: &str,
        grid: Vec<f64>,
        values: Vec<f64>,
        margins: Vec<f64>,
        tolerance: f64,
    ) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        debug_assert_eq!(grid.len(), margins.len());
        let worst_margin = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let verdict = margins.iter().all(|&m| m >= -tolerance);
        VerificationTrace {
            label: label.to_string(),
            grid,
            values,
            margins,
            tolerance,
            worst_margin,
            verdict,
        }
    }
}

fn check_common(
    g: &WeightedGraph,
    radius: u32,
    fs: &[VertexFunction],
    ts: &[f64],
) -> Result<(), SemigroupError> {
    if radius == 0 {
        return Err(SemigroupError::ZeroRadius);
    }
    if fs.is_empty() {
        return Err(SemigroupError::Empty("function list"));
    }
    if ts.is_empty() {
        return Err(SemigroupError::Empty("time grid"));
    }
    for &t in ts {
        if !t.is_finite() || t < 0.0 {
            return Err(SemigroupError::InvalidTime(t));
        }
    }
    for f in fs {
        if f.len() != g.n() {
            return Err(SemigroupError::WrongLength { got: f.len(), expected: g.n() });
        }
    }
    Ok(())
}

fn check_positive(fs: &[VertexFunction]) -> Result<(), SemigroupError> {
    for f in fs {
        for (vertex, &value) in f.values().iter().enumerate() {
            // Negated on purpose: NaN counts as non-positive.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(value > 0.0) {
                return Err(SemigroupError::NonPositive { vertex, value });
            }
        }
    }
    Ok(())
}

/// Pointwise check of `|grad_R P_t f| <= e^{-Kt} P_t |grad_R f|` over every
/// `(f, t, x)` cell. `k` must lower-bound the linear curvature of all ordered
/// pairs at distance up to `radius` for the estimate to be a theorem; the
/// sweep itself just measures margins.
pub fn verify_linear_gradient_estimate(
    g: &WeightedGraph,
    radius: u32,
    k: f64,
    fs: &[VertexFunction],
    ts: &[f64],
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    check_common(g, radius, fs, ts)?;
    let h = HeatOperator::new(g);
    // Initial-data gradients do not depend on t; hoist them out of the sweep.
    let grads: Vec<VertexFunction> =
        fs.iter().map(|f| g.r_gradient_all(f, radius)).collect();
    let per_t: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let decay = (-k * t).exp();
            let mut worst = f64::INFINITY;
            for (f, grad_f) in fs.iter().zip(&grads) {
                let ptf = h.apply(t, f).expect("validated time");
                let lhs = g.r_gradient_all(&ptf, radius);
                let rhs = h.apply(t, grad_f).expect("validated time");
                for x in g.vertices() {
                    worst = worst.min(decay * rhs[x] - lhs[x]);
                }
            }
            worst
        })
        .collect();
    Ok(VerificationTrace::build(
        "linear_gradient_estimate",
        ts.to_vec(),
        per_t.clone(),
        per_t,
        tolerance,
    ))
}

/// Pointwise check of `|grad_R sqrt(P_t f)|^2 <= e^{-2Kt} P_t |grad_R sqrt f|^2`
/// for strictly positive initial data.
pub fn verify_quadratic_gradient_estimate(
    g: &WeightedGraph,
    radius: u32,
    k: f64,
    fs: &[VertexFunction],
    ts: &[f64],
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    check_common(g, radius, fs, ts)?;
    check_positive(fs)?;
    let h = HeatOperator::new(g);
    let grads_sq: Vec<VertexFunction> = fs
        .iter()
        .map(|f| {
            let root = VertexFunction::from_fn(f.len(), |x| f[x].sqrt());
            let grad = g.r_gradient_all(&root, radius);
            VertexFunction::from_fn(f.len(), |x| grad[x] * grad[x])
        })
        .collect();
    let per_t: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let decay = (-2.0 * k * t).exp();
            let mut worst = f64::INFINITY;
            for (f, grad_sq) in fs.iter().zip(&grads_sq) {
                let ptf = h.apply(t, f).expect("validated time");
                // P_t preserves positivity, so the root only meets solver
                // noise at worst; clamp to keep it defined.
                let root = VertexFunction::from_fn(g.n(), |x| ptf[x].max(0.0).sqrt());
                let grad = g.r_gradient_all(&root, radius);
                let rhs = h.apply(t, grad_sq).expect("validated time");
                for x in g.vertices() {
                    worst = worst.min(decay * rhs[x] - grad[x] * grad[x]);
                }
            }
            worst
        })
        .collect();
    Ok(VerificationTrace::build(
        "quadratic_gradient_estimate",
        ts.to_vec(),
        per_t.clone(),
        per_t,
        tolerance,
    ))
}

/// Sup-norm check of `||grad_R log P_t f||_inf <= e^{-Kt} ||grad_R log f||_inf`
/// for strictly positive initial data. One margin per `(f, t)`; the gradient
/// bound here is global rather than pointwise.
pub fn verify_exponential_gradient_estimate(
    g: &WeightedGraph,
    radius: u32,
    k: f64,
    fs: &[VertexFunction],
    ts: &[f64],
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    check_common(g, radius, fs, ts)?;
    check_positive(fs)?;
    let h = HeatOperator::new(g);
    let sup_norms: Vec<f64> = fs
        .iter()
        .map(|f| {
            let logf = VertexFunction::from_fn(f.len(), |x| f[x].ln());
            sup(&g.r_gradient_all(&logf, radius))
        })
        .collect();
    let per_t: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let decay = (-k * t).exp();
            let mut worst = f64::INFINITY;
            for (f, &sup_f) in fs.iter().zip(&sup_norms) {
                let ptf = h.apply(t, f).expect("validated time");
                let log_ptf = VertexFunction::from_fn(g.n(), |x| ptf[x].max(f64::MIN_POSITIVE).ln());
                let lhs = sup(&g.r_gradient_all(&log_ptf, radius));
                worst = worst.min(decay * sup_f - lhs);
            }
            worst
        })
        .collect();
    Ok(VerificationTrace::build(
        "exponential_gradient_estimate",
        ts.to_vec(),
        per_t.clone(),
        per_t,
        tolerance,
    ))
}

fn sup(f: &VertexFunction) -> f64 {
    f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Samples the interpolation `G_s = e^{-Ks} P_s |grad_R P_{t-s} f|` at one
/// vertex on a uniform grid over `[0, t]`. Under the curvature hypothesis
/// `G_s` is non-decreasing; its endpoints are the two sides of the linear
/// gradient estimate at `(x, t)`.
#[allow(clippy::too_many_arguments)]
pub fn trace_g_monotone(
    g: &WeightedGraph,
    radius: u32,
    k: f64,
    f: &VertexFunction,
    x: usize,
    t: f64,
    steps: usize,
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    if radius == 0 {
        return Err(SemigroupError::ZeroRadius);
    }
    if f.len() != g.n() {
        return Err(SemigroupError::WrongLength { got: f.len(), expected: g.n() });
    }
    if x >= g.n() {
        return Err(SemigroupError::BadVertex { vertex: x, n: g.n() });
    }
    if !t.is_finite() || t < 0.0 {
        return Err(SemigroupError::InvalidTime(t));
    }
    if steps == 0 {
        return Err(SemigroupError::Empty("interpolation grid"));
    }
    let h = HeatOperator::new(g);
    let grid: Vec<f64> = (0..=steps).map(|i| t * i as f64 / steps as f64).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&s| {
            // Rounding in the grid can push s a hair past t.
            let rest = (t - s).max(0.0);
            let inner = h.apply(rest, f).expect("validated time");
            let grad = g.r_gradient_all(&inner, radius);
            let outer = h.apply(s, &grad).expect("validated time");
            (-k * s).exp() * outer[x]
        })
        .collect();
    let margins: Vec<f64> = std::iter::once(0.0)
        .chain(values.windows(2).map(|w| w[1] - w[0]))
        .collect();
    Ok(VerificationTrace::build("g_monotone", grid, values, margins, tolerance))
}

/// Checks the four heat-kernel gradient decay bounds over `fs x ts`:
/// the flat and entropy forms with constant `2R * Deg_max^{R-1}` (only
/// meaningful for `k >= 0`, skipped otherwise) and the general-curvature
/// forms with constant `2R * dim^{R-1} / Q_min` against the integrated
/// factor `(e^{2Kt} - 1) / 2K` (read as `t` when `K = 0`).
pub fn verify_decay_bounds(
    g: &WeightedGraph,
    radius: u32,
    k: f64,
    fs: &[VertexFunction],
    ts: &[f64],
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    check_common(g, radius, fs, ts)?;
    check_positive(fs)?;
    let h = HeatOperator::new(g);
    let r = radius as f64;
    let dmax = g.max_degree();
    let qmin = g.min_rate();
    let dim = dmax / qmin;
    let flat_const = 2.0 * r * dmax.powi(radius as i32 - 1);
    let dim_const = 2.0 * r * dim.powi(radius as i32 - 1) / qmin;
    let norms: Vec<(f64, f64)> = fs
        .iter()
        .map(|f| {
            let nf = sup(&VertexFunction::from_fn(f.len(), |x| f[x].abs()));
            let ent = sup(&VertexFunction::from_fn(f.len(), |x| (f[x] * f[x].ln()).abs()));
            (nf, ent)
        })
        .collect();
    let per_t: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let integrated = if k == 0.0 { t } else { (2.0 * k * t).exp_m1() / (2.0 * k) };
            let mut worst = f64::INFINITY;
            for (f, &(nf, ent)) in fs.iter().zip(&norms) {
                let ptf = h.apply(t, f).expect("validated time");
                let grad = g.r_gradient_all(&ptf, radius);
                let root = VertexFunction::from_fn(g.n(), |x| ptf[x].max(0.0).sqrt());
                let grad_root = g.r_gradient_all(&root, radius);
                for x in g.vertices() {
                    let flat = grad[x] * grad[x];
                    let entropic = grad_root[x] * grad_root[x];
                    if k >= 0.0 && t > 0.0 {
                        worst = worst.min(flat_const * nf * nf / t - flat);
                        worst = worst.min(flat_const * ent / t - entropic);
                    }
                    worst = worst.min(dim_const * nf * nf - integrated * flat);
                    worst = worst.min(dim_const * ent - integrated * entropic);
                }
            }
            worst
        })
        .collect();
    Ok(VerificationTrace::build(
        "decay_bounds",
        ts.to_vec(),
        per_t.clone(),
        per_t,
        tolerance,
    ))
}

/// Eigenfunction gradient bound: for every eigenpair `(lambda, f)` of the
/// negated Laplacian, `max_x |grad_R f|^2(x) <= 2 e R Deg_max^{R-1} lambda ||f||_inf^2`.
/// Requires nonnegative curvature at scale `radius`; with `certify` set, that
/// hypothesis is re-established through zero-defect transport certificates
/// for every ordered pair at distance up to `radius`.
pub fn harnack_check(
    g: &WeightedGraph,
    radius: u32,
    certify: bool,
    tolerance: f64,
) -> Result<VerificationTrace, SemigroupError> {
    if radius == 0 {
        return Err(SemigroupError::ZeroRadius);
    }
    if certify {
        if g.uniform_rate().is_none() {
            return Err(SemigroupError::Hypothesis(
                "transport certificates need a uniform-rate graph".to_string(),
            ));
        }
        for x in g.vertices() {
            for y in g.vertices() {
                let within = matches!(g.distance(x, y), Some(d) if d >= 1 && d <= radius);
                if !within {
                    continue;
                }
                let cert = defect(g, y, x, radius).map_err(|e| {
                    SemigroupError::Hypothesis(format!("defect for pair ({x}, {y}): {e}"))
                })?;
                if cert.defect != Defect::Finite(0) {
                    return Err(SemigroupError::Hypothesis(format!(
                        "pair ({x}, {y}) has transport defect {}",
                        cert.defect
                    )));
                }
            }
        }
    }
    let h = HeatOperator::new(g);
    let factor =
        2.0 * std::f64::consts::E * radius as f64 * g.max_degree().powi(radius as i32 - 1);
    let mut grid = Vec::with_capacity(g.n());
    let mut values = Vec::with_capacity(g.n());
    let mut margins = Vec::with_capacity(g.n());
    for (lambda, f) in h.eigenpairs() {
        let peak = sup(&VertexFunction::from_fn(g.n(), |x| f[x].abs()));
        let grad = g.r_gradient_all(&f, radius);
        let worst = g
            .vertices()
            .map(|x| grad[x] * grad[x])
            .fold(f64::NEG_INFINITY, f64::max);
        grid.push(lambda);
        values.push(worst);
        margins.push(factor * lambda * peak * peak - worst);
    }
    Ok(VerificationTrace::build("harnack", grid, values, margins, tolerance))
}

/// Seeded test functions with values uniform in `[-1, 1]`.
pub fn random_test_functions(n: usize, count: usize, seed: u64) -> Vec<VertexFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| VertexFunction::from_fn(n, |_| rng.gen_range(-1.0..=1.0)))
        .collect()
}

/// Seeded strictly positive test functions: exponentials of the uniform ones,
/// so values lie in `[1/e, e]`.
pub fn positive_test_functions(n: usize, count: usize, seed: u64) -> Vec<VertexFunction> {
    random_test_functions(n, count, seed)
        .into_iter()
        .map(|f| VertexFunction::from_fn(f.len(), |x| f[x].exp()))
        .collect()
}

/// Geometric grid from `lo` to `hi` inclusive.
pub fn geometric_time_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && lo > 0.0 && hi > lo, "degenerate time grid");
    let ratio = (hi / lo).powf(1.0 / (count as f64 - 1.0));
    (0..count).map(|i| lo * ratio.powi(i as i32)).collect()
}

/// The default sweep grid: 25 geometric points spanning `[1e-3, 10]`.
pub fn default_time_grid() -> Vec<f64> {
    geometric_time_grid(1e-3, 10.0, 25)
}
