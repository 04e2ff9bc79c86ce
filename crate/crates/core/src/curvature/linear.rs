//! Exact linear-variant curvature via linear programming.
//!
//! The scale-R curvature of an ordered pair `(x, y)` is the infimum of
//!
//! ```text
//!   D|grad_R f|(x) - (Df(y) - Df(x)) * sgn(f(y) - f(x))
//! ```
//!
//! over test functions with `|grad_R f|(x) = |f(y) - f(x)| = 1`, where `D`
//! is the graph Laplacian. The problem is invariant under `f -> -f`, so the
//! sign is fixed to `+1` and the gauge to `f(x) = 0`, `f(y) = 1`; the inner
//! maxima `|grad_R f|(z)` at neighbors `z` of `x` become epigraph variables
//! `t_z` that the minimization presses down onto the true maximum. The
//! resulting LP is exact.
//!
//! The classical edge curvature is the related 1-Lipschitz program
//! `min Df(x) - Df(y)` over `f(y) - f(x) = 1`, `|f(u) - f(v)| <= d(u, v)`.
//!
//! On uniform-rate graphs the curvature is negative infinity exactly when
//! no `y -> x` transport map exists; the matching certificate decides that
//! case up front and the LP only runs on bounded instances. With unequal
//! rates the equivalence fails in both directions, so there the LP itself
//! decides: an unbounded program means the infimum genuinely is negative
//! infinity.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::to_canonical_string;
use crate::curvature::{validate_pair, BoundKind, CurvatureError, CurvatureResult, Value, Variant};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::lp::{self, Constraint, LinearProgram, LpOutcome, RelOp};
use crate::transport::{self, Defect};

/// Evaluates the defining objective of the linear variant at `f` using only
/// graph primitives. `f` should satisfy `|grad_R f|(x) = |f(y) - f(x)| = 1`;
/// the expression is evaluated as written either way.
pub fn linear_objective(
    g: &WeightedGraph,
    f: &VertexFunction,
    x: usize,
    y: usize,
    radius: u32,
) -> f64 {
    let grad_x = g.r_gradient(f, x, radius).0;
    let mut laplacian_grad = 0.0;
    for &(z, _) in g.neighbors(x) {
        let grad_z = g.r_gradient(f, z, radius).0;
        laplacian_grad += g.rate(x, z) * (grad_z - grad_x);
    }
    let diff = f[y] - f[x];
    let sgn = if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    };
    laplacian_grad - (g.laplacian_at(f, y) - g.laplacian_at(f, x)) * sgn
}

/// Evaluates `Df(x) - Df(y)`, the 1-Lipschitz edge-curvature objective.
pub fn ollivier_objective(g: &WeightedGraph, f: &VertexFunction, x: usize, y: usize) -> f64 {
    g.laplacian_at(f, x) - g.laplacian_at(f, y)
}

/// The LP together with its variable layout, so witnesses can be mapped
/// back onto the graph.
pub(crate) struct BuiltLp {
    pub lp: LinearProgram,
    pub support: Vec<usize>,
    /// `(vertex, LP variable)` for the function values; `x` and `y` are
    /// substituted constants and absent.
    pub f_vars: Vec<(usize, usize)>,
    /// Constant part of the objective folded out by the gauge.
    pub constant: f64,
}

enum Term {
    Const(f64),
    Var(usize),
}

fn term(var_of: &BTreeMap<usize, usize>, x: usize, y: usize, v: usize) -> Term {
    if v == x {
        Term::Const(0.0)
    } else if v == y {
        Term::Const(1.0)
    } else {
        Term::Var(var_of[&v])
    }
}

/// Builds the scale-R curvature LP. `extension` widens the function support
/// beyond the default `B_{R+1}(x) + B_1(y)`; the extra variables are
/// untouched by every constraint, so the value must not move (tested).
pub(crate) fn build_linear_lp(
    g: &WeightedGraph,
    x: usize,
    y: usize,
    radius: u32,
    extension: u32,
) -> BuiltLp {
    let mut support = g.ball(x, radius + 1 + extension);
    support.extend(g.ball(y, 1));
    support.sort_unstable();
    support.dedup();

    let mut var_of = BTreeMap::new();
    let mut f_vars = Vec::new();
    let mut bounds = Vec::new();
    for &v in &support {
        if v == x || v == y {
            continue;
        }
        var_of.insert(v, bounds.len());
        f_vars.push((v, bounds.len()));
        if g.within(x, v, radius) {
            bounds.push((Some(-1.0), Some(1.0)));
        } else {
            bounds.push((None, None));
        }
    }

    let mut nbrs: Vec<usize> = g.neighbors(x).iter().map(|&(z, _)| z).collect();
    nbrs.sort_unstable();
    let t_base = bounds.len();
    let t_of: BTreeMap<usize, usize> =
        nbrs.iter().enumerate().map(|(i, &z)| (z, t_base + i)).collect();
    bounds.extend(std::iter::repeat((Some(0.0), None)).take(nbrs.len()));

    let num_vars = bounds.len();
    let mut objective = vec![0.0; num_vars];
    let mut constant = 0.0;

    // sum_z Q(x,z) (t_z - 1)
    for &z in &nbrs {
        objective[t_of[&z]] += g.rate(x, z);
    }
    constant -= g.degree(x);
    // -Df(y) with f(y) = 1
    for &(u, _) in g.neighbors(y) {
        match term(&var_of, x, y, u) {
            Term::Var(i) => objective[i] -= g.rate(y, u),
            Term::Const(c) => constant -= g.rate(y, u) * c,
        }
    }
    constant += g.degree(y);
    // +Df(x) with f(x) = 0
    for &(u, _) in g.neighbors(x) {
        match term(&var_of, x, y, u) {
            Term::Var(i) => objective[i] += g.rate(x, u),
            Term::Const(c) => constant += g.rate(x, u) * c,
        }
    }

    // t_z >= +-(f(w) - f(z)) for w in B_R(z); the w = z pair is the trivial
    // t_z >= 0 already covered by the variable bound, and no other pair can
    // repeat a row, so this is duplicate-free.
    let mut constraints = Vec::new();
    for &z in &nbrs {
        for w in g.ball(z, radius) {
            if w == z {
                continue;
            }
            for sign in [1.0, -1.0] {
                let mut coeffs = vec![(t_of[&z], 1.0)];
                let mut rhs = 0.0;
                for (v, s) in [(w, sign), (z, -sign)] {
                    match term(&var_of, x, y, v) {
                        Term::Var(i) => coeffs.push((i, -s)),
                        Term::Const(c) => rhs += s * c,
                    }
                }
                coeffs.sort_unstable_by_key(|&(i, _)| i);
                constraints.push(Constraint { coeffs, op: RelOp::Ge, rhs });
            }
        }
    }

    let lp = LinearProgram { num_vars, objective, bounds, constraints };
    BuiltLp { lp, support, f_vars, constant }
}

fn witness_from_solution(
    n: usize,
    x: usize,
    y: usize,
    f_vars: &[(usize, usize)],
    solution: &[f64],
) -> VertexFunction {
    let mut f = vec![0.0; n];
    f[x] = 0.0;
    f[y] = 1.0;
    for &(v, i) in f_vars {
        f[v] = solution[i];
    }
    VertexFunction::new(f)
}

/// Exact scale-R curvature of the ordered pair `(x, y)`. Returns negative
/// infinity with no witness when no `y -> x` transport map exists.
pub fn k_linear(
    g: &WeightedGraph,
    x: usize,
    y: usize,
    radius: u32,
) -> Result<CurvatureResult, CurvatureError> {
    validate_pair(g, x, y, radius)?;
    let built = build_linear_lp(g, x, y, radius, 0);

    // On uniform-rate graphs transport existence decides finiteness, so the
    // LP can be skipped entirely in the unbounded case. With unequal rates
    // the equivalence fails in both directions and only the LP itself is
    // authoritative.
    if g.uniform_rate().is_some() {
        let cert = transport::defect(g, y, x, radius)?;
        if cert.defect == Defect::Infinite {
            // Cross-check the two detection paths against each other in
            // debug builds.
            debug_assert!(
                matches!(lp::solve(&built.lp), Ok(LpOutcome::Unbounded)),
                "no transport map but the curvature LP is bounded"
            );
            return Ok(CurvatureResult {
                variant: Variant::Linear,
                x,
                y,
                radius,
                value: Value::NegInfinity,
                witness: None,
                support: built.support,
                kind: BoundKind::Exact,
            });
        }
        return match lp::solve(&built.lp)? {
            LpOutcome::Optimal { value, solution } => {
                let witness = witness_from_solution(g.n(), x, y, &built.f_vars, &solution);
                Ok(CurvatureResult {
                    variant: Variant::Linear,
                    x,
                    y,
                    radius,
                    value: Value::Finite(value + built.constant),
                    witness: Some(witness),
                    support: built.support,
                    kind: BoundKind::Exact,
                })
            }
            outcome => Err(CurvatureError::Internal(format!(
                "transport map exists yet the LP came back {}; instance: {}",
                match outcome {
                    LpOutcome::Unbounded => "unbounded",
                    _ => "infeasible",
                },
                to_canonical_string(&serde_json::to_value(&built.lp).expect("LP serializes"))
            ))),
        };
    }

    match lp::solve(&built.lp)? {
        LpOutcome::Optimal { value, solution } => {
            let witness = witness_from_solution(g.n(), x, y, &built.f_vars, &solution);
            Ok(CurvatureResult {
                variant: Variant::Linear,
                x,
                y,
                radius,
                value: Value::Finite(value + built.constant),
                witness: Some(witness),
                support: built.support,
                kind: BoundKind::Exact,
            })
        }
        LpOutcome::Unbounded => Ok(CurvatureResult {
            variant: Variant::Linear,
            x,
            y,
            radius,
            value: Value::NegInfinity,
            witness: None,
            support: built.support,
            kind: BoundKind::Exact,
        }),
        LpOutcome::Infeasible => Err(CurvatureError::Internal(format!(
            "the curvature LP has an explicit feasible point yet reported infeasible: {}",
            to_canonical_string(&serde_json::to_value(&built.lp).expect("LP serializes"))
        ))),
    }
}

/// Exact classical edge curvature of the adjacent pair `(x, y)`.
pub fn k_ollivier(
    g: &WeightedGraph,
    x: usize,
    y: usize,
) -> Result<CurvatureResult, CurvatureError> {
    validate_pair(g, x, y, 1)?;

    let mut support = g.ball(x, 1);
    support.extend(g.ball(y, 1));
    support.sort_unstable();
    support.dedup();

    let mut var_of = BTreeMap::new();
    let mut f_vars = Vec::new();
    for &v in &support {
        if v == x || v == y {
            continue;
        }
        var_of.insert(v, f_vars.len());
        f_vars.push((v, f_vars.len()));
    }
    let num_vars = f_vars.len();

    let mut objective = vec![0.0; num_vars];
    let mut constant = 0.0;
    for &(u, _) in g.neighbors(x) {
        match term(&var_of, x, y, u) {
            Term::Var(i) => objective[i] += g.rate(x, u),
            Term::Const(c) => constant += g.rate(x, u) * c,
        }
    }
    for &(u, _) in g.neighbors(y) {
        match term(&var_of, x, y, u) {
            Term::Var(i) => objective[i] -= g.rate(y, u),
            Term::Const(c) => constant -= g.rate(y, u) * c,
        }
    }
    constant += g.degree(y);

    // Lipschitz rows |f(u) - f(v)| <= d(u, v) for every in-support pair;
    // with f(y) - f(x) = 1 = d(x, y) pinned, these encode a unit gradient
    // sup-norm. A function on the support meeting the full-graph distance
    // constraints extends 1-Lipschitz to every vertex, so nothing is lost.
    let mut constraints = Vec::new();
    for (a, &u) in support.iter().enumerate() {
        for &v in &support[a + 1..] {
            let d = g
                .distance(u, v)
                .expect("support vertices share a component") as f64;
            let (tu, tv) = (term(&var_of, x, y, u), term(&var_of, x, y, v));
            if let (Term::Const(_), Term::Const(_)) = (&tu, &tv) {
                continue;
            }
            for sign in [1.0, -1.0] {
                let mut coeffs = Vec::new();
                let mut rhs = d;
                match tu {
                    Term::Var(i) => coeffs.push((i, sign)),
                    Term::Const(c) => rhs -= sign * c,
                }
                match tv {
                    Term::Var(i) => coeffs.push((i, -sign)),
                    Term::Const(c) => rhs += sign * c,
                }
                coeffs.sort_unstable_by_key(|&(i, _)| i);
                constraints.push(Constraint { coeffs, op: RelOp::Le, rhs });
            }
        }
    }

    let bounds = vec![(None, None); num_vars];
    let lp = LinearProgram { num_vars, objective, bounds, constraints };
    match lp::solve(&lp)? {
        LpOutcome::Optimal { value, solution } => {
            let witness = witness_from_solution(g.n(), x, y, &f_vars, &solution);
            Ok(CurvatureResult {
                variant: Variant::Ollivier,
                x,
                y,
                radius: 1,
                value: Value::Finite(value + constant),
                witness: Some(witness),
                support,
                kind: BoundKind::Exact,
            })
        }
        _ => Err(CurvatureError::Internal(format!(
            "the Lipschitz program is always bounded and feasible; instance: {}",
            to_canonical_string(&serde_json::to_value(&lp).expect("LP serializes"))
        ))),
    }
}

/// Anti-regression oracle: the minimum of the defining objective over
/// `trials` random feasible functions together with the LP witness. Always
/// an upper bound on the true curvature.
pub fn k_linear_sampling_oracle(
    g: &WeightedGraph,
    x: usize,
    y: usize,
    radius: u32,
    trials: usize,
    seed: u64,
) -> Result<f64, CurvatureError> {
    validate_pair(g, x, y, radius)?;
    let exact = k_linear(g, x, y, radius)?;
    let mut best = match &exact.witness {
        Some(w) => linear_objective(g, w, x, y, radius),
        None => f64::INFINITY,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = g.ball(x, radius);
    for _ in 0..trials {
        let mut f = VertexFunction::from_fn(g.n(), |_| rng.gen_range(-1.5..1.5));
        for &v in &inner {
            f[v] = rng.gen_range(-1.0..1.0);
        }
        f[x] = 0.0;
        f[y] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        best = best.min(linear_objective(g, &f, x, y, radius));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, random_weighted_graph, LatticeSpec};

    fn single_edge() -> WeightedGraph {
        WeightedGraph::simple(2, &[(0, 1)]).unwrap()
    }

    fn hex66() -> WeightedGraph {
        generate(&LatticeSpec::HexTorus { width: 6, height: 6 }).unwrap().graph
    }

    fn finite(r: &CurvatureResult) -> f64 {
        r.value.finite().expect("expected a finite curvature")
    }

    #[test]
    fn single_edge_is_exactly_two() {
        let g = single_edge();
        let lin = k_linear(&g, 0, 1, 1).unwrap();
        assert!((finite(&lin) - 2.0).abs() < 1e-9);
        let oll = k_ollivier(&g, 0, 1).unwrap();
        assert!((finite(&oll) - 2.0).abs() < 1e-9);
        assert_eq!(lin.kind, BoundKind::Exact);
        let oracle = k_linear_sampling_oracle(&g, 0, 1, 1, 50, 7).unwrap();
        assert!((oracle - 2.0).abs() < 1e-9);
    }

    #[test]
    fn single_edge_lp_is_byte_stable() {
        let built = build_linear_lp(&single_edge(), 0, 1, 1, 0);
        let json = to_canonical_string(&serde_json::to_value(&built.lp).unwrap());
        assert_eq!(
            json,
            "{\"bounds\":[[0,null]],\"constraints\":[{\"coeffs\":[[0,1]],\"op\":\"ge\",\
             \"rhs\":-1},{\"coeffs\":[[0,1]],\"op\":\"ge\",\"rhs\":1}],\"num_vars\":1,\
             \"objective\":[1]}"
        );
        assert!((built.constant - 1.0).abs() < 1e-12);
    }

    // Small integer search over Lipschitz profiles; exact because the
    // constraint matrix is a difference system, so some optimum is integral.
    fn ollivier_bruteforce(g: &WeightedGraph, x: usize, y: usize) -> f64 {
        let mut support = g.ball(x, 1);
        support.extend(g.ball(y, 1));
        support.sort_unstable();
        support.dedup();
        let free: Vec<usize> = support.iter().copied().filter(|&v| v != x && v != y).collect();
        let range: Vec<i64> = (-3..=3).collect();
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize; free.len()];
        let mut f = VertexFunction::constant(g.n(), 0.0);
        f[y] = 1.0;
        loop {
            for (slot, &v) in stack.iter().zip(&free) {
                f[v] = range[*slot] as f64;
            }
            let ok = support.iter().enumerate().all(|(a, &u)| {
                support[a + 1..].iter().all(|&v| {
                    (f[u] - f[v]).abs() <= g.distance(u, v).unwrap() as f64 + 1e-9
                })
            });
            if ok {
                best = best.min(ollivier_objective(g, &f, x, y));
            }
            let mut i = 0;
            loop {
                if i == stack.len() {
                    return best;
                }
                stack[i] += 1;
                if stack[i] < range.len() {
                    break;
                }
                stack[i] = 0;
                i += 1;
            }
        }
    }

    #[test]
    fn six_cycle_edge_matches_integer_bruteforce() {
        let g = generate(&LatticeSpec::Cycle { n: 6 }).unwrap().graph;
        let lp_value = finite(&k_ollivier(&g, 0, 1).unwrap());
        let brute = ollivier_bruteforce(&g, 0, 1);
        assert!((lp_value - brute).abs() < 1e-9);
        assert!(lp_value.abs() < 1e-9, "six-cycle edge curvature should be 0");
    }

    #[test]
    fn six_cycle_adjacent_pair_is_nonnegative() {
        let g = generate(&LatticeSpec::Cycle { n: 6 }).unwrap().graph;
        let lin = k_linear(&g, 0, 1, 1).unwrap();
        assert!(finite(&lin) >= -1e-9);
    }

    #[test]
    fn star_leaf_to_center_is_negative_infinity() {
        let g = generate(&LatticeSpec::Star { leaves: 3 }).unwrap().graph;
        let lin = k_linear(&g, 1, 0, 1).unwrap();
        assert_eq!(lin.value, Value::NegInfinity);
        assert!(lin.witness.is_none());
    }

    #[test]
    fn hex_edge_values_at_scale_one() {
        // Mandatory vertices of the adjacent pair each admit a single
        // partner, so no transport map exists at scale 1; the Lipschitz
        // edge curvature stays finite at -2.
        let g = hex66();
        let (x, y, _) = g.edges()[0];
        let lin = k_linear(&g, x, y, 1).unwrap();
        assert_eq!(lin.value, Value::NegInfinity);
        let oll = k_ollivier(&g, x, y).unwrap();
        assert!((finite(&oll) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn hex_pairs_at_scale_two_are_nonnegative() {
        let g = hex66();
        for y in g.ball(0, 2) {
            if y == 0 {
                continue;
            }
            let lin = k_linear(&g, 0, y, 2).unwrap();
            assert!(finite(&lin) >= -1e-9, "pair (0,{y}): {:?}", lin.value);
        }
    }

    #[test]
    fn witness_reproduces_the_lp_value() {
        for seed in 0..12u64 {
            let g = random_weighted_graph(9, 0.4, seed);
            for &(x, y, _) in g.edges() {
                for radius in 1..=2u32 {
                    let res = k_linear(&g, x, y, radius).unwrap();
                    let Some(value) = res.value.finite() else { continue };
                    let w = res.witness.as_ref().unwrap();
                    assert!((w[x]).abs() < 1e-9);
                    assert!((w[y] - 1.0).abs() < 1e-9);
                    for &v in &g.ball(x, radius) {
                        assert!(w[v].abs() <= 1.0 + 1e-7);
                    }
                    let replayed = linear_objective(&g, w, x, y, radius);
                    assert!(
                        (replayed - value).abs() < 1e-7,
                        "seed {seed} pair ({x},{y}) r{radius}: lp {value} vs replay {replayed}"
                    );
                }
            }
        }
    }

    #[test]
    fn ollivier_witness_reproduces_the_lp_value() {
        for seed in 0..12u64 {
            let g = random_weighted_graph(9, 0.4, seed);
            for &(x, y, _) in g.edges() {
                let res = k_ollivier(&g, x, y).unwrap();
                let value = res.value.finite().unwrap();
                let w = res.witness.as_ref().unwrap();
                let replayed = ollivier_objective(&g, w, x, y);
                assert!((replayed - value).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn edge_curvature_dominates_linear_curvature() {
        for seed in 0..15u64 {
            let g = random_weighted_graph(10, 0.4, seed);
            for &(x, y, _) in g.edges() {
                let lin = k_linear(&g, x, y, 1).unwrap();
                let oll = finite(&k_ollivier(&g, x, y).unwrap());
                assert!(
                    oll >= lin.value.as_f64() - 1e-8,
                    "seed {seed} pair ({x},{y}): {oll} < {:?}",
                    lin.value
                );
            }
        }
    }

    #[test]
    fn defect_certificate_lower_bounds_the_lp() {
        // The certificate prices neighbours one for one, so the sweep stays
        // on uniform-rate graphs; see `WeightedGraph::uniform_rate`.
        for seed in 20..35u64 {
            let g = generate(&LatticeSpec::Gnp { n: 9, p: 0.35, seed }).unwrap().graph;
            for radius in 1..=2u32 {
                for x in g.vertices() {
                    for y in g.vertices() {
                        if x == y || !g.within(x, y, radius) {
                            continue;
                        }
                        let cert = transport::defect(&g, y, x, radius).unwrap();
                        let lin = k_linear(&g, x, y, radius).unwrap();
                        match cert.defect {
                            Defect::Infinite => assert_eq!(lin.value, Value::NegInfinity),
                            Defect::Finite(d) => {
                                assert!(lin.value.as_f64() >= -(d as f64) - 1e-8);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_defect_is_equivalent_to_nonnegative_both_ways() {
        for seed in 40..55u64 {
            let g = generate(&LatticeSpec::Gnp { n: 8, p: 0.4, seed }).unwrap().graph;
            for &(x, y, _) in g.edges() {
                let zero = transport::defect(&g, y, x, 1).unwrap().defect == Defect::Finite(0);
                let fwd = k_linear(&g, x, y, 1).unwrap().value;
                let bwd = k_linear(&g, y, x, 1).unwrap().value;
                let nonneg = fwd.as_f64() >= -1e-9 && bwd.as_f64() >= -1e-9;
                assert_eq!(zero, nonneg, "seed {seed} pair ({x},{y}): {fwd:?} / {bwd:?}");
            }
        }
    }

    #[test]
    fn sampling_oracle_never_undercuts_the_lp() {
        for seed in 0..8u64 {
            let g = random_weighted_graph(8, 0.45, seed);
            for &(x, y, _) in g.edges().iter().take(4) {
                let lin = k_linear(&g, x, y, 1).unwrap();
                let oracle = k_linear_sampling_oracle(&g, x, y, 1, 200, seed ^ 0xabc).unwrap();
                if let Value::Finite(v) = lin.value {
                    // The witness itself is sampled, so the oracle lands on
                    // the optimum exactly; no random profile can undercut it.
                    assert!((oracle - v).abs() < 1e-7);
                }
            }
        }
    }

    #[test]
    fn support_extension_leaves_the_value_alone() {
        let g = generate(&LatticeSpec::Cycle { n: 10 }).unwrap().graph;
        for extension in 0..3u32 {
            let built = build_linear_lp(&g, 0, 1, 1, extension);
            match lp::solve(&built.lp).unwrap() {
                LpOutcome::Optimal { value, .. } => {
                    let base = build_linear_lp(&g, 0, 1, 1, 0);
                    let LpOutcome::Optimal { value: base_value, .. } =
                        lp::solve(&base.lp).unwrap()
                    else {
                        panic!("base LP must be optimal");
                    };
                    assert!((value + built.constant - (base_value + base.constant)).abs() < 1e-9);
                }
                other => panic!("expected optimal, got {other:?}"),
            }
        }
    }

    #[test]
    fn joint_rescaling_preserves_curvature() {
        let edges: Vec<(usize, usize, f64)> =
            vec![(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (3, 0, 1.5), (0, 2, 0.75)];
        let measure = vec![1.0, 2.0, 0.5, 1.25];
        let g1 = WeightedGraph::from_edges(4, &edges, Some(measure.clone())).unwrap();
        let scaled: Vec<_> = edges.iter().map(|&(u, v, w)| (u, v, w * 3.0)).collect();
        let m2: Vec<_> = measure.iter().map(|m| m * 3.0).collect();
        let g2 = WeightedGraph::from_edges(4, &scaled, Some(m2)).unwrap();
        for &(x, y, _) in g1.edges() {
            let a = k_linear(&g1, x, y, 1).unwrap().value.as_f64();
            let b = k_linear(&g2, x, y, 1).unwrap().value.as_f64();
            assert!((a - b).abs() < 1e-9 || (a == f64::NEG_INFINITY && b == f64::NEG_INFINITY));
            let a = finite(&k_ollivier(&g1, x, y).unwrap());
            let b = finite(&k_ollivier(&g2, x, y).unwrap());
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let g = single_edge();
        assert!(matches!(k_linear(&g, 0, 0, 1), Err(CurvatureError::IdenticalPair(0))));
        assert!(matches!(k_linear(&g, 0, 1, 0), Err(CurvatureError::ZeroRadius)));
        assert!(matches!(k_linear(&g, 0, 5, 1), Err(CurvatureError::UnknownVertex { .. })));
        let path = generate(&LatticeSpec::Path { n: 4 }).unwrap().graph;
        assert!(matches!(k_linear(&path, 0, 3, 2), Err(CurvatureError::PairTooFar { .. })));
        assert!(matches!(k_ollivier(&path, 0, 2), Err(CurvatureError::PairTooFar { .. })));
    }
}
