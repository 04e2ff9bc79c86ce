//! Transport maps between unit balls and their defect.
//!
//! A `y -> x` transport map at scale `R` is an injective map `phi: A ->
//! B_1(x)` with `B_1(y) \ B_R(x) <= A <= B_1(y)` and `d(z, phi(z)) <= R`.
//! Its defect counts the part of `B_1(x)` left uncovered beyond `B_R(y)`:
//! `|B_1(x) \ (phi(A) + B_R(y))|`. The minimum defect over all such maps
//! lower-bounds the curvature of the pair `(x, y)`; if no map exists, all
//! curvature variants are negative infinity.
//!
//! Minimizing the defect reduces to a single maximum-weight bipartite
//! matching: mandatory vertices (those that every map must move) carry a
//! weight `M` exceeding any achievable coverage bonus, target vertices
//! contribute a unit bonus when covered. When the mandatory set cannot be
//! saturated at all, a Hall violator extracted from the failed matching
//! certifies nonexistence.

use serde_json::json;
use thiserror::Error;

use crate::curvature::Value;
use crate::graph::WeightedGraph;
use crate::matching;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    UnknownVertex { vertex: usize, n: usize },
    #[error("radius must be at least 1")]
    ZeroRadius,
    #[error("pair ({x},{y}) is at distance {dist}, beyond radius {radius}")]
    PairTooFar { x: usize, y: usize, dist: String, radius: u32 },
    #[error("instance too large for brute force: |B_1({y})| = {size} exceeds cap {cap}")]
    TooLarge { y: usize, size: usize, cap: usize },
    #[error("certificate failed re-validation: {0}")]
    Internal(String),
}

/// The bipartite data behind a `y -> x` transport problem.
#[derive(Clone, Debug)]
pub struct TransportInstance {
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    /// `B_1(y)`: possible domain vertices, sorted.
    pub left: Vec<usize>,
    /// `B_1(y) \ B_R(x)`: vertices every transport map must move.
    pub mandatory: Vec<usize>,
    /// `B_1(x)`: codomain, sorted.
    pub right: Vec<usize>,
    /// `B_1(x) \ B_R(y)`: vertices that count toward the defect when missed.
    pub target: Vec<usize>,
    /// Pairs `(z, u)` with `z` in `left`, `u` in `right`, `d(z, u) <= R`.
    pub admissible: Vec<(usize, usize)>,
}

/// Minimum defect: a finite count, or infinite when no map exists.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Defect {
    Finite(usize),
    Infinite,
}

impl Defect {
    pub fn to_json(self) -> serde_json::Value {
        match self {
            Defect::Finite(d) => json!(d),
            Defect::Infinite => json!("inf"),
        }
    }
}

impl std::fmt::Display for Defect {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Defect::Finite(d) => write!(f, "{d}"),
            Defect::Infinite => write!(f, "inf"),
        }
    }
}

/// Outcome of defect minimization for a `y -> x` transport problem.
/// Exactly one of `assignment` (optimal map, sorted by domain vertex) and
/// `hall_witness` (a set `A` of mandatory vertices with fewer than `|A|`
/// admissible partners) is meaningful, depending on `defect`.
#[derive(Clone, Debug)]
pub struct TransportCertificate {
    pub x: usize,
    pub y: usize,
    pub radius: u32,
    pub defect: Defect,
    pub assignment: Vec<(usize, usize)>,
    pub hall_witness: Option<Vec<usize>>,
}

/// Certified curvature lower bounds implied by a defect certificate.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DefectBounds {
    pub linear: Value,
    pub quadratic: Value,
    pub exponential: Value,
}

/// Builds the bipartite instance for `y -> x` transport maps bounding the
/// curvature of the ordered pair `(x, y)`.
pub fn build_instance(
    g: &WeightedGraph,
    x: usize,
    y: usize,
    radius: u32,
) -> Result<TransportInstance, TransportError> {
    for vertex in [x, y] {
        if vertex >= g.n() {
            return Err(TransportError::UnknownVertex { vertex, n: g.n() });
        }
    }
    if radius == 0 {
        return Err(TransportError::ZeroRadius);
    }
    match g.distance(x, y) {
        Some(d) if d <= radius => {}
        Some(d) => {
            return Err(TransportError::PairTooFar { x, y, dist: d.to_string(), radius });
        }
        None => {
            return Err(TransportError::PairTooFar { x, y, dist: "inf".into(), radius });
        }
    }

    let left = g.ball(y, 1);
    let right = g.ball(x, 1);
    let mandatory: Vec<_> = left.iter().copied().filter(|&z| !g.within(x, z, radius)).collect();
    let target: Vec<_> = right.iter().copied().filter(|&u| !g.within(y, u, radius)).collect();
    let mut admissible = Vec::new();
    for &z in &left {
        for &u in &right {
            if g.within(z, u, radius) {
                admissible.push((z, u));
            }
        }
    }
    Ok(TransportInstance { x, y, radius, left, mandatory, right, target, admissible })
}

fn positions(sorted: &[usize]) -> std::collections::BTreeMap<usize, usize> {
    sorted.iter().enumerate().map(|(i, &v)| (v, i)).collect()
}

fn admissible_by_left(inst: &TransportInstance) -> Vec<Vec<usize>> {
    let lpos = positions(&inst.left);
    let rpos = positions(&inst.right);
    let mut adj = vec![Vec::new(); inst.left.len()];
    for &(z, u) in &inst.admissible {
        adj[lpos[&z]].push(rpos[&u]);
    }
    adj
}

fn check_hall_witness(
    g: &WeightedGraph,
    inst: &TransportInstance,
    witness: &[usize],
) -> Result<(), TransportError> {
    if witness.is_empty() || !witness.iter().all(|z| inst.mandatory.contains(z)) {
        return Err(TransportError::Internal(
            "Hall witness must be a nonempty subset of the mandatory vertices".into(),
        ));
    }
    let mut neighborhood = std::collections::BTreeSet::new();
    for &z in witness {
        for &u in &inst.right {
            if g.within(z, u, inst.radius) {
                neighborhood.insert(u);
            }
        }
    }
    if neighborhood.len() >= witness.len() {
        return Err(TransportError::Internal(format!(
            "claimed Hall witness {witness:?} has {} admissible partners",
            neighborhood.len()
        )));
    }
    Ok(())
}

fn check_assignment(
    g: &WeightedGraph,
    inst: &TransportInstance,
    assignment: &[(usize, usize)],
    claimed_defect: usize,
) -> Result<(), TransportError> {
    let mut domain = std::collections::BTreeSet::new();
    let mut image = std::collections::BTreeSet::new();
    for &(z, u) in assignment {
        if !domain.insert(z) {
            return Err(TransportError::Internal(format!("vertex {z} moved twice")));
        }
        if !image.insert(u) {
            return Err(TransportError::Internal(format!("map not injective at {u}")));
        }
        if !inst.left.contains(&z) || !inst.right.contains(&u) {
            return Err(TransportError::Internal(format!("pair ({z},{u}) outside the balls")));
        }
        if !g.within(z, u, inst.radius) {
            return Err(TransportError::Internal(format!(
                "pair ({z},{u}) farther apart than the radius"
            )));
        }
    }
    for &z in &inst.mandatory {
        if !domain.contains(&z) {
            return Err(TransportError::Internal(format!("mandatory vertex {z} not moved")));
        }
    }
    let uncovered = inst.target.iter().filter(|u| !image.contains(u)).count();
    if uncovered != claimed_defect {
        return Err(TransportError::Internal(format!(
            "claimed defect {claimed_defect} but {uncovered} targets uncovered"
        )));
    }
    Ok(())
}

/// Minimum defect over `y -> x` transport maps with an optimal map, or a
/// Hall violator proving none exists. Certificates are re-validated against
/// the graph before being returned.
pub fn defect(
    g: &WeightedGraph,
    y: usize,
    x: usize,
    radius: u32,
) -> Result<TransportCertificate, TransportError> {
    let inst = build_instance(g, x, y, radius)?;
    let adj = admissible_by_left(&inst);
    let lpos = positions(&inst.left);

    // Existence: can the mandatory vertices be matched at all?
    let mandatory_rows: Vec<Vec<usize>> =
        inst.mandatory.iter().map(|z| adj[lpos[z]].clone()).collect();
    let cardinality =
        matching::maximum_matching(inst.mandatory.len(), inst.right.len(), &mandatory_rows);
    if cardinality.size < inst.mandatory.len() {
        let violator = matching::hall_violator(
            inst.mandatory.len(),
            inst.right.len(),
            &mandatory_rows,
            &cardinality,
        )
        .expect("unsaturated matching always yields a violator");
        let witness: Vec<_> = violator.into_iter().map(|i| inst.mandatory[i]).collect();
        check_hall_witness(g, &inst, &witness)?;
        return Ok(TransportCertificate {
            x,
            y,
            radius,
            defect: Defect::Infinite,
            assignment: Vec::new(),
            hall_witness: Some(witness),
        });
    }

    // Weight scheme: matching a mandatory vertex dominates any combination
    // of coverage bonuses, so the optimum saturates the mandatory set and
    // then covers as many targets as possible.
    let separation = inst.right.len() as i64 + 1;
    let mandatory_set: std::collections::BTreeSet<_> = inst.mandatory.iter().copied().collect();
    let target_set: std::collections::BTreeSet<_> = inst.target.iter().copied().collect();
    let rpos = positions(&inst.right);
    let mut edges = Vec::with_capacity(inst.admissible.len());
    for &(z, u) in &inst.admissible {
        let w = i64::from(mandatory_set.contains(&z)) * separation
            + i64::from(target_set.contains(&u));
        edges.push((lpos[&z], rpos[&u], w));
    }
    let weighted = matching::max_weight_matching(inst.left.len(), inst.right.len(), &edges);

    let assignment: Vec<(usize, usize)> = weighted
        .left_to_right
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (inst.left[i], inst.right[r])))
        .collect();
    let covered = assignment.iter().filter(|&&(_, u)| target_set.contains(&u)).count();
    let value = inst.target.len() - covered;
    check_assignment(g, &inst, &assignment, value)?;
    Ok(TransportCertificate {
        x,
        y,
        radius,
        defect: Defect::Finite(value),
        assignment,
        hall_witness: None,
    })
}

/// Exhaustive reference: enumerates all transport maps. Rejects instances
/// with `|B_1(y)|` above `cap`.
pub fn defect_bruteforce(
    g: &WeightedGraph,
    y: usize,
    x: usize,
    radius: u32,
    cap: usize,
) -> Result<TransportCertificate, TransportError> {
    let inst = build_instance(g, x, y, radius)?;
    if inst.left.len() > cap {
        return Err(TransportError::TooLarge { y, size: inst.left.len(), cap });
    }
    if inst.right.len() > 63 {
        return Err(TransportError::TooLarge { y, size: inst.right.len(), cap: 63 });
    }
    let adj = admissible_by_left(&inst);
    let lpos = positions(&inst.left);
    let mandatory_idx: Vec<usize> = inst.mandatory.iter().map(|z| lpos[z]).collect();
    let is_mandatory: Vec<bool> = {
        let mut v = vec![false; inst.left.len()];
        for &i in &mandatory_idx {
            v[i] = true;
        }
        v
    };

    fn exists(rows: &[&[usize]], used: u64) -> bool {
        match rows.split_first() {
            None => true,
            Some((first, rest)) => first
                .iter()
                .any(|&r| used & (1 << r) == 0 && exists(rest, used | (1 << r))),
        }
    }
    let mandatory_rows: Vec<&[usize]> = mandatory_idx.iter().map(|&i| adj[i].as_slice()).collect();
    if !exists(&mandatory_rows, 0) {
        // Smallest Hall violator by exhaustive subset search.
        let k = inst.mandatory.len();
        'size: for size in 1..=k {
            for mask in 0u64..(1 << k) {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let subset: Vec<usize> =
                    (0..k).filter(|i| mask & (1 << i) != 0).map(|i| inst.mandatory[i]).collect();
                let mut nbhd = std::collections::BTreeSet::new();
                for &z in &subset {
                    nbhd.extend(adj[lpos[&z]].iter().copied());
                }
                if nbhd.len() < subset.len() {
                    check_hall_witness(g, &inst, &subset)?;
                    return Ok(TransportCertificate {
                        x,
                        y,
                        radius,
                        defect: Defect::Infinite,
                        assignment: Vec::new(),
                        hall_witness: Some(subset),
                    });
                }
                if size == k {
                    break 'size;
                }
            }
        }
        return Err(TransportError::Internal(
            "no mandatory matching yet no Hall violator found".into(),
        ));
    }

    let target_bonus: Vec<i64> = inst
        .right
        .iter()
        .map(|u| i64::from(inst.target.contains(u)))
        .collect();

    // Best coverage over all injective admissible maps whose domain contains
    // every mandatory vertex.
    struct Search<'a> {
        adj: &'a [Vec<usize>],
        is_mandatory: &'a [bool],
        target_bonus: &'a [i64],
        best: i64,
        best_assignment: Vec<Option<usize>>,
        current: Vec<Option<usize>>,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, used: u64, covered: i64) -> bool {
            if i == self.adj.len() {
                if covered > self.best {
                    self.best = covered;
                    self.best_assignment = self.current.clone();
                }
                return true;
            }
            let mut any = false;
            if !self.is_mandatory[i] {
                self.current[i] = None;
                any |= self.go(i + 1, used, covered);
            }
            for &r in &self.adj[i] {
                if used & (1 << r) == 0 {
                    self.current[i] = Some(r);
                    any |= self.go(i + 1, used | (1 << r), covered + self.target_bonus[r]);
                    self.current[i] = None;
                }
            }
            any
        }
    }
    let mut search = Search {
        adj: &adj,
        is_mandatory: &is_mandatory,
        target_bonus: &target_bonus,
        best: -1,
        best_assignment: Vec::new(),
        current: vec![None; inst.left.len()],
    };
    search.go(0, 0, 0);
    assert!(search.best >= 0, "a feasible map exists but the search found none");

    let assignment: Vec<(usize, usize)> = search
        .best_assignment
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (inst.left[i], inst.right[r])))
        .collect();
    let value = inst.target.len() - search.best as usize;
    check_assignment(g, &inst, &assignment, value)?;
    Ok(TransportCertificate {
        x,
        y,
        radius,
        defect: Defect::Finite(value),
        assignment,
        hall_witness: None,
    })
}

/// Curvature lower bounds implied by a defect certificate: `-defect` for
/// the linear and exponential variants, `-3/2 * defect` for the quadratic
/// one; all negative infinity when no map exists.
///
/// Valid on unit-rate graphs. For a uniform rate `q != 1` the finite bounds
/// scale by `q`; with non-uniform rates the defect certifies nothing and
/// even the infinite case loses its meaning (see
/// [`WeightedGraph::uniform_rate`]).
pub fn curvature_bounds_from_defect(cert: &TransportCertificate) -> DefectBounds {
    match cert.defect {
        Defect::Infinite => DefectBounds {
            linear: Value::NegInfinity,
            quadratic: Value::NegInfinity,
            exponential: Value::NegInfinity,
        },
        Defect::Finite(d) => {
            let d = d as f64;
            DefectBounds {
                linear: Value::Finite(-d),
                quadratic: Value::Finite(-1.5 * d),
                exponential: Value::Finite(-d),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, random_weighted_graph, LatticeSpec};

    fn cycle(n: usize) -> WeightedGraph {
        generate(&LatticeSpec::Cycle { n }).unwrap().graph
    }

    fn star3() -> WeightedGraph {
        generate(&LatticeSpec::Star { leaves: 3 }).unwrap().graph
    }

    #[test]
    fn instance_on_c6_edge() {
        let g = cycle(6);
        let inst = build_instance(&g, 0, 1, 1).unwrap();
        assert_eq!(inst.left, vec![0, 1, 2]);
        assert_eq!(inst.right, vec![0, 1, 5]);
        assert_eq!(inst.mandatory, vec![2]);
        assert_eq!(inst.target, vec![5]);
    }

    #[test]
    fn instance_with_identical_endpoints_is_trivial() {
        let g = cycle(6);
        let inst = build_instance(&g, 2, 2, 1).unwrap();
        assert!(inst.mandatory.is_empty());
        assert!(inst.target.is_empty());
        let cert = defect(&g, 2, 2, 1).unwrap();
        assert_eq!(cert.defect, Defect::Finite(0));
    }

    #[test]
    fn instance_rejects_far_pairs_and_bad_input() {
        let g = cycle(6);
        assert!(matches!(
            build_instance(&g, 0, 3, 2),
            Err(TransportError::PairTooFar { .. })
        ));
        assert!(matches!(build_instance(&g, 0, 9, 1), Err(TransportError::UnknownVertex { .. })));
        assert!(matches!(build_instance(&g, 0, 1, 0), Err(TransportError::ZeroRadius)));
    }

    #[test]
    fn c6_adjacent_pair_has_zero_defect() {
        let g = cycle(6);
        let cert = defect(&g, 1, 0, 1).unwrap();
        assert_eq!(cert.defect, Defect::Finite(0));
        assert!(cert.assignment.iter().any(|&(_, u)| u == 5));
        assert!(cert.hall_witness.is_none());
    }

    #[test]
    fn star_leaf_to_center_has_no_map() {
        // y = center 0, x = leaf 1: the two remaining leaves both admit only
        // the center, so no injective map exists.
        let g = star3();
        let cert = defect(&g, 0, 1, 1).unwrap();
        assert_eq!(cert.defect, Defect::Infinite);
        let witness = cert.hall_witness.unwrap();
        assert_eq!(witness, vec![2, 3]);
    }

    #[test]
    fn star_center_to_leaf_has_defect_one() {
        // y = leaf 1, x = center 0: nothing is mandatory, but only one of
        // the two far leaves can be covered.
        let g = star3();
        let cert = defect(&g, 1, 0, 1).unwrap();
        assert_eq!(cert.defect, Defect::Finite(1));
        assert!(cert.hall_witness.is_none());
    }

    #[test]
    fn hex_torus_distance_two_pairs_have_zero_defect_and_balanced_sets() {
        let g = generate(&LatticeSpec::HexTorus { width: 6, height: 6 }).unwrap().graph;
        let x = 0;
        for y in g.ball(x, 2) {
            if g.distance(x, y) != Some(2) {
                continue;
            }
            let inst = build_instance(&g, x, y, 2).unwrap();
            assert_eq!(inst.mandatory.len(), inst.target.len());
            let cert = defect(&g, y, x, 2).unwrap();
            assert_eq!(cert.defect, Defect::Finite(0), "pair ({x},{y})");
        }
    }

    #[test]
    fn bounds_from_certificates() {
        let g = star3();
        let no_map = defect(&g, 0, 1, 1).unwrap();
        let b = curvature_bounds_from_defect(&no_map);
        assert_eq!(b.linear, Value::NegInfinity);
        assert_eq!(b.quadratic, Value::NegInfinity);
        assert_eq!(b.exponential, Value::NegInfinity);

        let one = defect(&g, 1, 0, 1).unwrap();
        let b = curvature_bounds_from_defect(&one);
        assert_eq!(b.linear, Value::Finite(-1.0));
        assert_eq!(b.quadratic, Value::Finite(-1.5));
        assert_eq!(b.exponential, Value::Finite(-1.0));
    }

    #[test]
    fn matching_defect_agrees_with_brute_force() {
        let mut checked = 0;
        for seed in 0..60u64 {
            let g = random_weighted_graph(8, 0.35, seed);
            for radius in 1..=2u32 {
                for x in g.vertices() {
                    for y in g.vertices() {
                        if !g.within(x, y, radius) {
                            continue;
                        }
                        let fast = defect(&g, y, x, radius).unwrap();
                        match defect_bruteforce(&g, y, x, radius, 9) {
                            Ok(slow) => {
                                assert_eq!(
                                    fast.defect, slow.defect,
                                    "seed {seed}, pair ({x},{y}), radius {radius}"
                                );
                                checked += 1;
                            }
                            Err(TransportError::TooLarge { .. }) => {}
                            Err(e) => panic!("brute force failed: {e}"),
                        }
                    }
                }
            }
        }
        assert!(checked > 500, "only {checked} pairs were exercised");
    }

    #[test]
    fn two_sided_existence_forces_zero_defect() {
        for seed in 100..130u64 {
            let g = random_weighted_graph(9, 0.3, seed);
            for x in g.vertices() {
                for y in g.vertices() {
                    if x == y || !g.within(x, y, 1) {
                        continue;
                    }
                    let forward = defect(&g, y, x, 1).unwrap();
                    let backward = defect(&g, x, y, 1).unwrap();
                    let both_exist = forward.defect != Defect::Infinite
                        && backward.defect != Defect::Infinite;
                    if both_exist {
                        assert_eq!(forward.defect, Defect::Finite(0));
                        assert_eq!(backward.defect, Defect::Finite(0));
                    }
                    // Zero defect is symmetric.
                    assert_eq!(
                        forward.defect == Defect::Finite(0),
                        backward.defect == Defect::Finite(0)
                    );
                }
            }
        }
    }
}
