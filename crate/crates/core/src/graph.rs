//! Weighted graphs with a vertex measure, and the discrete operators the
//! curvature and semigroup machinery is built from.
//!
//! A graph carries symmetric edge weights `w(x,y) > 0` and a positive vertex
//! measure `m(x)`. The normalized rate `w(x,y)/m(x)` drives the Laplacian
//! `(Lf)(x) = (1/m(x)) * sum_y w(x,y) (f(y) - f(x))`, the carre-du-champ
//! `gamma`, and the positivity-preserving averaging operator `L + max_degree`.
//! The scale-`r` gradient `|f(y) - f(x)|` maximized over the `r`-ball around
//! `x` is the quantity all gradient estimates are stated in.

use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::canonical;

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    UnknownVertex { vertex: usize, n: usize },
    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("conflicting weights for edge {u}-{v}: {first} vs {second}")]
    ConflictingWeight { u: usize, v: usize, first: f64, second: f64 },
    #[error("invalid weight {w} on edge {u}-{v}: weights must be finite and nonnegative")]
    InvalidWeight { u: usize, v: usize, w: f64 },
    #[error("measure must be positive and finite, got {value} at vertex {vertex}")]
    InvalidMeasure { vertex: usize, value: f64 },
    #[error("measure has {got} entries but the graph has {expected} vertices")]
    MeasureLength { got: usize, expected: usize },
    #[error("invalid graph JSON: {0}")]
    Json(String),
}

/// Dense real-valued function on the vertices of a fixed graph.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        VertexFunction(vec![value; n])
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        VertexFunction((0..n).map(&mut f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |acc, v| acc.min(*v))
    }

    /// Elementwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        VertexFunction(self.0.iter().map(|&v| f(v)).collect())
    }
}

impl From<Vec<f64>> for VertexFunction {
    fn from(values: Vec<f64>) -> Self {
        VertexFunction(values)
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for VertexFunction {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// Immutable weighted graph with positive vertex measure.
///
/// Construction validates the input; afterwards the graph is safely
/// shareable across threads. Shortest-path distances are computed by BFS
/// and cached per source vertex on first use.
#[derive(Debug)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
    measure: Vec<f64>,
    max_degree: f64,
    min_rate: f64,
    bfs_cache: Vec<OnceLock<Box<[u32]>>>,
}

impl Clone for WeightedGraph {
    fn clone(&self) -> Self {
        WeightedGraph {
            n: self.n,
            adj: self.adj.clone(),
            edges: self.edges.clone(),
            measure: self.measure.clone(),
            max_degree: self.max_degree,
            min_rate: self.min_rate,
            bfs_cache: (0..self.n).map(|_| OnceLock::new()).collect(),
        }
    }
}

impl WeightedGraph {
    /// Builds a graph from undirected edge triples. Zero-weight entries are
    /// ignored; listing an edge twice is fine as long as the weights agree.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
        measure: Option<Vec<f64>>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let measure = measure.unwrap_or_else(|| vec![1.0; n]);
        if measure.len() != n {
            return Err(GraphError::MeasureLength { got: measure.len(), expected: n });
        }
        for (vertex, &value) in measure.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(GraphError::InvalidMeasure { vertex, value });
            }
        }

        let mut weight_of = std::collections::BTreeMap::new();
        for &(u, v, w) in edges {
            for &vertex in &[u, v] {
                if vertex >= n {
                    return Err(GraphError::UnknownVertex { vertex, n });
                }
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(GraphError::InvalidWeight { u, v, w });
            }
            if w == 0.0 {
                continue;
            }
            let key = (u.min(v), u.max(v));
            match weight_of.get(&key) {
                None => {
                    weight_of.insert(key, w);
                }
                Some(&first) if first != w => {
                    return Err(GraphError::ConflictingWeight { u: key.0, v: key.1, first, second: w });
                }
                Some(_) => {}
            }
        }

        let mut adj = vec![Vec::new(); n];
        let mut edge_list = Vec::with_capacity(weight_of.len());
        for (&(u, v), &w) in &weight_of {
            adj[u].push((v, w));
            adj[v].push((u, w));
            edge_list.push((u, v, w));
        }
        for row in &mut adj {
            row.sort_unstable_by_key(|&(v, _)| v);
        }

        let mut max_degree: f64 = 0.0;
        for x in 0..n {
            let deg: f64 = adj[x].iter().map(|&(_, w)| w / measure[x]).sum();
            max_degree = max_degree.max(deg);
        }
        let mut min_rate = f64::INFINITY;
        for &(u, v, w) in &edge_list {
            min_rate = min_rate.min(w / measure[u]).min(w / measure[v]);
        }

        Ok(WeightedGraph {
            n,
            adj,
            edges: edge_list,
            measure,
            max_degree,
            min_rate,
            bfs_cache: (0..n).map(|_| OnceLock::new()).collect(),
        })
    }

    /// Unit weights, unit measure.
    pub fn simple(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let triples: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_edges(n, &triples, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> std::ops::Range<usize> {
        0..self.n
    }

    fn check_vertex(&self, x: usize) {
        assert!(x < self.n, "vertex {x} out of range for graph with {} vertices", self.n);
    }

    /// Neighbors of `x` with edge weights, sorted by vertex id.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        self.check_vertex(x);
        &self.adj[x]
    }

    /// Undirected edges as `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.check_vertex(u);
        self.check_vertex(v);
        match self.adj[u].binary_search_by_key(&v, |&(y, _)| y) {
            Ok(i) => self.adj[u][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn is_edge(&self, u: usize, v: usize) -> bool {
        self.weight(u, v) > 0.0
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.check_vertex(x);
        self.measure[x]
    }

    /// Normalized jump rate `w(x,y) / m(x)`. Asymmetric in general.
    pub fn rate(&self, x: usize, y: usize) -> f64 {
        self.weight(x, y) / self.measure[x]
    }

    /// Weighted vertex degree: total rate out of `x`.
    pub fn degree(&self, x: usize) -> f64 {
        self.check_vertex(x);
        self.adj[x].iter().map(|&(_, w)| w / self.measure[x]).sum()
    }

    pub fn max_degree(&self) -> f64 {
        self.max_degree
    }

    /// Smallest nonzero rate over all ordered vertex pairs. Infinite for an
    /// edgeless graph.
    pub fn min_rate(&self) -> f64 {
        self.min_rate
    }

    /// `max_degree / min_rate`: plays the role of a dimension in the decay
    /// bounds. Equals `max_degree` on unit-weight, unit-measure graphs.
    pub fn dimension(&self) -> f64 {
        self.max_degree / self.min_rate
    }

    /// The common value of `rate(x, y)` when it is the same for every
    /// ordered edge, `None` when rates differ or the graph has no edges.
    ///
    /// Transport defects certify curvature bounds only in this regime: the
    /// counting arguments behind the certificates pair off neighbours of `x`
    /// and `y` one for one, which prices every neighbour equally. With
    /// unequal rates a pair can have a perfect transport map while the
    /// curvature is still unbounded below.
    pub fn uniform_rate(&self) -> Option<f64> {
        let mut rate: Option<f64> = None;
        for x in self.vertices() {
            for &(y, _) in self.neighbors(x) {
                let q = self.rate(x, y);
                match rate {
                    None => rate = Some(q),
                    Some(r) if (q - r).abs() <= r.abs() * 1e-12 => {}
                    Some(_) => return None,
                }
            }
        }
        rate
    }

    fn bfs(&self, src: usize) -> &[u32] {
        self.bfs_cache[src].get_or_init(|| {
            let mut dist = vec![UNREACHABLE; self.n].into_boxed_slice();
            dist[src] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let d = dist[u];
                for &(v, _) in &self.adj[u] {
                    if dist[v] == UNREACHABLE {
                        dist[v] = d + 1;
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
    }

    /// Hop distance, `None` when `y` is unreachable from `x`.
    pub fn distance(&self, x: usize, y: usize) -> Option<u32> {
        self.check_vertex(x);
        self.check_vertex(y);
        let d = self.bfs(x)[y];
        (d != UNREACHABLE).then_some(d)
    }

    pub fn within(&self, x: usize, y: usize, r: u32) -> bool {
        matches!(self.distance(x, y), Some(d) if d <= r)
    }

    /// Closed ball of radius `r` around `x`, sorted by vertex id.
    pub fn ball(&self, x: usize, r: u32) -> Vec<usize> {
        self.check_vertex(x);
        let dist = self.bfs(x);
        (0..self.n).filter(|&v| dist[v] != UNREACHABLE && dist[v] <= r).collect()
    }

    /// `(Lf)(x) = (1/m(x)) * sum_y w(x,y) (f(y) - f(x))`.
    pub fn laplacian(&self, f: &VertexFunction) -> VertexFunction {
        assert_eq!(f.len(), self.n, "function defined on a different vertex set");
        VertexFunction::from_fn(self.n, |x| self.laplacian_at(f, x))
    }

    pub fn laplacian_at(&self, f: &VertexFunction, x: usize) -> f64 {
        assert_eq!(f.len(), self.n, "function defined on a different vertex set");
        self.check_vertex(x);
        let mut acc = 0.0;
        for &(y, w) in &self.adj[x] {
            acc += w * (f[y] - f[x]);
        }
        acc / self.measure[x]
    }

    /// Carre du champ: `(1/2m(x)) * sum_y w(x,y) (f(y) - f(x))^2`.
    pub fn gamma(&self, f: &VertexFunction) -> VertexFunction {
        assert_eq!(f.len(), self.n, "function defined on a different vertex set");
        VertexFunction::from_fn(self.n, |x| {
            let mut acc = 0.0;
            for &(y, w) in &self.adj[x] {
                let d = f[y] - f[x];
                acc += w * d * d;
            }
            acc / (2.0 * self.measure[x])
        })
    }

    /// Averaging operator `L + max_degree`: nonnegative coefficients, hence
    /// positivity preserving with `|Af| <= max_degree * |f|` pointwise for
    /// nonnegative `f`.
    pub fn averaging(&self, f: &VertexFunction) -> VertexFunction {
        let lf = self.laplacian(f);
        VertexFunction::from_fn(self.n, |x| lf[x] + self.max_degree * f[x])
    }

    /// `k`-fold application of the averaging operator.
    pub fn averaging_power(&self, f: &VertexFunction, k: u32) -> VertexFunction {
        let mut g = f.clone();
        for _ in 0..k {
            g = self.averaging(&g);
        }
        g
    }

    /// Largest deviation of `f` from `f(x)` within the `r`-ball, together
    /// with the set of vertices attaining it.
    pub fn r_gradient(&self, f: &VertexFunction, x: usize, r: u32) -> (f64, Vec<usize>) {
        assert_eq!(f.len(), self.n, "function defined on a different vertex set");
        let ball = self.ball(x, r);
        let mut best = 0.0f64;
        for &y in &ball {
            best = best.max((f[y] - f[x]).abs());
        }
        let argmax = ball.into_iter().filter(|&y| (f[y] - f[x]).abs() == best).collect();
        (best, argmax)
    }

    /// The scale-`r` gradient as a vertex function.
    pub fn r_gradient_all(&self, f: &VertexFunction, r: u32) -> VertexFunction {
        VertexFunction::from_fn(self.n, |x| self.r_gradient(f, x, r).0)
    }

    /// Parses the JSON graph format:
    /// `{"n": 3, "edges": [[0,1], [1,2,0.5]], "measure": [1,1,2]}`.
    /// `measure` defaults to all ones, per-edge weight to 1.
    pub fn from_json_str(text: &str) -> Result<Self, GraphError> {
        let parsed: GraphJson =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        let triples: Vec<_> = parsed
            .edges
            .iter()
            .map(|entry| match *entry {
                EdgeEntry::Weighted(u, v, w) => (u, v, w),
                EdgeEntry::Plain(u, v) => (u, v, 1.0),
            })
            .collect();
        Self::from_edges(parsed.n, &triples, parsed.measure)
    }

    /// Canonical JSON rendering; parsing it back yields an identical graph.
    pub fn to_canonical_json(&self) -> String {
        let edges: Vec<Value> = self
            .edges
            .iter()
            .map(|&(u, v, w)| json!([u, v, w]))
            .collect();
        let value = json!({
            "n": self.n,
            "edges": edges,
            "measure": self.measure,
        });
        canonical::to_canonical_string(&value)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphJson {
    n: usize,
    #[serde(default)]
    edges: Vec<EdgeEntry>,
    #[serde(default)]
    measure: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EdgeEntry {
    Weighted(usize, usize, f64),
    Plain(usize, usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cycle(n: usize) -> WeightedGraph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        WeightedGraph::simple(n, &edges).unwrap()
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> WeightedGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if rng.gen::<f64>() < p {
                    let w = if weighted { rng.gen_range(0.2..3.0) } else { 1.0 };
                    edges.push((u, v, w));
                }
            }
        }
        let measure = if weighted {
            Some((0..n).map(|_| rng.gen_range(0.5..2.0)).collect())
        } else {
            None
        };
        WeightedGraph::from_edges(n, &edges, measure).unwrap()
    }

    fn random_function(rng: &mut ChaCha8Rng, n: usize) -> VertexFunction {
        VertexFunction::from_fn(n, |_| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn distances_on_cycle() {
        let g = cycle(6);
        assert_eq!(g.distance(0, 0), Some(0));
        assert_eq!(g.distance(0, 1), Some(1));
        assert_eq!(g.distance(0, 3), Some(3));
        assert_eq!(g.distance(5, 1), Some(2));
    }

    #[test]
    fn distance_is_none_across_components() {
        let g = WeightedGraph::simple(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(g.distance(0, 3), None);
        assert!(!g.within(0, 3, 10));
    }

    #[test]
    fn balls_are_monotone_and_start_at_center() {
        let g = cycle(8);
        assert_eq!(g.ball(2, 0), vec![2]);
        for r in 0..5u32 {
            let a = g.ball(3, r);
            let b = g.ball(3, r + 1);
            assert!(a.iter().all(|v| b.contains(v)), "r-ball not contained in (r+1)-ball");
        }
        assert_eq!(g.ball(0, 4), vec![0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn laplacian_of_indicator_on_c4() {
        let g = cycle(4);
        let f = VertexFunction::new(vec![1.0, 0.0, 0.0, 0.0]);
        let lf = g.laplacian(&f);
        assert_eq!(lf.values(), &[-2.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn laplacian_respects_weights_and_measure() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 2.0)], Some(vec![1.0, 4.0])).unwrap();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        let lf = g.laplacian(&f);
        assert_eq!(lf[0], 2.0);
        assert_eq!(lf[1], -0.5);
        assert_eq!(g.rate(0, 1), 2.0);
        assert_eq!(g.rate(1, 0), 0.5);
        assert_eq!(g.max_degree(), 2.0);
        assert_eq!(g.min_rate(), 0.5);
        assert_eq!(g.dimension(), 4.0);
    }

    #[test]
    fn laplacian_annihilates_constants_and_conserves_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 10, 0.4, true);
            let c = VertexFunction::constant(10, 3.25);
            assert!(g.laplacian(&c).sup_norm() < 1e-12);
            let f = random_function(&mut rng, 10);
            let lf = g.laplacian(&f);
            let mass: f64 = (0..10).map(|x| g.measure(x) * lf[x]).sum();
            assert!(mass.abs() < 1e-10, "weighted mass balance violated: {mass}");
        }
    }

    #[test]
    fn gamma_matches_product_rule_identity() {
        // gamma f = (L(f^2) - 2 f Lf) / 2
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 9, 0.5, true);
            let f = random_function(&mut rng, 9);
            let gamma = g.gamma(&f);
            let lf2 = g.laplacian(&f.map(|v| v * v));
            let lf = g.laplacian(&f);
            for x in 0..9 {
                let expect = 0.5 * (lf2[x] - 2.0 * f[x] * lf[x]);
                assert!((gamma[x] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma_on_single_edge() {
        let g = WeightedGraph::simple(2, &[(0, 1)]).unwrap();
        let f = VertexFunction::new(vec![0.0, 1.0]);
        let gamma = g.gamma(&f);
        assert_eq!(gamma.values(), &[0.5, 0.5]);
    }

    #[test]
    fn averaging_is_positivity_preserving_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let g = random_graph(&mut rng, 8, 0.5, true);
            let f = VertexFunction::from_fn(8, |_| rng.gen_range(0.0..1.0));
            let af = g.averaging(&f);
            let bound = g.max_degree() * f.sup_norm();
            for x in 0..8 {
                assert!(af[x] >= -1e-12);
                assert!(af[x] <= bound + 1e-12);
            }
        }
    }

    #[test]
    fn r_gradient_examples() {
        let g = WeightedGraph::simple(3, &[(0, 1), (1, 2)]).unwrap();
        let f = VertexFunction::new(vec![0.0, 1.0, 3.0]);
        let (v, argmax) = g.r_gradient(&f, 0, 2);
        assert_eq!(v, 3.0);
        assert_eq!(argmax, vec![2]);
        let (v1, argmax1) = g.r_gradient(&f, 0, 1);
        assert_eq!(v1, 1.0);
        assert_eq!(argmax1, vec![1]);
        // Constant function: zero gradient, attained by the whole ball.
        let c = VertexFunction::constant(3, 4.0);
        let (vc, argc) = g.r_gradient(&c, 1, 1);
        assert_eq!(vc, 0.0);
        assert_eq!(argc, vec![0, 1, 2]);
    }

    #[test]
    fn r_gradient_scaling_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 9, 0.4, false);
            let f = random_function(&mut rng, 9);
            let a = rng.gen_range(0.1..3.0);
            let b = rng.gen_range(-2.0..2.0);
            let scaled = f.map(|v| a * v + b);
            for r in 1..=3u32 {
                let x = rng.gen_range(0..9);
                let (orig, _) = g.r_gradient(&f, x, r);
                let (tran, _) = g.r_gradient(&scaled, x, r);
                assert!((tran - a * orig).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn r_gradient_squared_bounded_by_iterated_averaging_of_gamma() {
        // |grad_r f|^2(x) <= (2r / min_rate^r) * (A^(r-1) gamma f)(x)
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for case in 0..40 {
            let weighted = case % 2 == 0;
            let g = random_graph(&mut rng, 10, 0.45, weighted);
            let f = random_function(&mut rng, 10);
            let gamma = g.gamma(&f);
            for r in 1..=3u32 {
                let iterated = g.averaging_power(&gamma, r - 1);
                let factor = 2.0 * f64::from(r) / g.min_rate().powi(r as i32);
                for x in 0..10 {
                    let (grad, _) = g.r_gradient(&f, x, r);
                    assert!(
                        grad * grad <= factor * iterated[x] + 1e-9,
                        "gradient bound violated at x={x}, r={r}: {} > {}",
                        grad * grad,
                        factor * iterated[x]
                    );
                }
            }
        }
    }

    #[test]
    fn scaling_weights_and_measure_together_preserves_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let g = random_graph(&mut rng, 8, 0.5, true);
        let c = 3.7;
        let scaled_edges: Vec<_> =
            g.edges().iter().map(|&(u, v, w)| (u, v, c * w)).collect();
        let scaled_measure: Vec<_> = (0..8).map(|x| c * g.measure(x)).collect();
        let h = WeightedGraph::from_edges(8, &scaled_edges, Some(scaled_measure)).unwrap();
        let f = random_function(&mut rng, 8);
        let (lg, lh) = (g.laplacian(&f), h.laplacian(&f));
        for x in 0..8 {
            assert!((lg[x] - lh[x]).abs() < 1e-10);
        }
        assert!((g.max_degree() - h.max_degree()).abs() < 1e-12);
        assert!((g.min_rate() - h.min_rate()).abs() < 1e-12);
    }

    #[test]
    fn loader_accepts_defaults_and_both_edge_forms() {
        let g = WeightedGraph::from_json_str(
            r#"{"n": 3, "edges": [[0,1], [1,2,0.5]]}"#,
        )
        .unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.weight(0, 1), 1.0);
        assert_eq!(g.weight(1, 2), 0.5);
        assert_eq!(g.measure(2), 1.0);
    }

    #[test]
    fn loader_rejects_malformed_input() {
        let cases = [
            (r#"{"n": 2, "edges": [[0,0]]}"#, "self-loop"),
            (r#"{"n": 2, "edges": [[0,1,1.0],[1,0,2.0]]}"#, "conflicting"),
            (r#"{"n": 2, "edges": [[0,1,-1.0]]}"#, "invalid weight"),
            (r#"{"n": 2, "edges": [[0,3]]}"#, "out of range"),
            (r#"{"n": 2, "edges": [], "measure": [1.0, 0.0]}"#, "measure"),
            (r#"{"n": 2, "edges": [], "measure": [1.0]}"#, "measure"),
            (r#"{"n": 0, "edges": []}"#, "at least one"),
            (r#"{"n": 2, "edgez": []}"#, "unknown field"),
        ];
        for (text, needle) in cases {
            let err = WeightedGraph::from_json_str(text).unwrap_err().to_string();
            assert!(
                err.to_lowercase().contains(needle),
                "error {err:?} does not mention {needle:?}"
            );
        }
    }

    #[test]
    fn duplicate_edge_with_equal_weight_is_idempotent() {
        let g = WeightedGraph::from_json_str(
            r#"{"n": 2, "edges": [[0,1,2.0],[1,0,2.0]]}"#,
        )
        .unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), 2.0);
    }

    #[test]
    fn canonical_json_round_trips() {
        let g = WeightedGraph::from_edges(
            3,
            &[(2, 0, 0.25), (0, 1, 1.0)],
            Some(vec![1.0, 2.0, 0.5]),
        )
        .unwrap();
        let text = g.to_canonical_json();
        assert_eq!(
            text,
            r#"{"edges":[[0,1,1],[0,2,0.25]],"measure":[1,2,0.5],"n":3}"#
        );
        let parsed = WeightedGraph::from_json_str(&text).unwrap();
        assert_eq!(parsed.to_canonical_json(), text);
    }
}
