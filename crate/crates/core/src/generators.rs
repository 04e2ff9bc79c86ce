//! Deterministic graph generators: periodic lattices, standard small
//! families, and seeded random graphs.
//!
//! The hexagonal torus is built from a two-vertex unit cell (sublattices
//! `a` and `b`) on a `width x height` grid of cells with periodic wrap:
//! `a(i,j)` is adjacent to `b(i,j)`, `b(i-1,j)` and `b(i,j-1)`. The result
//! is 3-regular and bipartite with girth 6. Its shortest non-contractible
//! cycle has length `2*min(width, height)`, so requiring both sides `>= 6`
//! makes every 5-ball isomorphic to the corresponding ball of the infinite
//! honeycomb lattice.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, WeightedGraph};

/// Smallest torus side for which 5-balls are wrap-free.
pub const HEX_TORUS_MIN_SIDE: usize = 6;

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("{0}")]
    InvalidSize(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Graph family plus sizes. Random families carry an explicit seed.
#[derive(Clone, Debug, PartialEq)]
pub enum LatticeSpec {
    HexTorus { width: usize, height: usize },
    SquareTorus { width: usize, height: usize },
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    Star { leaves: usize },
    Tree { n: usize },
    Gnp { n: usize, p: f64, seed: u64 },
}

/// Generator output: the graph, plus human-readable vertex labels for the
/// lattice families (debugging metadata, not part of the JSON format).
#[derive(Debug)]
pub struct Generated {
    pub graph: WeightedGraph,
    pub labels: Option<Vec<String>>,
}

pub fn generate(spec: &LatticeSpec) -> Result<Generated, GeneratorError> {
    match *spec {
        LatticeSpec::HexTorus { width, height } => hex_torus(width, height),
        LatticeSpec::SquareTorus { width, height } => square_torus(width, height),
        LatticeSpec::Cycle { n } => {
            if n < 3 {
                return Err(GeneratorError::InvalidSize(format!(
                    "cycle needs at least 3 vertices, got {n}"
                )));
            }
            let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            plain(WeightedGraph::simple(n, &edges)?)
        }
        LatticeSpec::Path { n } => {
            if n < 1 {
                return Err(GeneratorError::InvalidSize("path needs at least 1 vertex".into()));
            }
            let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            plain(WeightedGraph::simple(n, &edges)?)
        }
        LatticeSpec::Complete { n } => {
            if n < 1 {
                return Err(GeneratorError::InvalidSize(
                    "complete graph needs at least 1 vertex".into(),
                ));
            }
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    edges.push((u, v));
                }
            }
            plain(WeightedGraph::simple(n, &edges)?)
        }
        LatticeSpec::Star { leaves } => {
            if leaves < 1 {
                return Err(GeneratorError::InvalidSize("star needs at least 1 leaf".into()));
            }
            let edges: Vec<_> = (1..=leaves).map(|leaf| (0, leaf)).collect();
            plain(WeightedGraph::simple(leaves + 1, &edges)?)
        }
        LatticeSpec::Tree { n } => {
            if n < 1 {
                return Err(GeneratorError::InvalidSize("tree needs at least 1 vertex".into()));
            }
            // Complete binary tree in heap layout: parent of i is (i-1)/2.
            let edges: Vec<_> = (1..n).map(|i| ((i - 1) / 2, i)).collect();
            plain(WeightedGraph::simple(n, &edges)?)
        }
        LatticeSpec::Gnp { n, p, seed } => {
            if n < 1 {
                return Err(GeneratorError::InvalidSize("gnp needs at least 1 vertex".into()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(GeneratorError::InvalidSize(format!(
                    "gnp edge probability must lie in [0,1], got {p}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen::<f64>() < p {
                        edges.push((u, v));
                    }
                }
            }
            plain(WeightedGraph::simple(n, &edges)?)
        }
    }
}

fn plain(graph: WeightedGraph) -> Result<Generated, GeneratorError> {
    Ok(Generated { graph, labels: None })
}

fn hex_vertex(width: usize, height: usize, i: usize, j: usize, s: usize) -> usize {
    ((i % width) * height + (j % height)) * 2 + s
}

fn hex_torus(width: usize, height: usize) -> Result<Generated, GeneratorError> {
    if width < HEX_TORUS_MIN_SIDE || height < HEX_TORUS_MIN_SIDE {
        return Err(GeneratorError::InvalidSize(format!(
            "hex torus sides must both be >= {HEX_TORUS_MIN_SIDE} so that 5-balls match the \
             infinite lattice (shortest wrap-around cycle is 2*min(width,height)); \
             got {width}x{height}"
        )));
    }
    let mut edges = Vec::new();
    let mut labels = vec![String::new(); 2 * width * height];
    for i in 0..width {
        for j in 0..height {
            let a = hex_vertex(width, height, i, j, 0);
            labels[a] = format!("a({i},{j})");
            labels[hex_vertex(width, height, i, j, 1)] = format!("b({i},{j})");
            edges.push((a, hex_vertex(width, height, i, j, 1)));
            edges.push((a, hex_vertex(width, height, i + width - 1, j, 1)));
            edges.push((a, hex_vertex(width, height, i, j + height - 1, 1)));
        }
    }
    Ok(Generated {
        graph: WeightedGraph::simple(2 * width * height, &edges)?,
        labels: Some(labels),
    })
}

fn square_torus(width: usize, height: usize) -> Result<Generated, GeneratorError> {
    if width < 3 || height < 3 {
        return Err(GeneratorError::InvalidSize(format!(
            "square torus sides must both be >= 3, got {width}x{height}"
        )));
    }
    let at = |i: usize, j: usize| (i % width) * height + (j % height);
    let mut edges = Vec::new();
    let mut labels = vec![String::new(); width * height];
    for i in 0..width {
        for j in 0..height {
            labels[at(i, j)] = format!("({i},{j})");
            edges.push((at(i, j), at(i + 1, j)));
            edges.push((at(i, j), at(i, j + 1)));
        }
    }
    Ok(Generated {
        graph: WeightedGraph::simple(width * height, &edges)?,
        labels: Some(labels),
    })
}

/// Random graph with seeded weights in `[0.2, 2]` and measure in `[0.5, 2]`;
/// used by the verification sweeps that need genuinely weighted instances.
pub fn random_weighted_graph(n: usize, p: f64, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((u, v, rng.gen_range(0.2..2.0)));
            }
        }
    }
    let measure: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    WeightedGraph::from_edges(n, &edges, Some(measure)).expect("generated edges are valid")
}

/// Per-radius vertex-layer sizes and in-ball edge counts of a rooted ball.
#[derive(Clone, Debug, PartialEq)]
pub struct BallProfile {
    pub layer_sizes: Vec<usize>,
    pub edges_in_ball: Vec<usize>,
}

/// Profile of a ball in `g` rooted at `x`.
pub fn ball_profile(g: &WeightedGraph, x: usize, radius: u32) -> BallProfile {
    let mut layer_sizes = Vec::with_capacity(radius as usize + 1);
    let mut edges_in_ball = Vec::with_capacity(radius as usize + 1);
    for r in 0..=radius {
        let ball = g.ball(x, r);
        let prev = if r == 0 { 0 } else { g.ball(x, r - 1).len() };
        layer_sizes.push(ball.len() - prev);
        let in_ball: std::collections::BTreeSet<_> = ball.iter().copied().collect();
        let count = g
            .edges()
            .iter()
            .filter(|&&(u, v, _)| in_ball.contains(&u) && in_ball.contains(&v))
            .count();
        edges_in_ball.push(count);
    }
    BallProfile { layer_sizes, edges_in_ball }
}

/// Reference profile of the infinite honeycomb lattice, computed by BFS on
/// a coordinate patch large enough that the boundary cannot interfere.
pub fn hex_infinite_ball_profile(radius: u32) -> BallProfile {
    let span = radius as i64 + 2;
    let mut ids = std::collections::BTreeMap::new();
    let mut coords = Vec::new();
    for i in -span..=span {
        for j in -span..=span {
            for s in 0..2i64 {
                ids.insert((i, j, s), coords.len());
                coords.push((i, j, s));
            }
        }
    }
    let mut edges = Vec::new();
    for (&(i, j, s), &u) in &ids {
        if s != 0 {
            continue;
        }
        for neighbor in [(i, j, 1), (i - 1, j, 1), (i, j - 1, 1)] {
            if let Some(&v) = ids.get(&neighbor) {
                edges.push((u, v));
            }
        }
    }
    let patch = WeightedGraph::simple(coords.len(), &edges).expect("patch edges are valid");
    let root = ids[&(0, 0, 0)];
    let profile = ball_profile(&patch, root, radius);
    debug_assert_eq!(profile, ball_profile(&patch, ids[&(0, 0, 1)], radius));
    profile
}
