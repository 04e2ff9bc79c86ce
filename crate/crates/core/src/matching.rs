//! Bipartite matching kernels backing the transport certificates: maximum
//! cardinality matching (Hopcroft-Karp) with Hall-violator extraction, and
//! exact maximum-weight matching by successive shortest augmenting paths
//! with potentials, all in integer arithmetic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const NONE: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct Matching {
    pub left_to_right: Vec<Option<usize>>,
    pub right_to_left: Vec<Option<usize>>,
    pub size: usize,
}

/// Maximum-cardinality matching. `adj[l]` lists the right vertices reachable
/// from left vertex `l`; iteration order is as given, so sorted adjacency
/// yields a deterministic matching.
pub fn maximum_matching(nl: usize, nr: usize, adj: &[Vec<usize>]) -> Matching {
    assert_eq!(adj.len(), nl);
    let mut match_l = vec![NONE; nl];
    let mut match_r = vec![NONE; nr];
    let mut dist = vec![0u32; nl];

    // BFS layering from unmatched lefts; returns true if a free right is
    // reachable.
    let bfs = |match_l: &[usize], match_r: &[usize], dist: &mut [u32]| -> bool {
        let mut queue = std::collections::VecDeque::new();
        for l in 0..nl {
            if match_l[l] == NONE {
                dist[l] = 0;
                queue.push_back(l);
            } else {
                dist[l] = u32::MAX;
            }
        }
        let mut found = false;
        while let Some(l) = queue.pop_front() {
            for &r in &adj[l] {
                let next = match_r[r];
                if next == NONE {
                    found = true;
                } else if dist[next] == u32::MAX {
                    dist[next] = dist[l] + 1;
                    queue.push_back(next);
                }
            }
        }
        found
    };

    fn dfs(
        l: usize,
        adj: &[Vec<usize>],
        match_l: &mut [usize],
        match_r: &mut [usize],
        dist: &mut [u32],
    ) -> bool {
        for i in 0..adj[l].len() {
            let r = adj[l][i];
            let next = match_r[r];
            if next == NONE
                || (dist[next] == dist[l] + 1 && dfs(next, adj, match_l, match_r, dist))
            {
                match_l[l] = r;
                match_r[r] = l;
                return true;
            }
        }
        dist[l] = u32::MAX;
        false
    }

    let mut size = 0;
    while bfs(&match_l, &match_r, &mut dist) {
        for l in 0..nl {
            if match_l[l] == NONE && dfs(l, adj, &mut match_l, &mut match_r, &mut dist) {
                size += 1;
            }
        }
    }

    Matching {
        left_to_right: match_l.iter().map(|&r| (r != NONE).then_some(r)).collect(),
        right_to_left: match_r.iter().map(|&l| (l != NONE).then_some(l)).collect(),
        size,
    }
}

/// Given a maximum matching that leaves some left vertex unmatched, returns
/// the set `A` of left vertices reachable from unmatched lefts by
/// alternating paths. Then `|N(A)| < |A|`, so `A` witnesses the failure of
/// Hall's condition. Returns `None` when the matching saturates the left side.
pub fn hall_violator(nl: usize, nr: usize, adj: &[Vec<usize>], matching: &Matching) -> Option<Vec<usize>> {
    if matching.left_to_right.iter().all(|m| m.is_some()) {
        return None;
    }
    let mut seen_l = vec![false; nl];
    let mut seen_r = vec![false; nr];
    let mut queue = std::collections::VecDeque::new();
    for (l, assigned) in matching.left_to_right.iter().enumerate() {
        if assigned.is_none() {
            seen_l[l] = true;
            queue.push_back(l);
        }
    }
    while let Some(l) = queue.pop_front() {
        for &r in &adj[l] {
            if seen_r[r] {
                continue;
            }
            seen_r[r] = true;
            if let Some(next) = matching.right_to_left[r] {
                if !seen_l[next] {
                    seen_l[next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    Some((0..nl).filter(|&l| seen_l[l]).collect())
}

#[derive(Clone, Debug)]
pub struct WeightedMatching {
    pub left_to_right: Vec<Option<usize>>,
    pub total_weight: i64,
}

/// Maximum-weight bipartite matching with free cardinality: maximizes the
/// total weight over all matchings, leaving vertices unmatched whenever that
/// is optimal. Weights must be nonnegative. Exact integer arithmetic;
/// successive shortest augmenting paths with node potentials, stopping as
/// soon as the best augmenting path no longer gains weight.
pub fn max_weight_matching(
    nl: usize,
    nr: usize,
    edges: &[(usize, usize, i64)],
) -> WeightedMatching {
    // Parallel edges: only the heaviest can matter.
    let mut best = std::collections::BTreeMap::new();
    for &(l, r, w) in edges {
        assert!(l < nl && r < nr, "edge ({l},{r}) out of range");
        assert!(w >= 0, "weights must be nonnegative");
        let entry = best.entry((l, r)).or_insert(w);
        *entry = (*entry).max(w);
    }
    let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); nl];
    for (&(l, r), &w) in &best {
        adj[l].push((r, w));
    }

    let mut match_l = vec![NONE; nl];
    let mut match_r = vec![NONE; nr];
    let mut weight_r = vec![0i64; nr]; // weight of the edge matching r
    let mut pi_l = vec![0i64; nl];
    let mut pi_r = vec![0i64; nr];
    for row in &adj {
        for &(r, w) in row {
            pi_r[r] = pi_r[r].min(-w);
        }
    }

    const INF: i64 = i64::MAX / 4;
    loop {
        // Multi-source Dijkstra in reduced costs from all unmatched lefts.
        // Unmatched lefts keep potential 0, so the reduced distance to a
        // right r plus pi_r[r] is the true (negated-gain) path cost.
        let mut dist_l = vec![INF; nl];
        let mut dist_r = vec![INF; nr];
        let mut parent_r = vec![NONE; nr];
        let mut heap = BinaryHeap::new();
        for l in 0..nl {
            if match_l[l] == NONE {
                dist_l[l] = 0;
                heap.push(Reverse((0i64, 0u8, l)));
            }
        }
        while let Some(Reverse((d, kind, v))) = heap.pop() {
            if kind == 0 {
                if d > dist_l[v] {
                    continue;
                }
                for &(r, w) in &adj[v] {
                    if match_l[v] == r {
                        continue;
                    }
                    let reduced = -w + pi_l[v] - pi_r[r];
                    debug_assert!(reduced >= 0, "potentials lost dual feasibility");
                    let nd = d + reduced;
                    if nd < dist_r[r] {
                        dist_r[r] = nd;
                        parent_r[r] = v;
                        heap.push(Reverse((nd, 1u8, r)));
                    }
                }
            } else {
                if d > dist_r[v] {
                    continue;
                }
                let l = match_r[v];
                if l != NONE {
                    // Matched edges are tight, so traversing back is free.
                    if d < dist_l[l] {
                        dist_l[l] = d;
                        heap.push(Reverse((d, 0u8, l)));
                    }
                }
            }
        }

        // Cheapest augmentation ending at an unmatched right.
        let mut target = NONE;
        let mut target_cost = 0i64; // only strictly negative costs accepted
        for r in 0..nr {
            if match_r[r] == NONE && dist_r[r] < INF {
                let true_cost = dist_r[r] + pi_r[r];
                let better =
                    true_cost < target_cost || (true_cost == target_cost && target == NONE);
                if better && true_cost < 0 {
                    target = r;
                    target_cost = true_cost;
                }
            }
        }
        if target == NONE {
            break;
        }

        // Potential update capped at the target distance (the standard
        // Jonker-Volgenant rule); an uncapped update would break dual
        // feasibility on edges leaving unreached vertices.
        let cap = dist_r[target];
        for l in 0..nl {
            pi_l[l] += dist_l[l].min(cap);
        }
        for r in 0..nr {
            pi_r[r] += dist_r[r].min(cap);
        }

        // Flip the augmenting path.
        let mut r = target;
        loop {
            let l = parent_r[r];
            let prev = match_l[l];
            match_l[l] = r;
            match_r[r] = l;
            weight_r[r] = best[&(l, r)];
            if prev == NONE {
                break;
            }
            r = prev;
        }
    }

    let total_weight = (0..nr).filter(|&r| match_r[r] != NONE).map(|r| weight_r[r]).sum();
    WeightedMatching {
        left_to_right: match_l.iter().map(|&r| (r != NONE).then_some(r)).collect(),
        total_weight,
    }
}
