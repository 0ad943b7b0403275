use std::cmp::Ordering;

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns `false` when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }
}

/// Maximum weight spanning tree over `0..num_nodes` (Kruskal).
///
/// Candidate edges are visited in order of decreasing weight, then smaller
/// endpoint, then larger endpoint, so ties resolve the same way everywhere.
/// Returned edges are `(u, v)` with `u < v`, in order of selection.
pub fn maximum_spanning_tree<F>(num_nodes: usize, mut weight: F) -> Vec<(usize, usize)>
where
    F: FnMut(usize, usize) -> f64,
{
    if num_nodes < 2 {
        return Vec::new();
    }
    let mut candidates = Vec::with_capacity(num_nodes * (num_nodes - 1) / 2);
    for u in 0..num_nodes {
        for v in u + 1..num_nodes {
            candidates.push((weight(u, v), u, v));
        }
    }
    candidates.sort_by(|a, b| match b.0.total_cmp(&a.0) {
        Ordering::Equal => (a.1, a.2).cmp(&(b.1, b.2)),
        other => other,
    });
    let mut sets = DisjointSets::new(num_nodes);
    let mut edges = Vec::with_capacity(num_nodes - 1);
    for (_, u, v) in candidates {
        if sets.union(u, v) {
            edges.push((u, v));
            if edges.len() == num_nodes - 1 {
                break;
            }
        }
    }
    edges
}

/// Number of connected components of `(0..num_nodes, edges)`.
pub(crate) fn component_count(num_nodes: usize, edges: &[(usize, usize)]) -> usize {
    let mut sets = DisjointSets::new(num_nodes);
    let merged = edges.iter().filter(|&&(u, v)| sets.union(u, v)).count();
    num_nodes - merged
}

/// `true` when `edges` contains no cycle over `0..num_nodes`.
pub(crate) fn is_acyclic(num_nodes: usize, edges: &[(usize, usize)]) -> bool {
    let mut sets = DisjointSets::new(num_nodes);
    edges
        .iter()
        .all(|&(u, v)| u < num_nodes && v < num_nodes && sets.union(u, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// All spanning trees of K_n as edge lists, by brute-force subset search.
    fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << pairs.len()) {
            if mask.count_ones() as usize != n - 1 {
                continue;
            }
            let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            if is_acyclic(n, &edges) {
                out.push(edges);
            }
        }
        out
    }

    #[test]
    fn two_nodes() {
        assert_eq!(maximum_spanning_tree(2, |_, _| 0.3), vec![(0, 1)]);
        assert!(maximum_spanning_tree(1, |_, _| 1.0).is_empty());
    }

    #[test]
    fn ties_give_star_at_zero() {
        let mut e = maximum_spanning_tree(4, |_, _| 1.0);
        e.sort();
        assert_eq!(e, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn matches_cayley_enumeration() {
        let trees = all_spanning_trees(4);
        assert_eq!(trees.len(), 16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut w = [[0.0; 4]; 4];
            for u in 0..4 {
                for v in u + 1..4 {
                    w[u][v] = rng.gen::<f64>();
                }
            }
            let total = |e: &[(usize, usize)]| e.iter().map(|&(u, v)| w[u][v]).sum::<f64>();
            let best = trees.iter().map(|t| total(t)).fold(f64::NEG_INFINITY, f64::max);
            let mut got = maximum_spanning_tree(4, |u, v| w[u][v]);
            assert_eq!(got.len(), 3);
            assert!(is_acyclic(4, &got));
            assert!((total(&got) - best).abs() < 1e-12);
            got.sort();
            assert!(trees.contains(&got));
        }
    }

    #[test]
    fn components() {
        assert_eq!(component_count(5, &[(0, 1), (2, 3)]), 3);
        assert!(!is_acyclic(3, &[(0, 1), (1, 2), (0, 2)]));
    }
}
