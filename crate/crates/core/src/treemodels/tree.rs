use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mi::mi_unchecked;
use super::mwst::{is_acyclic, maximum_spanning_tree};
use super::rooted::{orient, row_normalize, Parent, RootedForest};
use super::{StructureOptions, TreePosterior};
use crate::data::{stats_to_probabilities, ProbabilityTables, WeightedPairStats, MISSING};
use crate::error::{Error, Result};
use crate::util::is_distribution;

/// A tree- (or forest-) structured distribution over `M` variables stored
/// as node marginals `T(x^v)` and edge joints `T(x^u, x^v)`.
///
/// Edge joints are row-major with `u` (the smaller endpoint) as the row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDistribution {
    num_vars: usize,
    cardinality: usize,
    edges: Vec<(usize, usize)>,
    node_marginals: Vec<Vec<f64>>,
    edge_joints: Vec<Vec<f64>>,
}

impl TreeDistribution {
    /// Builds a distribution from explicit tables, checking that the edges
    /// form a forest and that every joint is normalized and agrees with the
    /// node marginals within `1e-9`.
    pub fn new(
        num_vars: usize,
        cardinality: usize,
        edges: Vec<(usize, usize)>,
        node_marginals: Vec<Vec<f64>>,
        edge_joints: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let tree = TreeDistribution {
            num_vars,
            cardinality,
            edges,
            node_marginals,
            edge_joints,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, b) = (self.num_vars, self.cardinality);
        if m == 0 || b < 2 {
            return Err(Error::Model("tree needs M >= 1 and B >= 2".into()));
        }
        if self.node_marginals.len() != m || self.edge_joints.len() != self.edges.len() {
            return Err(Error::Model("table count does not match the structure".into()));
        }
        if self.edges.iter().any(|&(u, v)| u >= v || v >= m) {
            return Err(Error::Model("edges must be (u, v) with u < v < M".into()));
        }
        if !is_acyclic(m, &self.edges) {
            return Err(Error::Model("edge set contains a cycle".into()));
        }
        for (v, p) in self.node_marginals.iter().enumerate() {
            if p.len() != b || !is_distribution(p, 1e-9) {
                return Err(Error::Model(format!("marginal of variable {v} is not a distribution")));
            }
        }
        for (&(u, v), joint) in self.edges.iter().zip(&self.edge_joints) {
            check_joint(joint, b, &self.node_marginals[u], &self.node_marginals[v])
                .map_err(|m| Error::Model(format!("edge ({u}, {v}): {m}")))?;
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_marginal(&self, v: usize) -> &[f64] {
        &self.node_marginals[v]
    }

    pub fn edge_joint(&self, edge: usize) -> &[f64] {
        &self.edge_joints[edge]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == v || b == v).count()
    }

    /// Mutual information of every edge, in edge order.
    pub fn edge_mutual_information(&self) -> Vec<f64> {
        self.edge_joints
            .iter()
            .map(|j| mi_unchecked(j, self.cardinality))
            .collect()
    }

    fn check_complete(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "observation has {} values, tree has {} variables",
                x.len(),
                self.num_vars
            )));
        }
        for (v, &xv) in x.iter().enumerate() {
            if xv == MISSING {
                return Err(Error::MissingValue(v));
            }
            if xv as usize >= self.cardinality {
                return Err(Error::Dimension(format!("value {xv} of variable {v} out of range")));
            }
        }
        Ok(())
    }

    /// `log T(x)` in the product-of-ratios form over a complete observation.
    pub fn log_prob(&self, x: &[u8]) -> Result<f64> {
        self.check_complete(x)?;
        let b = self.cardinality;
        let mut lp: f64 = x
            .iter()
            .enumerate()
            .map(|(v, &xv)| self.node_marginals[v][xv as usize].ln())
            .sum();
        for (&(u, v), joint) in self.edges.iter().zip(&self.edge_joints) {
            let (a, c) = (x[u] as usize, x[v] as usize);
            lp += joint[a * b + c].ln() - self.node_marginals[u][a].ln() - self.node_marginals[v][c].ln();
        }
        Ok(lp)
    }

    /// Exact posterior marginals given a partial assignment (`MISSING` for
    /// unobserved cells) and the log-probability of the observed cells.
    pub fn posterior_marginals(&self, evidence: &[u8]) -> Result<TreePosterior> {
        check_evidence(evidence, self.num_vars, self.cardinality)?;
        let (log_evidence, flat) = self.rooted().posterior(evidence, None);
        Ok(TreePosterior::from_flat(log_evidence, flat, self.cardinality))
    }

    /// Ancestral sample of one complete observation.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<u8> {
        self.rooted().sample(rng, None)
    }

    pub(crate) fn rooted(&self) -> RootedForest {
        let (m, b) = (self.num_vars, self.cardinality);
        let (order, parents) = orient(m, &self.edges, |_| false);
        let mut cpt = vec![0.0; m * b * b];
        let mut parent = vec![Parent::Root; m];
        for v in 0..m {
            if let Some(p) = parents[v] {
                parent[v] = Parent::Node(p);
                let joint = self.oriented_joint(p, v);
                cpt[v * b * b..(v + 1) * b * b].copy_from_slice(&row_normalize(&joint, b));
            }
        }
        let prior = self.node_marginals.concat();
        RootedForest::new(b, order, parent, prior.clone(), prior, cpt)
    }

    fn oriented_joint(&self, p: usize, c: usize) -> Vec<f64> {
        let key = (p.min(c), p.max(c));
        let i = self.edges.iter().position(|&e| e == key).expect("edge present");
        if p < c {
            self.edge_joints[i].clone()
        } else {
            crate::data::transpose(&self.edge_joints[i], self.cardinality)
        }
    }
}

pub(crate) fn check_evidence(evidence: &[u8], m: usize, b: usize) -> Result<()> {
    if evidence.len() != m {
        return Err(Error::Dimension(format!("evidence has {} values, expected {m}", evidence.len())));
    }
    if let Some((v, x)) = evidence.iter().enumerate().find(|(_, &x)| x != MISSING && x as usize >= b) {
        return Err(Error::Dimension(format!("value {x} of variable {v} out of range")));
    }
    Ok(())
}

pub(crate) fn check_joint(joint: &[f64], b: usize, row_marg: &[f64], col_marg: &[f64]) -> std::result::Result<(), String> {
    if joint.len() != b * b || !is_distribution(joint, 1e-9) {
        return Err("joint table is not a distribution".into());
    }
    for a in 0..b {
        let r: f64 = joint[a * b..(a + 1) * b].iter().sum();
        let c: f64 = (0..b).map(|i| joint[i * b + a]).sum();
        if (r - row_marg[a]).abs() > 1e-9 || (c - col_marg[a]).abs() > 1e-9 {
            return Err("joint table disagrees with the node marginals".into());
        }
    }
    Ok(())
}

/// Fits a Chow-Liu tree with smoothing `alpha`: pairwise mutual
/// information from the smoothed tables, maximum spanning tree on those
/// weights, tables taken from the smoothed empirical distribution.
pub fn fit_chow_liu(stats: &WeightedPairStats, alpha: f64) -> Result<TreeDistribution> {
    fit_chow_liu_with(stats, &StructureOptions::smoothed(alpha))
}

pub fn fit_chow_liu_with(stats: &WeightedPairStats, options: &StructureOptions) -> Result<TreeDistribution> {
    require_pairs(stats)?;
    let probs = stats_to_probabilities(stats, options.smoothing)?;
    let m = probs.num_vars();
    let b = probs.cardinality();
    let mut mi = vec![0.0; m * m];
    for u in 0..m {
        for v in u + 1..m {
            let w = mi_unchecked(probs.pair(u, v), b);
            mi[u * m + v] = w;
            mi[v * m + u] = w;
        }
    }
    let mut edges = maximum_spanning_tree(m, |u, v| mi[u * m + v]);
    if let Some(eps) = options.prune_threshold {
        edges.retain(|&(u, v)| mi[u * m + v] >= eps);
    }
    Ok(tree_from_tables(&probs, edges))
}

/// Distribution with a fixed edge set and tables from the smoothed statistics.
pub fn tree_from_structure(stats: &WeightedPairStats, alpha: f64, edges: &[(usize, usize)]) -> Result<TreeDistribution> {
    require_pairs(stats)?;
    let m = stats.num_vars();
    let mut canon: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    canon.sort_unstable();
    if canon.iter().any(|&(u, v)| u == v || v >= m) || !is_acyclic(m, &canon) {
        return Err(Error::Model("edges do not form a forest over the variables".into()));
    }
    let probs = stats_to_probabilities(stats, alpha)?;
    Ok(tree_from_tables(&probs, canon))
}

fn require_pairs(stats: &WeightedPairStats) -> Result<()> {
    if !stats.has_pairs() {
        return Err(Error::Config("structure learning needs pairwise statistics".into()));
    }
    Ok(())
}

/// Roots each component at its lowest-index node, takes the root marginal
/// from the unary table and each child's conditional from the oriented pair
/// table, then re-derives node marginals and edge joints from that directed
/// form so every stored table is mutually consistent.
pub(crate) fn tree_from_tables(probs: &ProbabilityTables, mut edges: Vec<(usize, usize)>) -> TreeDistribution {
    let m = probs.num_vars();
    let b = probs.cardinality();
    edges.sort_unstable();
    let (order, parents) = orient(m, &edges, |_| false);
    let mut marg = vec![Vec::new(); m];
    let mut cond: Vec<Option<Vec<f64>>> = vec![None; m];
    for &v in &order {
        match parents[v] {
            None => marg[v] = probs.unary(v).to_vec(),
            Some(p) => {
                let c = row_normalize(&probs.pair_oriented(p, v), b);
                marg[v] = propagate(&marg[p], &c, b);
                cond[v] = Some(c);
            }
        }
    }
    let edge_joints = edges
        .iter()
        .map(|&(u, v)| {
            if parents[v] == Some(u) {
                directed_joint(&marg[u], cond[v].as_ref().unwrap(), b)
            } else {
                crate::data::transpose(&directed_joint(&marg[v], cond[u].as_ref().unwrap(), b), b)
            }
        })
        .collect();
    TreeDistribution {
        num_vars: m,
        cardinality: b,
        edges,
        node_marginals: marg,
        edge_joints,
    }
}

/// `sum_a p(a) c(b | a)`.
pub(crate) fn propagate(parent: &[f64], cond: &[f64], b: usize) -> Vec<f64> {
    let mut out = vec![0.0; b];
    for (a, pa) in parent.iter().enumerate() {
        for (o, c) in out.iter_mut().zip(&cond[a * b..(a + 1) * b]) {
            *o += pa * c;
        }
    }
    out
}

/// `p(a) c(b | a)` as a row-major joint.
pub(crate) fn directed_joint(parent: &[f64], cond: &[f64], b: usize) -> Vec<f64> {
    let mut out = vec![0.0; b * b];
    for a in 0..b {
        for x in 0..b {
            out[a * b + x] = parent[a] * cond[a * b + x];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{accumulate_stats, ObservationDataset, Sequence, TimeRange};
    use crate::treemodels::kl::{decode_state, kl_divergence_exact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn enumerate_all(m: usize, b: usize) -> Vec<Vec<u8>> {
        let n = b.pow(m as u32);
        (0..n)
            .map(|i| {
                let mut x = vec![0u8; m];
                decode_state(i, b, &mut x);
                x
            })
            .collect()
    }

    fn chain_tree() -> TreeDistribution {
        // x0 -> x1 -> x2 with P(x0) = [0.6, 0.4], P(x1|x0), P(x2|x1)
        let m0 = vec![0.6, 0.4];
        let c01 = [0.9, 0.1, 0.2, 0.8];
        let j01 = directed_joint(&m0, &c01, 2);
        let m1 = propagate(&m0, &c01, 2);
        let c12 = [0.7, 0.3, 0.25, 0.75];
        let j12 = directed_joint(&m1, &c12, 2);
        let m2 = propagate(&m1, &c12, 2);
        TreeDistribution::new(3, 2, vec![(0, 1), (1, 2)], vec![m0, m1, m2], vec![j01, j12]).unwrap()
    }

    #[test]
    fn edgeless_uniform_log_prob() {
        let t = TreeDistribution::new(3, 2, vec![], vec![vec![0.5, 0.5]; 3], vec![]).unwrap();
        assert!((t.log_prob(&[0, 1, 0]).unwrap() + 3.0 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn chain_log_prob_matches_factored_product() {
        let t = chain_tree();
        // P(0,1,0) = 0.6 * 0.1 * P(x2=0 | x1=1) = 0.6 * 0.1 * 0.25
        let want = (0.6f64 * 0.1 * 0.25).ln();
        assert!((t.log_prob(&[0, 1, 0]).unwrap() - want).abs() < 1e-12);
        let total: f64 = enumerate_all(3, 2).iter().map(|x| t.log_prob(x).unwrap().exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let t = chain_tree();
        assert!(matches!(t.log_prob(&[0, MISSING, 1]), Err(Error::MissingValue(1))));
        assert!(matches!(t.log_prob(&[0, 1]), Err(Error::Dimension(_))));
        let bad = TreeDistribution::new(3, 2, vec![(0, 1), (1, 2), (0, 2)], vec![vec![0.5, 0.5]; 3], vec![vec![0.25; 4]; 3]);
        assert!(bad.is_err());
        let inconsistent = TreeDistribution::new(2, 2, vec![(0, 1)], vec![vec![0.5, 0.5], vec![0.9, 0.1]], vec![vec![0.25; 4]]);
        assert!(inconsistent.is_err());
    }

    #[test]
    fn single_variable_is_smoothed_marginal() {
        let d = ObservationDataset::parse("1 2\n0\n0\n1\n").unwrap();
        let s = accumulate_stats(&d, None, false, TimeRange::All).unwrap();
        let t = fit_chow_liu(&s, 0.5).unwrap();
        assert!(t.edges().is_empty());
        assert_eq!(t.node_marginal(0), &[2.5 / 4.0, 1.5 / 4.0]);
    }

    #[test]
    fn independent_data_gives_product_of_marginals() {
        // x0 and x1 empirically independent: every combination equally often
        let d = ObservationDataset::parse("3 2\n0 0 1\n0 1 1\n1 0 1\n1 1 1\n0 0 0\n0 1 0\n1 0 0\n1 1 0\n").unwrap();
        let s = accumulate_stats(&d, None, false, TimeRange::All).unwrap();
        let t = fit_chow_liu(&s, 0.0).unwrap();
        for x in enumerate_all(3, 2) {
            assert!((t.log_prob(&x).unwrap() - (0.125f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_markov_chain_structure() {
        let truth = chain_tree();
        // exact distribution as a weighted dataset of all 8 states
        let states = enumerate_all(3, 2);
        let seq = Sequence::from_rows(&states).unwrap();
        let w = vec![states.iter().map(|x| truth.log_prob(x).unwrap().exp()).collect::<Vec<_>>()];
        let d = ObservationDataset::new(3, 2, vec![seq]).unwrap();
        let s = accumulate_stats(&d, Some(&w), false, TimeRange::All).unwrap();
        let fitted = fit_chow_liu(&s, 0.0).unwrap();
        assert_eq!(fitted.edges(), &[(0, 1), (1, 2)]);
        let p: Vec<f64> = w[0].clone();
        let best = kl_divergence_exact(&p, &fitted).unwrap();
        assert!(best.abs() < 1e-12);
        for alt in [vec![(0, 1), (0, 2)], vec![(0, 2), (1, 2)]] {
            let t = tree_from_structure(&s, 0.0, &alt).unwrap();
            assert!(kl_divergence_exact(&p, &t).unwrap() > best + 1e-6);
        }
    }

    #[test]
    fn posterior_full_and_empty_evidence() {
        let t = chain_tree();
        let post = t.posterior_marginals(&[1, 0, 1]).unwrap();
        assert!((post.log_evidence - t.log_prob(&[1, 0, 1]).unwrap()).abs() < 1e-12);
        assert_eq!(post.marginals[1], vec![1.0, 0.0]);
        let post = t.posterior_marginals(&[MISSING; 3]).unwrap();
        assert!(post.log_evidence.abs() < 1e-12);
        for v in 0..3 {
            for (a, b) in post.marginals[v].iter().zip(t.node_marginal(v)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn posterior_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..20 {
            let t = random_tree(&mut rng, 5, 2 + trial % 2);
            let b = t.cardinality();
            let mut ev = vec![MISSING; 5];
            ev[trial % 5] = (trial % b) as u8;
            ev[(trial + 2) % 5] = 0;
            let post = t.posterior_marginals(&ev).unwrap();
            let mut z = 0.0;
            let mut marg = vec![vec![0.0; b]; 5];
            for x in enumerate_all(5, b) {
                if ev.iter().zip(&x).any(|(e, v)| *e != MISSING && e != v) {
                    continue;
                }
                let p = t.log_prob(&x).unwrap().exp();
                z += p;
                for v in 0..5 {
                    marg[v][x[v] as usize] += p;
                }
            }
            assert!((post.log_evidence - z.ln()).abs() < 1e-9);
            for v in 0..5 {
                for k in 0..b {
                    assert!((post.marginals[v][k] - marg[v][k] / z).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sampling_point_mass() {
        let t = TreeDistribution::new(2, 2, vec![(0, 1)], vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 0.0, 1.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..20 {
            assert_eq!(t.sample(&mut rng), vec![1, 0]);
        }
    }

    pub(crate) fn random_tree(rng: &mut ChaCha8Rng, m: usize, b: usize) -> TreeDistribution {
        use rand::Rng;
        let seqs: Vec<Vec<u8>> = (0..200).map(|_| (0..m).map(|_| rng.gen_range(0..b as u8)).collect()).collect();
        let d = ObservationDataset::new(m, b, vec![Sequence::from_rows(&seqs).unwrap()]).unwrap();
        let s = accumulate_stats(&d, None, false, TimeRange::All).unwrap();
        fit_chow_liu(&s, 0.5).unwrap()
    }
}
