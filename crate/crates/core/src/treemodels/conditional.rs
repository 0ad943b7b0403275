use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mi::{entropy, mi_unchecked};
use super::mwst::{component_count, is_acyclic, maximum_spanning_tree, DisjointSets};
use super::rooted::{orient, row_normalize, Parent, RootedForest};
use super::tree::{check_evidence, check_joint, directed_joint, propagate, TreeDistribution};
use super::{StructureOptions, TreePosterior};
use crate::data::{stats_to_probabilities, ProbabilityTables, WeightedPairStats, MISSING};
use crate::error::{Error, Result};
use crate::util::{argmax, is_distribution};

/// Distribution of `x` (`num_x` variables) conditioned on `y` (`num_y`
/// variables, all with the same cardinality).
///
/// The within-`x` edges form a forest. Each cross edge `(u, v)` attaches
/// component-member `x^v` to `y^u`, with at most one cross edge per
/// component. `cross_joints[i]` is `T(y^u, x^v)` indexed `[y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalForestDistribution {
    num_x: usize,
    num_y: usize,
    cardinality: usize,
    within_edges: Vec<(usize, usize)>,
    within_joints: Vec<Vec<f64>>,
    node_marginals: Vec<Vec<f64>>,
    cross_edges: Vec<(usize, usize)>,
    cross_joints: Vec<Vec<f64>>,
}

impl ConditionalForestDistribution {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        num_x: usize,
        num_y: usize,
        cardinality: usize,
        within_edges: Vec<(usize, usize)>,
        within_joints: Vec<Vec<f64>>,
        node_marginals: Vec<Vec<f64>>,
        cross_edges: Vec<(usize, usize)>,
        cross_joints: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let f = ConditionalForestDistribution {
            num_x,
            num_y,
            cardinality,
            within_edges,
            within_joints,
            node_marginals,
            cross_edges,
            cross_joints,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, b) = (self.num_x, self.cardinality);
        if m == 0 || b < 2 {
            return Err(Error::Model("forest needs M >= 1 and B >= 2".into()));
        }
        if self.node_marginals.len() != m
            || self.within_joints.len() != self.within_edges.len()
            || self.cross_joints.len() != self.cross_edges.len()
        {
            return Err(Error::Model("table count does not match the structure".into()));
        }
        if self.within_edges.iter().any(|&(u, v)| u >= v || v >= m) || !is_acyclic(m, &self.within_edges) {
            return Err(Error::Model("within edges must form a forest with u < v".into()));
        }
        let mut ds = DisjointSets::new(m);
        for &(u, v) in &self.within_edges {
            ds.union(u, v);
        }
        let mut anchored = vec![false; m];
        for &(u, v) in &self.cross_edges {
            if u >= self.num_y || v >= m {
                return Err(Error::Model(format!("cross edge ({u}, {v}) out of range")));
            }
            let root = ds.find(v);
            if anchored[root] {
                return Err(Error::Model(format!("component of x{v} has more than one cross edge")));
            }
            anchored[root] = true;
        }
        for (v, p) in self.node_marginals.iter().enumerate() {
            if p.len() != b || !is_distribution(p, 1e-9) {
                return Err(Error::Model(format!("marginal of variable {v} is not a distribution")));
            }
        }
        for (&(u, v), joint) in self.within_edges.iter().zip(&self.within_joints) {
            check_joint(joint, b, &self.node_marginals[u], &self.node_marginals[v])
                .map_err(|m| Error::Model(format!("edge ({u}, {v}): {m}")))?;
        }
        for (&(u, v), joint) in self.cross_edges.iter().zip(&self.cross_joints) {
            if joint.len() != b * b || !is_distribution(joint, 1e-9) {
                return Err(Error::Model(format!("cross edge ({u}, {v}) joint is not a distribution")));
            }
        }
        Ok(())
    }

    pub fn num_x(&self) -> usize {
        self.num_x
    }

    pub fn num_y(&self) -> usize {
        self.num_y
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn within_edges(&self) -> &[(usize, usize)] {
        &self.within_edges
    }

    pub fn within_joint(&self, edge: usize) -> &[f64] {
        &self.within_joints[edge]
    }

    /// Cross edges as `(y index, x index)`.
    pub fn cross_edges(&self) -> &[(usize, usize)] {
        &self.cross_edges
    }

    pub fn cross_joint(&self, edge: usize) -> &[f64] {
        &self.cross_joints[edge]
    }

    pub fn node_marginal(&self, v: usize) -> &[f64] {
        &self.node_marginals[v]
    }

    /// Number of connected components of the full graph over `x` and `y`
    /// nodes, counting only `y` nodes that carry a cross edge.
    pub fn num_components(&self) -> usize {
        let mut edges = self.within_edges.clone();
        edges.extend(self.cross_edges.iter().map(|&(u, v)| (v, self.num_x + u)));
        let mut used: Vec<usize> = self.cross_edges.iter().map(|e| e.0).collect();
        used.sort_unstable();
        used.dedup();
        component_count(self.num_x + self.num_y, &edges) - (self.num_y - used.len())
    }

    /// Largest deviation between an anchored node's marginal and the `x`
    /// marginal of its cross joint.
    pub fn anchor_consistency_gap(&self) -> f64 {
        let b = self.cardinality;
        let mut gap = 0.0f64;
        for (&(_, v), joint) in self.cross_edges.iter().zip(&self.cross_joints) {
            for x in 0..b {
                let col: f64 = (0..b).map(|y| joint[y * b + x]).sum();
                gap = gap.max((col - self.node_marginals[v][x]).abs());
            }
        }
        gap
    }

    pub fn edge_mutual_information(&self) -> (Vec<f64>, Vec<f64>) {
        let b = self.cardinality;
        (
            self.within_joints.iter().map(|j| mi_unchecked(j, b)).collect(),
            self.cross_joints.iter().map(|j| mi_unchecked(j, b)).collect(),
        )
    }

    fn check_y(&self, y: &[u8]) -> Result<()> {
        if y.len() != self.num_y {
            return Err(Error::Dimension(format!("conditioning slice has {} values, expected {}", y.len(), self.num_y)));
        }
        if let Some((u, v)) = y.iter().enumerate().find(|(_, &v)| v != MISSING && v as usize >= self.cardinality) {
            return Err(Error::Dimension(format!("value {v} of conditioning variable {u} out of range")));
        }
        Ok(())
    }

    /// `log P(x | y)` in the product-of-ratios form; both slices complete.
    pub fn log_prob(&self, x: &[u8], y: &[u8]) -> Result<f64> {
        self.check_y(y)?;
        check_evidence(x, self.num_x, self.cardinality)?;
        if let Some(v) = x.iter().position(|&v| v == MISSING) {
            return Err(Error::MissingValue(v));
        }
        if let Some(u) = y.iter().position(|&v| v == MISSING) {
            return Err(Error::MissingValue(u));
        }
        let b = self.cardinality;
        let marg = |v: usize| self.node_marginals[v][x[v] as usize];
        let mut lp: f64 = (0..self.num_x).map(|v| marg(v).ln()).sum();
        for (&(u, v), joint) in self.within_edges.iter().zip(&self.within_joints) {
            lp += joint[x[u] as usize * b + x[v] as usize].ln() - marg(u).ln() - marg(v).ln();
        }
        for (&(u, v), joint) in self.cross_edges.iter().zip(&self.cross_joints) {
            let ya = y[u] as usize;
            let ty: f64 = joint[ya * b..(ya + 1) * b].iter().sum();
            lp += joint[ya * b + x[v] as usize].ln() - ty.ln() - marg(v).ln();
        }
        Ok(lp)
    }

    /// Posterior marginals of `x` given partial evidence on `x` and a
    /// conditioning slice `y` that may itself have missing values.
    pub fn posterior_marginals(&self, evidence: &[u8], y: &[u8]) -> Result<TreePosterior> {
        self.check_y(y)?;
        check_evidence(evidence, self.num_x, self.cardinality)?;
        let (log_evidence, flat) = self.rooted().posterior(evidence, Some(y));
        Ok(TreePosterior::from_flat(log_evidence, flat, self.cardinality))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, y: &[u8]) -> Vec<u8> {
        self.rooted().sample(rng, Some(y))
    }

    /// Directed form. Components are rooted at their anchored node; with no
    /// conditioning slice the anchored nodes use their node marginals.
    pub(crate) fn rooted(&self) -> RootedForest {
        let (m, b) = (self.num_x, self.cardinality);
        let bb = b * b;
        let mut anchor = vec![None; m];
        for (i, &(u, v)) in self.cross_edges.iter().enumerate() {
            anchor[v] = Some((u, i));
        }
        let (order, parents) = orient(m, &self.within_edges, |v| anchor[v].is_some());
        let mut parent = vec![Parent::Root; m];
        let mut cpt = vec![0.0; m * bb];
        let prior = self.node_marginals.concat();
        let mut soft = prior.clone();
        for v in 0..m {
            if let Some(p) = parents[v] {
                parent[v] = Parent::Node(p);
                let i = self
                    .within_edges
                    .iter()
                    .position(|&e| e == (p.min(v), p.max(v)))
                    .expect("edge present");
                let joint = if p < v {
                    self.within_joints[i].clone()
                } else {
                    crate::data::transpose(&self.within_joints[i], b)
                };
                cpt[v * bb..(v + 1) * bb].copy_from_slice(&row_normalize(&joint, b));
            } else if let Some((u, i)) = anchor[v] {
                parent[v] = Parent::Prev(u);
                let joint = &self.cross_joints[i];
                cpt[v * bb..(v + 1) * bb].copy_from_slice(&row_normalize(joint, b));
                for x in 0..b {
                    soft[v * b + x] = (0..b).map(|a| joint[a * b + x]).sum();
                }
            }
        }
        RootedForest::new(b, order, parent, prior, soft, cpt)
    }
}

/// Fits a conditional Chow-Liu forest from statistics that carry within-slice
/// pair tables for `x` and cross tables from `y`.
pub fn fit_conditional_chow_liu(stats: &WeightedPairStats, alpha: f64) -> Result<ConditionalForestDistribution> {
    fit_conditional_chow_liu_with(stats, &StructureOptions::smoothed(alpha))
}

pub fn fit_conditional_chow_liu_with(
    stats: &WeightedPairStats,
    options: &StructureOptions,
) -> Result<ConditionalForestDistribution> {
    require_tables(stats)?;
    let probs = stats_to_probabilities(stats, options.smoothing)?;
    let b = probs.cardinality();
    learn(&probs, options.prune_threshold, |_, mi| mi, |v, u| cross_x_marginal(probs.cross(u, v), b))
}

/// Emission for a hidden state whose first slice uses the within-slice
/// edges of its conditional forest, with anchored nodes as roots.
///
/// `pooled` holds within tables over all slices and cross tables over
/// slices after the first; `first` holds unary counts of first slices.
/// The anchored-node weights make the spanning tree maximize the expected
/// log-likelihood of both slice kinds together. Returns the forest for
/// later slices and the tree for first slices; both share the conditionals
/// of the pooled pair tables.
pub(crate) fn fit_within_forest(
    pooled: &WeightedPairStats,
    first: &WeightedPairStats,
    options: &StructureOptions,
) -> Result<(ConditionalForestDistribution, TreeDistribution)> {
    require_tables(pooled)?;
    let alpha = options.smoothing;
    let probs = stats_to_probabilities(pooled, alpha)?;
    let m = probs.num_vars();
    let b = probs.cardinality();
    let mut bonus = Vec::with_capacity(m);
    let mut first_marg = Vec::with_capacity(m);
    for v in 0..m {
        let w_all = pooled.unary_total(v);
        let w1 = first.unary_total(v);
        let w2 = (w_all - w1).max(0.0);
        let later: Vec<f64> = pooled.unary(v).iter().zip(first.unary(v)).map(|(a, c)| (a - c).max(0.0)).collect();
        let p1 = smoothed_or_uniform(first.unary(v), alpha);
        let p2 = smoothed_or_uniform(&later, alpha);
        let (f1, f2) = if w_all > 0.0 { (w1 / w_all, w2 / w_all) } else { (0.0, 0.0) };
        let d = entropy(probs.unary(v)) - f1 * entropy(&p1) - f2 * entropy(&p2);
        bonus.push((f2, d));
        first_marg.push(if w1 > 0.0 || alpha > 0.0 { p1 } else { probs.unary(v).to_vec() });
    }
    let forest = learn(
        &probs,
        options.prune_threshold,
        |v, mi| bonus[v].0 * mi + bonus[v].1,
        |v, u| cross_x_marginal(probs.cross(u, v), b),
    )?;
    let mut anchored = vec![false; m];
    for &(_, v) in forest.cross_edges() {
        anchored[v] = true;
    }
    let within = forest.within_edges().to_vec();
    let (marg, joints) = propagate_forest(&probs, &within, &anchored, |v| {
        if anchored[v] {
            first_marg[v].clone()
        } else {
            probs.unary(v).to_vec()
        }
    });
    let tree = TreeDistribution::new(m, b, within, marg, joints)?;
    Ok((forest, tree))
}

fn smoothed_or_uniform(counts: &[f64], alpha: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + alpha * counts.len() as f64;
    if total > 0.0 {
        counts.iter().map(|c| (c + alpha) / total).collect()
    } else {
        vec![1.0 / counts.len() as f64; counts.len()]
    }
}

fn require_tables(stats: &WeightedPairStats) -> Result<()> {
    if !stats.has_pairs() || !stats.has_cross() {
        return Err(Error::Config("conditional structure learning needs pair and cross statistics".into()));
    }
    Ok(())
}

fn cross_x_marginal(joint: &[f64], b: usize) -> Vec<f64> {
    (0..b).map(|x| (0..b).map(|y| joint[y * b + x]).sum()).collect()
}

/// Shared learner: picks the best conditioning variable for every `x`
/// node, runs the spanning tree over `x` plus one virtual node and converts
/// edges to the virtual node into cross edges.
fn learn(
    probs: &ProbabilityTables,
    prune: Option<f64>,
    anchor_weight: impl Fn(usize, f64) -> f64,
    anchor_marginal: impl Fn(usize, usize) -> Vec<f64>,
) -> Result<ConditionalForestDistribution> {
    let m = probs.num_vars();
    let my = probs.num_prev();
    let b = probs.cardinality();
    let mut mi = vec![0.0; m * m];
    for u in 0..m {
        for v in u + 1..m {
            let w = mi_unchecked(probs.pair(u, v), b);
            mi[u * m + v] = w;
            mi[v * m + u] = w;
        }
    }
    let mut best_u = Vec::with_capacity(m);
    let mut best_mi = Vec::with_capacity(m);
    for v in 0..m {
        let scores: Vec<f64> = (0..my).map(|u| mi_unchecked(probs.cross(u, v), b)).collect();
        let u = argmax(&scores);
        best_u.push(u);
        best_mi.push(scores[u]);
    }
    let weights: Vec<f64> = (0..m).map(|v| anchor_weight(v, best_mi[v])).collect();
    let edges = maximum_spanning_tree(m + 1, |u, v| if v == m { weights[u] } else { mi[u * m + v] });
    let mut within = Vec::new();
    let mut cross = Vec::new();
    for (u, v) in edges {
        if v == m {
            if prune.is_none_or(|eps| best_mi[u] >= eps) {
                cross.push((best_u[u], u));
            }
        } else if prune.is_none_or(|eps| mi[u * m + v] >= eps) {
            within.push((u, v));
        }
    }
    Ok(forest_from_tables(probs, within, cross, anchor_marginal))
}

/// Builds a consistent parameterization for a given structure: anchored
/// roots take `anchor_marginal`, other roots the unary table, and children
/// the row-normalized pair tables propagated from their parent.
pub(crate) fn forest_from_tables(
    probs: &ProbabilityTables,
    mut within: Vec<(usize, usize)>,
    mut cross: Vec<(usize, usize)>,
    anchor_marginal: impl Fn(usize, usize) -> Vec<f64>,
) -> ConditionalForestDistribution {
    let m = probs.num_vars();
    within.sort_unstable();
    cross.sort_unstable_by_key(|&(u, v)| (v, u));
    let mut anchor = vec![None; m];
    for &(u, v) in &cross {
        anchor[v] = Some(u);
    }
    let anchored: Vec<bool> = anchor.iter().map(Option::is_some).collect();
    let (node_marginals, within_joints) = propagate_forest(probs, &within, &anchored, |v| match anchor[v] {
        Some(u) => anchor_marginal(v, u),
        None => probs.unary(v).to_vec(),
    });
    let cross_joints = cross.iter().map(|&(u, v)| probs.cross(u, v).to_vec()).collect();
    ConditionalForestDistribution {
        num_x: m,
        num_y: probs.num_prev(),
        cardinality: probs.cardinality(),
        within_edges: within,
        within_joints,
        node_marginals,
        cross_edges: cross,
        cross_joints,
    }
}

/// Orients `within` away from the anchored nodes (or the lowest index of
/// an unanchored component), gives each root the marginal `root(v)` and
/// each child the row-normalized pair table from its parent. Returns the
/// node marginals and the edge joints in the order of `within`.
fn propagate_forest(
    probs: &ProbabilityTables,
    within: &[(usize, usize)],
    anchored: &[bool],
    root: impl Fn(usize) -> Vec<f64>,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let m = probs.num_vars();
    let b = probs.cardinality();
    let (order, parents) = orient(m, within, |v| anchored[v]);
    let mut marg = vec![Vec::new(); m];
    let mut cond: Vec<Option<Vec<f64>>> = vec![None; m];
    for &v in &order {
        match parents[v] {
            Some(p) => {
                let c = row_normalize(&probs.pair_oriented(p, v), b);
                marg[v] = propagate(&marg[p], &c, b);
                cond[v] = Some(c);
            }
            None => marg[v] = root(v),
        }
    }
    let joints = within
        .iter()
        .map(|&(u, v)| {
            if parents[v] == Some(u) {
                directed_joint(&marg[u], cond[v].as_ref().unwrap(), b)
            } else {
                crate::data::transpose(&directed_joint(&marg[v], cond[u].as_ref().unwrap(), b), b)
            }
        })
        .collect();
    (marg, joints)
}

/// Conditional forest with a fixed structure and tables from the smoothed
/// statistics. Cross edges are `(y index, x index)`.
pub fn conditional_from_structure(
    stats: &WeightedPairStats,
    alpha: f64,
    within_edges: &[(usize, usize)],
    cross_edges: &[(usize, usize)],
) -> Result<ConditionalForestDistribution> {
    require_tables(stats)?;
    let m = stats.num_vars();
    let within: Vec<(usize, usize)> = within_edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
    if within.iter().any(|&(u, v)| u == v || v >= m) || !is_acyclic(m, &within) {
        return Err(Error::Model("within edges do not form a forest".into()));
    }
    let probs = stats_to_probabilities(stats, alpha)?;
    let b = probs.cardinality();
    let f = forest_from_tables(&probs, within, cross_edges.to_vec(), |v, u| cross_x_marginal(probs.cross(u, v), b));
    f.validate()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{accumulate_stats, ObservationDataset, Sequence, TimeRange};
    use crate::treemodels::kl::decode_state;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rng: &mut ChaCha8Rng, m: usize, b: usize, n: usize, len: usize) -> ObservationDataset {
        let seqs = (0..n)
            .map(|_| {
                let mut rows: Vec<Vec<u8>> = Vec::with_capacity(len);
                for t in 0..len {
                    let row: Vec<u8> = (0..m)
                        .map(|v| {
                            if t > 0 && rng.gen_bool(0.6) {
                                rows[t - 1][(v + 1) % m]
                            } else if v > 0 && rng.gen_bool(0.3) {
                                0
                            } else {
                                rng.gen_range(0..b as u8)
                            }
                        })
                        .collect();
                    rows.push(row);
                }
                Sequence::from_rows(&rows).unwrap()
            })
            .collect();
        ObservationDataset::new(m, b, seqs).unwrap()
    }

    fn conditional_ll(f: &ConditionalForestDistribution, d: &ObservationDataset) -> f64 {
        let mut ll = 0.0;
        for s in d.sequences() {
            for t in 1..s.len() {
                ll += f.log_prob(s.slice(t), s.slice(t - 1)).unwrap();
            }
        }
        ll
    }

    /// All spanning trees of the complete graph on `n` nodes via Pruefer codes.
    fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
        let count = n.pow((n - 2) as u32);
        let mut out = Vec::with_capacity(count);
        for code_idx in 0..count {
            let mut code = vec![0usize; n - 2];
            let mut c = code_idx;
            for slot in code.iter_mut() {
                *slot = c % n;
                c /= n;
            }
            let mut degree = vec![1usize; n];
            for &x in &code {
                degree[x] += 1;
            }
            let mut edges = Vec::new();
            for &x in &code {
                let leaf = (0..n).find(|&i| degree[i] == 1).unwrap();
                edges.push((leaf.min(x), leaf.max(x)));
                degree[leaf] -= 1;
                degree[x] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
            edges.push((rest[0], rest[1]));
            out.push(edges);
        }
        out
    }

    #[test]
    fn mwst_forest_beats_every_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 4;
        let d = random_data(&mut rng, m, 2, 4, 60);
        let stats = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
        let fitted = fit_conditional_chow_liu(&stats, 0.0).unwrap();
        let best = conditional_ll(&fitted, &d);
        let probs = stats_to_probabilities(&stats, 0.0).unwrap();
        let mut checked = 0;
        for tree in all_spanning_trees(m + 1) {
            let within: Vec<_> = tree.iter().copied().filter(|&(_, v)| v < m).collect();
            // every choice of conditioning variable for each virtual-node edge
            let anchored: Vec<usize> = tree.iter().filter(|&&(_, v)| v == m).map(|&(u, _)| u).collect();
            for choice in 0..m.pow(anchored.len() as u32) {
                let mut c = choice;
                let cross: Vec<(usize, usize)> = anchored
                    .iter()
                    .map(|&v| {
                        let u = c % m;
                        c /= m;
                        (u, v)
                    })
                    .collect();
                let f = forest_from_tables(&probs, within.clone(), cross, |v, u| cross_x_marginal(probs.cross(u, v), 2));
                assert!(conditional_ll(&f, &d) <= best + 1e-9);
                checked += 1;
            }
        }
        assert!(checked > 125);
    }

    #[test]
    fn component_count_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..10 {
            let m = 3 + trial % 4;
            let d = random_data(&mut rng, m, 2 + trial % 2, 3, 40);
            let stats = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
            let f = fit_conditional_chow_liu(&stats, 0.1).unwrap();
            assert_eq!(component_count(m, f.within_edges()), f.cross_edges().len());
            assert_eq!(f.within_edges().len() + f.cross_edges().len(), m);
            let k = f.num_components();
            assert!(k >= 1 && k <= m);
            assert!(f.anchor_consistency_gap() < 1e-12);
            f.validate().unwrap();
        }
    }

    #[test]
    fn conditional_normalizes_for_every_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let d = random_data(&mut rng, 3, 3, 2, 50);
        let stats = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
        let f = fit_conditional_chow_liu(&stats, 0.5).unwrap();
        let mut x = vec![0u8; 3];
        let mut y = vec![0u8; 3];
        for yi in 0..27 {
            decode_state(yi, 3, &mut y);
            let total: f64 = (0..27)
                .map(|xi| {
                    decode_state(xi, 3, &mut x);
                    f.log_prob(&x, &y).unwrap().exp()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rooted_form_matches_ratio_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = random_data(&mut rng, 5, 2, 2, 50);
        let stats = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
        let f = fit_conditional_chow_liu(&stats, 0.3).unwrap();
        let r = f.rooted();
        for s in d.sequences() {
            for t in 1..s.len() {
                let a = f.log_prob(s.slice(t), s.slice(t - 1)).unwrap();
                let b = r.log_prob_complete(s.slice(t), Some(s.slice(t - 1)));
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn missing_conditioning_value_marginalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let d = random_data(&mut rng, 3, 2, 2, 50);
        let stats = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
        let f = fit_conditional_chow_liu(&stats, 0.3).unwrap();
        let (u, v) = f.cross_edges()[0];
        let mut y = vec![0u8; 3];
        y[u] = MISSING;
        let post = f.posterior_marginals(&[MISSING; 3], &y).unwrap();
        let joint = f.cross_joint(0);
        for x in 0..2 {
            let col = joint[x] + joint[2 + x];
            assert!((post.marginals[v][x] - col).abs() < 1e-12);
        }
    }

    #[test]
    fn within_forest_matches_cclf_when_first_slice_absent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = random_data(&mut rng, 4, 2, 3, 30);
        let pooled = accumulate_stats(&d, None, true, TimeRange::AfterFirst).unwrap();
        let first = crate::data::StatsAccumulator::unary_only(4, 2).finish();
        let (a, _) = fit_within_forest(&pooled, &first, &StructureOptions::smoothed(0.0)).unwrap();
        let b = fit_conditional_chow_liu(&pooled, 0.0).unwrap();
        assert_eq!(a.within_edges(), b.within_edges());
        assert_eq!(a.cross_edges(), b.cross_edges());
    }
}
