#![allow(dead_code)]

use cclhmm::data::{ObservationDataset, Sequence, StatsAccumulator, WeightedPairStats, MISSING};
use cclhmm::hmm::{em_fit, EmConfig, Emission, EmissionVariant, HmmModel};
use cclhmm::treemodels::TreeDistribution;
use rand::Rng;

pub const VARIANTS: [EmissionVariant; 3] = [EmissionVariant::Ci, EmissionVariant::Cl, EmissionVariant::Ccl];

/// Random distribution over `n` outcomes, skewed so that some cells are small.
pub fn random_joint(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3) + 1e-6).collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Digits of `index` in base `b`, least significant first.
pub fn digits(mut index: usize, b: usize, len: usize) -> Vec<u8> {
    (0..len)
        .map(|_| {
            let d = (index % b) as u8;
            index /= b;
            d
        })
        .collect()
}

/// Joint marginal of `vars` (row-major in the listed order).
pub fn marginal(p: &[f64], m: usize, b: usize, vars: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; b.pow(vars.len() as u32)];
    for (i, &pi) in p.iter().enumerate() {
        let x = digits(i, b, m);
        let idx = vars.iter().fold(0, |acc, &v| acc * b + x[v] as usize);
        out[idx] += pi;
    }
    out
}

pub fn mutual_information(joint: &[f64], b: usize) -> f64 {
    let mut pu = vec![0.0; b];
    let mut pv = vec![0.0; b];
    for i in 0..b {
        for j in 0..b {
            pu[i] += joint[i * b + j];
            pv[j] += joint[i * b + j];
        }
    }
    let mut mi = 0.0;
    for i in 0..b {
        for j in 0..b {
            let q = joint[i * b + j];
            if q > 0.0 {
                mi += q * (q / (pu[i] * pv[j])).ln();
            }
        }
    }
    mi
}

/// Weighted statistics of an exact joint over `m` variables.
pub fn stats_from_joint(p: &[f64], m: usize, b: usize) -> WeightedPairStats {
    let mut acc = StatsAccumulator::new(m, b, None);
    for (i, &w) in p.iter().enumerate() {
        acc.add(&digits(i, b, m), None, w);
    }
    acc.finish()
}

/// Weighted statistics of an exact joint over `(y, x)`; the first `my`
/// digits of a state index are `y`, the remaining `mx` are `x`.
pub fn stats_from_conditional_joint(p: &[f64], mx: usize, my: usize, b: usize) -> WeightedPairStats {
    let mut acc = StatsAccumulator::new(mx, b, Some(my));
    for (i, &w) in p.iter().enumerate() {
        let z = digits(i, b, my + mx);
        acc.add(&z[my..], Some(&z[..my]), w);
    }
    acc.finish()
}

/// Every spanning tree of the complete graph on `n >= 2` nodes, from Pruefer codes.
pub fn all_spanning_trees(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n == 2 {
        return vec![vec![(0, 1)]];
    }
    let count = n.pow((n - 2) as u32);
    (0..count)
        .map(|code_idx| {
            let code: Vec<usize> = digits(code_idx, n, n - 2).into_iter().map(usize::from).collect();
            let mut degree = vec![1usize; n];
            for &x in &code {
                degree[x] += 1;
            }
            let mut edges = Vec::with_capacity(n - 1);
            for &x in &code {
                let leaf = (0..n).find(|&i| degree[i] == 1).unwrap();
                edges.push((leaf.min(x), leaf.max(x)));
                degree[leaf] -= 1;
                degree[x] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
            edges.push((rest[0], rest[1]));
            edges
        })
        .collect()
}

pub fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut count = n;
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        if a != b {
            parent[a] = b;
            count -= 1;
        }
    }
    count
}

/// Sequences with a persistent regime plus temporal and spatial copying.
pub fn random_data(rng: &mut impl Rng, m: usize, b: usize, n: usize, len: usize, missing: f64) -> ObservationDataset {
    let seqs = (0..n)
        .map(|_| {
            let mut rows = vec![vec![0u8; m]; len];
            let mut regime = 0u8;
            for t in 0..len {
                if rng.gen_bool(0.1) {
                    regime = 1 - regime;
                }
                for v in 0..m {
                    rows[t][v] = if t > 0 && rng.gen_bool(0.4) {
                        rows[t - 1][v]
                    } else if v > 0 && rng.gen_bool(0.4) {
                        rows[t][v - 1]
                    } else if rng.gen_bool(0.6) {
                        regime.min(b as u8 - 1)
                    } else {
                        rng.gen_range(0..b as u8)
                    };
                }
            }
            for c in rows.iter_mut().flatten() {
                if rng.gen_bool(missing) {
                    *c = MISSING;
                }
            }
            Sequence::from_rows(&rows).unwrap()
        })
        .collect();
    ObservationDataset::new(m, b, seqs).unwrap()
}

pub fn random_stochastic(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() + 0.1).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

/// A valid HMM whose emissions come from one EM step on random data and
/// whose initial and transition tables are random.
pub fn random_hmm(rng: &mut impl Rng, variant: EmissionVariant, k: usize, m: usize, b: usize) -> HmmModel {
    let data = random_data(rng, m, b, 3, 20, 0.0);
    let mut cfg = EmConfig::new(variant, k);
    cfg.max_iterations = 1;
    cfg.restarts = 1;
    cfg.seed = rng.gen();
    let fit = em_fit(&data, &cfg).unwrap();
    let initial = random_stochastic(rng, k);
    let transition = (0..k).map(|_| random_stochastic(rng, k)).collect();
    HmmModel::new(initial, transition, fit.model.emissions().to_vec()).unwrap()
}

/// `log P(seq)` by summing over every hidden path.
pub fn enumerate_likelihood(model: &HmmModel, seq: &Sequence) -> f64 {
    let k = model.num_states();
    let t_len = seq.len();
    let mut terms = Vec::with_capacity(k.pow(t_len as u32));
    for idx in 0..k.pow(t_len as u32) {
        let path: Vec<usize> = digits(idx, k, t_len).into_iter().map(usize::from).collect();
        let mut lp = model.initial()[path[0]].ln();
        for t in 0..t_len {
            if t > 0 {
                lp += model.transition()[path[t - 1]][path[t]].ln();
            }
            let prev = (t > 0).then(|| seq.slice(t - 1));
            lp += model.emission_log_prob(path[t], seq.slice(t), prev).unwrap();
        }
        terms.push(lp);
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + terms.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Binary chain tree with equal marginals `p` and neighbour correlation `rho`.
pub fn chain_tree(m: usize, p: f64, rho: f64) -> TreeDistribution {
    let c = (1.0 - rho) * p * (1.0 - p);
    let joint = vec![1.0 - p - c, c, c, p - c];
    TreeDistribution::new(
        m,
        2,
        (0..m - 1).map(|v| (v, v + 1)).collect(),
        vec![vec![1.0 - p, p]; m],
        vec![joint; m - 1],
    )
    .unwrap()
}

/// Two persistent regimes with wet probabilities 0.8 and 0.2 and chain-tree
/// dependence within each slice.
pub fn planted_hmm(m: usize) -> HmmModel {
    HmmModel::new(
        vec![0.5, 0.5],
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        vec![Emission::Cl(chain_tree(m, 0.8, 0.3)), Emission::Cl(chain_tree(m, 0.2, 0.3))],
    )
    .unwrap()
}

/// Binary data from a switching regime where odd sites follow their left
/// neighbour and even sites follow their own previous value.
pub fn regime_pairs_data(
    rng: &mut impl Rng,
    n: usize,
    len: usize,
    m: usize,
    spatial: f64,
    temporal: f64,
    regime: f64,
) -> ObservationDataset {
    let seqs = (0..n)
        .map(|_| {
            let mut rows = vec![vec![0u8; m]; len];
            let mut s = rng.gen_range(0..2);
            for t in 0..len {
                if t > 0 && rng.gen_bool(0.1) {
                    s = 1 - s;
                }
                for v in 0..m {
                    let mut z = if s == 1 { regime } else { -regime };
                    if v % 2 == 1 {
                        z += spatial * (2.0 * rows[t][v - 1] as f64 - 1.0);
                    } else if t > 0 {
                        z += temporal * (2.0 * rows[t - 1][v] as f64 - 1.0);
                    }
                    rows[t][v] = rng.gen_bool(1.0 / (1.0 + (-z).exp())) as u8;
                }
            }
            Sequence::from_rows(&rows).unwrap()
        })
        .collect();
    ObservationDataset::new(m, 2, seqs).unwrap()
}
