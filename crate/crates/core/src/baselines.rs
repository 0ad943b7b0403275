//! Models without hidden states: one Markov chain per variable, and the
//! chain Chow-Liu forest, where each slice is a conditional forest given the
//! previous one and the first slice has its own Chow-Liu tree.

use serde::{Deserialize, Serialize};

use crate::data::{accumulate_stats, normalize_counts, ObservationDataset, Sequence, TimeRange, MISSING};
use crate::error::{Error, Result};
use crate::model::{check_sequence, ImputedCell, SequenceModel};
use crate::treemodels::{
    fit_chow_liu_with, fit_conditional_chow_liu_with, ConditionalForestDistribution, StructureOptions,
    TreeDistribution,
};
use crate::util::{is_distribution, sample_categorical};

/// Independent first-order Markov chain per variable.
///
/// `transition[v]` is row-major `B x B`, row = previous value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentChainsModel {
    num_vars: usize,
    cardinality: usize,
    initial: Vec<Vec<f64>>,
    transition: Vec<Vec<f64>>,
}

impl IndependentChainsModel {
    pub fn new(cardinality: usize, initial: Vec<Vec<f64>>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let model = IndependentChainsModel {
            num_vars: initial.len(),
            cardinality,
            initial,
            transition,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let (m, b) = (self.num_vars, self.cardinality);
        if m == 0 || self.initial.len() != m || self.transition.len() != m || b < 2 {
            return Err(Error::Model("chains need M >= 1 initial and transition tables".into()));
        }
        for v in 0..m {
            if self.initial[v].len() != b || !is_distribution(&self.initial[v], 1e-9) {
                return Err(Error::Model(format!("initial distribution of variable {v} is invalid")));
            }
            let t = &self.transition[v];
            if t.len() != b * b || t.chunks_exact(b).any(|r| !is_distribution(r, 1e-9)) {
                return Err(Error::Model(format!("transition matrix of variable {v} is invalid")));
            }
        }
        Ok(())
    }

    pub fn initial(&self, v: usize) -> &[f64] {
        &self.initial[v]
    }

    pub fn transition(&self, v: usize) -> &[f64] {
        &self.transition[v]
    }

    fn trans(&self, v: usize, a: usize, x: usize) -> f64 {
        self.transition[v][a * self.cardinality + x]
    }

    /// Scaled forward-backward for variable `v` alone. Returns the
    /// log-probability of its observed cells and, if asked, the posterior
    /// of every time step.
    fn chain_posterior(&self, seq: &Sequence, v: usize, want_post: bool) -> Result<(f64, Vec<Vec<f64>>)> {
        let b = self.cardinality;
        let t_len = seq.len();
        let obs = |t: usize| seq.slice(t)[v];
        let evidence = |t: usize, x: usize| {
            let o = obs(t);
            if o == MISSING || o as usize == x {
                1.0
            } else {
                0.0
            }
        };
        let mut alpha = vec![vec![0.0; b]; t_len];
        let mut log_z = 0.0;
        for t in 0..t_len {
            for x in 0..b {
                let prior = if t == 0 {
                    self.initial[v][x]
                } else {
                    (0..b).map(|a| alpha[t - 1][a] * self.trans(v, a, x)).sum()
                };
                alpha[t][x] = prior * evidence(t, x);
            }
            let s: f64 = alpha[t].iter().sum();
            if !(s > 0.0) {
                return Err(Error::Numerical(format!("variable {v} has zero probability at time {t}")));
            }
            alpha[t].iter_mut().for_each(|a| *a /= s);
            log_z += s.ln();
        }
        if !want_post {
            return Ok((log_z, Vec::new()));
        }
        let mut beta = vec![1.0; b];
        let mut post = alpha.clone();
        for t in (0..t_len.saturating_sub(1)).rev() {
            let next: Vec<f64> = (0..b).map(|x| beta[x] * evidence(t + 1, x)).collect();
            let mut nb: Vec<f64> = (0..b).map(|a| (0..b).map(|x| self.trans(v, a, x) * next[x]).sum()).collect();
            crate::util::normalize_in_place(&mut nb);
            beta = nb;
            for x in 0..b {
                post[t][x] = alpha[t][x] * beta[x];
            }
            crate::util::normalize_in_place(&mut post[t]);
        }
        Ok((log_z, post))
    }
}

impl SequenceModel for IndependentChainsModel {
    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn cardinality(&self) -> usize {
        self.cardinality
    }

    fn sequence_log_likelihood(&self, seq: &Sequence) -> Result<f64> {
        check_sequence(seq, self.num_vars, self.cardinality)?;
        if seq.is_empty() {
            return Ok(0.0);
        }
        if !seq.has_missing() {
            let mut ll = 0.0;
            for v in 0..self.num_vars {
                ll += self.initial[v][seq.slice(0)[v] as usize].ln();
                for t in 1..seq.len() {
                    ll += self.trans(v, seq.slice(t - 1)[v] as usize, seq.slice(t)[v] as usize).ln();
                }
            }
            return Ok(ll);
        }
        (0..self.num_vars).map(|v| self.chain_posterior(seq, v, false).map(|r| r.0)).sum()
    }

    fn impute_sequence(&self, seq: &Sequence) -> Result<Vec<ImputedCell>> {
        check_sequence(seq, self.num_vars, self.cardinality)?;
        let mut cells = Vec::new();
        let mut posts = vec![Vec::new(); self.num_vars];
        for (v, post) in posts.iter_mut().enumerate() {
            if (0..seq.len()).any(|t| seq.slice(t)[v] == MISSING) {
                *post = self.chain_posterior(seq, v, true)?.1;
            }
        }
        for t in 0..seq.len() {
            for v in 0..self.num_vars {
                if seq.slice(t)[v] == MISSING {
                    cells.push(ImputedCell::new(t, v, posts[v][t].clone()));
                }
            }
        }
        Ok(cells)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn rand::RngCore) -> Sequence {
        let m = self.num_vars;
        let b = self.cardinality;
        let mut cells = vec![0u8; length * m];
        for t in 0..length {
            for v in 0..m {
                let dist = if t == 0 {
                    &self.initial[v][..]
                } else {
                    let a = cells[(t - 1) * m + v] as usize;
                    &self.transition[v][a * b..(a + 1) * b]
                };
                cells[t * m + v] = sample_categorical(dist, rng) as u8;
            }
        }
        Sequence::new(m, cells).expect("consistent shape")
    }
}

/// Fits one chain per variable: the initial distribution from first-slice
/// counts and each transition row from smoothed bigram counts. A row with no
/// transitions and no smoothing becomes uniform.
pub fn fit_independent_chains(data: &ObservationDataset, alpha: f64) -> Result<IndependentChainsModel> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("smoothing must be finite and >= 0, got {alpha}")));
    }
    let m = data.num_vars();
    let b = data.cardinality();
    let mut init = vec![vec![0.0; b]; m];
    let mut trans = vec![vec![0.0; b * b]; m];
    for seq in data.sequences() {
        if seq.is_empty() {
            continue;
        }
        for (v, &x) in seq.slice(0).iter().enumerate() {
            if x != MISSING {
                init[v][x as usize] += 1.0;
            }
        }
        for t in 1..seq.len() {
            let (prev, cur) = (seq.slice(t - 1), seq.slice(t));
            for v in 0..m {
                if prev[v] != MISSING && cur[v] != MISSING {
                    trans[v][prev[v] as usize * b + cur[v] as usize] += 1.0;
                }
            }
        }
    }
    let mut initial = Vec::with_capacity(m);
    let mut transition = Vec::with_capacity(m);
    for v in 0..m {
        initial.push(normalize_counts(&init[v], alpha, || format!("initial counts of variable {v}"))?);
        if alpha == 0.0 && trans[v].iter().sum::<f64>() == 0.0 {
            return Err(Error::DegenerateTable(format!("variable {v} has no observed transitions")));
        }
        let mut rows = Vec::with_capacity(b * b);
        for row in trans[v].chunks_exact(b) {
            let total: f64 = row.iter().sum::<f64>() + alpha * b as f64;
            if total > 0.0 {
                rows.extend(row.iter().map(|c| (c + alpha) / total));
            } else {
                rows.extend(std::iter::repeat_n(1.0 / b as f64, b));
            }
        }
        transition.push(rows);
    }
    IndependentChainsModel::new(b, initial, transition)
}

/// Chain Chow-Liu forest: a tree for the first slice and a conditional
/// forest of each later slice given its predecessor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainForestModel {
    initial: TreeDistribution,
    transition: ConditionalForestDistribution,
}

impl ChainForestModel {
    pub fn new(initial: TreeDistribution, transition: ConditionalForestDistribution) -> Result<Self> {
        let model = ChainForestModel { initial, transition };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        self.transition.validate()?;
        let m = self.initial.num_vars();
        let t = &self.transition;
        if t.num_x() != m || t.num_y() != m || t.cardinality() != self.initial.cardinality() {
            return Err(Error::Model("initial tree and transition forest disagree on M or B".into()));
        }
        Ok(())
    }

    pub fn initial(&self) -> &TreeDistribution {
        &self.initial
    }

    pub fn transition(&self) -> &ConditionalForestDistribution {
        &self.transition
    }
}

impl SequenceModel for ChainForestModel {
    fn num_vars(&self) -> usize {
        self.initial.num_vars()
    }

    fn cardinality(&self) -> usize {
        self.initial.cardinality()
    }

    fn sequence_log_likelihood(&self, seq: &Sequence) -> Result<f64> {
        check_sequence(seq, self.num_vars(), self.cardinality())?;
        if seq.is_empty() {
            return Ok(0.0);
        }
        let init = self.initial.rooted();
        let trans = self.transition.rooted();
        let mut ll = init.log_evidence(seq.slice(0), None);
        for t in 1..seq.len() {
            ll += trans.log_evidence(seq.slice(t), Some(seq.slice(t - 1)));
        }
        if !ll.is_finite() {
            return Err(Error::Numerical("sequence has zero probability under the model".into()));
        }
        Ok(ll)
    }

    /// Each missing cell combines the slice posterior given the previous
    /// slice with the evidence the next slice carries about it; other
    /// missing cells of the same slice are marginalized independently.
    fn impute_sequence(&self, seq: &Sequence) -> Result<Vec<ImputedCell>> {
        check_sequence(seq, self.num_vars(), self.cardinality())?;
        let b = self.cardinality();
        let m = self.num_vars();
        let init = self.initial.rooted();
        let trans = self.transition.rooted();
        let mut is_parent = vec![false; m];
        for &(u, _) in self.transition.cross_edges() {
            is_parent[u] = true;
        }
        let mut cells = Vec::new();
        for t in 0..seq.len() {
            let slice = seq.slice(t);
            if !slice.contains(&MISSING) {
                continue;
            }
            let (_, post) = if t == 0 {
                init.posterior(slice, None)
            } else {
                trans.posterior(slice, Some(seq.slice(t - 1)))
            };
            for v in (0..m).filter(|&v| slice[v] == MISSING) {
                let mut p = post[v * b..(v + 1) * b].to_vec();
                if t + 1 < seq.len() && is_parent[v] {
                    let mut filled = slice.to_vec();
                    let mut logw = vec![f64::NEG_INFINITY; b];
                    for x in 0..b {
                        if p[x] > 0.0 {
                            filled[v] = x as u8;
                            logw[x] = p[x].ln() + trans.log_evidence(seq.slice(t + 1), Some(&filled));
                        }
                    }
                    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    p = logw.iter().map(|l| (l - top).exp()).collect();
                }
                cells.push(ImputedCell::new(t, v, p));
            }
        }
        Ok(cells)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn rand::RngCore) -> Sequence {
        let m = self.num_vars();
        let init = self.initial.rooted();
        let trans = self.transition.rooted();
        let mut cells = Vec::with_capacity(length * m);
        for t in 0..length {
            let x = if t == 0 {
                init.sample(rng, None)
            } else {
                trans.sample(rng, Some(&cells[(t - 1) * m..t * m]))
            };
            cells.extend(x);
        }
        Sequence::new(m, cells).expect("consistent shape")
    }
}

/// One Chow-Liu fit on first slices and one conditional Chow-Liu fit on
/// consecutive slice pairs.
pub fn fit_cclf(data: &ObservationDataset, alpha: f64) -> Result<ChainForestModel> {
    fit_cclf_with(data, &StructureOptions::smoothed(alpha))
}

pub fn fit_cclf_with(data: &ObservationDataset, options: &StructureOptions) -> Result<ChainForestModel> {
    if data.sequences().iter().all(|s| s.len() < 2) {
        return Err(Error::Dimension("the chain forest needs a sequence of length >= 2".into()));
    }
    let first = accumulate_stats(data, None, false, TimeRange::First)?;
    let later = accumulate_stats(data, None, true, TimeRange::AfterFirst)?;
    let initial = fit_chow_liu_with(&first, options)?;
    let transition = fit_conditional_chow_liu_with(&later, options)?;
    ChainForestModel::new(initial, transition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treemodels::{conditional_from_structure, decode_state, tree_from_structure};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_var(values: &[u8]) -> ObservationDataset {
        let rows: Vec<Vec<u8>> = values.iter().map(|&v| vec![v]).collect();
        ObservationDataset::new(1, 2, vec![Sequence::from_rows(&rows).unwrap()]).unwrap()
    }

    fn random_data(rng: &mut ChaCha8Rng, m: usize, n: usize, len: usize, missing: f64) -> ObservationDataset {
        let seqs = (0..n)
            .map(|_| {
                let mut rows = vec![vec![0u8; m]; len];
                for t in 0..len {
                    for v in 0..m {
                        rows[t][v] = if t > 0 && rng.gen_bool(0.7) {
                            rows[t - 1][v]
                        } else if v > 0 && rng.gen_bool(0.5) {
                            rows[t][v - 1]
                        } else {
                            rng.gen_range(0..2)
                        };
                    }
                }
                for row in rows.iter_mut() {
                    for c in row.iter_mut() {
                        if rng.gen_bool(missing) {
                            *c = MISSING;
                        }
                    }
                }
                Sequence::from_rows(&rows).unwrap()
            })
            .collect();
        ObservationDataset::new(m, 2, seqs).unwrap()
    }

    #[test]
    fn bigram_tally() {
        let model = fit_independent_chains(&one_var(&[0, 0, 1, 1]), 0.0).unwrap();
        assert_eq!(model.transition(0), &[0.5, 0.5, 0.0, 1.0]);
        assert_eq!(model.initial(0), &[1.0, 0.0]);
        let model = fit_independent_chains(&one_var(&[0, 0, 0]), 0.0).unwrap();
        assert_eq!(&model.transition(0)[..2], &[1.0, 0.0]);
        let model = fit_independent_chains(&one_var(&[0, 0, 1, 1]), 1e12).unwrap();
        assert!(model.transition(0).iter().all(|p| (p - 0.5).abs() < 1e-9));
    }

    #[test]
    fn chains_need_transitions_without_smoothing() {
        assert!(matches!(fit_independent_chains(&one_var(&[1]), 0.0), Err(Error::DegenerateTable(_))));
    }

    #[test]
    fn cclf_sequence_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = fit_cclf(&random_data(&mut rng, 2, 5, 20, 0.0), 0.2).unwrap();
        let mut cells = vec![0u8; 6];
        let total: f64 = (0..64)
            .map(|i| {
                decode_state(i, 2, &mut cells);
                let seq = Sequence::new(2, cells.clone()).unwrap();
                model.sequence_log_likelihood(&seq).unwrap().exp()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cclf_single_slice_is_initial_tree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = fit_cclf(&random_data(&mut rng, 3, 4, 10, 0.0), 0.1).unwrap();
        let x = [1u8, 0, 1];
        let seq = Sequence::new(3, x.to_vec()).unwrap();
        let ll = model.sequence_log_likelihood(&seq).unwrap();
        assert!((ll - model.initial().log_prob(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn single_variable_cclf_is_a_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_data(&mut rng, 1, 6, 30, 0.0);
        for alpha in [0.0, 0.1, 2.0] {
            let cclf = fit_cclf(&data, alpha).unwrap();
            let chains = fit_independent_chains(&data, alpha).unwrap();
            let a = cclf.log_likelihood(&data).unwrap();
            let b = chains.log_likelihood(&data).unwrap();
            assert!((a.per_event() - b.per_event()).abs() < 1e-9);
        }
    }

    #[test]
    fn chains_equal_forced_cclf_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = random_data(&mut rng, 4, 6, 30, 0.0);
        let alpha = 0.3;
        let first = accumulate_stats(&data, None, false, TimeRange::First).unwrap();
        let later = accumulate_stats(&data, None, true, TimeRange::AfterFirst).unwrap();
        let self_edges: Vec<(usize, usize)> = (0..4).map(|v| (v, v)).collect();
        let forced = ChainForestModel::new(
            tree_from_structure(&first, alpha, &[]).unwrap(),
            conditional_from_structure(&later, alpha, &[], &self_edges).unwrap(),
        )
        .unwrap();
        let chains = fit_independent_chains(&data, alpha).unwrap();
        let a = forced.log_likelihood(&data).unwrap().per_event();
        let b = chains.log_likelihood(&data).unwrap().per_event();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn persistent_data_selects_self_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seqs = (0..20)
            .map(|_| {
                let mut rows = vec![vec![0u8; 3]; 100];
                for t in 0..100 {
                    for v in 0..3 {
                        rows[t][v] = if t > 0 && rng.gen_bool(0.8) { rows[t - 1][v] } else { rng.gen_range(0..2) };
                    }
                }
                Sequence::from_rows(&rows).unwrap()
            })
            .collect();
        let data = ObservationDataset::new(3, 2, seqs).unwrap();
        let model = fit_cclf(&data, 0.1).unwrap();
        assert_eq!(model.transition().cross_edges(), &[(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn chains_missing_likelihood_marginalizes() {
        let model = fit_independent_chains(&one_var(&[0, 0, 1, 1, 0, 1]), 0.5).unwrap();
        let with_gap = Sequence::from_rows(&[[0u8], [MISSING], [1]]).unwrap();
        let ll = model.sequence_log_likelihood(&with_gap).unwrap();
        let brute: f64 = (0..2u8)
            .map(|x| {
                let s = Sequence::from_rows(&[[0u8], [x], [1]]).unwrap();
                model.sequence_log_likelihood(&s).unwrap().exp()
            })
            .sum();
        assert!((ll - brute.ln()).abs() < 1e-12);
        let cells = model.impute_sequence(&with_gap).unwrap();
        assert_eq!(cells.len(), 1);
        let p0 = Sequence::from_rows(&[[0u8], [0], [1]]).unwrap();
        let want = model.sequence_log_likelihood(&p0).unwrap().exp() / brute;
        assert!((cells[0].posterior[0] - want).abs() < 1e-12);
    }

    #[test]
    fn cclf_imputation_is_exact_for_single_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = fit_cclf(&random_data(&mut rng, 3, 5, 30, 0.0), 0.2).unwrap();
        let mut rows = vec![vec![0u8, 1, 1], vec![1, MISSING, 0], vec![1, 1, 0], vec![0, 0, 1]];
        let seq = Sequence::from_rows(&rows).unwrap();
        let cells = model.impute_sequence(&seq).unwrap();
        let mut probs = [0.0; 2];
        for x in 0..2u8 {
            rows[1][1] = x;
            probs[x as usize] = model.sequence_log_likelihood(&Sequence::from_rows(&rows).unwrap()).unwrap().exp();
        }
        let z = probs[0] + probs[1];
        assert!((cells[0].posterior[0] - probs[0] / z).abs() < 1e-12);
    }

    #[test]
    fn point_mass_sampling() {
        let model = IndependentChainsModel::new(2, vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0, 1.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = model.sample_sequence(4, &mut rng);
        assert_eq!(s.cells(), &[0, 1, 0, 1]);
    }

    #[test]
    fn fitting_tolerates_missing_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = random_data(&mut rng, 3, 5, 30, 0.1);
        let model = fit_cclf(&data, 0.1).unwrap();
        let ll = model.log_likelihood(&data).unwrap();
        assert!(ll.total.is_finite() && ll.per_event() < 0.0);
        let chains = fit_independent_chains(&data, 0.1).unwrap();
        let cells = chains.impute(&data).unwrap();
        let missing = data.total_slices() * 3 - data.observed_cells();
        assert_eq!(cells.iter().map(Vec::len).sum::<usize>(), missing);
    }
}
