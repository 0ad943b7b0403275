use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::{expected_counts, flat_transition_of, scale_log_emissions, PosteriorSummary};
use super::{ConditionalEmission, Emission, EmissionVariant, HmmModel, IndependentTables, InitialSliceRule};
use crate::data::{stats_to_probabilities, ObservationDataset, Sequence, StatsAccumulator};
use crate::error::{Error, Result};
use crate::treemodels::conditional::fit_within_forest;
use crate::treemodels::{fit_chow_liu_with, fit_conditional_chow_liu_with, StructureOptions};

/// Settings for Baum-Welch training with structure re-learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub num_states: usize,
    pub variant: EmissionVariant,
    pub max_iterations: usize,
    /// Stop once the relative log-likelihood gain drops below this and is
    /// no larger than the gain of the iteration before.
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub smoothing: f64,
    pub initial_slice: InitialSliceRule,
    pub prune_threshold: Option<f64>,
}

impl EmConfig {
    pub fn new(variant: EmissionVariant, num_states: usize) -> Self {
        EmConfig {
            num_states,
            variant,
            max_iterations: 100,
            tolerance: 1e-6,
            restarts: 10,
            seed: 0,
            smoothing: 0.1,
            initial_slice: InitialSliceRule::default(),
            prune_threshold: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_states == 0 {
            return Err(Error::Config("number of states must be at least 1".into()));
        }
        if self.max_iterations == 0 || self.restarts == 0 {
            return Err(Error::Config("iterations and restarts must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return Err(Error::Config(format!("smoothing must be finite and >= 0, got {}", self.smoothing)));
        }
        Ok(())
    }

    fn structure_options(&self) -> StructureOptions {
        StructureOptions {
            smoothing: self.smoothing,
            prune_threshold: self.prune_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub seed: u64,
    /// Training log-likelihood after each E-step.
    pub trace: Vec<f64>,
    /// Number of M-steps performed after initialization.
    pub iterations: usize,
    pub converged: bool,
}

impl RestartSummary {
    pub fn final_log_likelihood(&self) -> f64 {
        *self.trace.last().expect("at least one E-step")
    }
}

#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: HmmModel,
    pub best_restart: usize,
    pub restarts: Vec<RestartSummary>,
}

impl EmFit {
    pub fn trace(&self) -> &[f64] {
        &self.restarts[self.best_restart].trace
    }

    pub fn final_log_likelihood(&self) -> f64 {
        self.restarts[self.best_restart].final_log_likelihood()
    }

    pub fn iterations(&self) -> usize {
        self.restarts[self.best_restart].iterations
    }
}

/// Distinct emission contexts of a dataset. A context is a slice, plus
/// the previous slice when emissions look back; `ids[n][t]` is the context
/// of slice `t` of sequence `n`.
struct Patterns {
    num_vars: usize,
    slices: Vec<u8>,
    prevs: Vec<Option<Vec<u8>>>,
    ids: Vec<Vec<usize>>,
}

impl Patterns {
    fn new(seqs: &[Sequence], num_vars: usize, with_prev: bool) -> Self {
        let mut index: HashMap<(Option<&[u8]>, &[u8]), usize> = HashMap::new();
        let mut slices = Vec::new();
        let mut prevs = Vec::new();
        let ids = seqs
            .iter()
            .map(|s| {
                (0..s.len())
                    .map(|t| {
                        let prev = (with_prev && t > 0).then(|| s.slice(t - 1));
                        *index.entry((prev, s.slice(t))).or_insert_with(|| {
                            slices.extend_from_slice(s.slice(t));
                            prevs.push(prev.map(<[u8]>::to_vec));
                            prevs.len() - 1
                        })
                    })
                    .collect()
            })
            .collect();
        Patterns {
            num_vars,
            slices,
            prevs,
            ids,
        }
    }

    fn len(&self) -> usize {
        self.prevs.len()
    }

    fn slice(&self, p: usize) -> &[u8] {
        &self.slices[p * self.num_vars..(p + 1) * self.num_vars]
    }

    fn prev(&self, p: usize) -> Option<&[u8]> {
        self.prevs[p].as_deref()
    }

    /// Sums per-slice weights `w[n][t*K + i]` into `[state][pattern]`.
    fn pool(&self, w: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.len()]; k];
        for (ids, wn) in self.ids.iter().zip(w) {
            for (t, &p) in ids.iter().enumerate() {
                for (i, o) in out.iter_mut().enumerate() {
                    o[p] += wn[t * k + i];
                }
            }
        }
        out
    }
}

/// Fits an HMM by EM from `config.restarts` seeded initializations and
/// keeps the one with the highest final training log-likelihood (ties go to
/// the lowest restart index). Sequences are put in a canonical order first,
/// so the result does not depend on dataset order.
pub fn em_fit(data: &ObservationDataset, config: &EmConfig) -> Result<EmFit> {
    config.validate()?;
    let mut seqs: Vec<Sequence> = data.sequences().iter().filter(|s| !s.is_empty()).cloned().collect();
    seqs.sort();
    let m = data.num_vars();
    let patterns = Patterns::new(&seqs, m, config.variant == EmissionVariant::Ccl);
    let shape = (m, data.cardinality());
    let runs: Vec<Result<(HmmModel, RestartSummary)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| run_restart(&seqs, &patterns, shape, config, config.seed.wrapping_add(r as u64)))
        .collect();
    let mut models = Vec::with_capacity(runs.len());
    let mut summaries = Vec::with_capacity(runs.len());
    for run in runs {
        let (model, summary) = run?;
        models.push(model);
        summaries.push(summary);
    }
    let mut best_restart = 0;
    for (r, s) in summaries.iter().enumerate() {
        if s.final_log_likelihood() > summaries[best_restart].final_log_likelihood() {
            best_restart = r;
        }
    }
    Ok(EmFit {
        model: models.swap_remove(best_restart),
        best_restart,
        restarts: summaries,
    })
}

fn run_restart(
    seqs: &[Sequence],
    patterns: &Patterns,
    shape: (usize, usize),
    config: &EmConfig,
    seed: u64,
) -> Result<(HmmModel, RestartSummary)> {
    let k = config.num_states;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = vec![1.0 / k as f64; k];
    let transition: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut row: Vec<f64> = (0..k).map(|_| 1.0 + 0.1 * rng.gen::<f64>()).collect();
            crate::util::normalize_in_place(&mut row);
            row
        })
        .collect();
    let weights: Vec<Vec<f64>> = seqs
        .iter()
        .map(|s| {
            let mut w: Vec<f64> = (0..s.len() * k).map(|_| rng.gen::<f64>()).collect();
            w.chunks_exact_mut(k).for_each(|row| {
                crate::util::normalize_in_place(row);
            });
            w
        })
        .collect();
    let emissions = fit_emissions(patterns, &patterns.pool(&weights, k), shape, config, None)?;
    let mut model = HmmModel::new(initial, transition, emissions)?;
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut log_e = vec![0.0; patterns.len() * k];
        for (p, row) in log_e.chunks_exact_mut(k).enumerate() {
            for (i, c) in model.compiled().iter().enumerate() {
                row[i] = c.log_prob(patterns.slice(p), patterns.prev(p));
            }
        }
        let offsets = scale_log_emissions(&mut log_e, k)?;
        let trans = flat_transition_of(&model);
        let steps: Vec<_> = patterns
            .ids
            .par_iter()
            .map(|ids| expected_counts(&model, &trans, ids, &log_e, &offsets))
            .collect::<Result<_>>()?;
        let ll: f64 = steps.iter().map(|s| s.log_likelihood).sum();
        trace.push(ll);
        if let [.., before, prev, _] = trace[..] {
            let gain = ll - prev;
            if gain < config.tolerance * prev.abs() && gain <= prev - before {
                converged = true;
                break;
            }
        }
        if iterations == config.max_iterations {
            break;
        }
        let mut pi = vec![0.0; k];
        let mut xi = vec![0.0; k * k];
        for s in &steps {
            pi.iter_mut().zip(&s.gamma[..k]).for_each(|(a, g)| *a += g);
            xi.iter_mut().zip(&s.xi_sum).for_each(|(a, x)| *a += x);
        }
        crate::util::normalize_in_place(&mut pi);
        let transition = xi
            .chunks_exact(k)
            .zip(model.transition())
            .map(|(row, old)| {
                let mut row = row.to_vec();
                if crate::util::normalize_in_place(&mut row) > 0.0 {
                    row
                } else {
                    old.clone()
                }
            })
            .collect();
        let gammas: Vec<Vec<f64>> = steps.into_iter().map(|s| s.gamma).collect();
        let emissions = fit_emissions(patterns, &patterns.pool(&gammas, k), shape, config, Some(model.emissions()))?;
        model = HmmModel::new(pi, transition, emissions)?;
        iterations += 1;
    }
    Ok((
        model,
        RestartSummary {
            seed,
            trace,
            iterations,
            converged,
        },
    ))
}

/// M-step for the emissions: `weights[i][p]` is the total weight of
/// pattern `p` for state `i`. A state with no weight and no smoothing keeps
/// its previous emission.
fn fit_emissions(
    patterns: &Patterns,
    weights: &[Vec<f64>],
    (m, b): (usize, usize),
    config: &EmConfig,
    previous: Option<&[Emission]>,
) -> Result<Vec<Emission>> {
    let options = config.structure_options();
    let alpha = config.smoothing;
    let num_patterns = patterns.len();
    weights
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let total: f64 = w.iter().sum();
            if total == 0.0 && alpha == 0.0 {
                return match previous {
                    Some(p) => Ok(p[i].clone()),
                    None => Err(Error::DegenerateTable(format!("state {i} received no weight"))),
                };
            }
            match config.variant {
                EmissionVariant::Ci => {
                    let mut acc = StatsAccumulator::unary_only(m, b);
                    for p in 0..num_patterns {
                        acc.add(patterns.slice(p), None, w[p]);
                    }
                    let probs = stats_to_probabilities(&acc.finish(), alpha)?;
                    Ok(Emission::Ci(IndependentTables {
                        tables: (0..m).map(|v| probs.unary(v).to_vec()).collect(),
                    }))
                }
                EmissionVariant::Cl => {
                    let mut acc = StatsAccumulator::new(m, b, None);
                    for p in 0..num_patterns {
                        acc.add(patterns.slice(p), None, w[p]);
                    }
                    Ok(Emission::Cl(fit_chow_liu_with(&acc.finish(), &options)?))
                }
                EmissionVariant::Ccl => match config.initial_slice {
                    InitialSliceRule::WithinForest => {
                        let mut pooled = StatsAccumulator::new(m, b, Some(m));
                        let mut first = StatsAccumulator::unary_only(m, b);
                        for p in 0..num_patterns {
                            let prev = patterns.prev(p);
                            if prev.is_none() {
                                first.add(patterns.slice(p), None, w[p]);
                            }
                            pooled.add(patterns.slice(p), prev, w[p]);
                        }
                        let (forest, tree) = fit_within_forest(&pooled.finish(), &first.finish(), &options)?;
                        Ok(Emission::Ccl(ConditionalEmission {
                            forest,
                            initial_tree: Some(tree),
                        }))
                    }
                    InitialSliceRule::SeparateTree => {
                        if (0..num_patterns).all(|p| patterns.prev(p).is_none()) {
                            return Err(Error::Dimension("conditional emissions need a sequence of length >= 2".into()));
                        }
                        let mut first = StatsAccumulator::new(m, b, None);
                        let mut later = StatsAccumulator::new(m, b, Some(m));
                        let mut first_total = 0.0;
                        for p in 0..num_patterns {
                            match patterns.prev(p) {
                                None => {
                                    first.add(patterns.slice(p), None, w[p]);
                                    first_total += w[p];
                                }
                                Some(prev) => later.add(patterns.slice(p), Some(prev), w[p]),
                            }
                        }
                        let prev_tree = previous.and_then(|p| match &p[i] {
                            Emission::Ccl(c) => c.initial_tree.clone(),
                            _ => None,
                        });
                        let initial_tree = match prev_tree {
                            Some(t) if first_total == 0.0 && alpha == 0.0 => t,
                            _ => fit_chow_liu_with(&first.finish(), &options)?,
                        };
                        let forest = fit_conditional_chow_liu_with(&later.finish(), &options)?;
                        Ok(Emission::Ccl(ConditionalEmission {
                            forest,
                            initial_tree: Some(initial_tree),
                        }))
                    }
                },
            }
        })
        .collect()
}

/// `P_i(n, t)`: each state's posterior weights normalized to sum to one
/// over every slice of every sequence. Indexed `[state][sequence][time]`.
pub fn normalized_state_weights(posteriors: &[PosteriorSummary]) -> Vec<Vec<Vec<f64>>> {
    let k = posteriors.first().map_or(0, PosteriorSummary::num_states);
    (0..k)
        .map(|i| {
            let total: f64 = posteriors.iter().flat_map(|p| (0..p.len()).map(move |t| p.gamma(t)[i])).sum();
            posteriors
                .iter()
                .map(|p| (0..p.len()).map(|t| p.gamma(t)[i] / total).collect())
                .collect()
        })
        .collect()
}
