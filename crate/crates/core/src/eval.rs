//! Out-of-sample evaluation: scaled log-likelihood, hold-out prediction
//! error, leave-one-sequence-out cross-validation and choice of K.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_cclf_with, fit_independent_chains};
use crate::data::{ObservationDataset, MISSING};
use crate::error::{Error, Result};
use crate::hmm::{em_fit, EmConfig, InitialSliceRule};
use crate::model::{FittedModel, ModelFamily, SequenceModel, TrainingMetadata};
use crate::treemodels::StructureOptions;

/// Everything needed to fit one model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    /// Number of hidden states; set exactly for the HMM families.
    pub num_states: Option<usize>,
    pub smoothing: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub restarts: usize,
    pub initial_slice: InitialSliceRule,
    pub prune_threshold: Option<f64>,
}

impl ModelSpec {
    /// Defaults for `family`; HMM families start with two states.
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec {
            family,
            num_states: family.is_hmm().then_some(2),
            smoothing: 0.1,
            max_iterations: 100,
            tolerance: 1e-6,
            restarts: 10,
            initial_slice: InitialSliceRule::default(),
            prune_threshold: None,
        }
    }

    pub fn hmm(family: ModelFamily, num_states: usize) -> Self {
        ModelSpec {
            num_states: Some(num_states),
            ..ModelSpec::new(family)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.family.is_hmm() != self.num_states.is_some() {
            return Err(Error::Config(format!(
                "K must be given for HMM families and only for them (family {})",
                self.family
            )));
        }
        if !(self.smoothing >= 0.0) || !self.smoothing.is_finite() {
            return Err(Error::Config(format!("smoothing must be finite and >= 0, got {}", self.smoothing)));
        }
        if let Some(cfg) = self.em_config(0) {
            cfg.validate()?;
        }
        Ok(())
    }

    /// EM settings for the HMM families.
    pub fn em_config(&self, seed: u64) -> Option<EmConfig> {
        let variant = self.family.variant()?;
        Some(EmConfig {
            num_states: self.num_states.unwrap_or(0),
            variant,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            restarts: self.restarts,
            seed,
            smoothing: self.smoothing,
            initial_slice: self.initial_slice,
            prune_threshold: self.prune_threshold,
        })
    }

    fn with_states(&self, k: usize) -> Self {
        ModelSpec {
            num_states: Some(k),
            ..self.clone()
        }
    }
}

/// Fits `spec` on `data`. Returns the model and a record of the run.
pub fn fit_model(spec: &ModelSpec, data: &ObservationDataset, seed: u64) -> Result<(FittedModel, TrainingMetadata)> {
    spec.validate()?;
    let options = StructureOptions {
        smoothing: spec.smoothing,
        prune_threshold: spec.prune_threshold,
    };
    let (model, iterations, em, trace) = match spec.family {
        ModelFamily::Chains => (FittedModel::Chains(fit_independent_chains(data, spec.smoothing)?), 0, None, None),
        ModelFamily::Cclf => (FittedModel::Cclf(fit_cclf_with(data, &options)?), 0, None, None),
        _ => {
            let cfg = spec.em_config(seed).expect("HMM family");
            let fit = em_fit(data, &cfg)?;
            let iterations = fit.iterations();
            let trace = fit.trace().to_vec();
            (FittedModel::Hmm(fit.model), iterations, Some(cfg), Some(trace))
        }
    };
    let ll = model.log_likelihood(data)?;
    let training = TrainingMetadata {
        seed,
        smoothing: spec.smoothing,
        iterations,
        final_log_likelihood: ll.total,
        training_sequences: data.num_sequences(),
        observed_cells: ll.observed_cells,
        em,
        trace,
    };
    Ok((model, training))
}

/// Held-out log-likelihood in nats per observed cell.
pub fn scaled_log_likelihood(model: &dyn SequenceModel, heldout: &ObservationDataset) -> Result<f64> {
    let ll = model.log_likelihood(heldout)?;
    if ll.observed_cells == 0 {
        return Err(Error::Dimension("held-out data has no observed cells".into()));
    }
    Ok(ll.per_event())
}

/// A masked cell and its true value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskedCell {
    pub sequence: usize,
    pub time: usize,
    pub var: usize,
    pub truth: u8,
}

/// Marks `round(fraction * observed)` observed cells, drawn uniformly
/// without replacement, as missing. Masked cells come back in dataset order.
pub fn mask_cells(data: &ObservationDataset, fraction: f64, seed: u64) -> Result<(ObservationDataset, Vec<MaskedCell>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Config(format!("hold-out fraction must lie in (0, 1), got {fraction}")));
    }
    let m = data.num_vars();
    let observed: Vec<(usize, usize, usize, u8)> = data
        .sequences()
        .iter()
        .enumerate()
        .flat_map(|(n, s)| {
            s.cells()
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != MISSING)
                .map(move |(i, &c)| (n, i / m, i % m, c))
        })
        .collect();
    if observed.is_empty() {
        return Err(Error::Dimension("no observed cells to hold out".into()));
    }
    let count = ((fraction * observed.len() as f64).round() as usize).clamp(1, observed.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, observed.len(), count).into_vec();
    picked.sort_unstable();
    let mut seqs = data.sequences().to_vec();
    let cells: Vec<MaskedCell> = picked
        .into_iter()
        .map(|i| {
            let (n, t, v, truth) = observed[i];
            seqs[n].set(t, v, None);
            MaskedCell {
                sequence: n,
                time: t,
                var: v,
                truth,
            }
        })
        .collect();
    let mut masked = ObservationDataset::new(m, data.cardinality(), seqs)?;
    if let Some(st) = data.stations() {
        masked = masked.with_stations(st.to_vec())?;
    }
    for v in 0..m {
        let any_left = masked
            .sequences()
            .iter()
            .any(|s| (0..s.len()).any(|t| s.slice(t)[v] != MISSING));
        if !any_left {
            log::warn!("hold-out masking removed every observation of variable {v}");
        }
    }
    Ok((masked, cells))
}

/// Fraction of masked cells whose imputed value differs from the truth.
/// `masked` must be the dataset the cells were removed from.
pub fn prediction_error(model: &dyn SequenceModel, masked: &ObservationDataset, cells: &[MaskedCell]) -> Result<f64> {
    if cells.is_empty() {
        return Err(Error::Dimension("no held-out cells to score".into()));
    }
    let imputed = model.impute(masked)?;
    let mut wrong = 0usize;
    for c in cells {
        let cells = &imputed[c.sequence];
        let cell = cells
            .binary_search_by_key(&(c.time, c.var), |ic| (ic.time, ic.var))
            .ok()
            .map(|i| &cells[i])
            .ok_or_else(|| Error::Dimension(format!("cell ({}, {}, {}) was not imputed", c.sequence, c.time, c.var)))?;
        if cell.prediction != c.truth {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / cells.len() as f64)
}

/// Result of one train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Indices of the scored sequences in the input dataset.
    pub test_sequences: Vec<usize>,
    pub fit_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_log_likelihood: Option<f64>,
    pub observed_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_error: Option<f64>,
    pub heldout_cells: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    LeaveOneSequenceOut,
    Holdout,
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Summary { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub protocol: Protocol,
    pub spec: ModelSpec,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holdout_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retrain_with_missing: Option<bool>,
    pub folds: Vec<FoldResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaled_log_likelihood: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction_error: Option<Summary>,
}

impl EvalReport {
    fn new(
        protocol: Protocol,
        spec: &ModelSpec,
        seed: u64,
        holdout_fraction: Option<f64>,
        retrain_with_missing: Option<bool>,
        folds: Vec<FoldResult>,
    ) -> Self {
        let lls: Vec<f64> = folds.iter().filter_map(|f| f.scaled_log_likelihood).collect();
        let errs: Vec<f64> = folds.iter().filter_map(|f| f.prediction_error).collect();
        EvalReport {
            protocol,
            spec: spec.clone(),
            seed,
            holdout_fraction,
            retrain_with_missing,
            scaled_log_likelihood: Summary::of(&lls),
            prediction_error: Summary::of(&errs),
            folds,
        }
    }

    pub fn mean_scaled_log_likelihood(&self) -> Option<f64> {
        self.scaled_log_likelihood.map(|s| s.mean)
    }

    pub fn mean_prediction_error(&self) -> Option<f64> {
        self.prediction_error.map(|s| s.mean)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One row per fold per metric.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,test_sequences,metric,value\n");
        for f in &self.folds {
            let test: Vec<String> = f.test_sequences.iter().map(usize::to_string).collect();
            let test = test.join(";");
            if let Some(v) = f.scaled_log_likelihood {
                out.push_str(&format!("{},{test},scaled_log_likelihood,{v}\n", f.fold));
            }
            if let Some(v) = f.prediction_error {
                out.push_str(&format!("{},{test},prediction_error,{v}\n", f.fold));
            }
        }
        out
    }
}

/// Seed used to mask the test sequence of fold `fold`.
fn fold_mask_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Removes `holdout_fraction` of observed cells (seeded), fits on the
/// masked data when `retrain_with_missing` and on the full data otherwise,
/// then scores the imputed values of the removed cells.
pub fn holdout_prediction_error(
    spec: &ModelSpec,
    data: &ObservationDataset,
    holdout_fraction: f64,
    retrain_with_missing: bool,
    seed: u64,
) -> Result<EvalReport> {
    spec.validate()?;
    let (masked, cells) = mask_cells(data, holdout_fraction, seed)?;
    let train = if retrain_with_missing { &masked } else { data };
    let (model, _) = fit_model(spec, train, seed)?;
    let error = prediction_error(&model, &masked, &cells)?;
    let fold = FoldResult {
        fold: 0,
        test_sequences: (0..data.num_sequences()).collect(),
        fit_seed: seed,
        mask_seed: Some(seed),
        scaled_log_likelihood: None,
        observed_cells: masked.observed_cells(),
        prediction_error: Some(error),
        heldout_cells: cells.len(),
    };
    Ok(EvalReport::new(
        Protocol::Holdout,
        spec,
        seed,
        Some(holdout_fraction),
        Some(retrain_with_missing),
        vec![fold],
    ))
}

/// Leave-one-sequence-out cross-validation scored by scaled log-likelihood.
pub fn leave_one_season_out_cv(spec: &ModelSpec, data: &ObservationDataset, seed: u64) -> Result<EvalReport> {
    leave_one_season_out_cv_with(spec, data, seed, None)
}

/// As [`leave_one_season_out_cv`]; with `holdout_fraction`, each fold also
/// masks that fraction of its test sequence's cells and scores the model's
/// predictions of them.
pub fn leave_one_season_out_cv_with(
    spec: &ModelSpec,
    data: &ObservationDataset,
    seed: u64,
    holdout_fraction: Option<f64>,
) -> Result<EvalReport> {
    spec.validate()?;
    let n = data.num_sequences();
    if n < 2 {
        return Err(Error::Dimension(format!("cross-validation needs at least 2 sequences, got {n}")));
    }
    let folds = (0..n)
        .into_par_iter()
        .map(|fold| {
            let others: Vec<usize> = (0..n).filter(|&i| i != fold).collect();
            let (model, _) = fit_model(spec, &data.subset(&others)?, seed)?;
            let test = data.subset(&[fold])?;
            let ll = model.log_likelihood(&test)?;
            let mut result = FoldResult {
                fold,
                test_sequences: vec![fold],
                fit_seed: seed,
                mask_seed: None,
                scaled_log_likelihood: (ll.observed_cells > 0).then(|| ll.per_event()),
                observed_cells: ll.observed_cells,
                prediction_error: None,
                heldout_cells: 0,
            };
            if let Some(fraction) = holdout_fraction {
                let mask_seed = fold_mask_seed(seed, fold);
                let (masked, cells) = mask_cells(&test, fraction, mask_seed)?;
                result.mask_seed = Some(mask_seed);
                result.prediction_error = Some(prediction_error(&model, &masked, &cells)?);
                result.heldout_cells = cells.len();
            }
            Ok(result)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        Protocol::LeaveOneSequenceOut,
        spec,
        seed,
        holdout_fraction,
        None,
        folds,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub num_states: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub chosen: usize,
    pub scores: Vec<KScore>,
}

impl KSelection {
    /// `K,mean,std` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,mean_scaled_log_likelihood,std_scaled_log_likelihood\n");
        for s in &self.scores {
            let sum = s.report.scaled_log_likelihood.expect("every fold is scored");
            out.push_str(&format!("{},{},{}\n", s.num_states, sum.mean, sum.std));
        }
        out
    }
}

/// Cross-validates every K in `k_range` and picks the best mean scaled
/// log-likelihood; ties go to the smallest K.
pub fn select_k(spec: &ModelSpec, data: &ObservationDataset, k_range: &[usize], seed: u64) -> Result<KSelection> {
    if !spec.family.is_hmm() {
        return Err(Error::Config(format!("K selection needs an HMM family, got {}", spec.family)));
    }
    let mut ks = k_range.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::Config("the K range is empty".into()));
    }
    let scores = ks
        .into_iter()
        .map(|k| {
            let report = leave_one_season_out_cv(&spec.with_states(k), data, seed)?;
            Ok(KScore { num_states: k, report })
        })
        .collect::<Result<Vec<_>>>()?;
    let means: Vec<f64> = scores
        .iter()
        .map(|s| s.report.mean_scaled_log_likelihood().unwrap_or(f64::NEG_INFINITY))
        .collect();
    Ok(KSelection {
        chosen: scores[first_best(&means)].num_states,
        scores,
    })
}

fn first_best(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::IndependentChainsModel;
    use crate::data::Sequence;
    use rand::Rng;

    fn coin_data(rng: &mut impl Rng, n: usize, len: usize, m: usize) -> ObservationDataset {
        let seqs = (0..n)
            .map(|_| Sequence::new(m, (0..len * m).map(|_| rng.gen_range(0..2u8)).collect()).unwrap())
            .collect();
        ObservationDataset::new(m, 2, seqs).unwrap()
    }

    fn uniform_chains(m: usize) -> IndependentChainsModel {
        IndependentChainsModel::new(2, vec![vec![0.5; 2]; m], vec![vec![0.5; 4]; m]).unwrap()
    }

    #[test]
    fn uniform_model_scores_minus_ln2() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut data = coin_data(&mut rng, 3, 20, 4);
        let mut seqs = data.clone().into_sequences();
        seqs[1].set(3, 2, None);
        data = ObservationDataset::new(4, 2, seqs).unwrap();
        let s = scaled_log_likelihood(&uniform_chains(4), &data).unwrap();
        assert!((s + std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn no_observed_cells_is_an_error() {
        let data = ObservationDataset::new(2, 2, vec![Sequence::new(2, vec![MISSING; 4]).unwrap()]).unwrap();
        assert!(scaled_log_likelihood(&uniform_chains(2), &data).is_err());
    }

    #[test]
    fn scaled_score_recombines_as_weighted_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = coin_data(&mut rng, 6, 15, 3);
        let model = crate::baselines::fit_independent_chains(&data, 0.5).unwrap();
        let a = data.subset(&[0, 1]).unwrap();
        let b = data.subset(&[2, 3, 4, 5]).unwrap();
        let (sa, sb) = (scaled_log_likelihood(&model, &a).unwrap(), scaled_log_likelihood(&model, &b).unwrap());
        let (na, nb) = (a.observed_cells() as f64, b.observed_cells() as f64);
        let all = scaled_log_likelihood(&model, &data).unwrap();
        assert!((all - (sa * na + sb * nb) / (na + nb)).abs() < 1e-12);
    }

    #[test]
    fn masking_is_seeded_and_exact_in_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = coin_data(&mut rng, 4, 10, 3);
        let (m1, c1) = mask_cells(&data, 0.25, 9).unwrap();
        let (m2, c2) = mask_cells(&data, 0.25, 9).unwrap();
        assert_eq!(c1, c2);
        assert_eq!(m1, m2);
        assert_eq!(c1.len(), 30);
        assert_eq!(m1.observed_cells(), 90);
        for c in &c1 {
            assert_eq!(data.sequences()[c.sequence].get(c.time, c.var), Some(c.truth));
            assert_eq!(m1.sequences()[c.sequence].get(c.time, c.var), None);
        }
        assert!(mask_cells(&data, 1.0, 0).is_err());
        assert!(mask_cells(&data, 0.0, 0).is_err());
    }

    #[test]
    fn uniform_coin_errs_half_the_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data = coin_data(&mut rng, 10, 200, 10);
        let (masked, cells) = mask_cells(&data, 0.5, 5).unwrap();
        assert!(cells.len() >= 10_000);
        let err = prediction_error(&uniform_chains(10), &masked, &cells).unwrap();
        let sigma = (0.25 / cells.len() as f64).sqrt();
        assert!((err - 0.5).abs() < 3.0 * sigma, "error {err}");
    }

    #[test]
    fn spec_requires_k_exactly_for_hmms() {
        assert!(ModelSpec::new(ModelFamily::Chains).validate().is_ok());
        assert!(ModelSpec::new(ModelFamily::HmmCl).validate().is_ok());
        let mut s = ModelSpec::new(ModelFamily::Cclf);
        s.num_states = Some(2);
        assert!(s.validate().is_err());
        s = ModelSpec::new(ModelFamily::HmmCi);
        s.num_states = None;
        assert!(s.validate().is_err());
    }

    #[test]
    fn cv_on_identical_sequences_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let one = coin_data(&mut rng, 1, 30, 3).into_sequences().remove(0);
        let data = ObservationDataset::new(3, 2, vec![one.clone(), one]).unwrap();
        for family in ModelFamily::ALL {
            let mut spec = ModelSpec::new(family);
            spec.restarts = 2;
            spec.max_iterations = 20;
            let r = leave_one_season_out_cv_with(&spec, &data, 3, Some(0.2)).unwrap();
            assert_eq!(r.folds.len(), 2);
            assert_eq!(r.folds[0].scaled_log_likelihood, r.folds[1].scaled_log_likelihood);
            assert!(r.prediction_error.unwrap().mean <= 1.0);
        }
    }

    #[test]
    fn cv_needs_two_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let data = coin_data(&mut rng, 1, 10, 2);
        assert!(leave_one_season_out_cv(&ModelSpec::new(ModelFamily::Chains), &data, 0).is_err());
    }

    #[test]
    fn cv_is_deterministic_and_has_one_fold_per_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = coin_data(&mut rng, 5, 25, 3);
        let mut spec = ModelSpec::hmm(ModelFamily::HmmCcl, 2);
        spec.restarts = 2;
        spec.max_iterations = 15;
        let a = leave_one_season_out_cv_with(&spec, &data, 11, Some(0.3)).unwrap();
        let b = leave_one_season_out_cv_with(&spec, &data, 11, Some(0.3)).unwrap();
        assert_eq!(a.folds.len(), 5);
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_csv().lines().count(), 1 + 10);
    }

    #[test]
    fn select_k_single_value_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = coin_data(&mut rng, 3, 20, 2);
        let mut spec = ModelSpec::hmm(ModelFamily::HmmCi, 1);
        spec.restarts = 1;
        spec.max_iterations = 5;
        assert_eq!(select_k(&spec, &data, &[1], 0).unwrap().chosen, 1);
        assert!(select_k(&spec, &data, &[], 0).is_err());
        assert!(select_k(&ModelSpec::new(ModelFamily::Chains), &data, &[1], 0).is_err());
        let sel = select_k(&spec, &data, &[3, 1, 2, 1], 0).unwrap();
        let ks: Vec<usize> = sel.scores.iter().map(|s| s.num_states).collect();
        assert_eq!(ks, [1, 2, 3]);
        assert_eq!(first_best(&[-1.0, -0.5, -0.5]), 1);
        assert_eq!(first_best(&[-0.5, -0.5, -0.7]), 0);
    }

    #[test]
    fn holdout_modes_both_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let data = coin_data(&mut rng, 4, 30, 4);
        for retrain in [true, false] {
            for family in ModelFamily::ALL {
                let mut spec = ModelSpec::new(family);
                spec.restarts = 2;
                spec.max_iterations = 10;
                let r = holdout_prediction_error(&spec, &data, 0.1, retrain, 5).unwrap();
                let e = r.mean_prediction_error().unwrap();
                assert!((0.0..=1.0).contains(&e));
                assert_eq!(r.folds[0].heldout_cells, 48);
            }
        }
    }
}
