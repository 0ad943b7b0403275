//! Common interface over every fitted model family.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{ChainForestModel, IndependentChainsModel};
use crate::data::{ObservationDataset, Sequence};
use crate::error::{Error, Result};
use crate::hmm::{EmConfig, EmissionVariant, HmmModel};
use crate::util::write_atomic;

/// Total log-likelihood (nats) and the number of observed cells behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLikelihood {
    pub total: f64,
    pub observed_cells: usize,
}

impl LogLikelihood {
    /// Nats per observed cell.
    pub fn per_event(&self) -> f64 {
        self.total / self.observed_cells as f64
    }

    pub(crate) fn add(&mut self, other: LogLikelihood) {
        self.total += other.total;
        self.observed_cells += other.observed_cells;
    }
}

/// Posterior over one missing cell and its most probable value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputedCell {
    pub time: usize,
    pub var: usize,
    pub posterior: Vec<f64>,
    pub prediction: u8,
}

impl ImputedCell {
    pub(crate) fn new(time: usize, var: usize, mut posterior: Vec<f64>) -> Self {
        crate::util::normalize_in_place(&mut posterior);
        let prediction = crate::util::argmax(&posterior) as u8;
        ImputedCell {
            time,
            var,
            posterior,
            prediction,
        }
    }
}

pub trait SequenceModel {
    fn num_vars(&self) -> usize;

    fn cardinality(&self) -> usize;

    /// Log-probability of the observed cells of one sequence.
    fn sequence_log_likelihood(&self, seq: &Sequence) -> Result<f64>;

    /// Posterior of every missing cell of `seq`, in time-then-variable order.
    fn impute_sequence(&self, seq: &Sequence) -> Result<Vec<ImputedCell>>;

    fn sample_sequence(&self, length: usize, rng: &mut dyn rand::RngCore) -> Sequence;

    fn log_likelihood(&self, data: &ObservationDataset) -> Result<LogLikelihood> {
        data.check_compatible(self.num_vars(), self.cardinality())?;
        let mut ll = LogLikelihood {
            total: 0.0,
            observed_cells: 0,
        };
        for seq in data.sequences() {
            if seq.is_empty() {
                continue;
            }
            ll.add(LogLikelihood {
                total: self.sequence_log_likelihood(seq)?,
                observed_cells: seq.observed_cells(),
            });
        }
        Ok(ll)
    }

    fn impute(&self, data: &ObservationDataset) -> Result<Vec<Vec<ImputedCell>>> {
        data.check_compatible(self.num_vars(), self.cardinality())?;
        data.sequences().iter().map(|s| self.impute_sequence(s)).collect()
    }

    fn sample(&self, lengths: &[usize], rng: &mut dyn rand::RngCore) -> Result<ObservationDataset> {
        let seqs = lengths.iter().map(|&t| self.sample_sequence(t, rng)).collect();
        ObservationDataset::new(self.num_vars(), self.cardinality(), seqs)
    }
}

/// Fills every missing cell of `data` with its predicted value.
pub fn complete_dataset(data: &ObservationDataset, imputed: &[Vec<ImputedCell>]) -> Result<ObservationDataset> {
    if imputed.len() != data.num_sequences() {
        return Err(Error::Dimension("imputation does not match the dataset".into()));
    }
    let seqs = data
        .sequences()
        .iter()
        .zip(imputed)
        .map(|(seq, cells)| {
            let mut seq = seq.clone();
            for c in cells {
                seq.set(c.time, c.var, Some(c.prediction));
            }
            seq
        })
        .collect();
    let out = ObservationDataset::new(data.num_vars(), data.cardinality(), seqs)?;
    match data.stations() {
        Some(st) => out.with_stations(st.to_vec()),
        None => Ok(out),
    }
}

pub(crate) fn check_sequence(seq: &Sequence, num_vars: usize, cardinality: usize) -> Result<()> {
    if seq.num_vars() != num_vars {
        return Err(Error::Dimension(format!(
            "sequence has {} variables, model expects {num_vars}",
            seq.num_vars()
        )));
    }
    if let Some(&bad) = seq
        .cells()
        .iter()
        .find(|&&c| c != crate::data::MISSING && c as usize >= cardinality)
    {
        return Err(Error::Dimension(format!("value {bad} outside 0..{cardinality}")));
    }
    Ok(())
}

/// The five model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Chains,
    Cclf,
    HmmCi,
    HmmCl,
    HmmCcl,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Chains,
        ModelFamily::Cclf,
        ModelFamily::HmmCi,
        ModelFamily::HmmCl,
        ModelFamily::HmmCcl,
    ];

    pub fn is_hmm(self) -> bool {
        self.variant().is_some()
    }

    pub fn variant(self) -> Option<EmissionVariant> {
        match self {
            ModelFamily::HmmCi => Some(EmissionVariant::Ci),
            ModelFamily::HmmCl => Some(EmissionVariant::Cl),
            ModelFamily::HmmCcl => Some(EmissionVariant::Ccl),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Chains => "chains",
            ModelFamily::Cclf => "cclf",
            ModelFamily::HmmCi => "hmm-ci",
            ModelFamily::HmmCl => "hmm-cl",
            ModelFamily::HmmCcl => "hmm-ccl",
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model family '{s}'")))
    }
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Chains(IndependentChainsModel),
    Cclf(ChainForestModel),
    Hmm(HmmModel),
}

impl FittedModel {
    pub fn family(&self) -> ModelFamily {
        match self {
            FittedModel::Chains(_) => ModelFamily::Chains,
            FittedModel::Cclf(_) => ModelFamily::Cclf,
            FittedModel::Hmm(h) => match h.variant() {
                EmissionVariant::Ci => ModelFamily::HmmCi,
                EmissionVariant::Cl => ModelFamily::HmmCl,
                EmissionVariant::Ccl => ModelFamily::HmmCcl,
            },
        }
    }

    pub fn num_states(&self) -> Option<usize> {
        match self {
            FittedModel::Hmm(h) => Some(h.num_states()),
            _ => None,
        }
    }

    fn inner(&self) -> &dyn SequenceModel {
        match self {
            FittedModel::Chains(m) => m,
            FittedModel::Cclf(m) => m,
            FittedModel::Hmm(m) => m,
        }
    }

    fn parameters(&self) -> Result<serde_json::Value> {
        Ok(match self {
            FittedModel::Chains(m) => serde_json::to_value(m)?,
            FittedModel::Cclf(m) => serde_json::to_value(m)?,
            FittedModel::Hmm(m) => serde_json::to_value(m)?,
        })
    }

    fn from_parameters(family: ModelFamily, value: serde_json::Value) -> Result<Self> {
        let model = match family {
            ModelFamily::Chains => {
                let m: IndependentChainsModel = serde_json::from_value(value)?;
                m.validate()?;
                FittedModel::Chains(m)
            }
            ModelFamily::Cclf => {
                let m: ChainForestModel = serde_json::from_value(value)?;
                m.validate()?;
                FittedModel::Cclf(m)
            }
            _ => FittedModel::Hmm(serde_json::from_value(value)?),
        };
        if model.family() != family {
            return Err(Error::Model(format!("parameters describe a {} model, not {family}", model.family())));
        }
        Ok(model)
    }
}

impl SequenceModel for FittedModel {
    fn num_vars(&self) -> usize {
        self.inner().num_vars()
    }

    fn cardinality(&self) -> usize {
        self.inner().cardinality()
    }

    fn sequence_log_likelihood(&self, seq: &Sequence) -> Result<f64> {
        self.inner().sequence_log_likelihood(seq)
    }

    fn impute_sequence(&self, seq: &Sequence) -> Result<Vec<ImputedCell>> {
        self.inner().impute_sequence(seq)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn rand::RngCore) -> Sequence {
        self.inner().sample_sequence(length, rng)
    }
}

/// How a model was trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub smoothing: f64,
    pub iterations: usize,
    /// Total training log-likelihood (nats) of the saved parameters.
    pub final_log_likelihood: f64,
    pub training_sequences: usize,
    pub observed_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<EmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<f64>>,
}

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub family: ModelFamily,
    pub num_vars: usize,
    pub cardinality: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_states: Option<usize>,
    pub parameters: serde_json::Value,
    pub training: TrainingMetadata,
}

impl ModelFile {
    pub fn new(model: &FittedModel, training: TrainingMetadata) -> Result<Self> {
        Ok(ModelFile {
            schema_version: SCHEMA_VERSION,
            family: model.family(),
            num_vars: model.num_vars(),
            cardinality: model.cardinality(),
            num_states: model.num_states(),
            parameters: model.parameters()?,
            training,
        })
    }

    /// Rebuilds and validates the model.
    pub fn model(&self) -> Result<FittedModel> {
        let model = FittedModel::from_parameters(self.family, self.parameters.clone())?;
        if model.num_vars() != self.num_vars
            || model.cardinality() != self.cardinality
            || model.num_states() != self.num_states
        {
            return Err(Error::Model("header dimensions disagree with the parameters".into()));
        }
        Ok(model)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Model("model file has no schema_version".into()))?;
        if found != SCHEMA_VERSION as u64 {
            return Err(Error::SchemaVersion {
                found: found as u32,
                expected: SCHEMA_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_value(value)?;
        file.model()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ModelFile::from_json(&text)
    }
}
