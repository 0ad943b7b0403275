//! Hidden Markov models whose per-state emissions are independent tables,
//! Chow-Liu trees, or conditional Chow-Liu forests on the previous slice.

mod em;
mod inference;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use em::{em_fit, normalized_state_weights, EmConfig, EmFit, RestartSummary};
pub use inference::{forward_backward, posterior_decode, viterbi, PosteriorSummary};

use crate::data::{Sequence, MISSING};
use crate::error::{Error, Result};
use crate::treemodels::rooted::RootedForest;
use crate::treemodels::tree::check_evidence;
use crate::treemodels::{ConditionalForestDistribution, TreeDistribution};
use crate::util::{is_distribution, sample_categorical};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmissionVariant {
    Ci,
    Cl,
    Ccl,
}

impl std::fmt::Display for EmissionVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmissionVariant::Ci => "ci",
            EmissionVariant::Cl => "cl",
            EmissionVariant::Ccl => "ccl",
        })
    }
}

/// How a conditional-forest state emits the first slice of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSliceRule {
    /// Drop the cross edges and use the within-slice forest, with
    /// first-slice marginals at the anchored nodes.
    #[default]
    WithinForest,
    /// Fit a separate Chow-Liu tree per state on first slices.
    SeparateTree,
}

/// Per-variable tables `P(R^j = b | state)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentTables {
    pub tables: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalEmission {
    pub forest: ConditionalForestDistribution,
    /// Emits first slices when present. Otherwise first slices use the
    /// forest without its cross edges.
    pub initial_tree: Option<TreeDistribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Emission {
    Ci(IndependentTables),
    Cl(TreeDistribution),
    Ccl(ConditionalEmission),
}

impl Emission {
    pub fn variant(&self) -> EmissionVariant {
        match self {
            Emission::Ci(_) => EmissionVariant::Ci,
            Emission::Cl(_) => EmissionVariant::Cl,
            Emission::Ccl(_) => EmissionVariant::Ccl,
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            Emission::Ci(t) => (t.tables.len(), t.tables.first().map_or(0, Vec::len)),
            Emission::Cl(t) => (t.num_vars(), t.cardinality()),
            Emission::Ccl(c) => (c.forest.num_x(), c.forest.cardinality()),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Emission::Ci(t) => {
                let b = t.tables.first().map_or(0, Vec::len);
                if t.tables.is_empty() || b < 2 {
                    return Err(Error::Model("independent tables need M >= 1 and B >= 2".into()));
                }
                for (v, p) in t.tables.iter().enumerate() {
                    if p.len() != b || !is_distribution(p, 1e-9) {
                        return Err(Error::Model(format!("table of variable {v} is not a distribution")));
                    }
                }
                Ok(())
            }
            Emission::Cl(t) => t.validate(),
            Emission::Ccl(c) => {
                c.forest.validate()?;
                if c.forest.num_y() != c.forest.num_x() {
                    return Err(Error::Model("conditional emission must condition on a full previous slice".into()));
                }
                if let Some(t) = &c.initial_tree {
                    t.validate()?;
                    if t.num_vars() != c.forest.num_x() || t.cardinality() != c.forest.cardinality() {
                        return Err(Error::Model("initial tree shape differs from the forest".into()));
                    }
                }
                Ok(())
            }
        }
    }

    fn compile(&self) -> Compiled {
        match self {
            Emission::Ci(t) => Compiled::Ci {
                b: t.tables[0].len(),
                tables: t.tables.concat(),
                log_tables: t.tables.iter().flatten().map(|p| p.ln()).collect(),
            },
            Emission::Cl(t) => Compiled::Tree(t.rooted()),
            Emission::Ccl(c) => Compiled::Ccl {
                forest: c.forest.rooted(),
                initial: c.initial_tree.as_ref().map(TreeDistribution::rooted),
            },
        }
    }
}

/// Emission in the form used by inference.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Ci {
        b: usize,
        tables: Vec<f64>,
        log_tables: Vec<f64>,
    },
    Tree(RootedForest),
    Ccl {
        forest: RootedForest,
        initial: Option<RootedForest>,
    },
}

impl Compiled {
    /// Log-probability of the observed cells of `slice`; `prev` is `None`
    /// for the first slice of a sequence.
    pub(crate) fn log_prob(&self, slice: &[u8], prev: Option<&[u8]>) -> f64 {
        match self {
            Compiled::Ci { b, log_tables, .. } => slice
                .iter()
                .enumerate()
                .filter(|(_, &x)| x != MISSING)
                .map(|(v, &x)| log_tables[v * b + x as usize])
                .sum(),
            Compiled::Tree(t) => t.log_evidence(slice, None),
            Compiled::Ccl { forest, initial } => match (prev, initial) {
                (None, Some(tree)) => tree.log_evidence(slice, None),
                _ => forest.log_evidence(slice, prev),
            },
        }
    }

    /// Posterior marginals (row-major `M x B`) of the slice given its
    /// observed cells.
    pub(crate) fn posterior(&self, slice: &[u8], prev: Option<&[u8]>) -> Vec<f64> {
        match self {
            Compiled::Ci { b, tables, .. } => {
                let mut out = tables.clone();
                for (v, &x) in slice.iter().enumerate() {
                    if x != MISSING {
                        let row = &mut out[v * b..(v + 1) * b];
                        row.iter_mut().enumerate().for_each(|(k, p)| *p = if k == x as usize { 1.0 } else { 0.0 });
                    }
                }
                out
            }
            Compiled::Tree(t) => t.posterior(slice, None).1,
            Compiled::Ccl { forest, initial } => match (prev, initial) {
                (None, Some(tree)) => tree.posterior(slice, None).1,
                _ => forest.posterior(slice, prev).1,
            },
        }
    }

    pub(crate) fn sample(&self, rng: &mut dyn RngCore, prev: Option<&[u8]>) -> Vec<u8> {
        match self {
            Compiled::Ci { b, tables, .. } => tables
                .chunks_exact(*b)
                .map(|row| sample_categorical(row, rng) as u8)
                .collect(),
            Compiled::Tree(t) => t.sample(rng, None),
            Compiled::Ccl { forest, initial } => match (prev, initial) {
                (None, Some(tree)) => tree.sample(rng, None),
                _ => forest.sample(rng, prev),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HmmParts {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emissions: Vec<Emission>,
}

/// Hidden Markov model with `K` states. `transition[i][j]` is the
/// probability of moving from state `i` to state `j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HmmParts", into = "HmmParts")]
pub struct HmmModel {
    initial: Vec<f64>,
    transition: Vec<Vec<f64>>,
    emissions: Vec<Emission>,
    num_vars: usize,
    cardinality: usize,
    compiled: Vec<Compiled>,
}

impl PartialEq for HmmModel {
    fn eq(&self, other: &Self) -> bool {
        self.initial == other.initial && self.transition == other.transition && self.emissions == other.emissions
    }
}

impl TryFrom<HmmParts> for HmmModel {
    type Error = Error;

    fn try_from(p: HmmParts) -> Result<Self> {
        HmmModel::new(p.initial, p.transition, p.emissions)
    }
}

impl From<HmmModel> for HmmParts {
    fn from(m: HmmModel) -> Self {
        HmmParts {
            initial: m.initial,
            transition: m.transition,
            emissions: m.emissions,
        }
    }
}

impl HmmModel {
    pub fn new(initial: Vec<f64>, transition: Vec<Vec<f64>>, emissions: Vec<Emission>) -> Result<Self> {
        let k = initial.len();
        if k == 0 || transition.len() != k || emissions.len() != k {
            return Err(Error::Model("initial, transition and emissions must all have K >= 1 entries".into()));
        }
        if !is_distribution(&initial, 1e-9) {
            return Err(Error::Model("initial state distribution does not sum to one".into()));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != k || !is_distribution(row, 1e-9) {
                return Err(Error::Model(format!("transition row {i} is not a distribution")));
            }
        }
        let variant = emissions[0].variant();
        let (m, b) = emissions[0].shape();
        for e in &emissions {
            if e.variant() != variant || e.shape() != (m, b) {
                return Err(Error::Model("emissions differ in variant or shape".into()));
            }
            e.validate()?;
        }
        let compiled = emissions.iter().map(Emission::compile).collect();
        Ok(HmmModel {
            initial,
            transition,
            emissions,
            num_vars: m,
            cardinality: b,
            compiled,
        })
    }

    pub fn num_states(&self) -> usize {
        self.initial.len()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn variant(&self) -> EmissionVariant {
        self.emissions[0].variant()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn emissions(&self) -> &[Emission] {
        &self.emissions
    }

    pub(crate) fn compiled(&self) -> &[Compiled] {
        &self.compiled
    }

    /// `log P(r_t | S_t = state, r_{t-1})` over the observed cells of
    /// `slice`; pass `prev = None` for the first slice of a sequence.
    pub fn emission_log_prob(&self, state: usize, slice: &[u8], prev: Option<&[u8]>) -> Result<f64> {
        if state >= self.num_states() {
            return Err(Error::Dimension(format!("state {state} out of range")));
        }
        check_evidence(slice, self.num_vars, self.cardinality)?;
        if let Some(p) = prev {
            check_evidence(p, self.num_vars, self.cardinality)?;
        }
        Ok(self.compiled[state].log_prob(slice, prev))
    }

    /// Stationary distribution of the transition matrix by power iteration.
    pub fn stationary_distribution(&self) -> Vec<f64> {
        let k = self.num_states();
        let mut p = vec![1.0 / k as f64; k];
        for _ in 0..100_000 {
            let mut next = vec![0.0; k];
            for (i, pi) in p.iter().enumerate() {
                for (n, g) in next.iter_mut().zip(&self.transition[i]) {
                    *n += pi * g;
                }
            }
            let diff: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
            p = next;
            if diff < 1e-15 {
                break;
            }
        }
        p
    }

    /// Samples one sequence together with its hidden state path.
    pub fn sample_with_states(&self, length: usize, rng: &mut dyn RngCore) -> (Sequence, Vec<usize>) {
        let m = self.num_vars;
        let mut cells: Vec<u8> = Vec::with_capacity(length * m);
        let mut states: Vec<usize> = Vec::with_capacity(length);
        for t in 0..length {
            let s = if t == 0 {
                sample_categorical(&self.initial, rng)
            } else {
                sample_categorical(&self.transition[states[t - 1]][..], rng)
            };
            states.push(s);
            let prev = (t > 0).then(|| &cells[(t - 1) * m..t * m]);
            let x = self.compiled[s].sample(rng, prev);
            cells.extend(x);
        }
        (Sequence::new(m, cells).expect("consistent shape"), states)
    }
}
