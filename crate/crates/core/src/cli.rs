//! Command-line front end.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ObservationDataset;
use crate::error::{Error, Result};
use crate::eval::{self, ModelSpec};
use crate::hmm::{Emission, InitialSliceRule};
use crate::model::{complete_dataset, FittedModel, ModelFamily, ModelFile, SequenceModel};
use crate::treemodels::dot::{conditional_to_dot, tree_to_dot};
use crate::treemodels::TreeDistribution;
use crate::util::write_atomic;

pub const THREADS_ENV: &str = "CCLHMM_THREADS";
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.1;

#[derive(Debug, Parser)]
#[command(name = "cclhmm", version, about = "Tree-structured HMMs for multi-site categorical sequences")]
pub struct Cli {
    /// TOML file with default values for any flag; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model and write it as JSON to --out.
    Fit(RunConfig),
    /// Score a saved model (--model) on a dataset (--data).
    Eval(RunConfig),
    /// Leave-one-sequence-out cross-validation.
    Cv(RunConfig),
    /// Draw sequences from a saved model.
    Simulate(RunConfig),
    /// Fill the missing cells of a dataset with a saved model.
    Impute(RunConfig),
    /// Summarize a saved model and write its structures as DOT files.
    Describe(RunConfig),
    /// Choose the number of hidden states by cross-validation.
    Selectk(RunConfig),
    /// Hold-out prediction error on randomly masked cells.
    Holdout(RunConfig),
}

/// Every setting a command may use. Unset fields fall back to the config
/// file and then to built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dataset in the text format.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Saved model file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// chains, cclf, hmm-ci, hmm-cl or hmm-ccl.
    #[arg(long)]
    pub family: Option<ModelFamily>,
    /// Number of hidden states (default 2).
    #[arg(long)]
    pub k: Option<usize>,
    /// Candidate state counts, as "1-4" or "1,2,5".
    #[arg(long)]
    pub k_range: Option<String>,
    /// Additive smoothing pseudo-count.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Relative log-likelihood tolerance for EM.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// within-forest or separate-tree.
    #[arg(long, value_parser = parse_initial_slice)]
    pub initial_slice: Option<InitialSliceRule>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fraction of observed cells hidden for prediction error (default 0.1).
    #[arg(long)]
    pub holdout_fraction: Option<f64>,
    /// Refit on the masked data before predicting (default true).
    #[arg(long, value_name = "BOOL")]
    pub retrain_missing: Option<bool>,
    /// Number of sequences to simulate (default 1).
    #[arg(long)]
    pub num_sequences: Option<usize>,
    /// Length of each simulated sequence.
    #[arg(long)]
    pub length: Option<usize>,
    /// Station sidecar file used to label DOT nodes.
    #[arg(long)]
    pub stations: Option<PathBuf>,
    /// Primary output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-cell posterior CSV written by impute (default <out>.posterior.csv).
    #[arg(long)]
    pub posterior_out: Option<PathBuf>,
    /// Directory for DOT files written by describe.
    #[arg(long)]
    pub dot_dir: Option<PathBuf>,
}

fn parse_initial_slice(s: &str) -> std::result::Result<InitialSliceRule, String> {
    match s {
        "within-forest" => Ok(InitialSliceRule::WithinForest),
        "separate-tree" => Ok(InitialSliceRule::SeparateTree),
        _ => Err(format!("expected within-forest or separate-tree, found '{s}'")),
    }
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        RunConfig { $($f: $a.$f.or($b.$f)),* }
    };
}

impl RunConfig {
    /// Fields set here win over `fallback`.
    pub fn merged_with(self, fallback: RunConfig) -> RunConfig {
        let a = self;
        let b = fallback;
        merge_fields!(a, b; data, model, family, k, k_range, alpha, max_iter, tol, restarts,
            initial_slice, seed, holdout_fraction, retrain_missing, num_sequences, length,
            stations, out, posterior_out, dot_dir)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_toml(&text)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn require<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T> {
        value.as_ref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
    }

    fn data(&self) -> Result<ObservationDataset> {
        ObservationDataset::load(Self::require(&self.data, "data")?)
    }

    fn model_file(&self) -> Result<ModelFile> {
        ModelFile::load(Self::require(&self.model, "model")?)
    }

    fn out(&self) -> Result<&Path> {
        Ok(Self::require(&self.out, "out")?.as_path())
    }

    fn family(&self) -> Result<ModelFamily> {
        Ok(*Self::require(&self.family, "family")?)
    }

    fn holdout_fraction(&self) -> f64 {
        self.holdout_fraction.unwrap_or(DEFAULT_HOLDOUT_FRACTION)
    }

    /// Model specification; `num_states` overrides `--k` when given.
    pub fn spec(&self, num_states: Option<usize>) -> Result<ModelSpec> {
        let family = self.family()?;
        let mut spec = if family.is_hmm() {
            ModelSpec::hmm(family, num_states.or(self.k).unwrap_or(2))
        } else {
            if self.k.is_some() {
                return Err(Error::Config(format!("--k does not apply to the {family} family")));
            }
            ModelSpec::new(family)
        };
        if let Some(a) = self.alpha {
            spec.smoothing = a;
        }
        if let Some(n) = self.max_iter {
            spec.max_iterations = n;
        }
        if let Some(t) = self.tol {
            spec.tolerance = t;
        }
        if let Some(r) = self.restarts {
            spec.restarts = r;
        }
        if let Some(rule) = self.initial_slice {
            spec.initial_slice = rule;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses "2-5", "2..5", "2..=5" or a comma list.
pub fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("invalid k range '{s}'"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let s = s.trim();
    let split = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .or_else(|| s.split_once('-'));
    let ks: Vec<usize> = match split {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo > hi {
                return Err(bad());
            }
            (lo..=hi).collect()
        }
        None => s.split(',').map(num).collect::<Result<_>>()?,
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(bad());
    }
    Ok(ks)
}

/// Applies `CCLHMM_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, found '{value}'")))?;
    // A pool may already exist when the library is driven in-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                stdout.write_all(text.as_bytes())
            } else {
                stderr.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match configure_threads().and_then(|_| run(&cli, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    let (name, flags) = match &cli.command {
        Command::Fit(c) => ("fit", c),
        Command::Eval(c) => ("eval", c),
        Command::Cv(c) => ("cv", c),
        Command::Simulate(c) => ("simulate", c),
        Command::Impute(c) => ("impute", c),
        Command::Describe(c) => ("describe", c),
        Command::Selectk(c) => ("selectk", c),
        Command::Holdout(c) => ("holdout", c),
    };
    let config = match &cli.config {
        Some(path) => flags.clone().merged_with(RunConfig::load(path)?),
        None => flags.clone(),
    };
    log::info!("running {name}");
    let text = match name {
        "fit" => cmd_fit(&config)?,
        "eval" => cmd_eval(&config)?,
        "cv" => cmd_cv(&config)?,
        "simulate" => cmd_simulate(&config)?,
        "impute" => cmd_impute(&config)?,
        "describe" => cmd_describe(&config)?,
        "selectk" => cmd_selectk(&config)?,
        _ => cmd_holdout(&config)?,
    };
    stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e))
}

pub fn cmd_fit(config: &RunConfig) -> Result<String> {
    let data = config.data()?;
    let spec = config.spec(None)?;
    let out = config.out()?;
    let (model, training) = eval::fit_model(&spec, &data, config.seed())?;
    let mut text = String::new();
    let _ = writeln!(text, "family {}", model.family());
    if let Some(k) = model.num_states() {
        let _ = writeln!(text, "states {k}");
    }
    let _ = writeln!(text, "iterations {}", training.iterations);
    let _ = writeln!(text, "log_likelihood {}", training.final_log_likelihood);
    let _ = writeln!(text, "observed_cells {}", training.observed_cells);
    let _ = writeln!(
        text,
        "scaled_log_likelihood {}",
        training.final_log_likelihood / training.observed_cells as f64
    );
    ModelFile::new(&model, training)?.save(out)?;
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub family: ModelFamily,
    pub num_states: Option<usize>,
    pub sequences: usize,
    pub log_likelihood: f64,
    pub observed_cells: usize,
    pub scaled_log_likelihood: f64,
}

pub fn cmd_eval(config: &RunConfig) -> Result<String> {
    let file = config.model_file()?;
    let model = file.model()?;
    let data = config.data()?;
    let ll = model.log_likelihood(&data)?;
    if ll.observed_cells == 0 {
        return Err(Error::Dimension("dataset has no observed cells".into()));
    }
    let summary = EvalSummary {
        family: model.family(),
        num_states: model.num_states(),
        sequences: data.num_sequences(),
        log_likelihood: ll.total,
        observed_cells: ll.observed_cells,
        scaled_log_likelihood: ll.per_event(),
    };
    if let Some(out) = &config.out {
        write_json(out, &summary)?;
    }
    let mut text = String::new();
    let _ = writeln!(text, "log_likelihood {}", summary.log_likelihood);
    let _ = writeln!(text, "observed_cells {}", summary.observed_cells);
    let _ = writeln!(text, "scaled_log_likelihood {}", summary.scaled_log_likelihood);
    Ok(text)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn csv_path(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

fn report_text(report: &eval::EvalReport) -> String {
    let mut text = String::new();
    for f in &report.folds {
        let _ = write!(text, "fold {}", f.fold);
        if let Some(v) = f.scaled_log_likelihood {
            let _ = write!(text, " scaled_log_likelihood {v}");
        }
        if let Some(v) = f.prediction_error {
            let _ = write!(text, " prediction_error {v}");
        }
        text.push('\n');
    }
    if let Some(s) = &report.scaled_log_likelihood {
        let _ = writeln!(text, "mean_scaled_log_likelihood {} std {}", s.mean, s.std);
    }
    if let Some(s) = &report.prediction_error {
        let _ = writeln!(text, "mean_prediction_error {} std {}", s.mean, s.std);
    }
    text
}

fn save_report(out: &Path, report: &eval::EvalReport) -> Result<()> {
    write_atomic(out, report.to_json()?.as_bytes())?;
    write_atomic(csv_path(out), report.to_csv().as_bytes())
}

pub fn cmd_cv(config: &RunConfig) -> Result<String> {
    let data = config.data()?;
    let spec = config.spec(None)?;
    let out = config.out()?;
    let report = eval::leave_one_season_out_cv_with(&spec, &data, config.seed(), Some(config.holdout_fraction()))?;
    save_report(out, &report)?;
    Ok(report_text(&report))
}

pub fn cmd_holdout(config: &RunConfig) -> Result<String> {
    let data = config.data()?;
    let spec = config.spec(None)?;
    let out = config.out()?;
    let report = eval::holdout_prediction_error(
        &spec,
        &data,
        config.holdout_fraction(),
        config.retrain_missing.unwrap_or(true),
        config.seed(),
    )?;
    save_report(out, &report)?;
    Ok(report_text(&report))
}

pub fn cmd_selectk(config: &RunConfig) -> Result<String> {
    let data = config.data()?;
    let ks = parse_k_range(RunConfig::require(&config.k_range, "k-range")?)?;
    let spec = config.spec(Some(ks[0]))?;
    if !spec.family.is_hmm() {
        return Err(Error::Config("selectk needs an HMM family".into()));
    }
    let out = config.out()?;
    let selection = eval::select_k(&spec, &data, &ks, config.seed())?;
    write_json(out, &selection)?;
    write_atomic(csv_path(out), selection.to_csv().as_bytes())?;
    let mut text = String::new();
    for s in &selection.scores {
        let _ = writeln!(
            text,
            "k {} mean_scaled_log_likelihood {}",
            s.num_states,
            s.report.mean_scaled_log_likelihood().unwrap_or(f64::NAN)
        );
    }
    let _ = writeln!(text, "chosen {}", selection.chosen);
    Ok(text)
}

pub fn cmd_simulate(config: &RunConfig) -> Result<String> {
    let model = config.model_file()?.model()?;
    let out = config.out()?;
    let length = *RunConfig::require(&config.length, "length")?;
    let n = config.num_sequences.unwrap_or(1);
    if length == 0 || n == 0 {
        return Err(Error::Config("--length and --num-sequences must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed());
    let data = model.sample(&vec![length; n], &mut rng)?;
    data.save(out)?;
    Ok(format!("sequences {n}\nlength {length}\n"))
}

pub fn cmd_impute(config: &RunConfig) -> Result<String> {
    let model = config.model_file()?.model()?;
    let data = config.data()?;
    let out = config.out()?;
    let imputed = model.impute(&data)?;
    let completed = complete_dataset(&data, &imputed)?;
    let posterior_path = config
        .posterior_out
        .clone()
        .unwrap_or_else(|| out.with_extension("posterior.csv"));
    let mut csv = String::from("sequence,time,var,prediction");
    for b in 0..model.cardinality() {
        let _ = write!(csv, ",p{b}");
    }
    csv.push('\n');
    let mut count = 0;
    for (n, cells) in imputed.iter().enumerate() {
        for c in cells {
            count += 1;
            let _ = write!(csv, "{n},{},{},{}", c.time, c.var, c.prediction);
            for p in &c.posterior {
                let _ = write!(csv, ",{p}");
            }
            csv.push('\n');
        }
    }
    completed.save(out)?;
    write_atomic(&posterior_path, csv.as_bytes())?;
    Ok(format!("imputed_cells {count}\n"))
}

fn edgeless_tree(tables: Vec<Vec<f64>>, cardinality: usize) -> Result<TreeDistribution> {
    TreeDistribution::new(tables.len(), cardinality, Vec::new(), tables, Vec::new())
}

fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" ")
}

fn describe_tree(text: &mut String, tree: &TreeDistribution) {
    let top = tree.cardinality() - 1;
    let marg: Vec<f64> = (0..tree.num_vars()).map(|v| tree.node_marginal(v)[top]).collect();
    let _ = writeln!(text, "  P(value={top}): {}", fmt_row(&marg));
    for (&(u, v), mi) in tree.edges().iter().zip(tree.edge_mutual_information()) {
        let _ = writeln!(text, "  edge {u}-{v} mi {mi:.4}");
    }
}

/// Structures to render, as (file stem, DOT text).
fn dot_files(model: &FittedModel, labels: Option<&[String]>) -> Result<Vec<(String, String)>> {
    let b = model.cardinality();
    let mut files = Vec::new();
    match model {
        FittedModel::Chains(m) => {
            let tables = (0..m.num_vars()).map(|v| m.initial(v).to_vec()).collect();
            files.push(("initial".into(), tree_to_dot(&edgeless_tree(tables, b)?, labels)));
        }
        FittedModel::Cclf(m) => {
            files.push(("initial".into(), tree_to_dot(m.initial(), labels)));
            files.push(("transition".into(), conditional_to_dot(m.transition(), labels)));
        }
        FittedModel::Hmm(h) => {
            for (i, e) in h.emissions().iter().enumerate() {
                match e {
                    Emission::Ci(t) => {
                        let tree = edgeless_tree(t.tables.clone(), b)?;
                        files.push((format!("state_{i}"), tree_to_dot(&tree, labels)));
                    }
                    Emission::Cl(t) => files.push((format!("state_{i}"), tree_to_dot(t, labels))),
                    Emission::Ccl(c) => {
                        files.push((format!("state_{i}"), conditional_to_dot(&c.forest, labels)));
                        if let Some(t) = &c.initial_tree {
                            files.push((format!("state_{i}_initial"), tree_to_dot(t, labels)));
                        }
                    }
                }
            }
        }
    }
    Ok(files)
}

pub fn cmd_describe(config: &RunConfig) -> Result<String> {
    let file = config.model_file()?;
    let model = file.model()?;
    let b = model.cardinality();
    let top = b - 1;
    let mut text = String::new();
    let _ = writeln!(text, "family {}", model.family());
    let _ = writeln!(text, "variables {}", model.num_vars());
    let _ = writeln!(text, "cardinality {b}");
    let t = &file.training;
    let _ = writeln!(
        text,
        "training seed {} alpha {} iterations {} log_likelihood {}",
        t.seed, t.smoothing, t.iterations, t.final_log_likelihood
    );
    match &model {
        FittedModel::Chains(m) => {
            let marg: Vec<f64> = (0..m.num_vars()).map(|v| m.initial(v)[top]).collect();
            let _ = writeln!(text, "initial P(value={top}): {}", fmt_row(&marg));
        }
        FittedModel::Cclf(m) => {
            let _ = writeln!(text, "initial tree");
            describe_tree(&mut text, m.initial());
            let f = m.transition();
            let (within, cross) = f.edge_mutual_information();
            let _ = writeln!(text, "transition forest ({} components)", f.num_components());
            for (&(u, v), mi) in f.within_edges().iter().zip(within) {
                let _ = writeln!(text, "  edge {u}-{v} mi {mi:.4}");
            }
            for (&(u, v), mi) in f.cross_edges().iter().zip(cross) {
                let _ = writeln!(text, "  prev {u} -> {v} mi {mi:.4}");
            }
        }
        FittedModel::Hmm(h) => {
            let _ = writeln!(text, "states {}", h.num_states());
            let _ = writeln!(text, "initial {}", fmt_row(h.initial()));
            let _ = writeln!(text, "transition");
            for row in h.transition() {
                let _ = writeln!(text, "  {}", fmt_row(row));
            }
            let stationary = h.stationary_distribution();
            for (i, e) in h.emissions().iter().enumerate() {
                let _ = writeln!(text, "state {i} stationary {:.4}", stationary[i]);
                match e {
                    Emission::Ci(t) => {
                        let marg: Vec<f64> = t.tables.iter().map(|p| p[top]).collect();
                        let _ = writeln!(text, "  P(value={top}): {}", fmt_row(&marg));
                    }
                    Emission::Cl(tree) => describe_tree(&mut text, tree),
                    Emission::Ccl(c) => {
                        let f = &c.forest;
                        let marg: Vec<f64> = (0..f.num_x()).map(|v| f.node_marginal(v)[top]).collect();
                        let _ = writeln!(text, "  P(value={top}): {}", fmt_row(&marg));
                        let (within, cross) = f.edge_mutual_information();
                        for (&(u, v), mi) in f.within_edges().iter().zip(within) {
                            let _ = writeln!(text, "  edge {u}-{v} mi {mi:.4}");
                        }
                        for (&(u, v), mi) in f.cross_edges().iter().zip(cross) {
                            let _ = writeln!(text, "  prev {u} -> {v} mi {mi:.4}");
                        }
                    }
                }
            }
        }
    }
    if let Some(dir) = &config.dot_dir {
        let labels = match &config.stations {
            Some(path) => {
                let st = crate::data::load_stations(path)?;
                if st.len() != model.num_vars() {
                    return Err(Error::Dimension(format!(
                        "{} stations for {} variables",
                        st.len(),
                        model.num_vars()
                    )));
                }
                Some(st.into_iter().map(|s| s.id).collect::<Vec<_>>())
            }
            None => None,
        };
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (stem, dot) in dot_files(&model, labels.as_deref())? {
            write_atomic(dir.join(format!("{stem}.dot")), dot.as_bytes())?;
            let _ = writeln!(text, "wrote {stem}.dot");
        }
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_range_forms() {
        assert_eq!(parse_k_range("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_k_range("2..4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_k_range("2..=3").unwrap(), vec![2, 3]);
        assert_eq!(parse_k_range("5, 1,3").unwrap(), vec![5, 1, 3]);
        for bad in ["", "0-2", "3-1", "a", "1,,2"] {
            assert!(parse_k_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn flags_win_over_config_file() {
        let file = RunConfig::from_toml("family = \"hmm-cl\"\nk = 3\nalpha = 0.5\nretrain-missing = false\n").unwrap();
        let flags = RunConfig {
            k: Some(4),
            ..Default::default()
        };
        let c = flags.merged_with(file);
        assert_eq!(c.family, Some(ModelFamily::HmmCl));
        assert_eq!(c.k, Some(4));
        assert_eq!(c.alpha, Some(0.5));
        assert_eq!(c.retrain_missing, Some(false));
        let spec = c.spec(None).unwrap();
        assert_eq!(spec.num_states, Some(4));
        assert_eq!(spec.smoothing, 0.5);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(matches!(RunConfig::from_toml("famly = \"x\""), Err(Error::Config(_))));
        let c = RunConfig::from_toml("initial-slice = \"separate-tree\"\nfamily = \"hmm-ccl\"").unwrap();
        assert_eq!(c.spec(None).unwrap().initial_slice, InitialSliceRule::SeparateTree);
    }

    #[test]
    fn k_only_for_hmms() {
        let c = RunConfig {
            family: Some(ModelFamily::Cclf),
            k: Some(2),
            ..Default::default()
        };
        assert!(matches!(c.spec(None), Err(Error::Config(_))));
        let c = RunConfig::default();
        assert!(matches!(c.spec(None), Err(Error::Config(_))));
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["cclhmm", "nope"], &mut o, &mut e), 1);
        assert_eq!(main_with_args(["cclhmm", "fit", "--k", "x"], &mut o, &mut e), 1);
        assert_eq!(main_with_args(["cclhmm", "fit"], &mut o, &mut e), 1);
        assert_eq!(main_with_args(["cclhmm", "--help"], &mut o, &mut e), 0);
    }
}
