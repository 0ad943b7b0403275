//! Discrete vector sequence data and the weighted sufficient statistics that
//! every structure learner in this crate consumes.
//!
//! A dataset holds `N` sequences of `M`-variate slices with values in
//! `0..B`; any cell may be [`MISSING`]. [`WeightedPairStats`] carries the
//! weighted unary, within-slice pairwise and cross-slice pairwise count
//! tables. Cells or pairs touching a missing value are skipped and each
//! table keeps its own total.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::write_atomic;

/// Sentinel stored in a cell whose value was not observed.
pub const MISSING: u8 = u8::MAX;

/// Largest supported cardinality (values must stay below [`MISSING`]).
pub const MAX_CARDINALITY: usize = MISSING as usize;

/// One sequence: `len()` slices of `num_vars()` cells stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sequence {
    num_vars: usize,
    cells: Vec<u8>,
}

impl Sequence {
    pub fn new(num_vars: usize, cells: Vec<u8>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Dimension("sequence needs at least one variable".into()));
        }
        if !cells.len().is_multiple_of(num_vars) {
            return Err(Error::Dimension(format!(
                "{} cells do not form rows of {} variables",
                cells.len(),
                num_vars
            )));
        }
        Ok(Sequence { num_vars, cells })
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let num_vars = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut cells = Vec::with_capacity(num_vars * rows.len());
        for (t, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != num_vars {
                return Err(Error::Dimension(format!(
                    "row {t} has {} values, expected {num_vars}",
                    row.len()
                )));
            }
            cells.extend_from_slice(row);
        }
        Sequence::new(num_vars, cells)
    }

    /// Number of time slices.
    pub fn len(&self) -> usize {
        self.cells.len() / self.num_vars
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn slice(&self, t: usize) -> &[u8] {
        &self.cells[t * self.num_vars..(t + 1) * self.num_vars]
    }

    pub fn slices(&self) -> std::slice::ChunksExact<'_, u8> {
        self.cells.chunks_exact(self.num_vars)
    }

    /// Value at `(t, var)`, `None` when missing.
    pub fn get(&self, t: usize, var: usize) -> Option<u8> {
        let v = self.cells[t * self.num_vars + var];
        (v != MISSING).then_some(v)
    }

    pub fn set(&mut self, t: usize, var: usize, value: Option<u8>) {
        self.cells[t * self.num_vars + var] = value.unwrap_or(MISSING);
    }

    pub fn observed_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c != MISSING).count()
    }

    pub fn has_missing(&self) -> bool {
        self.cells.contains(&MISSING)
    }
}

/// Optional per-variable station metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub id: String,
    pub latitude: f64,
    pub longitude: f64,
}

/// A validated set of sequences sharing `M` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDataset {
    num_vars: usize,
    cardinality: usize,
    sequences: Vec<Sequence>,
    stations: Option<Vec<Station>>,
}

impl ObservationDataset {
    pub fn new(num_vars: usize, cardinality: usize, sequences: Vec<Sequence>) -> Result<Self> {
        if num_vars == 0 {
            return Err(Error::Dimension("number of variables must be positive".into()));
        }
        if !(2..=MAX_CARDINALITY - 1).contains(&cardinality) {
            return Err(Error::Dimension(format!(
                "cardinality {cardinality} must lie in 2..{}",
                MAX_CARDINALITY - 1
            )));
        }
        if sequences.iter().all(|s| s.is_empty()) {
            return Err(Error::EmptyDataset);
        }
        for (n, seq) in sequences.iter().enumerate() {
            if seq.num_vars() != num_vars {
                return Err(Error::Dimension(format!(
                    "sequence {n} has {} variables, expected {num_vars}",
                    seq.num_vars()
                )));
            }
            if let Some(&bad) = seq
                .cells()
                .iter()
                .find(|&&c| c != MISSING && c as usize >= cardinality)
            {
                return Err(Error::Dimension(format!(
                    "sequence {n} holds value {bad} outside 0..{cardinality}"
                )));
            }
        }
        Ok(ObservationDataset {
            num_vars,
            cardinality,
            sequences,
            stations: None,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn num_sequences(&self) -> usize {
        self.sequences.len()
    }

    pub fn into_sequences(self) -> Vec<Sequence> {
        self.sequences
    }

    pub fn stations(&self) -> Option<&[Station]> {
        self.stations.as_deref()
    }

    pub fn with_stations(mut self, stations: Vec<Station>) -> Result<Self> {
        if stations.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "{} stations for {} variables",
                stations.len(),
                self.num_vars
            )));
        }
        self.stations = Some(stations);
        Ok(self)
    }

    pub fn total_slices(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }

    pub fn observed_cells(&self) -> usize {
        self.sequences.iter().map(Sequence::observed_cells).sum()
    }

    /// Dataset made of the sequences at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let seqs = indices.iter().map(|&i| self.sequences[i].clone()).collect();
        let mut out = ObservationDataset::new(self.num_vars, self.cardinality, seqs)?;
        out.stations = self.stations.clone();
        Ok(out)
    }

    pub fn check_compatible(&self, num_vars: usize, cardinality: usize) -> Result<()> {
        if self.num_vars != num_vars || self.cardinality != cardinality {
            return Err(Error::Dimension(format!(
                "dataset has M={} B={}, model expects M={num_vars} B={cardinality}",
                self.num_vars, self.cardinality
            )));
        }
        Ok(())
    }

    /// Parses the text format: a header line `M B`, then one line of `M`
    /// tokens per slice (`?` marks a missing cell), sequences separated by
    /// blank lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (num_vars, cardinality) = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(Error::EmptyDataset);
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let header: Vec<&str> = line.split_whitespace().collect();
            let bad_header = || Error::Parse {
                line: idx + 1,
                message: format!("expected header \"M B\", found {line:?}"),
            };
            if header.len() != 2 {
                return Err(bad_header());
            }
            let m: usize = header[0].parse().map_err(|_| bad_header())?;
            let b: usize = header[1].parse().map_err(|_| bad_header())?;
            if m == 0 || !(2..MAX_CARDINALITY).contains(&b) {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("header needs M >= 1 and 2 <= B < {MAX_CARDINALITY}"),
                });
            }
            break (m, b);
        };

        let mut sequences = Vec::new();
        let mut current: Vec<u8> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                if !current.is_empty() {
                    sequences.push(Sequence::new(num_vars, std::mem::take(&mut current))?);
                }
                continue;
            }
            let mut count = 0;
            for token in line.split_whitespace() {
                count += 1;
                if count > num_vars {
                    break;
                }
                if token == "?" {
                    current.push(MISSING);
                    continue;
                }
                let value: i64 = token.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid token {token:?}"),
                })?;
                if value < 0 || value >= cardinality as i64 {
                    return Err(Error::MalformedValue {
                        line: line_no,
                        value: token.to_string(),
                        cardinality,
                    });
                }
                current.push(value as u8);
            }
            if count != num_vars {
                return Err(Error::Dimension(format!(
                    "line {line_no}: expected {num_vars} values, found {}",
                    line.split_whitespace().count()
                )));
            }
        }
        if !current.is_empty() {
            sequences.push(Sequence::new(num_vars, current)?);
        }
        ObservationDataset::new(num_vars, cardinality, sequences)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Serializes to the text format accepted by [`ObservationDataset::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.observed_cells() * 2 + 16);
        let _ = writeln!(out, "{} {}", self.num_vars, self.cardinality);
        for (n, seq) in self.sequences.iter().enumerate() {
            if n > 0 {
                out.push('\n');
            }
            for slice in seq.slices() {
                for (j, &cell) in slice.iter().enumerate() {
                    if j > 0 {
                        out.push(' ');
                    }
                    if cell == MISSING {
                        out.push('?');
                    } else {
                        let _ = write!(out, "{cell}");
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, self.to_text().as_bytes())
    }
}

/// Parses the station sidecar file: one `id latitude longitude` line per variable.
pub fn parse_stations(text: &str) -> Result<Vec<Station>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let err = || Error::Parse {
            line: idx + 1,
            message: format!("expected \"id latitude longitude\", found {line:?}"),
        };
        if parts.len() != 3 {
            return Err(err());
        }
        out.push(Station {
            id: parts[0].to_string(),
            latitude: parts[1].parse().map_err(|_| err())?,
            longitude: parts[2].parse().map_err(|_| err())?,
        });
    }
    Ok(out)
}

pub fn load_stations(path: impl AsRef<Path>) -> Result<Vec<Station>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stations(&text)
}

/// Index of the unordered pair `u < v` among the `M(M-1)/2` pairs.
#[inline]
pub fn pair_index(num_vars: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < num_vars);
    u * (2 * num_vars - u - 1) / 2 + (v - u - 1)
}

/// Which time steps of each sequence contribute to the within-slice tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeRange {
    All,
    /// Only the first slice of every sequence.
    First,
    /// Every slice except the first.
    AfterFirst,
}

impl TimeRange {
    fn contains(self, t: usize) -> bool {
        match self {
            TimeRange::All => true,
            TimeRange::First => t == 0,
            TimeRange::AfterFirst => t > 0,
        }
    }
}

/// Weighted count tables.
///
/// Layouts (row-major, `B = cardinality`):
/// * `unary[v*B + b]`
/// * `pair[pair_index(u, v)*B*B + a*B + b]` for `u < v`, `a` the value of `u`
/// * `cross[(u*M + v)*B*B + a*B + b]`, `a` the value of previous-slice
///   variable `u`, `b` the value of current-slice variable `v`
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPairStats {
    num_vars: usize,
    num_prev: usize,
    cardinality: usize,
    has_pairs: bool,
    unary: Vec<f64>,
    pair: Vec<f64>,
    cross: Vec<f64>,
    full_weight: f64,
    full_cross_weight: f64,
    unary_partial: Vec<f64>,
    pair_partial: Vec<f64>,
    cross_partial: Vec<f64>,
}

impl WeightedPairStats {
    fn zeros(num_vars: usize, cardinality: usize, num_prev: usize, has_pairs: bool) -> Self {
        let bb = cardinality * cardinality;
        let npairs = if has_pairs { num_vars * num_vars.saturating_sub(1) / 2 } else { 0 };
        WeightedPairStats {
            num_vars,
            num_prev,
            cardinality,
            has_pairs,
            unary: vec![0.0; num_vars * cardinality],
            pair: vec![0.0; npairs * bb],
            cross: vec![0.0; num_prev * num_vars * bb],
            full_weight: 0.0,
            full_cross_weight: 0.0,
            unary_partial: vec![0.0; num_vars],
            pair_partial: vec![0.0; npairs],
            cross_partial: vec![0.0; num_prev * num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Number of conditioning (previous-slice) variables; zero when no
    /// cross tables were collected.
    pub fn num_prev(&self) -> usize {
        self.num_prev
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn has_pairs(&self) -> bool {
        self.has_pairs
    }

    pub fn has_cross(&self) -> bool {
        self.num_prev > 0
    }

    pub fn unary(&self, v: usize) -> &[f64] {
        let b = self.cardinality;
        &self.unary[v * b..(v + 1) * b]
    }

    /// Joint counts of `(u, v)` for `u < v`, indexed `[value of u][value of v]`.
    pub fn pair(&self, u: usize, v: usize) -> &[f64] {
        assert!(self.has_pairs, "pair tables were not collected");
        let bb = self.cardinality * self.cardinality;
        let p = pair_index(self.num_vars, u, v);
        &self.pair[p * bb..(p + 1) * bb]
    }

    /// Joint counts of previous-slice `u` and current-slice `v`, indexed
    /// `[value of u][value of v]`.
    pub fn cross(&self, u: usize, v: usize) -> &[f64] {
        assert!(u < self.num_prev, "cross tables were not collected");
        let bb = self.cardinality * self.cardinality;
        let i = u * self.num_vars + v;
        &self.cross[i * bb..(i + 1) * bb]
    }

    pub fn unary_total(&self, v: usize) -> f64 {
        self.full_weight + self.unary_partial[v]
    }

    pub fn pair_total(&self, u: usize, v: usize) -> f64 {
        self.full_weight + self.pair_partial[pair_index(self.num_vars, u, v)]
    }

    pub fn cross_total(&self, u: usize, v: usize) -> f64 {
        self.full_cross_weight + self.cross_partial[u * self.num_vars + v]
    }

    /// Elementwise sum; both operands must have the same shape.
    pub fn merge(&mut self, other: &WeightedPairStats) -> Result<()> {
        if self.num_vars != other.num_vars
            || self.num_prev != other.num_prev
            || self.cardinality != other.cardinality
            || self.has_pairs != other.has_pairs
        {
            return Err(Error::Dimension("cannot merge statistics of different shapes".into()));
        }
        fn add(a: &mut [f64], b: &[f64]) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        add(&mut self.unary, &other.unary);
        add(&mut self.pair, &other.pair);
        add(&mut self.cross, &other.cross);
        add(&mut self.unary_partial, &other.unary_partial);
        add(&mut self.pair_partial, &other.pair_partial);
        add(&mut self.cross_partial, &other.cross_partial);
        self.full_weight += other.full_weight;
        self.full_cross_weight += other.full_cross_weight;
        Ok(())
    }
}

/// Incremental builder for [`WeightedPairStats`].
///
/// Each call to [`StatsAccumulator::add`] contributes one slice (and,
/// when cross tables are enabled, the slice that preceded it).
#[derive(Debug, Clone)]
pub struct StatsAccumulator {
    stats: WeightedPairStats,
}

impl StatsAccumulator {
    /// Accumulator for unary, pairwise and (when `num_prev` is set)
    /// cross-slice tables. `num_prev` may differ from `num_vars`.
    pub fn new(num_vars: usize, cardinality: usize, num_prev: Option<usize>) -> Self {
        StatsAccumulator {
            stats: WeightedPairStats::zeros(num_vars, cardinality, num_prev.unwrap_or(0), true),
        }
    }

    /// Accumulator that only tracks unary counts.
    pub fn unary_only(num_vars: usize, cardinality: usize) -> Self {
        StatsAccumulator {
            stats: WeightedPairStats::zeros(num_vars, cardinality, 0, false),
        }
    }

    pub fn add(&mut self, slice: &[u8], prev: Option<&[u8]>, weight: f64) {
        let s = &mut self.stats;
        debug_assert_eq!(slice.len(), s.num_vars);
        if weight == 0.0 {
            return;
        }
        let m = s.num_vars;
        let b = s.cardinality;
        let bb = b * b;
        let complete = !slice.contains(&MISSING);
        if complete {
            s.full_weight += weight;
            let mut pair = s.pair.chunks_exact_mut(bb);
            for (u, &a) in slice.iter().enumerate() {
                s.unary[u * b + a as usize] += weight;
                if s.has_pairs {
                    let offset = a as usize * b;
                    for (&c, cell) in slice[u + 1..].iter().zip(pair.by_ref()) {
                        cell[offset + c as usize] += weight;
                    }
                }
            }
        }
        for (u, &a) in slice.iter().enumerate() {
            if complete {
                break;
            }
            if a == MISSING {
                continue;
            }
            s.unary[u * b + a as usize] += weight;
            if !complete {
                s.unary_partial[u] += weight;
            }
            if !s.has_pairs || u + 1 == m {
                continue;
            }
            let first = pair_index(m, u, u + 1);
            let base = &mut s.pair[first * bb..(first + m - u - 1) * bb];
            let offset = a as usize * b;
            for (k, &c) in slice[u + 1..].iter().enumerate() {
                if c != MISSING {
                    base[k * bb + offset + c as usize] += weight;
                    if !complete {
                        s.pair_partial[first + k] += weight;
                    }
                }
            }
        }
        if s.num_prev == 0 {
            return;
        }
        let Some(prev) = prev else { return };
        debug_assert_eq!(prev.len(), s.num_prev);
        let cross_complete = complete && !prev.contains(&MISSING);
        if cross_complete {
            s.full_cross_weight += weight;
        }
        for (u, &a) in prev.iter().enumerate() {
            if a == MISSING {
                continue;
            }
            let row = &mut s.cross[u * m * bb..(u + 1) * m * bb];
            let offset = a as usize * b;
            for (v, &c) in slice.iter().enumerate() {
                if c != MISSING {
                    row[v * bb + offset + c as usize] += weight;
                    if !cross_complete {
                        s.cross_partial[u * m + v] += weight;
                    }
                }
            }
        }
    }

    pub fn finish(self) -> WeightedPairStats {
        self.stats
    }
}

/// Accumulates weighted statistics over a dataset.
///
/// `weights[n][t]` weights slice `t` of sequence `n` (uniform 1 when `None`).
/// Within-slice tables use the slices selected by `range`; cross tables
/// (when `include_cross`) pair slice `t-1` with slice `t` for every `t >= 1`
/// that lies in `range`.
pub fn accumulate_stats(
    data: &ObservationDataset,
    weights: Option<&[Vec<f64>]>,
    include_cross: bool,
    range: TimeRange,
) -> Result<WeightedPairStats> {
    if let Some(w) = weights {
        if w.len() != data.num_sequences() {
            return Err(Error::Weights(format!(
                "{} weight rows for {} sequences",
                w.len(),
                data.num_sequences()
            )));
        }
        for (n, (row, seq)) in w.iter().zip(data.sequences()).enumerate() {
            if row.len() != seq.len() {
                return Err(Error::Weights(format!(
                    "sequence {n} has {} slices but {} weights",
                    seq.len(),
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
                return Err(Error::Weights(format!("sequence {n} has invalid weight {bad}")));
            }
        }
    }
    let m = data.num_vars();
    let mut acc = StatsAccumulator::new(m, data.cardinality(), include_cross.then_some(m));
    for (n, seq) in data.sequences().iter().enumerate() {
        for t in 0..seq.len() {
            if !range.contains(t) {
                continue;
            }
            let w = weights.map_or(1.0, |w| w[n][t]);
            let prev = (t > 0).then(|| seq.slice(t - 1));
            acc.add(seq.slice(t), prev, w);
        }
    }
    Ok(acc.finish())
}

/// Smoothed, normalized versions of the tables in [`WeightedPairStats`],
/// with the same layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTables {
    num_vars: usize,
    num_prev: usize,
    cardinality: usize,
    unary: Vec<f64>,
    pair: Vec<f64>,
    cross: Vec<f64>,
}

impl ProbabilityTables {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_prev(&self) -> usize {
        self.num_prev
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    pub fn unary(&self, v: usize) -> &[f64] {
        let b = self.cardinality;
        &self.unary[v * b..(v + 1) * b]
    }

    /// Joint `[value of u][value of v]`; `u < v`.
    pub fn pair(&self, u: usize, v: usize) -> &[f64] {
        let bb = self.cardinality * self.cardinality;
        let p = pair_index(self.num_vars, u, v);
        &self.pair[p * bb..(p + 1) * bb]
    }

    /// Joint oriented as `[value of u][value of v]` for any `u != v`.
    pub fn pair_oriented(&self, u: usize, v: usize) -> Vec<f64> {
        if u < v {
            self.pair(u, v).to_vec()
        } else {
            transpose(self.pair(v, u), self.cardinality)
        }
    }

    pub fn cross(&self, u: usize, v: usize) -> &[f64] {
        let bb = self.cardinality * self.cardinality;
        let i = u * self.num_vars + v;
        &self.cross[i * bb..(i + 1) * bb]
    }
}

pub(crate) fn transpose(table: &[f64], b: usize) -> Vec<f64> {
    let mut out = vec![0.0; b * b];
    for i in 0..b {
        for j in 0..b {
            out[j * b + i] = table[i * b + j];
        }
    }
    out
}

/// `(count + alpha) / (total + alpha * len)` over one table.
pub(crate) fn normalize_counts(counts: &[f64], alpha: f64, what: impl FnOnce() -> String) -> Result<Vec<f64>> {
    let total: f64 = counts.iter().sum();
    let denom = total + alpha * counts.len() as f64;
    if !(denom > 0.0) {
        return Err(Error::DegenerateTable(format!("{} has no weight and no smoothing", what())));
    }
    Ok(counts.iter().map(|c| (c + alpha) / denom).collect())
}

/// Normalizes every table with additive pseudo-count `alpha` per cell:
/// unary cells become `(c + a) / (N + a B)`, joint cells `(c + a) / (N + a B^2)`.
pub fn stats_to_probabilities(stats: &WeightedPairStats, alpha: f64) -> Result<ProbabilityTables> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Config(format!("smoothing must be finite and >= 0, got {alpha}")));
    }
    let b = stats.cardinality;
    let bb = b * b;
    let mut unary = Vec::with_capacity(stats.unary.len());
    for (v, chunk) in stats.unary.chunks_exact(b).enumerate() {
        unary.extend(normalize_counts(chunk, alpha, || format!("marginal of variable {v}"))?);
    }
    let mut pair = Vec::with_capacity(stats.pair.len());
    for (p, chunk) in stats.pair.chunks_exact(bb).enumerate() {
        pair.extend(normalize_counts(chunk, alpha, || format!("pair table {p}"))?);
    }
    let mut cross = Vec::with_capacity(stats.cross.len());
    for (i, chunk) in stats.cross.chunks_exact(bb).enumerate() {
        let (u, v) = (i / stats.num_vars, i % stats.num_vars);
        cross.extend(normalize_counts(chunk, alpha, || format!("cross table ({u}, {v})"))?);
    }
    Ok(ProbabilityTables {
        num_vars: stats.num_vars,
        num_prev: stats.num_prev,
        cardinality: b,
        unary,
        pair,
        cross,
    })
}
