use super::HmmModel;
use crate::data::{Sequence, MISSING};
use crate::error::{Error, Result};
use crate::model::{check_sequence, ImputedCell, SequenceModel};

/// State posteriors of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    num_states: usize,
    gamma: Vec<f64>,
    xi: Vec<f64>,
    pub log_likelihood: f64,
    /// `log c_t`: the log normalizer of each scaled forward step, including
    /// the per-step emission offset.
    pub log_scales: Vec<f64>,
}

impl PosteriorSummary {
    pub fn len(&self) -> usize {
        self.log_scales.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_scales.is_empty()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// `P(S_t = i | r_{1:T})` for every `i`.
    pub fn gamma(&self, t: usize) -> &[f64] {
        &self.gamma[t * self.num_states..(t + 1) * self.num_states]
    }

    /// `P(S_{t-1} = i, S_t = j | r_{1:T})` as a row-major `K x K` table, `t >= 1`.
    pub fn xi(&self, t: usize) -> &[f64] {
        let kk = self.num_states * self.num_states;
        &self.xi[(t - 1) * kk..t * kk]
    }
}

/// Emission probabilities of every (t, state) divided by their per-step
/// maximum, plus those maxima in log form.
pub(crate) fn emission_matrix(model: &HmmModel, seq: &Sequence) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = model.num_states();
    let mut e = vec![0.0; seq.len() * k];
    for t in 0..seq.len() {
        let slice = seq.slice(t);
        let prev = (t > 0).then(|| seq.slice(t - 1));
        for (i, c) in model.compiled().iter().enumerate() {
            e[t * k + i] = c.log_prob(slice, prev);
        }
    }
    let offsets = scale_log_emissions(&mut e, k)?;
    Ok((e, offsets))
}

/// Turns rows of log emissions into probabilities relative to the row
/// maximum and returns the maxima.
pub(crate) fn scale_log_emissions(e: &mut [f64], k: usize) -> Result<Vec<f64>> {
    e.chunks_exact_mut(k)
        .enumerate()
        .map(|(t, row)| {
            let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !top.is_finite() {
                return Err(Error::Numerical(format!("slice {t} has zero probability under every state")));
            }
            row.iter_mut().for_each(|x| *x = (*x - top).exp());
            Ok(top)
        })
        .collect()
}

/// Scaled forward pass. Returns normalized forward vectors and `log c_t`.
fn forward(model: &HmmModel, trans: &[f64], e: &[f64], offsets: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = model.num_states();
    let t_len = offsets.len();
    let mut alpha = vec![0.0; t_len * k];
    let mut log_scales = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let (done, rest) = alpha.split_at_mut(t * k);
        let row = &mut rest[..k];
        let e_t = &e[t * k..(t + 1) * k];
        if t == 0 {
            for j in 0..k {
                row[j] = model.initial[j] * e_t[j];
            }
        } else {
            let prev = &done[(t - 1) * k..];
            for (i, &p) in prev.iter().enumerate() {
                for (r, &a) in row.iter_mut().zip(&trans[i * k..(i + 1) * k]) {
                    *r += p * a;
                }
            }
            for (r, &x) in row.iter_mut().zip(e_t) {
                *r *= x;
            }
        }
        let c: f64 = row.iter().sum();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Numerical(format!("forward normalizer vanished at time {t}")));
        }
        let inv = 1.0 / c;
        row.iter_mut().for_each(|a| *a *= inv);
        log_scales.push(c.ln() + offsets[t]);
    }
    Ok((alpha, log_scales))
}

fn flat_transition(model: &HmmModel) -> Vec<f64> {
    model.transition.iter().flatten().copied().collect()
}

/// `log P(r_{1:T})` from the forward pass alone.
pub(crate) fn forward_log_likelihood(model: &HmmModel, seq: &Sequence) -> Result<f64> {
    if seq.is_empty() {
        return Ok(0.0);
    }
    let (e, offsets) = emission_matrix(model, seq)?;
    Ok(forward(model, &flat_transition(model), &e, &offsets)?.1.iter().sum())
}

pub(crate) struct EStep {
    pub gamma: Vec<f64>,
    pub xi_sum: Vec<f64>,
    pub log_likelihood: f64,
}

/// Forward-backward returning flat `gamma` and, when `keep_xi`, every
/// per-step `xi` table; the sum of the `xi` tables is always returned.
pub(crate) fn forward_backward_flat(model: &HmmModel, seq: &Sequence, keep_xi: bool) -> Result<(EStep, Vec<f64>, Vec<f64>)> {
    let (e, offsets) = emission_matrix(model, seq)?;
    forward_backward_scaled(model, &e, &offsets, keep_xi)
}

/// Forward-backward on emissions already scaled by [`scale_log_emissions`].
pub(crate) fn forward_backward_scaled(
    model: &HmmModel,
    e: &[f64],
    offsets: &[f64],
    keep_xi: bool,
) -> Result<(EStep, Vec<f64>, Vec<f64>)> {
    let k = model.num_states();
    let kk = k * k;
    let t_len = offsets.len();
    let trans = flat_transition(model);
    let (mut gamma, log_scales) = forward(model, &trans, e, offsets)?;
    let mut xi_sum = vec![0.0; kk];
    let mut xi_all = if keep_xi { vec![0.0; t_len.saturating_sub(1) * kk] } else { Vec::new() };
    let mut beta = vec![1.0; k];
    let mut next = vec![0.0; k];
    let mut xi = vec![0.0; kk];
    for t in (1..t_len).rev() {
        for j in 0..k {
            next[j] = e[t * k + j] * beta[j];
        }
        // gamma[t-1] still holds the forward vector here.
        let (head, _) = gamma.split_at_mut(t * k);
        let row = &mut head[(t - 1) * k..];
        let mut z = 0.0;
        for i in 0..k {
            let a = &trans[i * k..(i + 1) * k];
            let mut b = 0.0;
            for j in 0..k {
                let x = a[j] * next[j];
                b += x;
                xi[i * k + j] = row[i] * x;
            }
            beta[i] = b;
            z += row[i] * b;
        }
        if !(z > 0.0) {
            return Err(Error::Numerical(format!("pairwise posterior vanished at time {t}")));
        }
        let inv = 1.0 / z;
        for (s, x) in xi_sum.iter_mut().zip(xi.iter_mut()) {
            *x *= inv;
            *s += *x;
        }
        if keep_xi {
            xi_all[(t - 1) * kk..t * kk].copy_from_slice(&xi);
        }
        let s: f64 = beta.iter().sum();
        beta.iter_mut().for_each(|b| *b /= s);
        for i in 0..k {
            row[i] *= beta[i];
        }
        crate::util::normalize_in_place(row);
    }
    let log_likelihood = log_scales.iter().sum();
    Ok((
        EStep {
            gamma,
            xi_sum,
            log_likelihood,
        },
        xi_all,
        log_scales,
    ))
}

/// E-step of one sequence whose slices are the patterns `ids`, with
/// `e[p*K + i]` the scaled emission of pattern `p` under state `i` and
/// `offsets[p]` its log scale. Only `gamma`, the `xi` sum and the
/// log-likelihood are kept.
pub(crate) fn expected_counts(model: &HmmModel, trans: &[f64], ids: &[usize], e: &[f64], offsets: &[f64]) -> Result<EStep> {
    // Constant K lets the compiler unroll the inner loops.
    match model.num_states() {
        1 => counts_for(model, trans, ids, e, offsets, 1),
        2 => counts_for(model, trans, ids, e, offsets, 2),
        3 => counts_for(model, trans, ids, e, offsets, 3),
        4 => counts_for(model, trans, ids, e, offsets, 4),
        5 => counts_for(model, trans, ids, e, offsets, 5),
        k => counts_for(model, trans, ids, e, offsets, k),
    }
}

#[inline(always)]
fn counts_for(model: &HmmModel, trans: &[f64], ids: &[usize], e: &[f64], offsets: &[f64], k: usize) -> Result<EStep> {
    let t_len = ids.len();
    let mut gamma = vec![0.0; t_len * k];
    let mut log_likelihood = 0.0;
    let mut scale = 1.0;
    for (t, &p) in ids.iter().enumerate() {
        let (done, rest) = gamma.split_at_mut(t * k);
        let row = &mut rest[..k];
        let e_t = &e[p * k..(p + 1) * k];
        if t == 0 {
            for j in 0..k {
                row[j] = model.initial[j] * e_t[j];
            }
        } else {
            let prev = &done[(t - 1) * k..];
            for (i, &a) in prev.iter().enumerate() {
                for (r, &x) in row.iter_mut().zip(&trans[i * k..(i + 1) * k]) {
                    *r += a * x;
                }
            }
            for (r, &x) in row.iter_mut().zip(e_t) {
                *r *= x;
            }
        }
        let c: f64 = row.iter().sum();
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Numerical(format!("forward normalizer vanished at time {t}")));
        }
        let inv = 1.0 / c;
        row.iter_mut().for_each(|a| *a *= inv);
        log_likelihood += offsets[p];
        scale *= c;
        if !(1e-100..=1e100).contains(&scale) {
            log_likelihood += scale.ln();
            scale = 1.0;
        }
    }
    log_likelihood += scale.ln();
    let kk = k * k;
    let mut xi_sum = vec![0.0; kk];
    let mut xi = vec![0.0; kk];
    let mut beta = vec![1.0; k];
    let mut next = vec![0.0; k];
    for t in (1..t_len).rev() {
        let e_t = &e[ids[t] * k..(ids[t] + 1) * k];
        for j in 0..k {
            next[j] = e_t[j] * beta[j];
        }
        let (head, _) = gamma.split_at_mut(t * k);
        let row = &mut head[(t - 1) * k..];
        let mut z = 0.0;
        for i in 0..k {
            let a = &trans[i * k..(i + 1) * k];
            let x = &mut xi[i * k..(i + 1) * k];
            let mut b = 0.0;
            for j in 0..k {
                let v = a[j] * next[j];
                b += v;
                x[j] = row[i] * v;
            }
            beta[i] = b;
            z += row[i] * b;
        }
        if !(z > 0.0) {
            return Err(Error::Numerical(format!("pairwise posterior vanished at time {t}")));
        }
        let inv = 1.0 / z;
        for i in 0..k {
            let x = &mut xi[i * k..(i + 1) * k];
            let mut g = 0.0;
            for (s, v) in xi_sum[i * k..(i + 1) * k].iter_mut().zip(x.iter_mut()) {
                *v *= inv;
                *s += *v;
                g += *v;
            }
            row[i] = g;
            beta[i] *= inv;
        }
    }
    Ok(EStep {
        gamma,
        xi_sum,
        log_likelihood,
    })
}

pub(crate) fn flat_transition_of(model: &HmmModel) -> Vec<f64> {
    flat_transition(model)
}

/// Scaled forward-backward on one sequence.
pub fn forward_backward(model: &HmmModel, seq: &Sequence) -> Result<PosteriorSummary> {
    check_sequence(seq, model.num_vars(), model.cardinality())?;
    if seq.is_empty() {
        return Err(Error::Dimension("sequence is empty".into()));
    }
    let (es, xi, log_scales) = forward_backward_flat(model, seq, true)?;
    Ok(PosteriorSummary {
        num_states: model.num_states(),
        gamma: es.gamma,
        xi,
        log_likelihood: es.log_likelihood,
        log_scales,
    })
}

/// Most probable state at each time step; ties go to the lowest index.
pub fn posterior_decode(model: &HmmModel, seq: &Sequence) -> Result<Vec<usize>> {
    let post = forward_backward(model, seq)?;
    Ok((0..post.len()).map(|t| crate::util::argmax(post.gamma(t))).collect())
}

/// Jointly most probable state path by max-product in log space; ties go
/// to the lowest state index.
pub fn viterbi(model: &HmmModel, seq: &Sequence) -> Result<Vec<usize>> {
    check_sequence(seq, model.num_vars(), model.cardinality())?;
    if seq.is_empty() {
        return Ok(Vec::new());
    }
    let k = model.num_states();
    let t_len = seq.len();
    let log_trans: Vec<f64> = model.transition.iter().flatten().map(|p| p.ln()).collect();
    let mut delta: Vec<f64> = Vec::with_capacity(k);
    let mut back = vec![0usize; t_len * k];
    for t in 0..t_len {
        let slice = seq.slice(t);
        let prev = (t > 0).then(|| seq.slice(t - 1));
        let le: Vec<f64> = model.compiled().iter().map(|c| c.log_prob(slice, prev)).collect();
        if t == 0 {
            delta = (0..k).map(|i| model.initial[i].ln() + le[i]).collect();
            continue;
        }
        let mut next = vec![f64::NEG_INFINITY; k];
        for j in 0..k {
            let mut best = 0;
            let mut score = delta[0] + log_trans[j];
            for i in 1..k {
                let s = delta[i] + log_trans[i * k + j];
                if s > score {
                    best = i;
                    score = s;
                }
            }
            back[t * k + j] = best;
            next[j] = score + le[j];
        }
        delta = next;
    }
    if delta.iter().all(|d| *d == f64::NEG_INFINITY) {
        return Err(Error::Numerical("every state path has zero probability".into()));
    }
    let mut path = vec![crate::util::argmax(&delta); t_len];
    for t in (1..t_len).rev() {
        path[t - 1] = back[t * k + path[t]];
    }
    Ok(path)
}

impl SequenceModel for HmmModel {
    fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn cardinality(&self) -> usize {
        self.cardinality
    }

    fn sequence_log_likelihood(&self, seq: &Sequence) -> Result<f64> {
        check_sequence(seq, self.num_vars, self.cardinality)?;
        forward_log_likelihood(self, seq)
    }

    /// For tree and independent emissions, mixes each state's posterior for
    /// the missing cell given the rest of its slice by the state posterior.
    /// Conditional emissions also let each candidate value be scored by the
    /// next slice, whose emission depends on it.
    fn impute_sequence(&self, seq: &Sequence) -> Result<Vec<ImputedCell>> {
        check_sequence(seq, self.num_vars, self.cardinality)?;
        if !seq.has_missing() {
            return Ok(Vec::new());
        }
        if self.variant() == super::EmissionVariant::Ccl {
            return impute_conditional(self, seq);
        }
        let b = self.cardinality;
        let m = self.num_vars;
        let post = forward_backward(self, seq)?;
        let mut cells = Vec::new();
        for t in 0..seq.len() {
            let slice = seq.slice(t);
            if !slice.contains(&MISSING) {
                continue;
            }
            let mut mix = vec![0.0; m * b];
            for (i, c) in self.compiled().iter().enumerate() {
                let g = post.gamma(t)[i];
                if g == 0.0 {
                    continue;
                }
                for (acc, p) in mix.iter_mut().zip(c.posterior(slice, None)) {
                    *acc += g * p;
                }
            }
            for v in (0..m).filter(|&v| slice[v] == MISSING) {
                cells.push(ImputedCell::new(t, v, mix[v * b..(v + 1) * b].to_vec()));
            }
        }
        Ok(cells)
    }

    fn sample_sequence(&self, length: usize, rng: &mut dyn rand::RngCore) -> Sequence {
        self.sample_with_states(length, rng).0
    }
}

/// Normalized forward and backward vectors, both `T x K` row-major.
fn forward_and_backward(model: &HmmModel, seq: &Sequence) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = model.num_states();
    let trans = flat_transition(model);
    let (e, offsets) = emission_matrix(model, seq)?;
    let (alpha, _) = forward(model, &trans, &e, &offsets)?;
    let t_len = seq.len();
    let mut beta = vec![1.0; t_len * k];
    for t in (0..t_len.saturating_sub(1)).rev() {
        let (head, tail) = beta.split_at_mut((t + 1) * k);
        let next = &tail[..k];
        let row = &mut head[t * k..];
        for i in 0..k {
            row[i] = (0..k).map(|j| trans[i * k + j] * e[(t + 1) * k + j] * next[j]).sum();
        }
        crate::util::normalize_in_place(row);
    }
    Ok((alpha, beta))
}

/// Missing cells under conditional emissions. The value `x` of cell
/// `(t, v)` changes only the emissions of slices `t` and `t + 1`, so
/// `P(x, rest) ∝ Σ_ij pred_t(i) e_t^x(i) Γ_ij e_{t+1}^x(j) β_{t+1}(j)` with
/// the other missing cells of those slices marginalized.
fn impute_conditional(model: &HmmModel, seq: &Sequence) -> Result<Vec<ImputedCell>> {
    let k = model.num_states();
    let b = model.cardinality();
    let t_len = seq.len();
    let (alpha, beta) = forward_and_backward(model, seq)?;
    let compiled = model.compiled();
    let mut cells = Vec::new();
    for t in 0..t_len {
        let slice = seq.slice(t);
        if !slice.contains(&MISSING) {
            continue;
        }
        let prev = (t > 0).then(|| seq.slice(t - 1));
        let pred: Vec<f64> = if t == 0 {
            model.initial.clone()
        } else {
            (0..k)
                .map(|j| (0..k).map(|i| alpha[(t - 1) * k + i] * model.transition[i][j]).sum())
                .collect()
        };
        let next = (t + 1 < t_len).then(|| seq.slice(t + 1));
        for v in (0..slice.len()).filter(|&v| slice[v] == MISSING) {
            let mut filled = slice.to_vec();
            let mut now = vec![0.0; b * k];
            let mut later = vec![0.0; b * k];
            for x in 0..b {
                filled[v] = x as u8;
                for (i, c) in compiled.iter().enumerate() {
                    now[x * k + i] = c.log_prob(&filled, prev);
                    if let Some(nx) = next {
                        later[x * k + i] = c.log_prob(nx, Some(&filled));
                    }
                }
            }
            let top_now = now.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let top_later = later.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !top_now.is_finite() || !top_later.is_finite() {
                return Err(Error::Numerical(format!("cell ({t}, {v}) has zero probability for every value")));
            }
            let posterior: Vec<f64> = (0..b)
                .map(|x| {
                    let ahead: Vec<f64> = match next {
                        Some(_) => (0..k)
                            .map(|i| {
                                (0..k)
                                    .map(|j| {
                                        model.transition[i][j] * (later[x * k + j] - top_later).exp() * beta[(t + 1) * k + j]
                                    })
                                    .sum()
                            })
                            .collect(),
                        None => vec![1.0; k],
                    };
                    (0..k).map(|i| pred[i] * (now[x * k + i] - top_now).exp() * ahead[i]).sum()
                })
                .collect();
            if !(posterior.iter().sum::<f64>() > 0.0) {
                return Err(Error::Numerical(format!("cell ({t}, {v}) has zero posterior mass")));
            }
            cells.push(ImputedCell::new(t, v, posterior));
        }
    }
    Ok(cells)
}
