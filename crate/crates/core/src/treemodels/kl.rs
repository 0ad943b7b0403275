use super::conditional::ConditionalForestDistribution;
use super::tree::TreeDistribution;
use crate::error::{Error, Result};

/// Largest joint state space the exact enumerations accept.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

/// Writes the assignment with flat index `index` into `x`; variable 0 is the
/// most significant digit.
pub fn decode_state(mut index: usize, cardinality: usize, x: &mut [u8]) {
    for slot in x.iter_mut().rev() {
        *slot = (index % cardinality) as u8;
        index /= cardinality;
    }
}

/// `B^M`, or an error when it exceeds [`ENUMERATION_LIMIT`].
pub fn joint_state_count(cardinality: usize, num_vars: usize) -> Result<usize> {
    let states = (cardinality as u128).checked_pow(num_vars as u32).unwrap_or(u128::MAX);
    if states > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            states,
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(states as usize)
}

fn check_table(p: &[f64], states: usize) -> Result<()> {
    if p.len() != states {
        return Err(Error::Dimension(format!("table has {} entries, expected {states}", p.len())));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || p.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::NotNormalized(sum));
    }
    Ok(())
}

/// `KL(P || T)` by enumeration, with `p` a full joint table over all
/// `B^M` states in [`decode_state`] order.
pub fn kl_divergence_exact(p: &[f64], tree: &TreeDistribution) -> Result<f64> {
    let states = joint_state_count(tree.cardinality(), tree.num_vars())?;
    check_table(p, states)?;
    let mut x = vec![0u8; tree.num_vars()];
    let mut kl = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            decode_state(i, tree.cardinality(), &mut x);
            kl += pi * (pi.ln() - tree.log_prob(&x)?);
        }
    }
    Ok(kl)
}

/// `sum_y P(y) KL(P(. | y) || T(. | y))` by enumeration. `p` is the joint
/// over `(y, x)`, indexed `y_index * B^Mx + x_index`.
pub fn conditional_kl_exact(p: &[f64], forest: &ConditionalForestDistribution) -> Result<f64> {
    let b = forest.cardinality();
    let nx = joint_state_count(b, forest.num_x())?;
    let states = joint_state_count(b, forest.num_x() + forest.num_y())?;
    check_table(p, states)?;
    let mut x = vec![0u8; forest.num_x()];
    let mut y = vec![0u8; forest.num_y()];
    let mut kl = 0.0;
    for (yi, block) in p.chunks_exact(nx).enumerate() {
        let py: f64 = block.iter().sum();
        if py <= 0.0 {
            continue;
        }
        decode_state(yi, b, &mut y);
        for (xi, &pj) in block.iter().enumerate() {
            if pj > 0.0 {
                decode_state(xi, b, &mut x);
                kl += pj * ((pj / py).ln() - forest.log_prob(&x, &y)?);
            }
        }
    }
    Ok(kl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{accumulate_stats, ObservationDataset, Sequence, TimeRange};
    use crate::treemodels::mi::{entropy, mi_unchecked};
    use crate::treemodels::{fit_chow_liu, fit_conditional_chow_liu};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_joint(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>().powi(3)).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        p
    }

    fn marginal(p: &[f64], m: usize, b: usize, vars: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; b.pow(vars.len() as u32)];
        let mut x = vec![0u8; m];
        for (i, &pi) in p.iter().enumerate() {
            decode_state(i, b, &mut x);
            let idx = vars.iter().fold(0, |acc, &v| acc * b + x[v] as usize);
            out[idx] += pi;
        }
        out
    }

    #[test]
    fn limit_guard() {
        assert!(matches!(joint_state_count(2, 21), Err(Error::EnumerationTooLarge { .. })));
        assert_eq!(joint_state_count(2, 20).unwrap(), 1 << 20);
    }

    #[test]
    fn tree_kl_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (m, b) = (4, 2);
        let p = random_joint(&mut rng, 16);
        let rows: Vec<Vec<u8>> = (0..16)
            .map(|i| {
                let mut x = vec![0u8; m];
                decode_state(i, b, &mut x);
                x
            })
            .collect();
        let d = ObservationDataset::new(m, b, vec![Sequence::from_rows(&rows).unwrap()]).unwrap();
        let stats = accumulate_stats(&d, Some(std::slice::from_ref(&p)), false, TimeRange::All).unwrap();
        let tree = fit_chow_liu(&stats, 0.0).unwrap();
        let kl = kl_divergence_exact(&p, &tree).unwrap();
        let h_nodes: f64 = (0..m).map(|v| entropy(&marginal(&p, m, b, &[v]))).sum();
        let mi: f64 = tree
            .edges()
            .iter()
            .map(|&(u, v)| mi_unchecked(&marginal(&p, m, b, &[u, v]), b))
            .sum();
        assert!((kl - (h_nodes - mi - entropy(&p))).abs() < 1e-12);
    }

    #[test]
    fn conditional_kl_decomposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (m, b) = (3, 2);
        let n = 1 << (2 * m);
        let p = random_joint(&mut rng, n);
        let mut seqs = Vec::new();
        let mut weights = Vec::new();
        for (i, &pi) in p.iter().enumerate() {
            let mut yx = vec![0u8; 2 * m];
            decode_state(i, b, &mut yx);
            seqs.push(Sequence::from_rows(&[&yx[..m], &yx[m..]]).unwrap());
            weights.push(vec![0.0, pi]);
        }
        let d = ObservationDataset::new(m, b, seqs).unwrap();
        let stats = accumulate_stats(&d, Some(&weights), true, TimeRange::AfterFirst).unwrap();
        let f = fit_conditional_chow_liu(&stats, 0.0).unwrap();
        let kl = conditional_kl_exact(&p, &f).unwrap();
        let all = 2 * m;
        let h_x: f64 = (m..all).map(|v| entropy(&marginal(&p, all, b, &[v]))).sum();
        let h_y = entropy(&marginal(&p, all, b, &(0..m).collect::<Vec<_>>()));
        let h_cond = entropy(&p) - h_y;
        let within: f64 = f
            .within_edges()
            .iter()
            .map(|&(u, v)| mi_unchecked(&marginal(&p, all, b, &[m + u, m + v]), b))
            .sum();
        let cross: f64 = f
            .cross_edges()
            .iter()
            .map(|&(u, v)| mi_unchecked(&marginal(&p, all, b, &[u, m + v]), b))
            .sum();
        assert!((kl - (h_x - within - cross - h_cond)).abs() < 1e-12);
        assert!(kl >= -1e-12);
    }
}
