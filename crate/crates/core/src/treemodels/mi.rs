use crate::error::{Error, Result};

/// Mutual information (nats) of a `B x B` joint table, `0 log 0 = 0`.
///
/// The table must sum to one within `1e-9`.
pub fn mutual_information(joint: &[f64], cardinality: usize) -> Result<f64> {
    if joint.len() != cardinality * cardinality {
        return Err(Error::Dimension(format!(
            "joint table has {} cells, expected {}",
            joint.len(),
            cardinality * cardinality
        )));
    }
    let sum: f64 = joint.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || joint.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::NotNormalized(sum));
    }
    Ok(mi_unchecked(joint, cardinality))
}

pub(crate) fn mi_unchecked(joint: &[f64], b: usize) -> f64 {
    let mut rows = [0.0f64; 16];
    let mut cols = [0.0f64; 16];
    let (mut rows_heap, mut cols_heap);
    let (rows, cols): (&mut [f64], &mut [f64]) = if b <= 16 {
        (&mut rows[..b], &mut cols[..b])
    } else {
        rows_heap = vec![0.0; b];
        cols_heap = vec![0.0; b];
        (&mut rows_heap, &mut cols_heap)
    };
    for i in 0..b {
        for j in 0..b {
            let p = joint[i * b + j];
            rows[i] += p;
            cols[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..b {
        for j in 0..b {
            let p = joint[i * b + j];
            if p > 0.0 {
                mi += p * (p / (rows[i] * cols[j])).ln();
            }
        }
    }
    mi
}

/// Shannon entropy (nats) of a distribution.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}
