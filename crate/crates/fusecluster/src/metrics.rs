//! External cluster-validity metrics: Rand index, adjusted Rand index, and
//! normalized mutual information.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Cross-tabulation of two labelings. Labels are densified independently in
/// first-appearance order.
#[derive(Debug, Clone)]
pub struct ContingencyTable {
    /// r x s counts, row-major: counts[i][j] = |cluster i of pred ∩ class j of truth|.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub n: u64,
}

fn densify(labels: &[i64]) -> Vec<usize> {
    let mut map: HashMap<i64, usize> = HashMap::new();
    let mut next = 0;
    labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

pub fn contingency(pred: &[i64], truth: &[i64]) -> Result<ContingencyTable> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let p = densify(pred);
    let t = densify(truth);
    let r = p.iter().max().unwrap() + 1;
    let s = t.iter().max().unwrap() + 1;
    let mut counts = vec![vec![0u64; s]; r];
    for (&i, &j) in p.iter().zip(t.iter()) {
        counts[i][j] += 1;
    }
    let row_sums: Vec<u64> = counts.iter().map(|row| row.iter().sum()).collect();
    let mut col_sums = vec![0u64; s];
    for row in &counts {
        for (c, v) in col_sums.iter_mut().zip(row.iter()) {
            *c += v;
        }
    }
    Ok(ContingencyTable {
        counts,
        row_sums,
        col_sums,
        n: pred.len() as u64,
    })
}

fn choose2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Pair-counting agreement rate in [0, 1].
pub fn rand_index(pred: &[i64], truth: &[i64]) -> Result<f64> {
    let t = contingency(pred, truth)?;
    if t.n < 2 {
        return Err(Error::TooFewSamples(2));
    }
    let total = choose2(t.n);
    let sum_ij: f64 = t.counts.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&v| choose2(v)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&v| choose2(v)).sum();
    Ok((total + 2.0 * sum_ij - sum_a - sum_b) / total)
}

/// Hubert–Arabie chance-corrected Rand index; 1 for identical partitions.
pub fn adjusted_rand_index(pred: &[i64], truth: &[i64]) -> Result<f64> {
    let t = contingency(pred, truth)?;
    if t.n < 2 {
        return Err(Error::TooFewSamples(2));
    }
    let total = choose2(t.n);
    let sum_ij: f64 = t.counts.iter().flatten().map(|&v| choose2(v)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&v| choose2(v)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&v| choose2(v)).sum();
    let expected = sum_a * sum_b / total;
    let denom = 0.5 * (sum_a + sum_b) - expected;
    if denom == 0.0 {
        // Both partitions all-singletons or both one-cluster: identical as partitions.
        return Ok(1.0);
    }
    Ok((sum_ij - expected) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmiNorm {
    /// sqrt(H(pred) * H(truth)), the default.
    Geometric,
    /// (H(pred) + H(truth)) / 2, exposed for sensitivity checks.
    Arithmetic,
}

pub fn normalized_mutual_info(pred: &[i64], truth: &[i64]) -> Result<f64> {
    normalized_mutual_info_with(pred, truth, NmiNorm::Geometric)
}

pub fn normalized_mutual_info_with(pred: &[i64], truth: &[i64], norm: NmiNorm) -> Result<f64> {
    let t = contingency(pred, truth)?;
    let n = t.n as f64;
    let entropy = |sums: &[u64]| -> f64 {
        -sums
            .iter()
            .filter(|&&v| v > 0)
            .map(|&v| {
                let p = v as f64 / n;
                p * p.ln()
            })
            .sum::<f64>()
    };
    let h_pred = entropy(&t.row_sums);
    let h_truth = entropy(&t.col_sums);
    if h_pred == 0.0 && h_truth == 0.0 {
        // Both single-cluster: identical partitions.
        return Ok(1.0);
    }
    if h_pred == 0.0 || h_truth == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 0 {
                let pij = v as f64 / n;
                mi += pij * (n * v as f64 / (t.row_sums[i] as f64 * t.col_sums[j] as f64)).ln();
            }
        }
    }
    let norm = match norm {
        NmiNorm::Geometric => (h_pred * h_truth).sqrt(),
        NmiNorm::Arithmetic => 0.5 * (h_pred + h_truth),
    };
    Ok((mi / norm).clamp(0.0, 1.0))
}
