//! Hubert–Arabie Adjusted Rand Index.

use super::cluster::Partition;
use crate::error::{Error, Result};

/// A chance-corrected partition agreement score in `[-1, 1]`. Identical
/// partitions score exactly 1; the expectation over random partitions is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AriValue {
    pub value: f64,
    /// Set when the adjustment denominator vanished and the value fell back
    /// to the identical-partition test.
    pub degenerate: bool,
}

fn comb2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// True when both partitions induce the same equivalence relation on the
/// samples (cluster labels themselves may differ).
fn same_grouping(u: &Partition, t: &Partition) -> bool {
    let n = u.assignments.len();
    for i in 0..n {
        for j in i + 1..n {
            let together_u = u.assignments[i] == u.assignments[j];
            let together_t = t.assignments[i] == t.assignments[j];
            if together_u != together_t {
                return false;
            }
        }
    }
    true
}

/// Adjusted Rand Index between two partitions of the same sample set. The
/// cluster counts may differ.
pub fn adjusted_rand_index(u: &Partition, t: &Partition) -> Result<AriValue> {
    let n = u.assignments.len();
    if t.assignments.len() != n {
        return Err(Error::InvalidInput(format!(
            "partition sizes differ: {} vs {}",
            n,
            t.assignments.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty partitions".to_string()));
    }

    let mut contingency = vec![vec![0.0_f64; t.k]; u.k];
    for (&a, &b) in u.assignments.iter().zip(&t.assignments) {
        contingency[a][b] += 1.0;
    }
    let row_sums: Vec<f64> = contingency.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..t.k)
        .map(|j| contingency.iter().map(|r| r[j]).sum())
        .collect();

    let sum_cells: f64 = contingency
        .iter()
        .flat_map(|r| r.iter())
        .map(|&c| comb2(c))
        .sum();
    let sum_rows: f64 = row_sums.iter().map(|&c| comb2(c)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&c| comb2(c)).sum();
    let total_pairs = comb2(n as f64);
    if total_pairs == 0.0 {
        // Single sample: any two partitions agree trivially.
        return Ok(AriValue {
            value: 1.0,
            degenerate: true,
        });
    }

    let expected = sum_rows * sum_cols / total_pairs;
    let maximum = 0.5 * (sum_rows + sum_cols);
    let denominator = maximum - expected;
    if denominator == 0.0 {
        // Both partitions all-singletons (or all-together on both sides):
        // the adjustment is undefined.
        return Ok(AriValue {
            value: if same_grouping(u, t) { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    Ok(AriValue {
        value: (sum_cells - expected) / denominator,
        degenerate: false,
    })
}
