use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// `exp(total_nll / token_count)`.
pub fn perplexity(total_nll: f64, token_count: usize) -> Result<f64> {
    if token_count == 0 {
        bail!(Data, "perplexity over zero tokens");
    }
    Ok(libm::exp(total_nll / token_count as f64))
}

/// Median, sample standard deviation and max of one metric across restarts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub std: f64,
    pub max: f64,
    pub count: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Summary> {
        if values.is_empty() {
            bail!(Data, "summary of zero values");
        }
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
        };
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            libm::sqrt(sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
        } else {
            0.0
        };
        Ok(Summary {
            median,
            std,
            max: sorted[n - 1],
            count: n,
        })
    }
}
