//! Mann-Whitney U test with average-rank tie handling and a tie-corrected
//! normal approximation.
//!
//! Sign convention: `z` is computed from the non-target sample's U, so a
//! target sample with larger values gives a negative `z`, and the one-tailed
//! p-value for "target stochastically greater" is `Φ(z)`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    pub n_target: usize,
    pub n_nontarget: usize,
    pub u_target: f64,
    pub u_nontarget: f64,
    pub z: f64,
    pub p_one_tailed: f64,
    pub mean_target: f64,
    pub median_target: f64,
    pub mean_nontarget: f64,
    pub median_nontarget: f64,
    /// All pooled values identical; `z` is reported as 0 and `p` as 0.5.
    pub degenerate: bool,
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    Normal::standard().cdf(z)
}

/// Average ranks (1-based) over `values`, plus the sizes of every tie group.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share the mean of ranks i+1..=j
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mann_whitney(target: &[f64], non_target: &[f64]) -> Result<MannWhitneyResult> {
    if target.is_empty() || non_target.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(bad) = target.iter().chain(non_target).find(|v| !v.is_finite()) {
        return Err(Error::Data(format!("non-finite sample value {bad}")));
    }
    let nt = target.len() as f64;
    let nn = non_target.len() as f64;
    let n = nt + nn;

    let pooled: Vec<f64> = target.iter().chain(non_target).copied().collect();
    let (ranks, ties) = average_ranks(&pooled);
    let rank_sum_nontarget: f64 = ranks[target.len()..].iter().sum();
    let u_nontarget = rank_sum_nontarget - nn * (nn + 1.0) / 2.0;
    let u_target = nt * nn - u_nontarget;

    let mu = nt * nn / 2.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / (n * (n - 1.0));
    let var = nt * nn / 12.0 * ((n + 1.0) - tie_term);
    let sigma = var.max(0.0).sqrt();

    let degenerate = sigma <= 1e-12 * mu.max(1.0);
    let (z, p) = if degenerate {
        (0.0, 0.5)
    } else {
        let z = (u_nontarget - mu) / sigma;
        (z, normal_cdf(z))
    };

    Ok(MannWhitneyResult {
        n_target: target.len(),
        n_nontarget: non_target.len(),
        u_target,
        u_nontarget,
        z,
        p_one_tailed: p,
        mean_target: mean(target),
        median_target: median(target),
        mean_nontarget: mean(non_target),
        median_nontarget: median(non_target),
        degenerate,
    })
}

/// Table rendering of a p-value: four decimals, or `< .00001` below 1e-5.
pub fn format_p(p: f64) -> String {
    if p < 1e-5 {
        "< .00001".to_owned()
    } else {
        format!("{p:.4}")
    }
}
