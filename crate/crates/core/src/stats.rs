//! Two-sided Mann-Whitney U test with effect size.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::midranks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Negligible,
    Low,
    Medium,
    Large,
}

impl Effect {
    pub fn classify(r: f64) -> Self {
        match r {
            r if r >= 0.5 => Effect::Large,
            r if r >= 0.3 => Effect::Medium,
            r if r >= 0.1 => Effect::Low,
            _ => Effect::Negligible,
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Effect::Negligible => "negligible",
            Effect::Low => "low",
            Effect::Medium => "medium",
            Effect::Large => "large",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs where it is larger, ties as 1/2.
    pub u: f64,
    pub z: f64,
    pub p_value: f64,
    pub r: f64,
    pub effect: Effect,
    pub significant: bool,
    /// Whether the p-value comes from the exact null distribution.
    pub exact: bool,
}

impl MannWhitney {
    /// `∼` when not significant, otherwise one to three `+` for a low,
    /// medium or large effect.
    pub fn symbol(&self) -> &'static str {
        if !self.significant {
            return "∼";
        }
        match self.effect {
            Effect::Negligible => "∼",
            Effect::Low => "+",
            Effect::Medium => "++",
            Effect::Large => "+++",
        }
    }
}

/// U statistic of `a` from the rank-sum formula.
pub fn u_statistic(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let rank_sum: f64 = ranks[..a.len()].iter().sum();
    let n1 = a.len() as f64;
    rank_sum - n1 * (n1 + 1.0) / 2.0
}

/// Two-sided test with a normal approximation corrected for ties, or an
/// exact p-value from the permutation distribution of the pooled ranks.
pub fn mann_whitney(a: &[f64], b: &[f64], alpha: f64, exact: bool) -> Result<MannWhitney> {
    if a.len() < 3 || b.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "each sample needs at least 3 values, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&pooled);
    let u = ranks[..a.len()].iter().sum::<f64>() - n1 * (n1 + 1.0) / 2.0;
    let mean = n1 * n2 / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        tie_term += (j * j * j - j) as f64;
        i += j;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = if var > 0.0 { (u - mean) / var.sqrt() } else { 0.0 };
    let p_value = if exact {
        exact_p(&ranks, a.len(), u - mean)
    } else {
        libm::erfc(z.abs() / std::f64::consts::SQRT_2)
    };
    let r = z.abs() / n.sqrt();
    Ok(MannWhitney {
        u,
        z,
        p_value,
        r,
        effect: Effect::classify(r),
        significant: p_value < alpha,
        exact,
    })
}

/// Probability under random relabelling that |U - mean| is at least the
/// observed deviation. Counts subsets by doubled rank sum.
fn exact_p(ranks: &[f64], n1: usize, deviation: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0.0f64; max_sum + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for &d in &doubled {
        for k in (1..=n1).rev() {
            for s in (d..=max_sum).rev() {
                let add = counts[k - 1][s - d];
                if add != 0.0 {
                    counts[k][s] += add;
                }
            }
        }
    }
    let total: f64 = counts[n1].iter().sum();
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let n2 = ranks.len() - n1;
    let mean = (n1 * n2) as f64 / 2.0;
    let threshold = deviation.abs() - 1e-9;
    let extreme: f64 = counts[n1]
        .iter()
        .enumerate()
        .filter(|(s, _)| ((*s as f64 / 2.0 - offset) - mean).abs() >= threshold)
        .map(|(_, c)| c)
        .sum();
    (extreme / total).min(1.0)
}
