//! One-step law of the pair `(i, j)` given the current graph.
//!
//! With `p_i, p_j` the per-stub attachment probabilities, the arrival's stub
//! counts on `i` and `j` are jointly multinomial `(c; p_i, p_j)`. The arrival
//! becomes a new common friend exactly when both counts are positive.

use serde::{Deserialize, Serialize};

use super::{ln_gamma_ratio, RegimeConstants};
use crate::error::{Error, Result};

fn check_probabilities(p_i: f64, p_j: f64) -> Result<()> {
    let ok =
        p_i.is_finite() && p_j.is_finite() && p_i >= 0.0 && p_j >= 0.0 && p_i + p_j <= 1.0 + 1e-12;
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "need p_i, p_j >= 0 with p_i + p_j <= 1, got p_i={p_i}, p_j={p_j}"
        )))
    }
}

/// Probability that the next arrival attaches to both `i` and `j`.
///
/// Summed over the multinomial cells with both counts positive, so every
/// term is non-negative and no cancellation occurs for small probabilities.
/// Equal to `1 - (1-p_i)^c - (1-p_j)^c + (1-p_i-p_j)^c`.
pub fn increment_probability(p_i: f64, p_j: f64, c: u32) -> Result<f64> {
    check_probabilities(p_i, p_j)?;
    let rest = (1.0 - p_i - p_j).max(0.0);
    let mut total = 0.0;
    // coeff_k = c! / (k! (c-k)!), then c! / (k! l! (c-k-l)!) = coeff_k * binom(c-k, l)
    let mut coeff_k = 1.0;
    for k in 1..=c {
        coeff_k *= f64::from(c - k + 1) / f64::from(k);
        let mut coeff_kl = coeff_k;
        for l in 1..=(c - k) {
            coeff_kl *= f64::from(c - k - l + 1) / f64::from(l);
            total +=
                coeff_kl * p_i.powi(k as i32) * p_j.powi(l as i32) * rest.powi((c - k - l) as i32);
        }
    }
    Ok(total)
}

/// The inclusion-exclusion form `1 - (1-p_i)^c - (1-p_j)^c + (1-p_i-p_j)^c`.
pub fn increment_probability_inclusion_exclusion(p_i: f64, p_j: f64, c: u32) -> Result<f64> {
    check_probabilities(p_i, p_j)?;
    let c = c as i32;
    Ok(1.0 - (1.0 - p_i).powi(c) - (1.0 - p_j).powi(c) + (1.0 - p_i - p_j).max(0.0).powi(c))
}

/// Envelope `lower <= P(new common friend) <= upper` of the one-step probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `upper = c (c-1) p_i p_j`, `lower = upper * (1 - (c-2)/2 * (p_i + p_j))`.
///
/// Both collapse to the exact probability `2 p_i p_j` when `c == 2`.
pub fn increment_bounds(p_i: f64, p_j: f64, c: u32) -> Result<IncrementBounds> {
    check_probabilities(p_i, p_j)?;
    let cf = f64::from(c);
    let upper = cf * (cf - 1.0) * p_i * p_j;
    let lower = upper * (1.0 - (cf - 2.0) / 2.0 * (p_i + p_j));
    Ok(IncrementBounds { lower, upper })
}

impl IncrementBounds {
    /// Bounds from shifted degrees at time `n`, with `p = x / ((2c + delta) n)`.
    pub fn from_state(rc: &RegimeConstants, x_i: f64, x_j: f64, n: u64) -> Result<Self> {
        let denom = rc.weight_per_node() * n as f64;
        increment_bounds(x_i / denom, x_j / denom, rc.c)
    }
}

/// `E[Y_ij(n+1) | state] = x_i x_j (n + gamma1)(n + gamma2) / n^2`.
pub fn conditional_product_expectation(
    rc: &RegimeConstants,
    x_i: f64,
    x_j: f64,
    n: u64,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    Ok(x_i * x_j * (nf + rc.gamma1) * (nf + rc.gamma2) / (nf * nf))
}

/// `W_ij(n) = Y_ij(n) / C_ij * Γ(n)^2 / (Γ(n + gamma1) Γ(n + gamma2))`, a mean-one martingale.
pub fn martingale_statistic(rc: &RegimeConstants, y: f64, n: u64, c_ij: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be at least 1"));
    }
    let nf = n as f64;
    let ln_growth = ln_gamma_ratio(nf, rc.gamma1)? + ln_gamma_ratio(nf, rc.gamma2)?;
    Ok(y / c_ij * (-ln_growth).exp())
}
