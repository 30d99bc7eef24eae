//! Model parameters for the linear preferential attachment graph.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Growth phase of the common-friend count, fixed by the sign of `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `delta > 0`: the count converges to a finite limit.
    Static,
    /// `delta == 0`: the count grows like `log n`.
    Logarithmic,
    /// `delta < 0`: the count grows like `n^(2 gamma - 1)`.
    Power,
}

impl Regime {
    pub fn from_delta(delta: f64) -> Regime {
        if delta > 0.0 {
            Regime::Static
        } else if delta == 0.0 {
            Regime::Logarithmic
        } else {
            Regime::Power
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Static => "static",
            Regime::Logarithmic => "logarithmic",
            Regime::Power => "power",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Edges per arrival `c` and attachment shift `delta`.
///
/// Admissible when `c >= 1` and `delta > -c`. The growth theorems need `c >= 2`;
/// `c == 1` is accepted and reported through [`ModelParams::theorem_applies`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    c: u32,
    delta: f64,
}

impl ModelParams {
    pub fn new(c: u32, delta: f64) -> Result<Self> {
        if c < 1 {
            return Err(Error::domain(format!("c must be at least 1, got {c}")));
        }
        if !delta.is_finite() {
            return Err(Error::domain(format!("delta must be finite, got {delta}")));
        }
        if delta <= -f64::from(c) {
            return Err(Error::domain(format!(
                "delta must exceed -c = {}, got {delta}",
                -f64::from(c)
            )));
        }
        Ok(ModelParams { c, delta })
    }

    #[inline]
    pub fn c(&self) -> u32 {
        self.c
    }

    #[inline]
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `2c + delta`, the total attachment weight contributed per node.
    #[inline]
    pub fn weight_per_node(&self) -> f64 {
        2.0 * f64::from(self.c) + self.delta
    }

    /// Degree growth exponent `c / (2c + delta)`.
    #[inline]
    pub fn gamma(&self) -> f64 {
        f64::from(self.c) / self.weight_per_node()
    }

    pub fn regime(&self) -> Regime {
        Regime::from_delta(self.delta)
    }

    pub fn theorem_applies(&self) -> bool {
        self.c >= 2
    }

    /// Probability that one stub of arrival `n + 1` lands on a node with shifted degree `x`.
    #[inline]
    pub fn attach_probability(&self, x: f64, n: u64) -> f64 {
        x / (self.weight_per_node() * n as f64)
    }
}
