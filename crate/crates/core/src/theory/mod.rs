//! Closed-form quantities of the model: growth exponents, Γ-ratio
//! expectations of shifted degrees and their products, limit constants, and
//! the one-step law of a new common friend.
//!
//! Formulas that involve node 1 are evaluated as written but flagged: node 1
//! starts with degree `2c`, not `c`, so the creation-time expectation used by
//! the Γ-ratio forms does not hold for it.

mod gamma;
mod increments;

use serde::{Deserialize, Serialize};

pub use gamma::{gamma_ratio, ln_gamma_ratio};
pub use increments::{
    conditional_product_expectation, increment_bounds, increment_probability,
    increment_probability_inclusion_exclusion, martingale_statistic, IncrementBounds,
};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Regime};

/// Exponents `gamma = c / (2c + delta)` and `gamma1,2 = (1 -/+ 1/sqrt(c)) gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeConstants {
    pub c: u32,
    pub delta: f64,
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub regime: Regime,
}

impl RegimeConstants {
    pub fn new(params: &ModelParams) -> Self {
        let gamma = params.gamma();
        let root = f64::from(params.c()).sqrt();
        RegimeConstants {
            c: params.c(),
            delta: params.delta(),
            gamma,
            gamma1: (1.0 - 1.0 / root) * gamma,
            gamma2: (1.0 + 1.0 / root) * gamma,
            regime: params.regime(),
        }
    }

    pub fn from_raw(c: u32, delta: f64) -> Result<Self> {
        Ok(Self::new(&ModelParams::new(c, delta)?))
    }

    pub fn params(&self) -> ModelParams {
        ModelParams::new(self.c, self.delta).expect("constants built from admissible params")
    }

    /// `2c + delta`.
    #[inline]
    pub fn weight_per_node(&self) -> f64 {
        2.0 * f64::from(self.c) + self.delta
    }

    /// `2 gamma - 1`, the common-friend growth exponent when `delta < 0`.
    #[inline]
    pub fn power_exponent(&self) -> f64 {
        2.0 * self.gamma - 1.0
    }

    /// `c (c - 1) / (2c + delta)^2`, the factor linking common-friend growth to `Y_ij`.
    #[inline]
    pub fn pair_rate(&self) -> f64 {
        let c = f64::from(self.c);
        c * (c - 1.0) / self.weight_per_node().powi(2)
    }

    /// Normaliser of `N_ij(n)` for this regime: 1, `ln n`, or `n^(2 gamma - 1) / (2 gamma - 1)`.
    pub fn normalizer(&self, n: u64) -> f64 {
        let n = n as f64;
        match self.regime {
            Regime::Static => 1.0,
            Regime::Logarithmic => n.ln(),
            Regime::Power => {
                let e = self.power_exponent();
                n.powf(e) / e
            }
        }
    }

    /// Multiplier applied to a subsample count taken at `n / k`.
    pub fn estimator_factor(&self, k: f64) -> f64 {
        match self.regime {
            Regime::Static | Regime::Logarithmic => 1.0,
            Regime::Power => k.powf(self.power_exponent()),
        }
    }
}

/// A value whose formula assumes creation degree `c`, which node 1 does not have.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Caveated {
    pub value: f64,
    pub node_one_caveat: bool,
}

/// Γ-ratio expectation constants for a fixed pair `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationConstants {
    pub i: u64,
    pub j: u64,
    /// `E[D_i(inf)] = (c + delta) Γ(i) / Γ(i + gamma)`.
    pub e_d_inf_i: f64,
    pub e_d_inf_j: f64,
    /// `E[Y_ij(inf)]`.
    pub c_ij: f64,
    /// `c (c - 1) / (2c + delta)^2 * c_ij`, the mean of the growth limit.
    pub limit_coeff_mean: f64,
    pub node_one_caveat: bool,
}

impl ExpectationConstants {
    pub fn new(rc: &RegimeConstants, i: u64, j: u64) -> Result<Self> {
        check_pair(i, j)?;
        let c_ij = c_ij(rc, i, j)?;
        Ok(ExpectationConstants {
            i,
            j,
            e_d_inf_i: expected_degree_limit(rc, i)?.value,
            e_d_inf_j: expected_degree_limit(rc, j)?.value,
            c_ij,
            limit_coeff_mean: rc.pair_rate() * c_ij,
            node_one_caveat: i == 1,
        })
    }
}

fn check_pair(i: u64, j: u64) -> Result<()> {
    if i == 0 || i >= j {
        return Err(Error::domain(format!("need 1 <= i < j, got i={i}, j={j}")));
    }
    Ok(())
}

/// `E[D_i(inf)] = (c + delta) Γ(i) / Γ(i + gamma)`.
pub fn expected_degree_limit(rc: &RegimeConstants, i: u64) -> Result<Caveated> {
    if i == 0 {
        return Err(Error::domain("node ids start at 1"));
    }
    let value = (f64::from(rc.c) + rc.delta) / gamma_ratio(i as f64, rc.gamma)?;
    Ok(Caveated {
        value,
        node_one_caveat: i == 1,
    })
}

/// Exact `E[X_i(n)] = (c + delta) Γ(i) Γ(n + gamma) / (Γ(i + gamma) Γ(n))` for `n >= i >= 2`.
pub fn exact_expected_x(rc: &RegimeConstants, i: u64, n: u64) -> Result<f64> {
    if i < 2 || n < i {
        return Err(Error::domain(format!("need n >= i >= 2, got i={i}, n={n}")));
    }
    Ok((f64::from(rc.c) + rc.delta) * x_growth(rc, i, n)?)
}

/// Spans up to this length use the one-step product instead of Γ-ratios.
const DIRECT_PRODUCT_SPAN: u64 = 64;

/// `E[X_i(n)] / E[X_i(from)] = Γ(n + gamma) Γ(from) / (Γ(n) Γ(from + gamma))`.
fn x_growth(rc: &RegimeConstants, from: u64, n: u64) -> Result<f64> {
    if n - from <= DIRECT_PRODUCT_SPAN {
        return Ok((from..n).map(|m| 1.0 + rc.gamma / m as f64).product());
    }
    Ok((ln_gamma_ratio(n as f64, rc.gamma)? - ln_gamma_ratio(from as f64, rc.gamma)?).exp())
}

/// `C_ij = (c + delta)^2 Γ(i) Γ(j) Γ(j + gamma) / (Γ(i + gamma) Γ(j + gamma1) Γ(j + gamma2))`.
pub fn c_ij(rc: &RegimeConstants, i: u64, j: u64) -> Result<f64> {
    check_pair(i, j)?;
    let (i, j) = (i as f64, j as f64);
    let ln = ln_gamma_ratio(j + rc.gamma1, rc.gamma - rc.gamma1)?
        - ln_gamma_ratio(j, rc.gamma2)?
        - ln_gamma_ratio(i, rc.gamma)?;
    Ok((f64::from(rc.c) + rc.delta).powi(2) * ln.exp())
}

/// `E[Y_ij(j)] = (c + delta)^2 Γ(i) Γ(j + gamma) / (Γ(j) Γ(i + gamma))`: node `j` is
/// fresh (`X_j(j) = c + delta`) and `X_i(j)` has the single-node mean.
pub fn expected_y_at_creation(rc: &RegimeConstants, i: u64, j: u64) -> Result<f64> {
    if i < 2 {
        return Err(Error::domain(format!("need j > i >= 2, got i={i}, j={j}")));
    }
    check_pair(i, j)?;
    Ok((f64::from(rc.c) + rc.delta).powi(2) * x_growth(rc, i, j)?)
}

/// Exact `E[Y_ij(n)] = C_ij Γ(n + gamma1) Γ(n + gamma2) / Γ(n)^2` for `n >= j > i >= 2`.
pub fn exact_expected_y(rc: &RegimeConstants, i: u64, j: u64, n: u64) -> Result<f64> {
    if i < 2 || n < j {
        return Err(Error::domain(format!(
            "need n >= j > i >= 2, got i={i}, j={j}, n={n}"
        )));
    }
    if n - j <= DIRECT_PRODUCT_SPAN {
        let step = |m: u64| {
            let m = m as f64;
            (m + rc.gamma1) * (m + rc.gamma2) / (m * m)
        };
        return Ok(expected_y_at_creation(rc, i, j)? * (j..n).map(step).product::<f64>());
    }
    let growth = ln_gamma_ratio(n as f64, rc.gamma1)? + ln_gamma_ratio(n as f64, rc.gamma2)?;
    Ok(c_ij(rc, i, j)? * growth.exp())
}

/// Mean of the almost-sure growth limit, `c (c - 1) / (2c + delta)^2 * C_ij`.
pub fn limit_coefficient_mean(rc: &RegimeConstants, i: u64, j: u64) -> Result<Caveated> {
    Ok(Caveated {
        value: rc.pair_rate() * c_ij(rc, i, j)?,
        node_one_caveat: i == 1,
    })
}

/// `sum_{k=from}^{to-1} c (c - 1) E[Y_ij(k)] / ((2c + delta)^2 k^2)`.
///
/// This is the expected number of common friends gained between `from` and
/// `to` under the upper envelope of the one-step probability; it is exact when
/// `c == 2`.
pub fn expected_upper_increment_sum(
    rc: &RegimeConstants,
    i: u64,
    j: u64,
    from: u64,
    to: u64,
) -> Result<f64> {
    if from < j || to < from {
        return Err(Error::domain(format!(
            "need j <= from <= to, got j={j}, from={from}, to={to}"
        )));
    }
    if i < 2 {
        return Err(Error::domain("exact expectations need i >= 2"));
    }
    let base = c_ij(rc, i, j)?;
    let rate = rc.pair_rate();
    let mut sum = 0.0;
    for k in from..to {
        let kf = k as f64;
        let growth = ln_gamma_ratio(kf, rc.gamma1)? + ln_gamma_ratio(kf, rc.gamma2)?;
        sum += rate * base * growth.exp() / (kf * kf);
    }
    Ok(sum)
}

/// Exact `E[N_ij(to)] - E[N_ij(from)]` for `c == 2`.
pub fn exact_common_friend_growth_c2(
    rc: &RegimeConstants,
    i: u64,
    j: u64,
    from: u64,
    to: u64,
) -> Result<f64> {
    if rc.c != 2 {
        return Err(Error::domain(format!(
            "the exact common-friend mean needs c = 2, got c = {}",
            rc.c
        )));
    }
    expected_upper_increment_sum(rc, i, j, from, to)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rc(c: u32, delta: f64) -> RegimeConstants {
        RegimeConstants::from_raw(c, delta).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn regime_constants_examples() {
        let k = rc(2, 0.0);
        assert_eq!(k.gamma, 0.5);
        assert!((k.gamma1 - 0.146_446_609_4).abs() < 1e-9);
        assert!((k.gamma2 - 0.853_553_390_6).abs() < 1e-9);
        assert_eq!(k.regime, Regime::Logarithmic);

        let k = rc(2, 1.5);
        assert!((k.gamma - 2.0 / 5.5).abs() < 1e-15);
        assert_eq!(k.regime, Regime::Static);

        let k = rc(2, -1.5);
        assert!((k.gamma - 0.8).abs() < 1e-15);
        assert!((k.power_exponent() - 0.6).abs() < 1e-15);
        assert_eq!(k.regime, Regime::Power);

        assert!(RegimeConstants::from_raw(2, -2.0).is_err());
    }

    #[test]
    fn exponent_identities() {
        for c in 1..8 {
            for delta in [-0.9, 0.0, 0.7, 3.0] {
                let k = rc(c, delta);
                assert!((k.gamma1 + k.gamma2 - 2.0 * k.gamma).abs() < 1e-14);
                let prod = k.gamma * k.gamma * (1.0 - 1.0 / f64::from(c));
                assert!((k.gamma1 * k.gamma2 - prod).abs() < 1e-14);
                let expected_band = match k.regime {
                    Regime::Power => k.gamma > 0.5 && k.gamma < 1.0,
                    Regime::Logarithmic => k.gamma == 0.5,
                    Regime::Static => k.gamma > 0.0 && k.gamma < 0.5,
                };
                assert!(expected_band);
            }
        }
    }

    #[test]
    fn scaled_normalizers() {
        let k = rc(2, 0.0);
        let n = (2.0f64).exp();
        assert!((k.normalizer(1) - 0.0).abs() < 1e-15);
        assert!((n.ln() - 2.0).abs() < 1e-15);
        let k = rc(2, -1.5);
        // 100^0.6 / 0.6
        assert!(rel(k.normalizer(100), 15.848_931_924_611_133 / 0.6) < 1e-12);
        assert_eq!(rc(2, 1.5).normalizer(100), 1.0);
    }

    // Expected values below come from 40-digit mpmath evaluation.
    #[test]
    fn degree_limit_examples() {
        let v = expected_degree_limit(&rc(2, 0.0), 2).unwrap();
        assert!(rel(v.value, 1.504_505_556_127_35) < 1e-13);
        assert!(!v.node_one_caveat);
        assert!(rel(v.value, 8.0 / (3.0 * std::f64::consts::PI.sqrt())) < 1e-13);

        let v = expected_degree_limit(&rc(2, 0.0), 1).unwrap();
        assert!(rel(v.value, 4.0 / std::f64::consts::PI.sqrt()) < 1e-13);
        assert!(v.node_one_caveat);

        let v = expected_degree_limit(&rc(3, -1.0), 2).unwrap();
        assert!(rel(v.value, 1.398_968_692_587_652_8) < 1e-13);
    }

    #[test]
    fn expected_x_examples() {
        let k = rc(2, 0.0);
        assert!(rel(exact_expected_x(&k, 2, 2).unwrap(), 2.0) < 1e-14);
        assert!(rel(exact_expected_x(&k, 2, 4).unwrap(), 2.916_666_666_666_667) < 1e-13);
        assert!(
            rel(
                exact_expected_x(&k, 2, 1000).unwrap(),
                47.570_696_388_944_86
            ) < 1e-12
        );
        assert!(exact_expected_x(&k, 1, 10).is_err());
        assert!(exact_expected_x(&k, 5, 4).is_err());
    }

    /// Independent route: the telescoping product `(c + delta) prod_{k=i}^{n-1} (k + gamma) / k`.
    #[test]
    fn short_spans_are_exact() {
        let k = rc(2, 0.0);
        assert_eq!(exact_expected_y(&k, 2, 3, 3).unwrap(), 5.0);
        assert_eq!(exact_expected_x(&k, 2, 3).unwrap(), 2.5);
        // both branches agree where they meet
        let far = exact_expected_y(&k, 2, 3, 3 + DIRECT_PRODUCT_SPAN + 1).unwrap();
        let near = exact_expected_y(&k, 2, 3, 3 + DIRECT_PRODUCT_SPAN).unwrap();
        let n = (3 + DIRECT_PRODUCT_SPAN) as f64;
        let step = (n + k.gamma1) * (n + k.gamma2) / (n * n);
        assert!(rel(far, near * step) < 1e-12);
    }

    #[test]
    fn expected_x_matches_product_recursion() {
        for (c, delta) in [(2, 0.0), (3, -2.5), (5, 4.0)] {
            let k = rc(c, delta);
            for i in [2u64, 7, 30] {
                let mut prod = f64::from(c) + delta;
                for n in i..3000 {
                    if n % 97 == 0 || n == i {
                        assert!(rel(exact_expected_x(&k, i, n).unwrap(), prod) < 1e-11);
                    }
                    prod *= (n as f64 + k.gamma) / n as f64;
                }
            }
        }
    }

    #[test]
    fn expected_y_examples() {
        let k = rc(2, 0.0);
        assert!(rel(exact_expected_y(&k, 2, 3, 3).unwrap(), 5.0) < 1e-13);
        assert!(rel(c_ij(&k, 2, 3).unwrap(), 1.737_414_919_044_297_7) < 1e-13);
        assert!(
            rel(
                exact_expected_y(&k, 2, 3, 10).unwrap(),
                17.158_368_615_237_518
            ) < 1e-12
        );
        assert!(
            rel(
                exact_expected_y(&k, 2, 3, 100).unwrap(),
                173.524_451_170_426_27
            ) < 1e-12
        );
        assert!(
            rel(
                exact_expected_y(&k, 2, 3, 1000).unwrap(),
                1_737.197_755_756_929_6
            ) < 1e-12
        );
        let ratio = exact_expected_y(&k, 2, 3, 1_000_000).unwrap() / 1e6 / c_ij(&k, 2, 3).unwrap();
        assert!((ratio - 1.0).abs() < 1e-5);
    }

    /// Independent route: `E[Y(j)] * prod_{k=j}^{n-1} (k + gamma1)(k + gamma2) / k^2`.
    #[test]
    fn expected_y_matches_product_recursion() {
        for (c, delta) in [(2, 0.0), (3, -1.0), (4, 2.5)] {
            let k = rc(c, delta);
            for (i, j) in [(2u64, 3u64), (5, 11), (10, 20)] {
                let at_creation = expected_y_at_creation(&k, i, j).unwrap();
                assert!(rel(exact_expected_y(&k, i, j, j).unwrap(), at_creation) < 1e-12);
                let mut prod = at_creation;
                for n in j..2000 {
                    if n % 101 == 0 {
                        assert!(rel(exact_expected_y(&k, i, j, n).unwrap(), prod) < 1e-11);
                    }
                    let nf = n as f64;
                    prod *= (nf + k.gamma1) * (nf + k.gamma2) / (nf * nf);
                }
            }
        }
    }

    #[test]
    fn limit_coefficient_examples() {
        let k = rc(2, 0.0);
        let v = limit_coefficient_mean(&k, 2, 3).unwrap();
        assert!(rel(v.value, 0.217_176_864_880_537_2) < 1e-13);
        assert!(!v.node_one_caveat);
        let v = limit_coefficient_mean(&k, 1, 2).unwrap();
        assert!(rel(v.value, 0.399_062_489_217_987_1) < 1e-13);
        assert!(v.node_one_caveat);
        assert_eq!(
            limit_coefficient_mean(&rc(1, 0.5), 2, 3).unwrap().value,
            0.0
        );
    }

    #[test]
    fn common_friend_growth_sum() {
        let k = rc(2, 0.0);
        let s = exact_common_friend_growth_c2(&k, 2, 3, 3, 1000).unwrap();
        assert!(rel(s, 1.289_134_413_567_014_8) < 1e-11);
        assert_eq!(exact_common_friend_growth_c2(&k, 2, 3, 3, 3).unwrap(), 0.0);
        assert!(exact_common_friend_growth_c2(&rc(3, 0.0), 2, 3, 3, 10).is_err());
    }

    #[test]
    fn estimator_factor() {
        assert_eq!(rc(2, 1.5).estimator_factor(4.0), 1.0);
        assert_eq!(rc(2, 0.0).estimator_factor(4.0), 1.0);
        assert!(rel(rc(2, -1.5).estimator_factor(4.0), 2.297_396_709_994_07) < 1e-13);
    }
}
