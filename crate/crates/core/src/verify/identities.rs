//! Deterministic checks: envelope of the one-step probability, the product
//! expectation against direct enumeration, the martingale property and the
//! Γ-form telescoping identities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, CheckKind, CheckResult, Tolerances};
use crate::error::Result;
use crate::theory::{
    self, conditional_product_expectation, gamma_ratio, increment_bounds, increment_probability,
    martingale_statistic, RegimeConstants,
};

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Multinomial `(c; p_i, p_j, 1 - p_i - p_j)` mass at `(k, l)`, from factorials.
fn multinomial_pmf(c: u32, k: u32, l: u32, p_i: f64, p_j: f64) -> f64 {
    let fact = |m: u32| (1..=m).map(f64::from).product::<f64>();
    let rest = c - k - l;
    fact(c) / (fact(k) * fact(l) * fact(rest))
        * p_i.powi(k as i32)
        * p_j.powi(l as i32)
        * (1.0 - p_i - p_j).powi(rest as i32)
}

/// `sum_{k + l <= c} f(k, l) P(k, l)`.
fn enumerate<F: Fn(u32, u32) -> f64>(c: u32, p_i: f64, p_j: f64, f: F) -> f64 {
    let mut total = 0.0;
    for k in 0..=c {
        for l in 0..=(c - k) {
            total += f(k, l) * multinomial_pmf(c, k, l, p_i, p_j);
        }
    }
    total
}

fn sandwich_checks(tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut c2_mismatches = 0u32;
    let mut cells = 0u32;
    for c in 2..=6u32 {
        for a in 0..=50u32 {
            for b in 0..=50u32 {
                let (p_i, p_j) = (f64::from(a) / 100.0, f64::from(b) / 100.0);
                let q = increment_probability(p_i, p_j, c)?;
                let bounds = increment_bounds(p_i, p_j, c)?;
                cells += 1;
                let below = (bounds.lower - q).max(0.0) / q.max(f64::MIN_POSITIVE);
                let above = (q - bounds.upper).max(0.0) / bounds.upper.max(f64::MIN_POSITIVE);
                let v = below.max(above);
                if v > worst {
                    worst = v;
                    worst_at = format!("c={c}, p_i={p_i}, p_j={p_j}");
                }
                if c == 2 && !(bounds.lower == q && q == bounds.upper) {
                    c2_mismatches += 1;
                }
            }
        }
    }
    let mut out = vec![
        CheckResult::max_error("sandwich_grid", worst, tol.identity_rel).with_detail(format!(
            "{cells} cells, c = 2..6, p in 0..0.5 by 0.01; worst at {worst_at}"
        )),
    ];

    let mut eq = CheckResult::new("sandwich_equality_c2", CheckKind::Hard);
    eq.target = 0.0;
    eq.achieved = f64::from(c2_mismatches);
    eq.tolerance = 0.0;
    eq.rule = "cells where lower, exact and upper differ == 0".into();
    eq.passed = c2_mismatches == 0;
    out.push(eq);

    let q = increment_probability(0.1, 0.1, 3)?;
    let b = increment_bounds(0.1, 0.1, 3)?;
    let err = rel_err(q, 0.054)
        .max(rel_err(b.lower, 0.054))
        .max(rel_err(b.upper, 0.06));
    let mut r = CheckResult::max_error("sandwich_example_c3", err, tol.identity_rel);
    r.passed &= b.lower <= q * (1.0 + tol.identity_rel) && q < b.upper;
    out.push(r.with_detail(format!(
        "lower {:.17}, exact {q:.17}, upper {:.17}",
        b.lower, b.upper
    )));
    Ok(out)
}

struct RandomState {
    rc: RegimeConstants,
    n: u64,
    x_i: f64,
    x_j: f64,
}

fn random_states(seed: u64, count: usize) -> Result<Vec<RandomState>> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut states = Vec::with_capacity(count);
    for idx in 0..count {
        let c = 2 + (idx % 4) as u32;
        let cf = f64::from(c);
        let delta = rng.gen_range((-cf + 0.01)..3.0);
        let rc = RegimeConstants::from_raw(c, delta)?;
        let n: u64 = rng.gen_range(3..=10_000);
        // degrees in [c, c + n] keep p_i + p_j <= 1 for every admissible delta
        let d_i = c as u64 + rng.gen_range(0..=n);
        let d_j = c as u64 + rng.gen_range(0..=n);
        states.push(RandomState {
            rc,
            n,
            x_i: d_i as f64 + delta,
            x_j: d_j as f64 + delta,
        });
    }
    Ok(states)
}

fn enumeration_checks(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let states = random_states(seed, 100)?;
    let mut worst_product = 0.0f64;
    let mut worst_martingale = 0.0f64;
    for s in &states {
        let denom = s.rc.weight_per_node() * s.n as f64;
        let (p_i, p_j) = (s.x_i / denom, s.x_j / denom);
        let c = s.rc.c;

        let enumerated = enumerate(c, p_i, p_j, |k, l| {
            (s.x_i + f64::from(k)) * (s.x_j + f64::from(l))
        });
        let formula = conditional_product_expectation(&s.rc, s.x_i, s.x_j, s.n)?;
        worst_product = worst_product.max(rel_err(enumerated, formula));

        let c_ij = theory::c_ij(&s.rc, 2, 3)?;
        let now = martingale_statistic(&s.rc, s.x_i * s.x_j, s.n, c_ij)?;
        let w_next = |k: u32, l: u32| {
            let y = (s.x_i + f64::from(k)) * (s.x_j + f64::from(l));
            martingale_statistic(&s.rc, y, s.n + 1, c_ij).unwrap_or(f64::NAN)
        };
        let next_mean = enumerate(c, p_i, p_j, w_next);
        worst_martingale = worst_martingale.max(rel_err(next_mean, now));
    }
    Ok(vec![
        CheckResult::max_error(
            "product_expectation_enumeration",
            worst_product,
            tol.enumeration_rel,
        )
        .with_detail("100 random states, c = 2..5"),
        CheckResult::max_error("martingale_one_step", worst_martingale, tol.identity_rel)
            .with_detail("100 random states, c = 2..5"),
    ])
}

fn telescoping_checks(tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let grid = [
        (2u32, 0.0),
        (2, 1.5),
        (2, -1.5),
        (3, -1.0),
        (4, 2.5),
        (5, -4.5),
    ];
    let nodes = [2u64, 3, 10, 100];
    let mut at_creation = 0.0f64;
    let mut y_creation = 0.0f64;
    let mut recursion = 0.0f64;
    for (c, delta) in grid {
        let rc = RegimeConstants::from_raw(c, delta)?;
        let start = f64::from(c) + delta;
        for &i in &nodes {
            at_creation = at_creation.max(rel_err(theory::exact_expected_x(&rc, i, i)?, start));
            for n in [i, i + 1, 5 * i, 1000] {
                let now = theory::exact_expected_x(&rc, i, n)?;
                let next = theory::exact_expected_x(&rc, i, n + 1)?;
                recursion = recursion.max(rel_err(next, now * (1.0 + rc.gamma / n as f64)));
            }
            for &j in nodes.iter().filter(|&&j| j > i) {
                let closed = theory::exact_expected_y(&rc, i, j, j)?;
                let direct = start * start * gamma_ratio(j as f64, rc.gamma)?
                    / gamma_ratio(i as f64, rc.gamma)?;
                y_creation = y_creation.max(rel_err(closed, direct));
                for n in [j, 2 * j, 1000] {
                    let now = theory::exact_expected_y(&rc, i, j, n)?;
                    let next = theory::exact_expected_y(&rc, i, j, n + 1)?;
                    let nf = n as f64;
                    let step = (nf + rc.gamma1) * (nf + rc.gamma2) / (nf * nf);
                    recursion = recursion.max(rel_err(next, now * step));
                }
            }
        }
    }
    let mut inverse = 0.0f64;
    for n in [0.3, 1.0, 2.0, 17.5, 1e3, 1e6, 1e9] {
        for a in [-0.2, 0.146, 0.5, 0.8536, 1.7] {
            if n + a > 0.0 {
                inverse = inverse.max((gamma_ratio(n, a)? * gamma_ratio(n + a, -a)? - 1.0).abs());
            }
        }
    }
    Ok(vec![
        CheckResult::max_error("telescoping_x_at_creation", at_creation, tol.identity_rel),
        CheckResult::max_error("telescoping_y_at_creation", y_creation, tol.identity_rel),
        CheckResult::max_error("one_step_mean_recursions", recursion, tol.identity_rel),
        CheckResult::max_error("gamma_ratio_inverse", inverse, tol.identity_rel),
    ])
}

/// All deterministic identities. `seed` only picks the random states of the
/// enumeration checks.
pub fn check_identities(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let mut out = sandwich_checks(tol)?;
    out.extend(enumeration_checks(seed, tol)?);
    out.extend(telescoping_checks(tol)?);
    Ok(out)
}
