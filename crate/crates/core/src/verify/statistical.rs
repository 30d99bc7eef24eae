//! Monte Carlo checks against exact finite-n expectations and regime proxies.

use serde::{Deserialize, Serialize};

use super::{derive_seed, CheckKind, CheckResult, Tolerances};
use crate::error::{Error, Result};
use crate::graph::GraphState;
use crate::montecarlo::{run_replicates, summarize, ExperimentConfig, ReplicateRecord};
use crate::params::{ModelParams, Regime};
use crate::stats::{correlation, Summary};
use crate::theory::{self, RegimeConstants};
use crate::tracker::{self, common_friends_bruteforce, PairTracker};

fn params(c: u32, delta: f64) -> Result<ModelParams> {
    ModelParams::new(c, delta)
}

fn pair_points(
    records: &[ReplicateRecord],
    pair_idx: usize,
    n: u64,
) -> Vec<&tracker::TrajectoryPoint> {
    records
        .iter()
        .map(|r| r.pairs[pair_idx].at(n).expect("checkpoint recorded"))
        .collect()
}

fn common_friend_gain(
    records: &[ReplicateRecord],
    pair_idx: usize,
    from: u64,
    to: u64,
) -> Vec<f64> {
    pair_points(records, pair_idx, to)
        .iter()
        .zip(pair_points(records, pair_idx, from))
        .map(|(late, early)| late.n_ij as f64 - early.n_ij as f64)
        .collect()
}

/// Mean of `X_i` and `Y_ij` at every checkpoint against the exact finite-n
/// expectations, for `c = 2, delta = 0`, pair (2, 3), `R = 5000`; plus the
/// exact common-friend gain and the zero-variance value at creation.
pub fn check_exact_means(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let mut out = vec![check_creation_values(seed, tol)?];
    let config = ExperimentConfig::new(
        params(2, 0.0)?,
        vec![(2, 3)],
        1000,
        5000,
        derive_seed(seed, 3),
    )
    .with_checkpoints(vec![3, 10, 100, 1000]);
    let records = run_replicates(&config)?;
    let rc = RegimeConstants::new(&config.params);
    for n in config.effective_checkpoints() {
        let pts = pair_points(&records, 0, n);
        let x = Summary::of(&pts.iter().map(|p| p.x_i).collect::<Vec<_>>());
        let y = Summary::of(&pts.iter().map(|p| p.y_ij).collect::<Vec<_>>());
        out.push(CheckResult::within_z(
            format!("mean_x2_n{n}"),
            theory::exact_expected_x(&rc, 2, n)?,
            x.mean,
            x.se,
            tol.z,
        ));
        out.push(CheckResult::within_z(
            format!("mean_y23_n{n}"),
            theory::exact_expected_y(&rc, 2, 3, n)?,
            y.mean,
            y.se,
            tol.z,
        ));
    }
    out.extend(check_common_friend_mean_c2(&config, &records, tol)?);
    Ok(out)
}

/// `X_i(i) = c + delta` in every replicate and equal to the exact mean.
fn check_creation_values(seed: u64, tol: &Tolerances) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for (c, delta) in [(2u32, 0.0), (3, -1.5), (4, 2.0)] {
        let p = params(c, delta)?;
        let rc = RegimeConstants::new(&p);
        let start = f64::from(c) + delta;
        for r in 0..20 {
            let mut state = GraphState::with_stream(p, derive_seed(seed, 2), r);
            for i in 2..=6usize {
                state.grow_to(i)?;
                let x = state.shifted_degree(i);
                let exact = theory::exact_expected_x(&rc, i as u64, i as u64)?;
                worst = worst
                    .max(((x - start) / start).abs())
                    .max(((exact - start) / start).abs());
            }
        }
    }
    Ok(
        CheckResult::max_error("x_at_creation", worst, tol.identity_rel)
            .with_detail("nodes 2..6, 20 replicates each of (2, 0), (3, -1.5), (4, 2)"),
    )
}

/// Mean of `N_ij(n) - N_ij(j)` against the exact telescoped sum (`c = 2` only).
pub fn check_common_friend_mean_c2(
    config: &ExperimentConfig,
    records: &[ReplicateRecord],
    tol: &Tolerances,
) -> Result<Vec<CheckResult>> {
    if config.params.c() != 2 {
        return Err(Error::domain(format!(
            "the exact common-friend mean needs c = 2, got c = {}; use the bound check",
            config.params.c()
        )));
    }
    let rc = RegimeConstants::new(&config.params);
    let to = config.n_max as u64;
    let mut out = Vec::new();
    for (idx, &(i, j)) in config.pairs.iter().enumerate() {
        let from = j as u64;
        let gain = Summary::of(&common_friend_gain(records, idx, from, to));
        let exact = theory::exact_common_friend_growth_c2(&rc, i as u64, j as u64, from, to)?;
        out.push(
            CheckResult::within_z(
                format!("common_friend_mean_c2_{i}_{j}"),
                exact,
                gain.mean,
                gain.se,
                tol.z,
            )
            .with_detail(format!("N({to}) - N({from})")),
        );
    }
    Ok(out)
}

fn one_sided(
    name: &str,
    target: f64,
    achieved: f64,
    slack: f64,
    at_least: bool,
    se: f64,
    z: f64,
) -> CheckResult {
    let mut r = CheckResult::new(name, CheckKind::Statistical);
    r.target = target;
    r.achieved = achieved;
    r.tolerance = slack;
    if at_least {
        r.rule = format!("achieved >= target - {z} se, se = {se:.6e}");
        r.passed = achieved >= target - slack;
    } else {
        r.rule = format!("achieved <= target + {z} se, se = {se:.6e}");
        r.passed = achieved <= target + slack;
    }
    r
}

/// `c = 3` envelope check: the mean common-friend gain lies between the
/// Monte Carlo mean of the summed lower envelope and the closed-form mean of
/// the summed upper envelope, and matches the summed exact probabilities.
pub fn check_common_friend_bounds(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let (i, j, n) = (2u64, 3u64, 1000u64);
    let config = ExperimentConfig::new(
        params(3, 0.0)?,
        vec![(2, 3)],
        n as usize,
        2000,
        derive_seed(seed, 4),
    )
    .with_checkpoints(vec![j, n]);
    let records = run_replicates(&config)?;
    let rc = RegimeConstants::new(&config.params);
    let gain = common_friend_gain(&records, 0, j, n);
    let ends = pair_points(&records, 0, n);
    let diff = |f: &dyn Fn(&tracker::TrajectoryPoint) -> f64| -> Summary {
        Summary::of(
            &gain
                .iter()
                .zip(&ends)
                .map(|(g, p)| g - f(p))
                .collect::<Vec<_>>(),
        )
    };

    let lower = Summary::of(&ends.iter().map(|p| p.sums.lower).collect::<Vec<_>>());
    let vs_lower = diff(&|p| p.sums.lower);
    let g = Summary::of(&gain);
    let upper_exact = theory::expected_upper_increment_sum(&rc, i, j, j, n)?;
    let vs_q = diff(&|p| p.sums.q);

    let mut out = vec![
        one_sided(
            "common_friend_lower_envelope_c3",
            lower.mean,
            g.mean,
            tol.z * vs_lower.se,
            true,
            vs_lower.se,
            tol.z,
        ),
        one_sided(
            "common_friend_upper_envelope_c3",
            upper_exact,
            g.mean,
            tol.z * g.se,
            false,
            g.se,
            tol.z,
        ),
    ];
    let q_mean = g.mean - vs_q.mean;
    out.push(
        CheckResult::within_z(
            "common_friend_compensator_c3",
            q_mean,
            g.mean,
            vs_q.se,
            tol.z,
        )
        .with_detail("gain against the summed exact one-step probabilities"),
    );
    Ok(out)
}

/// Power-law fit of the mean common-friend gain over successive doublings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingFit {
    pub times: Vec<u64>,
    /// Mean of `N(times[m+1]) - N(times[m])`.
    pub increments: Vec<f64>,
    /// Least-squares slope of `ln increment` on `ln times[m]`.
    pub exponent: f64,
    /// Delta-method standard error of the slope.
    pub se: f64,
}

impl DoublingFit {
    /// Sign of the exponent outside a `z * se` dead zone.
    pub fn verdict(&self, z: f64) -> Option<Regime> {
        if !(self.exponent.is_finite() && self.se.is_finite()) {
            None
        } else if self.exponent < -z * self.se {
            Some(Regime::Static)
        } else if self.exponent > z * self.se {
            Some(Regime::Power)
        } else {
            Some(Regime::Logarithmic)
        }
    }
}

/// Fits `E[N(t_{m+1}) - N(t_m)] ~ t_m^e` across the recorded `times`.
///
/// The standard error linearises the slope around the mean increments and
/// evaluates it per replicate, which keeps the correlation between
/// increments of the same trajectory.
pub fn doubling_exponent(
    records: &[ReplicateRecord],
    pair_idx: usize,
    times: &[u64],
) -> Result<DoublingFit> {
    if times.len() < 3 {
        return Err(Error::invalid(
            "need at least three times to fit a growth exponent",
        ));
    }
    let m = times.len() - 1;
    let gains: Vec<Vec<f64>> = (0..m)
        .map(|k| common_friend_gain(records, pair_idx, times[k], times[k + 1]))
        .collect();
    let increments: Vec<f64> = gains.iter().map(|g| Summary::of(g).mean).collect();
    let xs: Vec<f64> = times[..m].iter().map(|&t| (t as f64).ln()).collect();
    let x_bar = xs.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - x_bar).powi(2)).sum();
    let weights: Vec<f64> = xs.iter().map(|x| (x - x_bar) / sxx).collect();
    let exponent: f64 = weights
        .iter()
        .zip(&increments)
        .map(|(w, d)| w * d.ln())
        .sum();
    let linear: Vec<f64> = (0..records.len())
        .map(|r| {
            (0..m)
                .map(|k| weights[k] * gains[k][r] / increments[k])
                .sum()
        })
        .collect();
    let se = if increments.iter().all(|&d| d > 0.0) {
        Summary::of(&linear).se
    } else {
        f64::NAN
    };
    Ok(DoublingFit {
        times: times.to_vec(),
        increments,
        exponent,
        se,
    })
}

fn relative_change(a: f64, b: f64) -> f64 {
    ((b - a) / a).abs()
}

/// Regime proxies for `delta = 1.5, 0, -1.5` at `c = 2`, pair (2, 3).
pub fn check_regimes(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let times: Vec<u64> = (0..8).map(|m| 125u64 << m).collect();
    let n_max = *times.last().unwrap();
    let mut out = Vec::new();
    for (tag, delta) in [(5u64, 1.5), (6, 0.0), (7, -1.5)] {
        let config = ExperimentConfig::new(
            params(2, delta)?,
            vec![(2, 3)],
            n_max as usize,
            1000,
            derive_seed(seed, tag),
        )
        .with_checkpoints(times.clone());
        let records = run_replicates(&config)?;
        let rc = RegimeConstants::new(&config.params);
        let regime = rc.regime;
        let fit = doubling_exponent(&records, 0, &times)?;
        let increments = fit
            .increments
            .iter()
            .map(|d| format!("{d:.4}"))
            .collect::<Vec<_>>()
            .join(", ");

        let verdict = fit.verdict(tol.z);
        let mut v = CheckResult::new(
            format!("regime_verdict_{}", regime.as_str()),
            CheckKind::Statistical,
        );
        v.target = rc.power_exponent();
        v.achieved = fit.exponent;
        v.tolerance = tol.z * fit.se;
        v.rule = format!(
            "sign of the doubling exponent outside {} se (se = {:.4}) must give '{}'",
            tol.z,
            fit.se,
            regime.as_str()
        );
        v.passed = verdict == Some(regime);
        out.push(v.with_detail(format!(
            "delta = {delta}, verdict = {}, mean gains per doubling from n = {}: [{increments}]",
            verdict.map_or("undetermined", Regime::as_str),
            times[0]
        )));
        out.push(CheckResult::within_z(
            format!("doubling_exponent_{}", regime.as_str()),
            rc.power_exponent(),
            fit.exponent,
            fit.se,
            tol.z,
        ));

        match regime {
            Regime::Static => {
                let d = &fit.increments;
                let mut r = CheckResult::new("static_gains_decrease", CheckKind::Monitor);
                r.target = d[3];
                r.achieved = d[4];
                r.tolerance = 0.0;
                r.rule = "mean gain over 2000..4000 < mean gain over 1000..2000".into();
                r.passed = d[4] < d[3];
                out.push(r);
            }
            Regime::Logarithmic => {
                let (n1, n2) = (1000u64, n_max);
                let width = (n2 as f64 / n1 as f64).ln();
                let gain = Summary::of(&common_friend_gain(&records, 0, n1, n2));
                let exact = theory::exact_common_friend_growth_c2(&rc, 2, 3, n1, n2)? / width;
                out.push(
                    CheckResult::within_z(
                        "log_slope_vs_exact",
                        exact,
                        gain.mean / width,
                        gain.se / width,
                        tol.z,
                    )
                    .with_detail(format!("(mean N({n2}) - mean N({n1})) / ln({n2}/{n1})")),
                );
                let asymptote = theory::limit_coefficient_mean(&rc, 2, 3)?.value;
                let mut r = CheckResult::within_z(
                    "log_slope_asymptote",
                    asymptote,
                    gain.mean / width,
                    gain.se / width,
                    tol.z,
                );
                r.kind = CheckKind::Monitor;
                out.push(r.with_detail("limit slope; convergence in the log regime is slow"));
            }
            Regime::Power => {
                let (n1, n2) = (times[times.len() - 2], n_max);
                let scaled = |n: u64| -> Vec<f64> {
                    pair_points(&records, 0, n)
                        .iter()
                        .map(|p| tracker::scaled(p.n_ij, n, &rc).value)
                        .collect()
                };
                let (s1, s2) = (scaled(n1), scaled(n2));
                let ratio = Summary::of(&s2).mean / Summary::of(&s1).mean;
                out.push(
                    CheckResult::within_band(
                        "power_scaled_stability",
                        CheckKind::Statistical,
                        ratio,
                        tol.power_ratio_band,
                    )
                    .with_detail(format!("mean scaled statistic at n = {n2} over n = {n1}")),
                );
                let limit: Vec<f64> = pair_points(&records, 0, n2)
                    .iter()
                    .map(|p| {
                        rc.pair_rate() * tracker::limit_estimate(p.x_i, p.x_j, n2, &rc).y_inf_hat
                    })
                    .collect();
                out.push(
                    CheckResult::above(
                        "power_scaled_correlation",
                        CheckKind::Statistical,
                        correlation(&s2, &limit),
                        tol.power_correlation_min,
                    )
                    .with_detail(format!(
                        "per-replicate scaled statistic against the plug-in limit at n = {n2}"
                    )),
                );
                out.push(late_pair_stability(seed, tol)?);
            }
        }
        if regime != Regime::Static {
            out.extend(cesaro_monitors(
                &records,
                &rc,
                times[times.len() - 2],
                n_max,
                tol,
            ));
        }
    }
    Ok(out)
}

/// The same stability ratio for pair (10, 20) over n = 250, 500, reported
/// only: the count present when node 20 arrives still dominates there.
fn late_pair_stability(seed: u64, tol: &Tolerances) -> Result<CheckResult> {
    let config = ExperimentConfig::new(
        params(2, -1.5)?,
        vec![(10, 20)],
        500,
        1000,
        derive_seed(seed, 8),
    )
    .with_checkpoints(vec![250, 500]);
    let summary = summarize(&config, &run_replicates(&config)?)?;
    let pair = &summary.pairs[0];
    let ratio = pair.at(500).unwrap().scaled.mean / pair.at(250).unwrap().scaled.mean;
    Ok(CheckResult::within_band(
        "power_scaled_stability_10_20_n250_500",
        CheckKind::Monitor,
        ratio,
        tol.power_ratio_band,
    )
    .with_detail("mean scaled statistic at n = 500 over n = 250"))
}

/// Cesàro averages of `Y_ij(k) / k^2`, normalised like `N_ij`, over the
/// trajectory's plug-in limit; monitored for stabilisation.
fn cesaro_monitors(
    records: &[ReplicateRecord],
    rc: &RegimeConstants,
    n1: u64,
    n2: u64,
    tol: &Tolerances,
) -> Vec<CheckResult> {
    // median: a few trajectories with a tiny plug-in limit dominate the mean
    let median_ratio = |n: u64, star: bool| -> f64 {
        let values: Vec<f64> = pair_points(records, 0, n)
            .iter()
            .map(|p| {
                let sum = if star {
                    p.sums.ystar_over_k2
                } else {
                    p.sums.y_over_k2
                };
                sum / rc.normalizer(n) / tracker::limit_estimate(p.x_i, p.x_j, n, rc).y_inf_hat
            })
            .collect();
        Summary::of(&values).median
    };
    [false, true]
        .into_iter()
        .map(|star| {
            let (a, b) = (median_ratio(n1, star), median_ratio(n2, star));
            let name = format!(
                "cesaro{}_{}",
                if star { "_star" } else { "" },
                rc.regime.as_str()
            );
            let mut r = CheckResult::new(name, CheckKind::Monitor);
            r.target = 0.0;
            r.achieved = relative_change(a, b);
            r.tolerance = tol.cesaro_relative_change_max;
            r.rule = format!(
                "relative change over n = {n1}, {n2} < {}",
                tol.cesaro_relative_change_max
            );
            r.passed = r.achieved < tol.cesaro_relative_change_max;
            r.with_detail(format!(
                "median of normalised sum over plug-in limit: {a:.4} -> {b:.4}"
            ))
        })
        .collect()
}

/// Subsample estimator at `c = 2, delta = 1.5`, pair (10, 20),
/// `n = 1000, 2000, 4000`, `k = 2, 4`, `R = 500`.
pub fn check_estimator(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let ns = [1000u64, 2000, 4000];
    let config = ExperimentConfig::new(
        params(2, 1.5)?,
        vec![(10, 20)],
        4000,
        500,
        derive_seed(seed, 9),
    )
    .with_checkpoints(ns.to_vec())
    .with_estimator_k(vec![2.0, 4.0]);
    let records = run_replicates(&config)?;
    let summary = summarize(&config, &records)?;
    let pair = &summary.pairs[0];
    let mut out = Vec::new();
    for (ki, &k) in config.estimator_k.iter().enumerate() {
        let iqrs: Vec<f64> = ns
            .iter()
            .map(|&n| pair.at(n).unwrap().ratios[ki].ratio.iqr())
            .collect();
        let mut r = CheckResult::new(
            format!("estimator_iqr_shrinks_k{k}"),
            CheckKind::Statistical,
        );
        r.target = iqrs[1];
        r.achieved = iqrs[2];
        r.tolerance = 0.0;
        r.rule = "iqr of N / N_hat strictly decreasing over n = 1000, 2000, 4000".into();
        r.passed = iqrs[0] > iqrs[1] && iqrs[1] > iqrs[2];
        let moved: Vec<String> = ns
            .iter()
            .map(|&n| {
                let rs = &pair.at(n).unwrap().ratios[ki];
                format!(
                    "{:.3} of {}",
                    moved_fraction(&records, n, rs.subsample_n),
                    rs.conditioned
                )
            })
            .collect();
        out.push(r.with_detail(format!(
            "iqr = {iqrs:?}; share of conditioned replicates with ratio != 1: [{}]",
            moved.join(", ")
        )));
    }
    let median = pair.at(4000).unwrap().ratios[0].ratio.median;
    out.push(CheckResult::within_band(
        "estimator_median_n4000_k2",
        CheckKind::Statistical,
        median,
        tol.estimator_median_band,
    ));
    for &n in &ns {
        let rs = &pair.at(n).unwrap().ratios[0];
        let mut r = CheckResult::new(
            format!("estimator_conditioning_n{n}_k2"),
            CheckKind::Monitor,
        );
        r.target = 0.0;
        r.achieved = rs.conditioning_rate;
        r.tolerance = 0.0;
        r.rule = "share of replicates with a positive estimate, reported".into();
        r.passed = rs.conditioned > 0;
        out.push(r);
    }

    let power = RegimeConstants::from_raw(2, -1.5)?;
    let rescaled = tracker::estimate(5, 4.0, &power)?;
    let expected = 5.0 * 4f64.powf(0.6);
    out.push(CheckResult::max_error(
        "estimator_power_rescaling",
        ((rescaled - expected) / expected).abs(),
        tol.identity_rel,
    ));
    let static_rc = RegimeConstants::from_raw(2, 1.5)?;
    let worst = (1..=20u64)
        .map(|m| (m as f64 / tracker::estimate(m, 2.0, &static_rc).unwrap_or(f64::NAN) - 1.0).abs())
        .fold(0.0, f64::max);
    out.push(CheckResult::max_error(
        "estimator_no_growth_ratio_one",
        worst,
        tol.identity_rel,
    ));
    Ok(out)
}

fn moved_fraction(records: &[ReplicateRecord], n: u64, sub_n: u64) -> f64 {
    let pairs: Vec<(u64, u64)> = records
        .iter()
        .map(|r| {
            (
                r.pairs[0].at(n).unwrap().n_ij,
                r.pairs[0].at(sub_n).unwrap().n_ij,
            )
        })
        .filter(|&(_, early)| early > 0)
        .collect();
    if pairs.is_empty() {
        return f64::NAN;
    }
    pairs.iter().filter(|(late, early)| late != early).count() as f64 / pairs.len() as f64
}

/// Common-friend histogram at `c = 2, delta = -1.5`, pair (10, 20),
/// `n = 500`, `R = 2500`, plus a step-by-step recount on the first replicates.
pub fn check_heavy_tail(seed: u64, tol: &Tolerances) -> Result<Vec<CheckResult>> {
    let (i, j, n) = (10usize, 20usize, 500usize);
    let master = derive_seed(seed, 10);
    let config = ExperimentConfig::new(params(2, -1.5)?, vec![(i, j)], n, 2500, master);
    let summary = summarize(&config, &run_replicates(&config)?)?;
    let at_n = summary.pairs[0].at(n as u64).unwrap();
    let s = at_n.n_ij;
    let max_over_median = if s.median > 0.0 {
        s.max / s.median
    } else if s.max > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let histogram = at_n
        .n_ij_histogram
        .counts
        .iter()
        .map(u64::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    let mut out = vec![
        CheckResult::above(
            "heavy_tail_skewness",
            CheckKind::Statistical,
            s.skewness,
            tol.heavy_tail_skewness_min,
        )
        .with_detail(format!("counts of N = 0, 1, ...: {histogram}")),
        CheckResult::above(
            "heavy_tail_max_over_median",
            CheckKind::Statistical,
            max_over_median,
            tol.heavy_tail_max_over_median_min,
        )
        .with_detail(format!("max {}, median {}", s.max, s.median)),
    ];

    let mut violations = 0u64;
    let replicates = 25u64;
    for r in 0..replicates {
        let mut state = GraphState::with_stream(config.params, master, r);
        state.grow_to(j)?;
        let mut t = PairTracker::init_pair(&state, i, j)?;
        if t.n_ij() != common_friends_bruteforce(&state, i, j)? {
            violations += 1;
        }
        while state.n() < n {
            let before = t.n_ij();
            let outcome = state.step();
            t.on_step(&outcome);
            let step = t.n_ij() - before;
            if step > 1 || t.n_ij() != common_friends_bruteforce(&state, i, j)? {
                violations += 1;
            }
        }
    }
    let mut r = CheckResult::new("trajectory_steps_zero_or_one", CheckKind::Hard);
    r.target = 0.0;
    r.achieved = violations as f64;
    r.tolerance = 0.0;
    r.rule = "steps with an increment outside {0, 1} or a recount mismatch == 0".into();
    r.passed = violations == 0;
    out.push(r.with_detail(format!(
        "first {replicates} replicates, every step from n = {j} to {n}"
    )));
    Ok(out)
}
