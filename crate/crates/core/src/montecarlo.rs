//! Replicated simulation with pair trackers attached.
//!
//! Replicate `r` runs on ChaCha stream `r` of the master seed, so every
//! replicate is reproducible on its own and results do not depend on how
//! replicates are scheduled across threads. Aggregation walks the replicate
//! records in id order.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export;
use crate::graph::{GraphState, NodeId};
use crate::params::ModelParams;
use crate::stats::{IntegerHistogram, Summary, UniformHistogram};
use crate::theory::RegimeConstants;
use crate::tracker::{self, CheckpointSchedule, TrackerSet, TrajectoryPoint};

/// Upper bound on retained trajectory points across all replicates.
const MAX_RETAINED_POINTS: usize = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    pub pairs: Vec<(usize, usize)>,
    pub n_max: usize,
    /// Sorted times at which the summary is taken; empty means `[n_max]`.
    pub checkpoints: Vec<u64>,
    pub replicates: usize,
    pub master_seed: u64,
    /// Subsample factors `k > 1` for the estimator ratio.
    pub estimator_k: Vec<f64>,
    /// Permits pairs involving node 1, whose formulas carry a caveat.
    pub allow_node_one: bool,
    pub ratio_bins: usize,
    pub ratio_range: (f64, f64),
}

impl ExperimentConfig {
    pub fn new(
        params: ModelParams,
        pairs: Vec<(usize, usize)>,
        n_max: usize,
        replicates: usize,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            params,
            pairs,
            n_max,
            checkpoints: Vec::new(),
            replicates,
            master_seed,
            estimator_k: Vec::new(),
            allow_node_one: false,
            ratio_bins: 50,
            ratio_range: (0.0, 3.0),
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<u64>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn with_estimator_k(mut self, ks: Vec<f64>) -> Self {
        self.estimator_k = ks;
        self
    }

    pub fn effective_checkpoints(&self) -> Vec<u64> {
        if self.checkpoints.is_empty() {
            vec![self.n_max as u64]
        } else {
            self.checkpoints.clone()
        }
    }

    /// Checkpoints plus every subsample time `floor(n / k)`.
    pub fn record_times(&self) -> BTreeSet<u64> {
        let mut times: BTreeSet<u64> = self.effective_checkpoints().into_iter().collect();
        for &n in &self.effective_checkpoints() {
            for &k in &self.estimator_k {
                times.insert(tracker::subsample_time(n, k));
            }
        }
        times
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::invalid("need at least one replicate"));
        }
        if self.pairs.is_empty() {
            return Err(Error::invalid("need at least one tracked pair"));
        }
        if self.n_max > NodeId::MAX as usize {
            return Err(Error::Resource(format!(
                "n = {} exceeds the node id range",
                self.n_max
            )));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("checkpoints must be strictly increasing"));
        }
        if self
            .checkpoints
            .last()
            .is_some_and(|&last| last > self.n_max as u64)
        {
            return Err(Error::invalid("checkpoints may not exceed n"));
        }
        if let Some(&k) = self
            .estimator_k
            .iter()
            .find(|&&k| !(k.is_finite() && k > 1.0))
        {
            return Err(Error::invalid(format!(
                "estimator k must exceed 1, got {k}"
            )));
        }
        if self.ratio_bins == 0
            || self.ratio_range.0.partial_cmp(&self.ratio_range.1) != Some(std::cmp::Ordering::Less)
        {
            return Err(Error::invalid(
                "ratio histogram needs at least one bin over a non-empty range",
            ));
        }
        let earliest = *self
            .record_times()
            .iter()
            .next()
            .expect("at least one record time");
        for &(i, j) in &self.pairs {
            if i == 0 || i >= j {
                return Err(Error::invalid(format!(
                    "pair needs 1 <= i < j, got ({i}, {j})"
                )));
            }
            if i == 1 && !self.allow_node_one {
                return Err(Error::invalid(
                    "pairs with node 1 need the node-one override: its creation degree is 2c",
                ));
            }
            if (j as u64) > earliest {
                return Err(Error::invalid(format!(
                    "pair ({i}, {j}) does not exist at record time {earliest}"
                )));
            }
        }
        let retained = self
            .replicates
            .saturating_mul(self.pairs.len())
            .saturating_mul(self.record_times().len());
        if retained > MAX_RETAINED_POINTS {
            return Err(Error::Resource(format!(
                "{retained} trajectory points requested, limit is {MAX_RETAINED_POINTS}"
            )));
        }
        Ok(())
    }
}

/// Recorded points of one pair in one replicate, ascending in `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub points: Vec<TrajectoryPoint>,
}

impl PairRecord {
    pub fn at(&self, n: u64) -> Option<&TrajectoryPoint> {
        self.points
            .binary_search_by_key(&n, |p| p.n)
            .ok()
            .map(|idx| &self.points[idx])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    /// Same order as the config's pairs.
    pub pairs: Vec<PairRecord>,
}

fn run_tracked(
    config: &ExperimentConfig,
    replicate: u64,
    schedule: CheckpointSchedule,
) -> Result<ReplicateRecord> {
    let mut state = GraphState::with_stream(config.params, config.master_seed, replicate);
    let mut trackers = TrackerSet::new(&state, &config.pairs, schedule)?;
    state.evolve(config.n_max, &mut [&mut trackers])?;
    let mut pairs = Vec::with_capacity(config.pairs.len());
    for &(i, j) in &config.pairs {
        let tracker = trackers.tracker(i, j).ok_or_else(|| {
            Error::invalid(format!(
                "pair ({i}, {j}) never started (n = {})",
                config.n_max
            ))
        })?;
        pairs.push(PairRecord {
            i,
            j,
            points: tracker.trajectory().to_vec(),
        });
    }
    Ok(ReplicateRecord { replicate, pairs })
}

/// Runs one replicate, recording every time in [`ExperimentConfig::record_times`].
pub fn run_replicate(config: &ExperimentConfig, replicate: u64) -> Result<ReplicateRecord> {
    run_tracked(
        config,
        replicate,
        CheckpointSchedule::Explicit(config.record_times()),
    )
}

/// Runs all replicates in parallel; the result is ordered by replicate id.
pub fn run_replicates(config: &ExperimentConfig) -> Result<Vec<ReplicateRecord>> {
    config.validate()?;
    (0..config.replicates as u64)
        .into_par_iter()
        .map(|r| run_replicate(config, r))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub k: f64,
    pub subsample_n: u64,
    /// Replicates with a positive estimate.
    pub conditioned: usize,
    pub conditioning_rate: f64,
    /// `N_ij(n) / N_hat` over conditioned replicates.
    pub ratio: Summary,
    pub histogram: UniformHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointSummary {
    pub n: u64,
    pub n_ij: Summary,
    pub n_ij_histogram: IntegerHistogram,
    pub scaled: Summary,
    pub x_i: Summary,
    pub x_j: Summary,
    pub y_ij: Summary,
    pub y_inf_hat: Summary,
    pub ratios: Vec<RatioSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub i: usize,
    pub j: usize,
    pub checkpoints: Vec<CheckpointSummary>,
}

impl PairSummary {
    pub fn at(&self, n: u64) -> Option<&CheckpointSummary> {
        self.checkpoints.iter().find(|c| c.n == n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub config: ExperimentConfig,
    pub constants: RegimeConstants,
    pub replicates: usize,
    pub pairs: Vec<PairSummary>,
}

impl ReplicationSummary {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairSummary> {
        self.pairs.iter().find(|p| p.i == i && p.j == j)
    }
}

fn point<'a>(
    records: &'a [ReplicateRecord],
    pair_idx: usize,
    n: u64,
) -> impl Iterator<Item = &'a TrajectoryPoint> + 'a {
    records.iter().map(move |r| {
        r.pairs[pair_idx]
            .at(n)
            .expect("record time present in every replicate")
    })
}

/// Aggregates replicate records into per-checkpoint statistics.
pub fn summarize(
    config: &ExperimentConfig,
    records: &[ReplicateRecord],
) -> Result<ReplicationSummary> {
    let rc = RegimeConstants::new(&config.params);
    let mut pairs = Vec::with_capacity(config.pairs.len());
    for (idx, &(i, j)) in config.pairs.iter().enumerate() {
        let mut checkpoints = Vec::new();
        for n in config.effective_checkpoints() {
            let pts: Vec<&TrajectoryPoint> = point(records, idx, n).collect();
            let counts: Vec<f64> = pts.iter().map(|p| p.n_ij as f64).collect();
            let scaled: Vec<f64> = pts
                .iter()
                .map(|p| tracker::scaled(p.n_ij, n, &rc).value)
                .collect();
            let y_inf: Vec<f64> = pts
                .iter()
                .map(|p| tracker::limit_estimate(p.x_i, p.x_j, n, &rc).y_inf_hat)
                .collect();
            let mut ratios = Vec::new();
            for &k in &config.estimator_k {
                let sub_n = tracker::subsample_time(n, k);
                let mut histogram = UniformHistogram::new(
                    config.ratio_range.0,
                    config.ratio_range.1,
                    config.ratio_bins,
                );
                let mut values = Vec::new();
                for (p, early) in pts.iter().zip(point(records, idx, sub_n)) {
                    let estimate = tracker::estimate(early.n_ij, k, &rc)?;
                    if estimate > 0.0 {
                        let ratio = p.n_ij as f64 / estimate;
                        histogram.add(ratio);
                        values.push(ratio);
                    }
                }
                ratios.push(RatioSummary {
                    k,
                    subsample_n: sub_n,
                    conditioned: values.len(),
                    conditioning_rate: values.len() as f64 / records.len() as f64,
                    ratio: Summary::of(&values),
                    histogram,
                });
            }
            checkpoints.push(CheckpointSummary {
                n,
                n_ij: Summary::of(&counts),
                n_ij_histogram: IntegerHistogram::of(pts.iter().map(|p| p.n_ij)),
                scaled: Summary::of(&scaled),
                x_i: Summary::of(&pts.iter().map(|p| p.x_i).collect::<Vec<_>>()),
                x_j: Summary::of(&pts.iter().map(|p| p.x_j).collect::<Vec<_>>()),
                y_ij: Summary::of(&pts.iter().map(|p| p.y_ij).collect::<Vec<_>>()),
                y_inf_hat: Summary::of(&y_inf),
                ratios,
            });
        }
        pairs.push(PairSummary { i, j, checkpoints });
    }
    Ok(ReplicationSummary {
        config: config.clone(),
        constants: rc,
        replicates: records.len(),
        pairs,
    })
}

/// Runs the experiment and returns its summary.
pub fn run(config: &ExperimentConfig) -> Result<ReplicationSummary> {
    let records = run_replicates(config)?;
    summarize(config, &records)
}

/// Per-step trajectories of the first `count` replicates, one CSV row per
/// step and pair, with a leading `replicate` column.
pub fn trajectory_export<W: Write>(config: &ExperimentConfig, count: usize, out: W) -> Result<()> {
    config.validate()?;
    if count > config.replicates {
        return Err(Error::invalid(format!(
            "asked for {count} trajectories from {} replicates",
            config.replicates
        )));
    }
    let rc = RegimeConstants::new(&config.params);
    let records: Vec<ReplicateRecord> = (0..count as u64)
        .into_par_iter()
        .map(|r| run_tracked(config, r, CheckpointSchedule::EveryStep))
        .collect::<Result<_>>()?;
    let mut writer = export::TrajectoryWriter::new(out, true)?;
    for record in &records {
        for pair in &record.pairs {
            for p in &pair.points {
                writer.row(Some(record.replicate), pair.i, pair.j, p, &rc)?;
            }
        }
    }
    writer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::new(
            ModelParams::new(2, -0.5).unwrap(),
            vec![(2, 3), (5, 9)],
            300,
            40,
            17,
        )
        .with_checkpoints(vec![50, 100, 300])
        .with_estimator_k(vec![2.0, 4.0])
    }

    #[test]
    fn validation() {
        assert!(config().validate().is_ok());
        let mut c = config();
        c.checkpoints = vec![100, 50];
        assert!(c.validate().is_err());
        let mut c = config();
        c.pairs = vec![(1, 2)];
        assert!(c.validate().is_err());
        c.allow_node_one = true;
        assert!(c.validate().is_ok());
        let mut c = config();
        c.estimator_k = vec![1.0];
        assert!(c.validate().is_err());
        let mut c = config();
        c.pairs = vec![(5, 20)];
        c.checkpoints = vec![30];
        c.estimator_k = vec![2.0];
        assert!(c.validate().is_err(), "floor(30/2) = 15 precedes node 20");
        let mut c = config();
        c.replicates = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_replicate_matches_direct_evolution() {
        let mut c = config();
        c.replicates = 1;
        let records = run_replicates(&c).unwrap();
        let mut state = GraphState::with_stream(c.params, c.master_seed, 0);
        let mut set = TrackerSet::new(
            &state,
            &c.pairs,
            CheckpointSchedule::Explicit(c.record_times()),
        )
        .unwrap();
        state.evolve(c.n_max, &mut [&mut set]).unwrap();
        for (rec, &(i, j)) in records[0].pairs.iter().zip(&c.pairs) {
            assert_eq!(rec.points, set.tracker(i, j).unwrap().trajectory());
        }
        let summary = summarize(&c, &records).unwrap();
        let last = summary.pair(2, 3).unwrap().at(300).unwrap();
        assert_eq!(last.n_ij.mean, set.tracker(2, 3).unwrap().n_ij() as f64);
        assert_eq!(last.n_ij.se, 0.0);
    }

    #[test]
    fn summary_independent_of_thread_count() {
        let c = config();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&c).unwrap());
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run(&c).unwrap());
        assert_eq!(one, four);
    }

    #[test]
    fn counts_sum_to_replicates() {
        let c = config();
        let s = run(&c).unwrap();
        for pair in &s.pairs {
            for cp in &pair.checkpoints {
                assert_eq!(cp.n_ij_histogram.total(), c.replicates as u64);
                assert_eq!(cp.n_ij.count, c.replicates);
                assert!((cp.n_ij.se - cp.n_ij.sd / (c.replicates as f64).sqrt()).abs() < 1e-15);
                for r in &cp.ratios {
                    assert_eq!(r.histogram.total(), r.conditioned as u64);
                    assert!(r.conditioning_rate <= 1.0);
                }
            }
        }
    }

    #[test]
    fn trajectory_export_is_deterministic() {
        let c = config();
        let mut a = Vec::new();
        let mut b = Vec::new();
        trajectory_export(&c, 3, &mut a).unwrap();
        trajectory_export(&c, 3, &mut b).unwrap();
        assert_eq!(a, b);
        let mut empty = Vec::new();
        trajectory_export(&c, 0, &mut empty).unwrap();
        let text = String::from_utf8(empty).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(trajectory_export(&c, 41, Vec::new()).is_err());
    }
}
