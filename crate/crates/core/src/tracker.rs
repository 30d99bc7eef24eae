//! Per-pair observers of the evolving graph.
//!
//! A [`PairTracker`] follows a fixed pair `i < j` from time `j` onward: its
//! common-friend count `N_ij`, the degrees of both nodes, and running sums
//! of the one-step probabilities and Cesàro averages used as diagnostics.
//! Trackers never touch the graph they observe.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphState, NodeId, StepObserver, StepOutcome};
use crate::params::{ModelParams, Regime};
use crate::theory::{increment_bounds, increment_probability, RegimeConstants};

/// Running sums accumulated along one trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningSums {
    /// `sum_{k=j}^{n} Y_ij(k) / k^2`.
    pub y_over_k2: f64,
    /// Same with the factor `1 - (c-2)/2 * (X_i(k) + X_j(k)) / ((2c + delta) k)`.
    pub ystar_over_k2: f64,
    /// `sum_{k=j}^{n-1}` of the exact one-step probability of a new common friend.
    pub q: f64,
    pub lower: f64,
    pub upper: f64,
}

/// State of one pair at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub n: u64,
    pub n_ij: u64,
    pub deg_i: u32,
    pub deg_j: u32,
    pub x_i: f64,
    pub x_j: f64,
    pub y_ij: f64,
    pub sums: RunningSums,
}

/// `N_ij(n)` divided by its regime normaliser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledStatistic {
    pub regime: Regime,
    pub normalizer: f64,
    pub value: f64,
}

/// Plug-in estimates of the degree limits: `X / n^gamma` and their product.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub d_i_inf_hat: f64,
    pub d_j_inf_hat: f64,
    pub y_inf_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTracker {
    i: NodeId,
    j: NodeId,
    params: ModelParams,
    n: u64,
    n_ij: u64,
    deg_i: u32,
    deg_j: u32,
    sums: RunningSums,
    trajectory: Vec<TrajectoryPoint>,
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i == 0 || i >= j {
        return Err(Error::invalid(format!(
            "pair needs 1 <= i < j, got ({i}, {j})"
        )));
    }
    if j > n {
        return Err(Error::invalid(format!(
            "node {j} does not exist yet (n = {n})"
        )));
    }
    Ok(())
}

/// Sorted-merge count of neighbours shared by `a` and `b`, skipping `skip_i` and `skip_j`.
fn shared_neighbors(a: &[NodeId], b: &[NodeId], skip_i: NodeId, skip_j: NodeId) -> u64 {
    let (mut x, mut y, mut count) = (0, 0, 0);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                if a[x] != skip_i && a[x] != skip_j {
                    count += 1;
                }
                x += 1;
                y += 1;
            }
        }
    }
    count
}

/// Recount of common friends straight from the adjacency sets.
///
/// Used as ground truth for the incremental tracker.
pub fn common_friends_bruteforce(state: &GraphState, i: usize, j: usize) -> Result<u64> {
    check_pair(i, j, state.n())?;
    let of_i: HashSet<NodeId> = state.neighbors(i).iter().copied().collect();
    let count = state
        .neighbors(j)
        .iter()
        .filter(|&&k| k as usize != i && k as usize != j && of_i.contains(&k))
        .count();
    Ok(count as u64)
}

impl PairTracker {
    /// Starts tracking `(i, j)` on a state with `n >= j`.
    pub fn init_pair(state: &GraphState, i: usize, j: usize) -> Result<Self> {
        check_pair(i, j, state.n())?;
        let (ii, jj) = (i as NodeId, j as NodeId);
        let n_ij = shared_neighbors(state.neighbors(i), state.neighbors(j), ii, jj);
        let mut tracker = PairTracker {
            i: ii,
            j: jj,
            params: *state.params(),
            n: state.n() as u64,
            n_ij,
            deg_i: state.degree(i),
            deg_j: state.degree(j),
            sums: RunningSums::default(),
            trajectory: Vec::new(),
        };
        tracker.add_cesaro_term();
        Ok(tracker)
    }

    pub fn pair(&self) -> (usize, usize) {
        (self.i as usize, self.j as usize)
    }

    /// Time of the last observed state.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn n_ij(&self) -> u64 {
        self.n_ij
    }

    pub fn x_i(&self) -> f64 {
        f64::from(self.deg_i) + self.params.delta()
    }

    pub fn x_j(&self) -> f64 {
        f64::from(self.deg_j) + self.params.delta()
    }

    pub fn y_ij(&self) -> f64 {
        self.x_i() * self.x_j()
    }

    pub fn degrees(&self) -> (u32, u32) {
        (self.deg_i, self.deg_j)
    }

    pub fn sums(&self) -> RunningSums {
        self.sums
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    pub fn into_trajectory(self) -> Vec<TrajectoryPoint> {
        self.trajectory
    }

    pub fn point(&self) -> TrajectoryPoint {
        TrajectoryPoint {
            n: self.n,
            n_ij: self.n_ij,
            deg_i: self.deg_i,
            deg_j: self.deg_j,
            x_i: self.x_i(),
            x_j: self.x_j(),
            y_ij: self.y_ij(),
            sums: self.sums,
        }
    }

    /// Appends the current state to the trajectory.
    pub fn record(&mut self) {
        if self.trajectory.last().map(|p| p.n) != Some(self.n) {
            let point = self.point();
            self.trajectory.push(point);
        }
    }

    fn add_cesaro_term(&mut self) {
        let nf = self.n as f64;
        let y = self.y_ij();
        let correction = 1.0
            - (f64::from(self.params.c()) - 2.0) / 2.0 * (self.x_i() + self.x_j())
                / (self.params.weight_per_node() * nf);
        self.sums.y_over_k2 += y / (nf * nf);
        self.sums.ystar_over_k2 += y * correction / (nf * nf);
    }

    /// Folds in one arrival. A new common friend appears iff the arrival
    /// hits both `i` and `j`, whatever the multiplicities.
    pub fn on_step(&mut self, outcome: &StepOutcome) {
        debug_assert_eq!(u64::from(outcome.new_node), self.n + 1);
        let p_i = self.params.attach_probability(self.x_i(), self.n);
        let p_j = self.params.attach_probability(self.x_j(), self.n);
        let c = self.params.c();
        if let (Ok(q), Ok(bounds)) = (
            increment_probability(p_i, p_j, c),
            increment_bounds(p_i, p_j, c),
        ) {
            self.sums.q += q;
            self.sums.lower += bounds.lower;
            self.sums.upper += bounds.upper;
        }

        let hits_i = outcome.stubs_on(self.i);
        let hits_j = outcome.stubs_on(self.j);
        if hits_i >= 1 && hits_j >= 1 {
            self.n_ij += 1;
        }
        self.deg_i += hits_i;
        self.deg_j += hits_j;
        self.n += 1;
        self.add_cesaro_term();
    }

    pub fn scaled(&self, rc: &RegimeConstants) -> ScaledStatistic {
        scaled(self.n_ij, self.n, rc)
    }

    pub fn limit_estimate(&self, rc: &RegimeConstants) -> LimitEstimate {
        limit_estimate(self.x_i(), self.x_j(), self.n, rc)
    }
}

/// `n_ij / normaliser(n)` for the regime of `rc`.
pub fn scaled(n_ij: u64, n: u64, rc: &RegimeConstants) -> ScaledStatistic {
    let normalizer = rc.normalizer(n);
    ScaledStatistic {
        regime: rc.regime,
        normalizer,
        value: n_ij as f64 / normalizer,
    }
}

pub fn limit_estimate(x_i: f64, x_j: f64, n: u64, rc: &RegimeConstants) -> LimitEstimate {
    let scale = (n as f64).powf(rc.gamma);
    let d_i_inf_hat = x_i / scale;
    let d_j_inf_hat = x_j / scale;
    LimitEstimate {
        d_i_inf_hat,
        d_j_inf_hat,
        y_inf_hat: d_i_inf_hat * d_j_inf_hat,
    }
}

/// Subsample estimate of `N_ij(n)` from the count observed at `floor(n / k)`.
pub fn estimate(snapshot_n_ij: u64, k: f64, rc: &RegimeConstants) -> Result<f64> {
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::invalid(format!("estimator needs k > 1, got {k}")));
    }
    Ok(snapshot_n_ij as f64 * rc.estimator_factor(k))
}

/// `floor(n / k)`, the time at which the subsample is read.
pub fn subsample_time(n: u64, k: f64) -> u64 {
    (n as f64 / k).floor() as u64
}

/// When a tracker records its state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointSchedule {
    /// `n = j * 2^m`.
    Geometric,
    /// Every `step`-th node, plus `n = j`.
    Linear(u64),
    /// The listed times.
    Explicit(BTreeSet<u64>),
    EveryStep,
}

impl CheckpointSchedule {
    pub fn explicit<I: IntoIterator<Item = u64>>(times: I) -> Self {
        CheckpointSchedule::Explicit(times.into_iter().collect())
    }

    pub fn contains(&self, j: u64, n: u64) -> bool {
        match self {
            CheckpointSchedule::Geometric => {
                n >= j && n.is_multiple_of(j) && (n / j).is_power_of_two()
            }
            CheckpointSchedule::Linear(step) => n == j || (*step > 0 && n.is_multiple_of(*step)),
            CheckpointSchedule::Explicit(times) => times.contains(&n),
            CheckpointSchedule::EveryStep => true,
        }
    }
}

/// Observer driving a set of pair trackers, starting each at its `j`.
#[derive(Debug, Clone)]
pub struct TrackerSet {
    pending: Vec<(usize, usize)>,
    active: Vec<PairTracker>,
    schedule: CheckpointSchedule,
}

impl TrackerSet {
    /// Pairs with `j <= state.n()` start immediately; the rest start when node `j` arrives.
    pub fn new(
        state: &GraphState,
        pairs: &[(usize, usize)],
        schedule: CheckpointSchedule,
    ) -> Result<Self> {
        let mut set = TrackerSet {
            pending: Vec::new(),
            active: Vec::new(),
            schedule,
        };
        for &(i, j) in pairs {
            if i == 0 || i >= j {
                return Err(Error::invalid(format!(
                    "pair needs 1 <= i < j, got ({i}, {j})"
                )));
            }
            if j <= state.n() {
                set.activate(state, i, j)?;
            } else {
                set.pending.push((i, j));
            }
        }
        Ok(set)
    }

    fn activate(&mut self, state: &GraphState, i: usize, j: usize) -> Result<()> {
        let mut tracker = PairTracker::init_pair(state, i, j)?;
        if self.schedule.contains(j as u64, tracker.n()) {
            tracker.record();
        }
        self.active.push(tracker);
        Ok(())
    }

    pub fn trackers(&self) -> &[PairTracker] {
        &self.active
    }

    pub fn tracker(&self, i: usize, j: usize) -> Option<&PairTracker> {
        self.active.iter().find(|t| t.pair() == (i, j))
    }

    /// Active trackers in activation order.
    pub fn into_trackers(self) -> Vec<PairTracker> {
        self.active
    }
}

impl StepObserver for TrackerSet {
    fn on_step(&mut self, _pre: &GraphState, outcome: &StepOutcome) {
        for tracker in &mut self.active {
            tracker.on_step(outcome);
        }
    }

    fn after_step(&mut self, post: &GraphState) {
        let n = post.n();
        for tracker in &mut self.active {
            if self.schedule.contains(u64::from(tracker.j), n as u64) {
                tracker.record();
            }
        }
        if self.pending.iter().any(|&(_, j)| j == n) {
            let starting: Vec<_> = self
                .pending
                .iter()
                .copied()
                .filter(|&(_, j)| j == n)
                .collect();
            self.pending.retain(|&(_, j)| j != n);
            for (i, j) in starting {
                self.activate(post, i, j)
                    .expect("pair validated at construction");
            }
        }
    }
}
