//! The evolving preferential attachment multigraph.
//!
//! Node ids are 1-based. Node 1 starts with `c` self-loops; each later
//! arrival sends `c` stubs to existing nodes, every stub drawn independently
//! from the pre-arrival attachment law `(D_i + delta) / ((2c + delta) n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::weights::CumulativeWeights;

pub type NodeId = u32;

/// One arrival: the new node and the sorted multiset of its `c` endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub new_node: NodeId,
    pub targets: Vec<NodeId>,
}

impl StepOutcome {
    /// Number of the arrival's stubs that landed on `node`.
    pub fn stubs_on(&self, node: NodeId) -> u32 {
        self.targets.iter().filter(|&&t| t == node).count() as u32
    }

    /// Distinct targets with their stub multiplicity, ascending by id.
    pub fn delta_per_node(&self) -> Vec<(NodeId, u32)> {
        let mut out: Vec<(NodeId, u32)> = Vec::with_capacity(self.targets.len());
        for &t in &self.targets {
            match out.last_mut() {
                Some((last, m)) if *last == t => *m += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }
}

/// Receives every arrival produced by [`GraphState::evolve`].
pub trait StepObserver {
    /// Called with the state before the arrival is applied.
    fn on_step(&mut self, pre: &GraphState, outcome: &StepOutcome);

    /// Called once the arrival has been applied.
    fn after_step(&mut self, _post: &GraphState) {}
}

#[derive(Debug, Clone)]
pub struct GraphState {
    pub(crate) params: ModelParams,
    pub(crate) degrees: Vec<u32>,
    pub(crate) adjacency: Vec<Vec<NodeId>>,
    pub(crate) weights: CumulativeWeights,
    pub(crate) rng: ChaCha8Rng,
}

impl GraphState {
    /// Single node with `c` self-loops, random stream 0 of `seed`.
    pub fn new(params: ModelParams, seed: u64) -> Self {
        Self::with_stream(params, seed, 0)
    }

    /// Like [`new`](Self::new) but on an explicit ChaCha stream, so distinct
    /// `stream` values never share random words.
    pub fn with_stream(params: ModelParams, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let c = params.c();
        let mut weights = CumulativeWeights::new(params.delta());
        weights.push(u64::from(2 * c));
        GraphState {
            params,
            degrees: vec![2 * c],
            adjacency: vec![vec![1]],
            weights,
            rng,
        }
    }

    /// Checked constructor taking raw parameters.
    pub fn from_raw(c: u32, delta: f64, seed: u64) -> Result<Self> {
        Ok(Self::new(ModelParams::new(c, delta)?, seed))
    }

    pub fn reserve(&mut self, additional: usize) {
        self.degrees.reserve(additional);
        self.adjacency.reserve(additional);
    }

    #[inline]
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Current node count `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    #[inline]
    pub fn degree(&self, i: usize) -> u32 {
        self.degrees[i - 1]
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Shifted degree `D_i + delta`.
    #[inline]
    pub fn shifted_degree(&self, i: usize) -> f64 {
        f64::from(self.degrees[i - 1]) + self.params.delta()
    }

    /// Sorted distinct neighbours of `i`; node 1 lists itself.
    pub fn neighbors(&self, i: usize) -> &[NodeId] {
        &self.adjacency[i - 1]
    }

    pub fn weights(&self) -> &CumulativeWeights {
        &self.weights
    }

    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    /// Attachment probability of `i` for the next arrival.
    pub fn attach_probability(&self, i: usize) -> f64 {
        self.params
            .attach_probability(self.shifted_degree(i), self.n() as u64)
    }

    /// Draws the next arrival's endpoints without applying them.
    pub fn draw(&mut self) -> StepOutcome {
        let n = self.n();
        let new_node = NodeId::try_from(n + 1).expect("node id overflow");
        let total = self.weights.total();
        let mut targets: Vec<NodeId> = (0..self.params.c())
            .map(|_| {
                let u = self.rng.gen::<f64>() * total;
                self.weights.sample(u) as NodeId
            })
            .collect();
        targets.sort_unstable();
        StepOutcome { new_node, targets }
    }

    /// Applies an outcome produced by [`draw`](Self::draw) on this state.
    pub fn apply(&mut self, outcome: &StepOutcome) {
        debug_assert_eq!(outcome.new_node as usize, self.n() + 1);
        let new_node = outcome.new_node;
        let mut own = Vec::with_capacity(outcome.targets.len());
        for &t in &outcome.targets {
            let idx = t as usize - 1;
            self.degrees[idx] += 1;
            self.weights.add(t as usize, 1);
            let adj = &mut self.adjacency[idx];
            if adj.last() != Some(&new_node) {
                adj.push(new_node);
            }
            if own.last() != Some(&t) {
                own.push(t);
            }
        }
        let c = self.params.c();
        self.degrees.push(c);
        self.adjacency.push(own);
        self.weights.push(u64::from(c));
    }

    /// One arrival: draw then apply.
    pub fn step(&mut self) -> StepOutcome {
        let outcome = self.draw();
        self.apply(&outcome);
        outcome
    }

    /// Steps until `n == target_n`, handing every arrival to each observer.
    pub fn evolve(
        &mut self,
        target_n: usize,
        observers: &mut [&mut dyn StepObserver],
    ) -> Result<()> {
        if target_n < self.n() {
            return Err(Error::invalid(format!(
                "target n {target_n} is below the current n {}",
                self.n()
            )));
        }
        if target_n > NodeId::MAX as usize {
            return Err(Error::Resource(format!(
                "target n {target_n} exceeds the node id range"
            )));
        }
        self.reserve(target_n - self.n());
        while self.n() < target_n {
            let outcome = self.draw();
            for obs in observers.iter_mut() {
                obs.on_step(self, &outcome);
            }
            self.apply(&outcome);
            for obs in observers.iter_mut() {
                obs.after_step(self);
            }
        }
        Ok(())
    }

    /// Evolves without observers.
    pub fn grow_to(&mut self, target_n: usize) -> Result<()> {
        self.evolve(target_n, &mut [])
    }

    /// Recomputes the weight index from the degree array.
    pub fn rebuilt_weights(&self) -> CumulativeWeights {
        CumulativeWeights::from_counts(
            self.degrees.iter().map(|&d| u64::from(d)),
            self.params.delta(),
        )
    }

    /// Rough heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        let adj: usize = self
            .adjacency
            .iter()
            .map(|a| {
                a.capacity() * std::mem::size_of::<NodeId>() + std::mem::size_of::<Vec<NodeId>>()
            })
            .sum();
        adj + self.degrees.capacity() * std::mem::size_of::<u32>() + (self.weights.len() + 1) * 8
    }

    /// Checks the structural invariants; used by tests and snapshot restore.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        let c = self.params.c();
        if self.adjacency.len() != n || self.weights.len() != n {
            return Err(Error::format(
                "degree, adjacency and weight arrays disagree in length",
            ));
        }
        let degree_sum: u64 = self.degrees.iter().map(|&d| u64::from(d)).sum();
        if degree_sum != 2 * u64::from(c) * n as u64 {
            return Err(Error::format(format!(
                "degree sum {degree_sum} differs from 2cn = {}",
                2 * u64::from(c) * n as u64
            )));
        }
        if self.degrees[0] < 2 * c || self.degrees[1..].iter().any(|&d| d < c) {
            return Err(Error::format("degree below its creation value"));
        }
        if self.rebuilt_weights() != self.weights {
            return Err(Error::format("weight index does not match degrees"));
        }
        for (k, adj) in self.adjacency.iter().enumerate() {
            if adj.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::format(format!(
                    "adjacency of node {} is not strictly sorted",
                    k + 1
                )));
            }
            if adj.iter().any(|&v| v == 0 || v as usize > n) {
                return Err(Error::format(format!(
                    "adjacency of node {} references a missing node",
                    k + 1
                )));
            }
        }
        if self.adjacency[0].first() != Some(&1) {
            return Err(Error::format("node 1 must list its own self-loops"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(c: u32, delta: f64) -> ModelParams {
        ModelParams::new(c, delta).unwrap()
    }

    #[test]
    fn initial_state() {
        let g = GraphState::new(params(2, 0.0), 7);
        assert_eq!(g.n(), 1);
        assert_eq!(g.degree(1), 4);
        assert_eq!(g.weights().total(), 4.0);
        assert_eq!(g.neighbors(1), &[1]);

        let g = GraphState::new(params(3, -1.5), 7);
        assert_eq!(g.degree(1), 6);
        assert_eq!(g.weights().total(), 4.5);

        assert!(matches!(
            GraphState::from_raw(2, -2.0, 7),
            Err(Error::ParameterDomain(_))
        ));
    }

    #[test]
    fn first_arrival_is_forced_onto_node_one() {
        for seed in 0..20 {
            let mut g = GraphState::new(params(3, 0.5), seed);
            let out = g.step();
            assert_eq!(out.new_node, 2);
            assert_eq!(out.targets, vec![1, 1, 1]);
            assert_eq!(g.degrees(), &[9, 3]);
            assert_eq!(g.neighbors(1), &[1, 2]);
            assert_eq!(g.neighbors(2), &[1]);
        }
    }

    #[test]
    fn attachment_law_after_forced_step() {
        let mut g = GraphState::new(params(2, 0.0), 1);
        g.step();
        assert_eq!(g.attach_probability(1), 0.75);
        assert_eq!(g.attach_probability(2), 0.25);
    }

    #[test]
    fn evolve_to_current_n_is_identity() {
        struct Count(usize);
        impl StepObserver for Count {
            fn on_step(&mut self, _: &GraphState, _: &StepOutcome) {
                self.0 += 1;
            }
        }
        let mut g = GraphState::new(params(2, 0.0), 3);
        g.grow_to(10).unwrap();
        let before = g.degrees().to_vec();
        let mut count = Count(0);
        g.evolve(10, &mut [&mut count]).unwrap();
        assert_eq!(count.0, 0);
        assert_eq!(g.degrees(), &before[..]);
        assert!(g.evolve(5, &mut []).is_err());
    }

    #[test]
    fn same_seed_same_degrees() {
        let mut a = GraphState::new(params(2, -0.5), 42);
        let mut b = GraphState::new(params(2, -0.5), 42);
        a.grow_to(10_000).unwrap();
        b.grow_to(10_000).unwrap();
        assert_eq!(a.degrees(), b.degrees());
        let mut other = GraphState::with_stream(params(2, -0.5), 42, 1);
        other.grow_to(10_000).unwrap();
        assert_ne!(a.degrees(), other.degrees());
    }

    #[test]
    fn invariants_hold_along_a_run() {
        for (c, delta) in [(1, 0.0), (2, -1.5), (3, 2.0), (5, -4.5)] {
            let mut g = GraphState::new(params(c, delta), 11);
            for n in [2, 10, 100, 2000] {
                g.grow_to(n).unwrap();
                g.check_invariants().unwrap();
                let expected = (2.0 * f64::from(c) + delta) * n as f64;
                assert!((g.weights().total() - expected).abs() <= 1e-9 * expected);
            }
        }
    }

    #[test]
    fn no_new_self_loops() {
        let mut g = GraphState::new(params(4, -3.0), 5);
        for _ in 0..500 {
            let out = g.step();
            assert!(out.targets.iter().all(|&t| t < out.new_node));
            assert_eq!(out.delta_per_node().iter().map(|&(_, m)| m).sum::<u32>(), 4);
        }
    }
}
