//! Output formats shared by the CLI: CSV writers and the metadata block.
//!
//! Column contracts:
//!
//! * trajectories: `n,pair_i,pair_j,n_ij,x_i,x_j,y_ij,scaled`, optionally
//!   preceded by a `replicate` column when several replicates share a file;
//! * edge list: `source,target,multiplicity` with `source > target` except
//!   for node 1's self-loop row;
//! * degrees: `node,degree`;
//! * histograms: `pair_i,pair_j,n,statistic,k,bin_lo,bin_hi,count`, where
//!   `statistic` is `n_ij` (unit bins `[v, v + 1)`) or `ratio` (uniform bins
//!   plus `-inf` and `inf` overflow rows; `k` is empty for `n_ij`).

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{GraphState, NodeId, StepObserver, StepOutcome};
use crate::montecarlo::ReplicationSummary;
use crate::params::ModelParams;
use crate::theory::RegimeConstants;
use crate::tracker::{self, TrajectoryPoint};

pub const TOOL: &str = "prefattach";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BUILD_ID: &str = env!("PREFATTACH_BUILD_ID");

pub const TRAJECTORY_HEADER: &str = "n,pair_i,pair_j,n_ij,x_i,x_j,y_ij,scaled";

/// Provenance attached to every output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub build_id: &'static str,
    pub c: u32,
    pub delta: f64,
    pub seed: Option<u64>,
}

impl Metadata {
    pub fn new(params: &ModelParams, seed: Option<u64>) -> Self {
        Metadata {
            tool: TOOL,
            version: VERSION,
            build_id: BUILD_ID,
            c: params.c(),
            delta: params.delta(),
            seed,
        }
    }

    /// `# key=value` lines for the top of a CSV file.
    pub fn csv_comment(&self) -> String {
        let mut s = format!(
            "# tool={} version={} build={}\n# c={} delta={}",
            self.tool, self.version, self.build_id, self.c, self.delta
        );
        if let Some(seed) = self.seed {
            s.push_str(&format!(" seed={seed}"));
        }
        s.push('\n');
        s
    }
}

pub struct TrajectoryWriter<W: Write> {
    out: W,
    with_replicate: bool,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(mut out: W, with_replicate: bool) -> Result<Self> {
        if with_replicate {
            write!(out, "replicate,")?;
        }
        writeln!(out, "{TRAJECTORY_HEADER}")?;
        Ok(TrajectoryWriter {
            out,
            with_replicate,
        })
    }

    pub fn row(
        &mut self,
        replicate: Option<u64>,
        i: usize,
        j: usize,
        p: &TrajectoryPoint,
        rc: &RegimeConstants,
    ) -> Result<()> {
        if self.with_replicate {
            write!(self.out, "{},", replicate.unwrap_or(0))?;
        }
        // the normaliser is undefined at n = 1 in the logarithmic regime
        let scaled = if p.n >= 2 {
            tracker::scaled(p.n_ij, p.n, rc).value
        } else {
            f64::NAN
        };
        writeln!(
            self.out,
            "{},{},{},{},{},{},{},{}",
            p.n, i, j, p.n_ij, p.x_i, p.x_j, p.y_ij, scaled
        )?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Observer recording every edge with its multiplicity.
#[derive(Debug, Default, Clone)]
pub struct EdgeRecorder {
    edges: Vec<(NodeId, NodeId, u32)>,
}

impl EdgeRecorder {
    /// Starts from `state`'s current edges, which must be the initial state
    /// (node 1 and its self-loops) for the list to be complete.
    pub fn new(state: &GraphState) -> Self {
        debug_assert_eq!(state.n(), 1);
        EdgeRecorder {
            edges: vec![(1, 1, state.params().c())],
        }
    }

    pub fn edges(&self) -> &[(NodeId, NodeId, u32)] {
        &self.edges
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "source,target,multiplicity")?;
        for &(s, t, m) in &self.edges {
            writeln!(out, "{s},{t},{m}")?;
        }
        out.flush()?;
        Ok(())
    }
}

impl StepObserver for EdgeRecorder {
    fn on_step(&mut self, _pre: &GraphState, outcome: &StepOutcome) {
        for (target, m) in outcome.delta_per_node() {
            self.edges.push((outcome.new_node, target, m));
        }
    }
}

pub fn write_degrees_csv<W: Write>(state: &GraphState, mut out: W) -> Result<()> {
    writeln!(out, "node,degree")?;
    for (k, d) in state.degrees().iter().enumerate() {
        writeln!(out, "{},{}", k + 1, d)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram_csv<W: Write>(summary: &ReplicationSummary, mut out: W) -> Result<()> {
    writeln!(out, "pair_i,pair_j,n,statistic,k,bin_lo,bin_hi,count")?;
    for pair in &summary.pairs {
        let (i, j) = (pair.i, pair.j);
        for cp in &pair.checkpoints {
            let n = cp.n;
            for (v, count) in cp.n_ij_histogram.counts.iter().enumerate() {
                writeln!(out, "{i},{j},{n},n_ij,,{v},{},{count}", v + 1)?;
            }
            for r in &cp.ratios {
                let (h, k) = (&r.histogram, r.k);
                let width = (h.hi - h.lo) / h.counts.len() as f64;
                writeln!(out, "{i},{j},{n},ratio,{k},-inf,{},{}", h.lo, h.underflow)?;
                for (b, count) in h.counts.iter().enumerate() {
                    let lo = h.lo + b as f64 * width;
                    writeln!(out, "{i},{j},{n},ratio,{k},{lo},{},{count}", lo + width)?;
                }
                writeln!(out, "{i},{j},{n},ratio,{k},{},inf,{}", h.hi, h.overflow)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_stub_count() {
        let mut g = GraphState::new(ModelParams::new(2, -1.5).unwrap(), 3);
        let mut rec = EdgeRecorder::new(&g);
        g.evolve(20, &mut [&mut rec]).unwrap();
        let stubs: u32 = rec.edges().iter().map(|&(_, _, m)| 2 * m).sum();
        assert_eq!(stubs, 80);
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("source,target,multiplicity\n1,1,2\n"));
    }

    #[test]
    fn metadata_comment() {
        let m = Metadata::new(&ModelParams::new(3, 0.5).unwrap(), Some(9));
        let text = m.csv_comment();
        assert!(text.lines().all(|l| l.starts_with("# ")));
        assert!(text.contains("c=3 delta=0.5 seed=9"));
    }
}
