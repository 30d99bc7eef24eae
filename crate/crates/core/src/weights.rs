//! Binary indexed tree over integer counts plus a uniform real offset.
//!
//! Entry `i` (1-based) carries weight `count[i] + offset`. Counts are kept as
//! exact integers, so the index never drifts; only the offset term and the
//! sampling threshold are floating point. Every weight must stay positive.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulativeWeights {
    // tree[0] is unused; tree[k] holds the count sum over (k - lowbit(k), k].
    tree: Vec<u64>,
    total_count: u64,
    offset: f64,
}

#[inline]
fn lowbit(k: usize) -> usize {
    k & k.wrapping_neg()
}

impl CumulativeWeights {
    pub fn new(offset: f64) -> Self {
        CumulativeWeights {
            tree: vec![0],
            total_count: 0,
            offset,
        }
    }

    pub fn with_capacity(offset: f64, capacity: usize) -> Self {
        let mut tree = Vec::with_capacity(capacity + 1);
        tree.push(0);
        CumulativeWeights {
            tree,
            total_count: 0,
            offset,
        }
    }

    /// Builds the index in O(n) from per-entry counts.
    pub fn from_counts<I>(counts: I, offset: f64) -> Self
    where
        I: IntoIterator<Item = u64>,
    {
        let mut tree = vec![0u64];
        tree.extend(counts);
        let len = tree.len() - 1;
        let total_count = tree.iter().sum();
        for k in 1..=len {
            let parent = k + lowbit(k);
            if parent <= len {
                tree[parent] += tree[k];
            }
        }
        CumulativeWeights {
            tree,
            total_count,
            offset,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn offset(&self) -> f64 {
        self.offset
    }

    #[inline]
    pub fn total_count(&self) -> u64 {
        self.total_count
    }

    /// Sum of all weights, `total_count + offset * len`.
    #[inline]
    pub fn total(&self) -> f64 {
        self.total_count as f64 + self.offset * self.len() as f64
    }

    /// Appends a new entry with the given count in O(log n).
    pub fn push(&mut self, count: u64) {
        let k = self.tree.len();
        let low = k - lowbit(k);
        let mut sum = count;
        let mut child = k - 1;
        while child > low {
            sum += self.tree[child];
            child -= lowbit(child);
        }
        self.tree.push(sum);
        self.total_count += count;
    }

    /// Adds `amount` to the count of entry `i` (1-based).
    pub fn add(&mut self, i: usize, amount: u64) {
        assert!(i >= 1 && i <= self.len(), "entry {i} out of range");
        let len = self.len();
        let mut k = i;
        while k <= len {
            self.tree[k] += amount;
            k += lowbit(k);
        }
        self.total_count += amount;
    }

    /// Count sum over entries `1..=i`.
    pub fn prefix_count(&self, i: usize) -> u64 {
        let mut k = i.min(self.len());
        let mut sum = 0;
        while k > 0 {
            sum += self.tree[k];
            k -= lowbit(k);
        }
        sum
    }

    /// Weight sum over entries `1..=i`.
    pub fn prefix_weight(&self, i: usize) -> f64 {
        let i = i.min(self.len());
        self.prefix_count(i) as f64 + self.offset * i as f64
    }

    pub fn count(&self, i: usize) -> u64 {
        self.prefix_count(i) - self.prefix_count(i - 1)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.count(i) as f64 + self.offset
    }

    /// Returns the unique `i` with `prefix_weight(i - 1) <= u < prefix_weight(i)`.
    ///
    /// `u` must lie in `[0, total())`; a value that rounds up to the total
    /// resolves to the last entry.
    pub fn sample(&self, u: f64) -> usize {
        self.sample_counting_probes(u).0
    }

    /// Same as [`sample`](Self::sample), also returning how many tree nodes were inspected.
    pub fn sample_counting_probes(&self, u: f64) -> (usize, u32) {
        let len = self.len();
        debug_assert!(len > 0, "sampling from an empty index");
        debug_assert!(u >= 0.0, "negative sampling threshold {u}");
        let mut pos = 0usize;
        let mut acc_count = 0u64;
        let mut probes = 0u32;
        let mut step = if len == 0 {
            0
        } else {
            1usize << (usize::BITS - 1 - len.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= len {
                probes += 1;
                let candidate = acc_count + self.tree[next];
                if candidate as f64 + self.offset * next as f64 <= u {
                    pos = next;
                    acc_count = candidate;
                }
            }
            step >>= 1;
        }
        ((pos + 1).min(len), probes)
    }
}
