//! Sample summaries used by the Monte Carlo aggregation.

use serde::{Deserialize, Serialize};

/// Moments and order statistics of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    /// `sd / sqrt(count)`.
    pub se: f64,
    pub min: f64,
    pub max: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Moment skewness `m3 / m2^(3/2)`; zero for a degenerate sample.
    pub skewness: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let count = values.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
                skewness: f64::NAN,
            };
        }
        let nf = count as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let (m2, m3) = values.iter().fold((0.0, 0.0), |(m2, m3), &v| {
            let d = v - mean;
            (m2 + d * d, m3 + d * d * d)
        });
        let sd = if count > 1 {
            (m2 / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        let skewness = if m2 > 0.0 {
            (m3 / nf) / (m2 / nf).powf(1.5)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Summary {
            count,
            mean,
            sd,
            se: sd / nf.sqrt(),
            min: sorted[0],
            max: sorted[count - 1],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            skewness,
        }
    }

    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * p.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Pearson correlation; NaN when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Counts per integer value `0..=max`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerHistogram {
    pub counts: Vec<u64>,
}

impl IntegerHistogram {
    pub fn of(values: impl IntoIterator<Item = u64>) -> Self {
        let mut counts: Vec<u64> = Vec::new();
        for v in values {
            let v = v as usize;
            if v >= counts.len() {
                counts.resize(v + 1, 0);
            }
            counts[v] += 1;
        }
        IntegerHistogram { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Uniform bins over `[lo, hi)` with explicit under- and overflow counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl UniformHistogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        UniformHistogram {
            lo,
            hi,
            counts: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn add(&mut self, v: f64) {
        if v < self.lo {
            self.underflow += 1;
        } else if v >= self.hi {
            self.overflow += 1;
        } else {
            let width = (self.hi - self.lo) / self.counts.len() as f64;
            let bin = (((v - self.lo) / width) as usize).min(self.counts.len() - 1);
            self.counts[bin] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_basics() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        assert_eq!(s.count, 5);
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q1, 2.0);
        assert_eq!(s.q3, 4.0);
        assert!((s.sd - 12.5f64.sqrt()).abs() < 1e-12);
        assert!(s.skewness > 1.0);
        assert_eq!(Summary::of(&[2.0, 2.0]).skewness, 0.0);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
        assert_eq!(quantile_sorted(&[5.0], 0.9), 5.0);
    }

    #[test]
    fn histograms_count_everything() {
        let h = IntegerHistogram::of([0, 3, 3, 1]);
        assert_eq!(h.counts, vec![1, 1, 0, 2]);
        let mut u = UniformHistogram::new(0.0, 3.0, 50);
        for v in [-1.0, 0.0, 1.0, 2.999, 3.0, 7.0] {
            u.add(v);
        }
        assert_eq!(u.total(), 6);
        assert_eq!((u.underflow, u.overflow), (1, 2));
        assert_eq!(u.counts[49], 1);
    }

    #[test]
    fn correlation_of_linear_data() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.0, 4.1, 6.0, 8.2];
        assert!(correlation(&a, &b) > 0.99);
    }
}
