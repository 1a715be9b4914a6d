//! Single-pass mean/covariance accumulation over observation vectors.
//!
//! Welford-style updates keep the accumulation numerically stable; partial
//! accumulators merge with the pairwise (Chan et al.) formulas so ensembles
//! can be reduced chunk by chunk. Merging in a fixed chunk order makes the
//! result bit-identical regardless of how many workers produced the chunks.

/// Running mean vector and co-moment matrix (lower triangle) over samples
/// of a fixed-width observation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    channels: usize,
    count: u64,
    mean: Vec<f64>,
    /// Co-moment sums, lower triangle in row-major order: entry (i, j) with
    /// i >= j lives at `i * (i + 1) / 2 + j`.
    m2: Vec<f64>,
    scratch: Vec<f64>,
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    debug_assert!(i >= j);
    i * (i + 1) / 2 + j
}

impl MomentAccumulator {
    pub fn new(channels: usize) -> Self {
        Self {
            channels,
            count: 0,
            mean: vec![0.0; channels],
            m2: vec![0.0; channels * (channels + 1) / 2],
            scratch: vec![0.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Fold one observation vector into the running moments.
    pub fn push(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.channels);
        self.count += 1;
        let n = self.count as f64;
        for (i, (&xi, mi)) in x.iter().zip(self.mean.iter_mut()).enumerate() {
            let d = xi - *mi;
            *mi += d / n;
            self.scratch[i] = d;
        }
        let f = (n - 1.0) / n;
        let mut idx = 0;
        for i in 0..self.channels {
            let di = self.scratch[i] * f;
            for j in 0..=i {
                self.m2[idx] += di * self.scratch[j];
                idx += 1;
            }
        }
    }

    /// Merge another accumulator into this one.
    pub fn merge(&mut self, other: &Self) {
        debug_assert_eq!(self.channels, other.channels);
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.channels {
            self.scratch[i] = other.mean[i] - self.mean[i];
        }
        let w = na * nb / n;
        let mut idx = 0;
        for i in 0..self.channels {
            for j in 0..=i {
                self.m2[idx] += other.m2[idx] + self.scratch[i] * self.scratch[j] * w;
                idx += 1;
            }
        }
        for i in 0..self.channels {
            self.mean[i] += self.scratch[i] * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    pub fn means(&self) -> &[f64] {
        &self.mean
    }

    /// Sample covariance between channels `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        self.m2[tri(hi, lo)] / (self.count as f64 - 1.0)
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance(i, i)
    }
}
