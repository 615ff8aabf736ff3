use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Equal-width bin counts over `[lo, hi]`; the upper edge falls in the last bin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram<T> {
    pub lo: T,
    pub hi: T,
    pub counts: Vec<usize>,
}

impl<T: Scalar> Histogram<T> {
    pub fn build(values: &[T], bins: usize, lo: T, hi: T) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter(
                "histogram needs at least one bin".into(),
            ));
        }
        let mut counts = vec![0; bins];
        let width = hi - lo;
        let nb = T::from_usize_lossy(bins);
        for &v in values {
            let b = if width > T::zero() {
                let pos = ((v - lo) / width * nb).floor();
                pos.to_usize().unwrap_or(0).min(bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        Ok(Self { lo, hi, counts })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Left edge of bin `b`.
    pub fn edge(&self, b: usize) -> T {
        self.lo + (self.hi - self.lo) * T::from_usize_lossy(b) / T::from_usize_lossy(self.bins())
    }

    /// Number of local maxima among nonzero bins (plateaus count once).
    pub fn modes(&self) -> usize {
        let c = &self.counts;
        let mut modes = 0;
        let mut i = 0;
        while i < c.len() {
            let mut j = i;
            while j + 1 < c.len() && c[j + 1] == c[i] {
                j += 1;
            }
            let left = i == 0 || c[i - 1] < c[i];
            let right = j + 1 == c.len() || c[j + 1] < c[i];
            if c[i] > 0 && left && right {
                modes += 1;
            }
            i = j + 1;
        }
        modes
    }
}
