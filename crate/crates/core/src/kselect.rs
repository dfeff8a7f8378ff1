//! Adaptive choice of `k` by the Reiss-Thomas criterion
//!
//! ```text
//! crit(k) = (1/k) Σ_{i ≤ k} i^ν |ξᵢ − median(ξ₁, …, ξₖ)|
//! ```
//!
//! evaluated on an estimator path `ξ`. The running median and the weighted
//! absolute deviations around it are maintained with two heaps, so a full
//! sweep costs `O(n log n)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatePath;
use crate::scalar::Scalar;

pub const DEFAULT_NU: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSelectConfig {
    pub nu: f64,
    pub k_min: usize,
    /// `None` means "up to the end of the path".
    pub k_max: Option<usize>,
}

impl Default for KSelectConfig {
    fn default() -> Self {
        Self {
            nu: DEFAULT_NU,
            k_min: 2,
            k_max: None,
        }
    }
}

impl KSelectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.nu) {
            return Err(Error::Config(format!(
                "nu must lie in [0, 1/2], got {}",
                self.nu
            )));
        }
        if self.k_min < 2 {
            return Err(Error::Config(format!(
                "k_min must be >= 2, got {}",
                self.k_min
            )));
        }
        if let Some(hi) = self.k_max {
            if hi < self.k_min {
                return Err(Error::Config(format!("k_max {hi} < k_min {}", self.k_min)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KSelection<T> {
    pub k_opt: usize,
    pub criterion: T,
}

#[derive(Debug, Clone, Copy)]
struct Entry<T> {
    value: T,
    weight: T,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Scalar> Eq for Entry<T> {}
impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for Entry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .partial_cmp(&other.value)
            .unwrap_or(Ordering::Equal)
    }
}

/// Heap side with running totals of weights and weighted values.
#[derive(Debug)]
struct Side<H> {
    heap: H,
    weight: f64,
    weighted: f64,
}

/// Running median with weighted absolute deviation `Σ wᵢ|ξᵢ − m|`.
#[derive(Debug)]
struct MedianTracker<T: Scalar> {
    low: Side<BinaryHeap<Entry<T>>>,
    high: Side<BinaryHeap<std::cmp::Reverse<Entry<T>>>>,
}

impl<T: Scalar> MedianTracker<T> {
    fn new() -> Self {
        Self {
            low: Side {
                heap: BinaryHeap::new(),
                weight: 0.0,
                weighted: 0.0,
            },
            high: Side {
                heap: BinaryHeap::new(),
                weight: 0.0,
                weighted: 0.0,
            },
        }
    }

    fn push(&mut self, value: T, weight: T) {
        let e = Entry { value, weight };
        let goes_low = self.low.heap.peek().is_none_or(|top| e <= *top);
        if goes_low {
            self.push_low(e);
        } else {
            self.push_high(e);
        }
        if self.low.heap.len() > self.high.heap.len() + 1 {
            let e = self.pop_low();
            self.push_high(e);
        } else if self.high.heap.len() > self.low.heap.len() {
            let e = self.pop_high();
            self.push_low(e);
        }
    }

    fn push_low(&mut self, e: Entry<T>) {
        let (v, w) = (e.value.to_f64_lossy(), e.weight.to_f64_lossy());
        self.low.weight += w;
        self.low.weighted += w * v;
        self.low.heap.push(e);
    }

    fn push_high(&mut self, e: Entry<T>) {
        let (v, w) = (e.value.to_f64_lossy(), e.weight.to_f64_lossy());
        self.high.weight += w;
        self.high.weighted += w * v;
        self.high.heap.push(std::cmp::Reverse(e));
    }

    fn pop_low(&mut self) -> Entry<T> {
        let e = self.low.heap.pop().expect("nonempty");
        let (v, w) = (e.value.to_f64_lossy(), e.weight.to_f64_lossy());
        self.low.weight -= w;
        self.low.weighted -= w * v;
        e
    }

    fn pop_high(&mut self) -> Entry<T> {
        let e = self.high.heap.pop().expect("nonempty").0;
        let (v, w) = (e.value.to_f64_lossy(), e.weight.to_f64_lossy());
        self.high.weight -= w;
        self.high.weighted -= w * v;
        e
    }

    /// Lower-middle element for odd counts; mean of the two middles otherwise.
    fn median(&self) -> f64 {
        let lo = self.low.heap.peek().expect("nonempty").value.to_f64_lossy();
        if self.low.heap.len() > self.high.heap.len() {
            lo
        } else {
            let hi = self
                .high
                .heap
                .peek()
                .expect("nonempty")
                .0
                .value
                .to_f64_lossy();
            0.5 * (lo + hi)
        }
    }

    fn weighted_deviation(&self) -> f64 {
        let m = self.median();
        let dev =
            m * self.low.weight - self.low.weighted + self.high.weighted - m * self.high.weight;
        dev.max(0.0)
    }
}

/// Median with the even-length convention used by the criterion.
pub fn median<T: Scalar>(values: &[T]) -> T {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / T::lit(2.0)
    }
}

/// Reiss-Thomas `k` selection on a path.
///
/// The sequence `ξ` starts at the path's first available `k` (leading
/// failures are skipped); any later gap disqualifies every `k` whose prefix
/// contains it. Ties go to the smallest `k`.
pub fn reiss_thomas<T: Scalar>(
    path: &EstimatePath<T>,
    config: &KSelectConfig,
) -> Result<KSelection<T>> {
    config.validate()?;
    let Some(&start) = path.k_values.first() else {
        return Err(Error::NoAdmissibleK);
    };
    let nu = config.nu;
    let mut tracker = MedianTracker::new();
    let mut best: Option<(usize, f64)> = None;
    for (expected, (k, value)) in (start..).zip(path.iter()) {
        if k != expected {
            // gap in the prefix: every larger k is excluded
            break;
        }
        tracker.push(value, T::lit((k as f64).powf(nu)));
        if k < config.k_min || config.k_max.is_some_and(|hi| k > hi) {
            continue;
        }
        let crit = tracker.weighted_deviation() / k as f64;
        if best.is_none_or(|(_, b)| crit < b) {
            best = Some((k, crit));
        }
    }
    best.map(|(k_opt, c)| KSelection {
        k_opt,
        criterion: T::lit(c),
    })
    .ok_or(Error::NoAdmissibleK)
}
