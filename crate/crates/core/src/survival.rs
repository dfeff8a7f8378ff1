//! Kaplan-Meier and Nelson-Aalen survival curves on ranked censored data.
//!
//! Curves are kept as cumulative log-survival sums over the ascending order
//! statistics, so ratios of survival values are exponentials of differences
//! and never underflow for large samples.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Observed minima `z` with their uncensored flags `δ`, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoredSample<T> {
    z: Vec<T>,
    delta: Vec<bool>,
}

impl<T: Scalar> CensoredSample<T> {
    pub fn new(z: Vec<T>, delta: Vec<bool>) -> Result<Self> {
        if z.len() != delta.len() {
            return Err(Error::domain(format!(
                "z has {} entries but delta has {}",
                z.len(),
                delta.len()
            )));
        }
        if z.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((i, v)) = z
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > T::zero()))
        {
            return Err(Error::domain(format!(
                "z[{i}] = {v} is not a finite positive value"
            )));
        }
        Ok(Self { z, delta })
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn delta(&self) -> &[bool] {
        &self.delta
    }

    pub fn censored_count(&self) -> usize {
        self.delta.iter().filter(|d| !**d).count()
    }

    /// Multiplies every observation by `c > 0`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        Self::new(self.z.iter().map(|&z| z * c).collect(), self.delta.clone())
    }
}

/// Ascending order statistics `Z₁:ₙ ≤ … ≤ Zₙ:ₙ` with concomitant flags.
///
/// Ties keep their input order; results on tied data depend on that order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample<T> {
    z: Vec<T>,
    delta: Vec<bool>,
}

/// Stable sort of the sample by `z`.
pub fn rank<T: Scalar>(sample: &CensoredSample<T>) -> RankedSample<T> {
    let mut order: Vec<usize> = (0..sample.len()).collect();
    order.sort_by(|&a, &b| {
        sample.z[a]
            .partial_cmp(&sample.z[b])
            .unwrap_or(Ordering::Equal)
    });
    RankedSample {
        z: order.iter().map(|&i| sample.z[i]).collect(),
        delta: order.iter().map(|&i| sample.delta[i]).collect(),
    }
}

impl<T: Scalar> RankedSample<T> {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z_sorted(&self) -> &[T] {
        &self.z
    }

    pub fn delta_concomitant(&self) -> &[bool] {
        &self.delta
    }

    /// `Z_{n−i+1:n}`, the `i`-th largest observation (`1 ≤ i ≤ n`).
    #[inline]
    pub fn top_z(&self, i: usize) -> T {
        self.z[self.z.len() - i]
    }

    /// `δ₍n−i+1:n₎`.
    #[inline]
    pub fn top_delta(&self, i: usize) -> bool {
        self.delta[self.delta.len() - i]
    }

    /// Number of uncensored observations among the top `k`.
    pub fn uncensored_in_top(&self, k: usize) -> usize {
        self.delta[self.delta.len() - k..]
            .iter()
            .filter(|d| **d)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    KaplanMeier,
    NelsonAalen,
}

/// Step estimate of `F̄` evaluated at each order statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T> {
    kind: CurveKind,
    support: Vec<T>,
    /// `log F̄ₙ(Z_{m:n})` at index `m − 1`; `−∞` where KM reaches zero.
    log_values: Vec<T>,
}

fn curve<T: Scalar>(ranked: &RankedSample<T>, kind: CurveKind) -> SurvivalCurve<T> {
    let n = ranked.n();
    let mut acc = T::zero();
    let log_values = ranked
        .delta
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if d {
                let at_risk = T::from_count(n - j);
                acc = acc
                    + match kind {
                        CurveKind::NelsonAalen => -T::one() / at_risk,
                        CurveKind::KaplanMeier => (-T::one() / at_risk).ln_1p(),
                    };
            }
            acc
        })
        .collect();
    SurvivalCurve {
        kind,
        support: ranked.z.clone(),
        log_values,
    }
}

/// Kaplan-Meier: `F̄(Z_{i:n}) = ∏_{j≤i} (1 − 1/(n−j+1))^{δ₍j:n₎}`.
pub fn km_curve<T: Scalar>(ranked: &RankedSample<T>) -> SurvivalCurve<T> {
    curve(ranked, CurveKind::KaplanMeier)
}

/// Nelson-Aalen: `F̄(Z_{i:n}) = exp(−Σ_{j≤i} δ₍j:n₎/(n−j+1))`.
pub fn na_curve<T: Scalar>(ranked: &RankedSample<T>) -> SurvivalCurve<T> {
    curve(ranked, CurveKind::NelsonAalen)
}

impl<T: Scalar> SurvivalCurve<T> {
    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[T] {
        &self.support
    }

    pub fn log_values(&self) -> &[T] {
        &self.log_values
    }

    pub fn values(&self) -> Vec<T> {
        self.log_values.iter().map(|l| l.exp()).collect()
    }

    /// `log F̄ₙ(Z_{m:n})` for the ascending rank `1 ≤ m ≤ n`.
    pub fn log_value_at(&self, m: usize) -> T {
        self.log_values[m - 1]
    }

    /// Log of [`tail_ratio`](Self::tail_ratio).
    pub fn log_tail_ratio(&self, i: usize, k: usize) -> Result<T> {
        let n = self.n();
        if k == 0 || k + 1 > n {
            return Err(Error::OutOfRange {
                what: "k",
                value: k,
                lo: 1,
                hi: n.saturating_sub(1),
            });
        }
        if i == 0 || i > k {
            return Err(Error::OutOfRange {
                what: "i",
                value: i,
                lo: 1,
                hi: k,
            });
        }
        // ∏_{j=i+1}^{k} over top ranks j spans ascending ranks n−k+1 ..= n−i.
        Ok(self.log_values[n - i - 1] - self.log_values[n - k - 1])
    }

    /// Tail ratio from the product identity: NA gives
    /// `∏_{j=i+1}^{k} exp(−δ₍n−j+1:n₎/j)`, KM gives `∏_{j=i+1}^{k} (1 − δ₍n−j+1:n₎/j)`.
    /// Requires `1 ≤ i ≤ k ≤ n − 1`; equals 1 when `i = k`.
    pub fn tail_ratio(&self, i: usize, k: usize) -> Result<T> {
        self.log_tail_ratio(i, k).map(|l| l.exp())
    }
}

/// `sup |F̄^(KM)/F̄^(NA) − 1|` over `Z_{i:n}`, `i < n`.
pub fn km_na_divergence<T: Scalar>(ranked: &RankedSample<T>) -> T {
    let km = km_curve(ranked);
    let na = na_curve(ranked);
    let n = ranked.n();
    km.log_values[..n - 1]
        .iter()
        .zip(&na.log_values[..n - 1])
        .map(|(&a, &b)| (a - b).exp_m1().abs())
        .fold(T::zero(), T::max)
}
