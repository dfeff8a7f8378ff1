//! Tail-index estimators indexed by the number `k` of top order statistics.
//!
//! All estimators read a [`TailSample`], which caches the ranked data, the
//! log order statistics and both survival curves so that sweeping `k` does
//! not recompute them. With `Zᵢ` the `i`-th largest observation, `δᵢ` its
//! flag and `p̂ₖ` the uncensored fraction among the top `k`:
//!
//! | estimator      | value at `k`                                                   |
//! |----------------|----------------------------------------------------------------|
//! | Hill           | `(1/k) Σ log(Zᵢ/Z_{k+1})`                                      |
//! | EFG            | `Hill / p̂ₖ`                                                    |
//! | Worms (KM)     | `Σ (δᵢ/i) R_KM(i,k) log(Zᵢ/Z_{k+1})`                           |
//! | MNS (NA)       | `Σ (δᵢ/i) R_NA(i,k) log(Zᵢ/Z_{k+1})`                           |
//! | weighted NA/KM | `(β/p̂ₖ)² Σ (δᵢ/i) R(i,k)^{β/p̂ₖ} log(Zᵢ/Z_{k+1})`              |
//! | BW(β)          | `T/(1 − βT)`, `T = Σ_{i≥2} R_KM(i,k) [κ(Zᵢ/Z_{k+1}) − κ(Z_{i+1}/Z_{k+1})]` |
//!
//! where `R(i,k)` is [`SurvivalCurve::tail_ratio`] and `κ` the Box-Cox
//! transform.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::{km_curve, na_curve, rank, CensoredSample, RankedSample, SurvivalCurve};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawSpec")]
pub enum EstimatorSpec {
    Hill,
    PHat,
    Efg,
    WormsKm,
    MnsNa,
    WeightedNa { beta: f64 },
    WeightedKm { beta: f64 },
    Bw { beta: f64 },
}

/// Wire form; `beta` is required exactly for the weighted and BW kinds.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    beta: Option<f64>,
}

impl TryFrom<RawSpec> for EstimatorSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        let spec = EstimatorSpec::from_name(&raw.kind, raw.beta).map_err(|e| e.to_string())?;
        if raw.kind.contains('-') {
            return Err(format!("unknown estimator `{}`", raw.kind));
        }
        if spec.beta().is_none() && raw.beta.is_some() {
            return Err(format!("estimator `{}` takes no beta", raw.kind));
        }
        Ok(spec)
    }
}

/// Non-fatal remarks attached to an estimator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecWarning {
    /// Weighted estimators with `β ≤ 1` are only covered by theory when `p > 1/2`.
    BetaAtMostOne,
}

impl EstimatorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorSpec::Hill => "hill",
            EstimatorSpec::PHat => "p_hat",
            EstimatorSpec::Efg => "efg",
            EstimatorSpec::WormsKm => "worms_km",
            EstimatorSpec::MnsNa => "mns_na",
            EstimatorSpec::WeightedNa { .. } => "weighted_na",
            EstimatorSpec::WeightedKm { .. } => "weighted_km",
            EstimatorSpec::Bw { .. } => "bw",
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            EstimatorSpec::WeightedNa { beta }
            | EstimatorSpec::WeightedKm { beta }
            | EstimatorSpec::Bw { beta } => Some(beta),
            _ => None,
        }
    }

    /// Stable identifier, e.g. `weighted_na[1.01]`.
    pub fn id(&self) -> String {
        match self.beta() {
            Some(b) => format!("{}[{}]", self.name(), b),
            None => self.name().to_owned(),
        }
    }

    /// Parses a name as produced by [`name`](Self::name) (dashes accepted).
    pub fn from_name(name: &str, beta: Option<f64>) -> Result<Self> {
        let need_beta =
            || beta.ok_or_else(|| Error::Config(format!("estimator `{name}` needs a beta value")));
        let spec = match name.replace('-', "_").as_str() {
            "hill" => EstimatorSpec::Hill,
            "p_hat" | "phat" => EstimatorSpec::PHat,
            "efg" => EstimatorSpec::Efg,
            "worms_km" | "worms" => EstimatorSpec::WormsKm,
            "mns_na" | "mns" => EstimatorSpec::MnsNa,
            "weighted_na" => EstimatorSpec::WeightedNa { beta: need_beta()? },
            "weighted_km" => EstimatorSpec::WeightedKm { beta: need_beta()? },
            "bw" => EstimatorSpec::Bw { beta: need_beta()? },
            other => return Err(Error::Config(format!("unknown estimator `{other}`"))),
        };
        Ok(spec)
    }

    pub fn validate(&self) -> Result<Vec<SpecWarning>> {
        match *self {
            EstimatorSpec::WeightedNa { beta } | EstimatorSpec::WeightedKm { beta } => {
                if !(beta.is_finite() && beta > 0.0) {
                    return Err(Error::domain(format!("beta must be > 0, got {beta}")));
                }
                Ok(if beta <= 1.0 {
                    vec![SpecWarning::BetaAtMostOne]
                } else {
                    vec![]
                })
            }
            EstimatorSpec::Bw { beta } if !beta.is_finite() => {
                Err(Error::domain(format!("beta must be finite, got {beta}")))
            }
            _ => Ok(vec![]),
        }
    }

    /// Smallest admissible `k`.
    pub fn min_k(&self) -> usize {
        match self {
            EstimatorSpec::Bw { .. } => 2,
            _ => 1,
        }
    }

    /// Largest admissible `k` for a sample of size `n`.
    pub fn max_k(&self, n: usize) -> usize {
        match self {
            EstimatorSpec::PHat => n,
            _ => n.saturating_sub(1),
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Box-Cox transform `κ_{−β}(u) = ∫₁ᵘ t^{−β−1} dt`, with `κ₀ = log`.
pub fn box_cox<T: Scalar>(u: T, beta: T) -> Result<T> {
    if !(u >= T::one()) {
        return Err(Error::domain(format!(
            "Box-Cox argument must be >= 1, got {u}"
        )));
    }
    Ok(box_cox_log(u.ln(), beta))
}

/// `κ_{−β}` expressed through `log u`.
#[inline]
fn box_cox_log<T: Scalar>(log_u: T, beta: T) -> T {
    if beta == T::zero() {
        log_u
    } else {
        -(-beta * log_u).exp_m1() / beta
    }
}

/// Ranked sample with cached logs and survival curves.
#[derive(Debug, Clone)]
pub struct TailSample<T> {
    ranked: RankedSample<T>,
    /// ascending `log Z_{m:n}`
    log_z: Vec<T>,
    km: SurvivalCurve<T>,
    na: SurvivalCurve<T>,
}

impl<T: Scalar> TailSample<T> {
    pub fn new(ranked: RankedSample<T>) -> Self {
        let log_z = ranked.z_sorted().iter().map(|z| z.ln()).collect();
        let km = km_curve(&ranked);
        let na = na_curve(&ranked);
        Self {
            ranked,
            log_z,
            km,
            na,
        }
    }

    pub fn from_sample(sample: &CensoredSample<T>) -> Self {
        Self::new(rank(sample))
    }

    pub fn ranked(&self) -> &RankedSample<T> {
        &self.ranked
    }

    pub fn n(&self) -> usize {
        self.ranked.n()
    }

    pub fn km(&self) -> &SurvivalCurve<T> {
        &self.km
    }

    pub fn na(&self) -> &SurvivalCurve<T> {
        &self.na
    }

    #[inline]
    fn top_log_z(&self, i: usize) -> T {
        self.log_z[self.log_z.len() - i]
    }

    fn check_k(&self, k: usize, lo: usize, hi: usize) -> Result<()> {
        if k < lo || k > hi {
            Err(Error::OutOfRange {
                what: "k",
                value: k,
                lo,
                hi,
            })
        } else {
            Ok(())
        }
    }

    fn uncensored_fraction(&self, k: usize) -> Result<T> {
        let m = self.ranked.uncensored_in_top(k);
        if m == 0 {
            return Err(Error::AllCensoredTail { k });
        }
        Ok(T::from_count(m) / T::from_count(k))
    }

    pub fn hill(&self, k: usize) -> Result<T> {
        self.check_k(k, 1, self.n() - 1)?;
        let threshold = self.top_log_z(k + 1);
        let sum: T = (1..=k).map(|i| self.top_log_z(i) - threshold).sum();
        Ok(sum / T::from_count(k))
    }

    pub fn p_hat(&self, k: usize) -> Result<T> {
        self.check_k(k, 1, self.n())?;
        Ok(T::from_count(self.ranked.uncensored_in_top(k)) / T::from_count(k))
    }

    pub fn efg(&self, k: usize) -> Result<T> {
        let hill = self.hill(k)?;
        Ok(hill / self.uncensored_fraction(k)?)
    }

    /// `prefactor · Σ (δᵢ/i) R(i,k)^exponent log(Zᵢ/Z_{k+1})`.
    fn survival_integral(
        &self,
        curve: &SurvivalCurve<T>,
        k: usize,
        exponent: T,
        prefactor: T,
    ) -> Result<T> {
        self.check_k(k, 1, self.n() - 1)?;
        let threshold = self.top_log_z(k + 1);
        let mut sum = T::zero();
        for i in (1..=k).filter(|&i| self.ranked.top_delta(i)) {
            let log_ratio = curve.log_tail_ratio(i, k)?;
            let weight = (exponent * log_ratio).exp() / T::from_count(i);
            sum = sum + weight * (self.top_log_z(i) - threshold);
        }
        Ok(prefactor * sum)
    }

    fn weighted(&self, curve: &SurvivalCurve<T>, k: usize, beta: T) -> Result<T> {
        if !(beta > T::zero()) {
            return Err(Error::domain(format!("beta must be > 0, got {beta}")));
        }
        self.check_k(k, 1, self.n() - 1)?;
        let a = beta / self.uncensored_fraction(k)?;
        self.survival_integral(curve, k, a, a * a)
    }

    /// Weighted Nelson-Aalen integral estimator.
    pub fn weighted_na(&self, k: usize, beta: T) -> Result<T> {
        self.weighted(&self.na, k, beta)
    }

    /// Weighted Kaplan-Meier integral estimator; `β = p̂ₖ` gives Worms's estimator.
    pub fn weighted_km(&self, k: usize, beta: T) -> Result<T> {
        self.weighted(&self.km, k, beta)
    }

    pub fn mns_na(&self, k: usize) -> Result<T> {
        self.survival_integral(&self.na, k, T::one(), T::one())
    }

    pub fn worms_km(&self, k: usize) -> Result<T> {
        self.survival_integral(&self.km, k, T::one(), T::one())
    }

    /// `T̂ₖ(β)` of the Beirlant-Worms construction.
    pub fn bw_statistic(&self, k: usize, beta: T) -> Result<T> {
        self.check_k(k, 2, self.n() - 1)?;
        let threshold = self.top_log_z(k + 1);
        let mut sum = T::zero();
        for i in 2..=k {
            let ratio = self.km.tail_ratio(i, k)?;
            let upper = box_cox_log(self.top_log_z(i) - threshold, beta);
            let lower = box_cox_log(self.top_log_z(i + 1) - threshold, beta);
            sum = sum + ratio * (upper - lower);
        }
        Ok(sum)
    }

    /// Beirlant-Worms estimator `T̂/(1 − βT̂)`; may be negative for extreme `β`.
    pub fn bw(&self, k: usize, beta: T) -> Result<T> {
        let t = self.bw_statistic(k, beta)?;
        let denom = T::one() - beta * t;
        if denom == T::zero() {
            return Err(Error::Degenerate(format!("1 - beta*T vanishes at k = {k}")));
        }
        Ok(t / denom)
    }

    pub fn estimate(&self, spec: &EstimatorSpec, k: usize) -> Result<T> {
        let value = match *spec {
            EstimatorSpec::Hill => self.hill(k),
            EstimatorSpec::PHat => self.p_hat(k),
            EstimatorSpec::Efg => self.efg(k),
            EstimatorSpec::WormsKm => self.worms_km(k),
            EstimatorSpec::MnsNa => self.mns_na(k),
            EstimatorSpec::WeightedNa { beta } => self.weighted_na(k, T::lit(beta)),
            EstimatorSpec::WeightedKm { beta } => self.weighted_km(k, T::lit(beta)),
            EstimatorSpec::Bw { beta } => self.bw(k, T::lit(beta)),
        }?;
        if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::Degenerate(format!(
                "{spec} is not finite at k = {k}"
            )))
        }
    }

    /// Estimates for every `k` in `[k_min, k_max]`.
    pub fn path(
        &self,
        spec: &EstimatorSpec,
        k_min: usize,
        k_max: usize,
    ) -> Result<EstimatePath<T>> {
        let warnings = spec.validate()?;
        let hi = spec.max_k(self.n());
        if k_min == 0 || k_min > k_max || k_max > hi {
            return Err(Error::domain(format!(
                "k range [{k_min}, {k_max}] is empty or outside [1, {hi}]"
            )));
        }
        let mut path = EstimatePath {
            estimator: *spec,
            k_values: Vec::with_capacity(k_max - k_min + 1),
            estimates: Vec::with_capacity(k_max - k_min + 1),
            failures: Vec::new(),
            warnings,
        };
        for k in k_min..=k_max {
            match self.estimate(spec, k) {
                Ok(v) => {
                    path.k_values.push(k);
                    path.estimates.push(v);
                }
                Err(e) => path.failures.push(PathFailure {
                    k,
                    reason: ReasonCode::from(&e),
                }),
            }
        }
        Ok(path)
    }
}

/// Why an estimate at some `k` is missing from a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReasonCode {
    AllCensoredTail,
    Degenerate,
    OutOfRange,
    Domain,
}

impl ReasonCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReasonCode::AllCensoredTail => "all_censored_tail",
            ReasonCode::Degenerate => "degenerate",
            ReasonCode::OutOfRange => "out_of_range",
            ReasonCode::Domain => "domain",
        }
    }
}

impl From<&Error> for ReasonCode {
    fn from(e: &Error) -> Self {
        match e {
            Error::AllCensoredTail { .. } => ReasonCode::AllCensoredTail,
            Error::Degenerate(_) => ReasonCode::Degenerate,
            Error::OutOfRange { .. } => ReasonCode::OutOfRange,
            _ => ReasonCode::Domain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathFailure {
    pub k: usize,
    pub reason: ReasonCode,
}

/// Estimator values as a function of `k`; failed `k`s are listed separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePath<T> {
    pub estimator: EstimatorSpec,
    pub k_values: Vec<usize>,
    pub estimates: Vec<T>,
    pub failures: Vec<PathFailure>,
    pub warnings: Vec<SpecWarning>,
}

impl<T: Scalar> EstimatePath<T> {
    pub fn get(&self, k: usize) -> Option<T> {
        self.k_values
            .binary_search(&k)
            .ok()
            .map(|i| self.estimates[i])
    }

    pub fn len(&self) -> usize {
        self.k_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k_values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.k_values
            .iter()
            .copied()
            .zip(self.estimates.iter().copied())
    }

    /// Builds a path from `(k, value)` pairs, e.g. read back from CSV.
    pub fn from_points(
        estimator: EstimatorSpec,
        points: Vec<(usize, T)>,
        failures: Vec<PathFailure>,
    ) -> Result<Self> {
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::domain("path k values must be strictly increasing"));
        }
        if points.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::domain("path values must be finite"));
        }
        let (k_values, estimates) = points.into_iter().unzip();
        Ok(Self {
            estimator,
            k_values,
            estimates,
            failures,
            warnings: vec![],
        })
    }
}

macro_rules! ranked_entry_point {
    ($(#[$m:meta])* $name:ident $(, $arg:ident)*) => {
        $(#[$m])*
        pub fn $name<T: Scalar>(ranked: &RankedSample<T>, k: usize $(, $arg: T)*) -> Result<T> {
            TailSample::new(ranked.clone()).$name(k $(, $arg)*)
        }
    };
}

ranked_entry_point!(
    /// One-shot Hill estimate; prefer [`TailSample`] for repeated calls.
    hill
);
ranked_entry_point!(p_hat);
ranked_entry_point!(efg);
ranked_entry_point!(mns_na);
ranked_entry_point!(worms_km);
ranked_entry_point!(weighted_na, beta);
ranked_entry_point!(weighted_km, beta);
ranked_entry_point!(bw, beta);

/// Path of `spec` over `[k_min, k_max]`.
pub fn path<T: Scalar>(
    ranked: &RankedSample<T>,
    spec: &EstimatorSpec,
    k_min: usize,
    k_max: usize,
) -> Result<EstimatePath<T>> {
    TailSample::new(ranked.clone()).path(spec, k_min, k_max)
}
