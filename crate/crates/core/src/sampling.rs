//! Heavy-tailed random variates and the random right-censoring mechanism.
//!
//! Observations are generated as `Z = min(X, C)` with `δ = 1{X ≤ C}`, where
//! `X` and `C` are drawn independently by inverse transform from a
//! [`HeavyTailModel`]. Replication streams come from a counter-based ChaCha
//! generator so that replication `r` depends only on `(master seed, r)`.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::survival::CensoredSample;

/// Parametric family with a regularly varying upper tail.
///
/// Every variant's first parameter is the tail index of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HeavyTailModel {
    /// `F(x) = 1 − (1 + x^{1/η})^{−η/ζ}`, `x > 0`.
    Burr { zeta: f64, eta: f64 },
    /// `F(x) = exp(−x^{−1/ζ})`, `x > 0`.
    Frechet { zeta: f64 },
    /// Strict Pareto, `F(x) = 1 − x^{−1/ζ}`, `x ≥ 1`.
    Pareto { zeta: f64 },
    /// `F(x) = 1 − x^{−1/γ₁}(1 + 1/log x)`, `x > e`. The mass `F(e)` sits
    /// at the left endpoint `e`.
    ModifiedPareto { gamma1: f64 },
}

impl HeavyTailModel {
    pub fn tail_index(&self) -> f64 {
        match *self {
            HeavyTailModel::Burr { zeta, .. }
            | HeavyTailModel::Frechet { zeta }
            | HeavyTailModel::Pareto { zeta } => zeta,
            HeavyTailModel::ModifiedPareto { gamma1 } => gamma1,
        }
    }

    /// Same family with the tail index replaced (Burr keeps its `η`).
    pub fn with_tail_index(&self, gamma: f64) -> Self {
        match *self {
            HeavyTailModel::Burr { eta, .. } => HeavyTailModel::Burr { zeta: gamma, eta },
            HeavyTailModel::Frechet { .. } => HeavyTailModel::Frechet { zeta: gamma },
            HeavyTailModel::Pareto { .. } => HeavyTailModel::Pareto { zeta: gamma },
            HeavyTailModel::ModifiedPareto { .. } => {
                HeavyTailModel::ModifiedPareto { gamma1: gamma }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        match *self {
            HeavyTailModel::Burr { zeta, eta } => {
                positive("zeta", zeta)?;
                positive("eta", eta)
            }
            HeavyTailModel::Frechet { zeta } | HeavyTailModel::Pareto { zeta } => {
                positive("zeta", zeta)
            }
            HeavyTailModel::ModifiedPareto { gamma1 } => {
                positive("gamma1", gamma1)?;
                // F(e) = 1 − 2e^{−1/γ₁} must be a probability.
                if 2.0 * (-1.0 / gamma1).exp() > 1.0 {
                    return Err(Error::domain(format!(
                        "modified Pareto needs gamma1 <= 1/ln 2, got {gamma1}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn cdf<T: Scalar>(&self, x: T) -> T {
        let one = T::one();
        match *self {
            HeavyTailModel::Burr { zeta, eta } => {
                if x <= T::zero() {
                    return T::zero();
                }
                let (zeta, eta) = (T::lit(zeta), T::lit(eta));
                let base = x.powf(one / eta).ln_1p();
                -(-(eta / zeta) * base).exp_m1()
            }
            HeavyTailModel::Frechet { zeta } => {
                if x <= T::zero() {
                    return T::zero();
                }
                (-x.powf(-one / T::lit(zeta))).exp()
            }
            HeavyTailModel::Pareto { zeta } => {
                if x <= one {
                    return T::zero();
                }
                -(-x.ln() / T::lit(zeta)).exp_m1()
            }
            HeavyTailModel::ModifiedPareto { gamma1 } => {
                let e = T::E();
                if x < e {
                    return T::zero();
                }
                let t = x.ln();
                one - modified_pareto_survival(t, T::lit(gamma1))
            }
        }
    }

    /// Generalized inverse `inf{x : F(x) ≥ u}` for `u ∈ (0, 1)`.
    pub fn quantile<T: Scalar>(&self, u: T) -> Result<T> {
        if !(u > T::zero() && u < T::one()) {
            return Err(Error::domain(format!(
                "probability must lie in (0,1), got {u}"
            )));
        }
        self.validate()?;
        let x = match *self {
            HeavyTailModel::Burr { zeta, eta } => {
                let (zeta, eta) = (T::lit(zeta), T::lit(eta));
                // (1−u)^{−ζ/η} − 1 without cancellation for small u.
                let inner = (-(zeta / eta) * (-u).ln_1p()).exp_m1();
                inner.powf(eta)
            }
            HeavyTailModel::Frechet { zeta } => (-u.ln()).powf(-T::lit(zeta)),
            HeavyTailModel::Pareto { zeta } => (-T::lit(zeta) * (-u).ln_1p()).exp(),
            HeavyTailModel::ModifiedPareto { gamma1 } => {
                modified_pareto_quantile(u, T::lit(gamma1))
            }
        };
        if x.is_finite() && x > T::zero() {
            Ok(x)
        } else {
            Err(Error::domain(format!(
                "quantile at u = {u} is not representable"
            )))
        }
    }
}

fn modified_pareto_survival<T: Scalar>(log_x: T, gamma1: T) -> T {
    (-log_x / gamma1).exp() * (T::one() + T::one() / log_x)
}

/// Bisection in `t = log x` over `[1, t_hi]`.
fn modified_pareto_quantile<T: Scalar>(u: T, gamma1: T) -> T {
    let target = T::one() - u;
    let mut lo = T::one();
    if modified_pareto_survival(lo, gamma1) <= target {
        return T::E();
    }
    let mut hi = T::lit(2.0);
    while modified_pareto_survival(hi, gamma1) > target {
        lo = hi;
        hi = hi + hi;
        if !hi.is_finite() {
            return T::infinity();
        }
    }
    let tol = T::lit(1e-13);
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi || hi - lo <= tol * hi {
            break;
        }
        if modified_pareto_survival(mid, gamma1) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.exp()
}

/// Solves `p = γ₂/(γ₁ + γ₂)` for the censoring tail index `γ₂`.
pub fn solve_censor_index(gamma1: f64, p: f64) -> Result<f64> {
    if !(gamma1.is_finite() && gamma1 > 0.0) {
        return Err(Error::domain(format!("gamma1 must be > 0, got {gamma1}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("p must lie in (0,1), got {p}")));
    }
    Ok(p * gamma1 / (1.0 - p))
}

/// Target distribution paired with an independent censoring distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensoringScenario {
    target: HeavyTailModel,
    /// `None` means `C ≡ +∞`: nothing is censored.
    censor: Option<HeavyTailModel>,
    p: f64,
}

impl CensoringScenario {
    pub fn new(target: HeavyTailModel, censor: Option<HeavyTailModel>) -> Result<Self> {
        target.validate()?;
        let p = match censor {
            Some(c) => {
                c.validate()?;
                let (g1, g2) = (target.tail_index(), c.tail_index());
                g2 / (g1 + g2)
            }
            None => 1.0,
        };
        Ok(Self { target, censor, p })
    }

    /// Censor drawn from the target's family with `γ₂` chosen so that the
    /// upper-tail uncensored proportion equals `p`.
    pub fn matched(target: HeavyTailModel, p: f64) -> Result<Self> {
        let gamma2 = solve_censor_index(target.tail_index(), p)?;
        Self::new(target, Some(target.with_tail_index(gamma2)))
    }

    pub fn uncensored(target: HeavyTailModel) -> Result<Self> {
        Self::new(target, None)
    }

    pub fn target(&self) -> &HeavyTailModel {
        &self.target
    }

    pub fn censor(&self) -> Option<&HeavyTailModel> {
        self.censor.as_ref()
    }

    pub fn gamma1(&self) -> f64 {
        self.target.tail_index()
    }

    /// Limiting proportion of uncensored observations in the upper tail.
    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Master seed; replication streams are derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Independent generator for replication `r`.
    pub fn stream(self, r: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(r);
        rng
    }
}

fn open_uniform<T: Scalar, R: Rng + ?Sized>(rng: &mut R) -> T {
    loop {
        let u: f64 = rng.sample(Open01);
        let u = T::lit(u);
        // narrowing to f32 can round onto an endpoint
        if u > T::zero() && u < T::one() {
            return u;
        }
    }
}

/// Draws `n` censored pairs from `rng`; X and C use alternating uniforms.
pub fn generate_with<T: Scalar, R: Rng + ?Sized>(
    scenario: &CensoringScenario,
    n: usize,
    rng: &mut R,
) -> Result<CensoredSample<T>> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let mut z = Vec::with_capacity(n);
    let mut delta = Vec::with_capacity(n);
    for _ in 0..n {
        let x = scenario.target.quantile(open_uniform::<T, _>(rng))?;
        let c = match &scenario.censor {
            Some(model) => model.quantile(open_uniform::<T, _>(rng))?,
            None => T::infinity(),
        };
        if x <= c {
            z.push(x);
            delta.push(true);
        } else {
            z.push(c);
            delta.push(false);
        }
    }
    CensoredSample::new(z, delta)
}

/// Reproducible sample for `seed` (stream 0).
pub fn generate<T: Scalar>(
    scenario: &CensoringScenario,
    n: usize,
    seed: Seed,
) -> Result<CensoredSample<T>> {
    generate_with(scenario, n, &mut seed.stream(0))
}
