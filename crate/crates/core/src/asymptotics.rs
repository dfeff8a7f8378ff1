//! Asymptotic bias and variance of the weighted estimators and the Gaussian
//! confidence intervals built from them.
//!
//! For `β > 1/2`, `√k(γ̂(β) − γ₁)` is asymptotically normal with mean
//! `μ_β = λβ/(β − pτ₁)` and variance `σ²_β = γ₁²β²/(p(2β − 1))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Model quantities entering the limit distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticParams<T> {
    pub gamma1: T,
    /// Upper-tail uncensored proportion; `p = 1` is the uncensored limit.
    pub p: T,
    pub beta: T,
    /// Second-order parameter, `≤ 0`.
    pub tau1: T,
    /// Limit of `√k·A₁(h)`.
    pub lambda: T,
}

impl<T: Scalar> AsymptoticParams<T> {
    pub fn new(gamma1: T, p: T, beta: T, tau1: T, lambda: T) -> Result<Self> {
        if !(gamma1 > T::zero() && gamma1.is_finite()) {
            return Err(Error::domain(format!("gamma1 must be > 0, got {gamma1}")));
        }
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::domain(format!("p must lie in (0,1], got {p}")));
        }
        if !beta.is_finite() {
            return Err(Error::domain(format!("beta must be finite, got {beta}")));
        }
        if !(tau1 <= T::zero()) {
            return Err(Error::domain(format!("tau1 must be <= 0, got {tau1}")));
        }
        if !lambda.is_finite() {
            return Err(Error::domain(format!(
                "lambda must be finite, got {lambda}"
            )));
        }
        Ok(Self {
            gamma1,
            p,
            beta,
            tau1,
            lambda,
        })
    }

    /// Unbiased regime (`τ₁ = 0`, `λ = 0`).
    pub fn unbiased(gamma1: T, p: T, beta: T) -> Result<Self> {
        Self::new(gamma1, p, beta, T::zero(), T::zero())
    }

    /// `σ²_β = γ₁²β²/(p(2β − 1))`, defined for `β > 1/2`.
    pub fn sigma2_beta(&self) -> Result<T> {
        let two = T::lit(2.0);
        if !(self.beta > T::lit(0.5)) {
            return Err(Error::domain(format!(
                "sigma2_beta needs beta > 1/2, got {}",
                self.beta
            )));
        }
        Ok(self.gamma1 * self.gamma1 * self.beta * self.beta
            / (self.p * (two * self.beta - T::one())))
    }

    /// `μ_β = λβ/(β − pτ₁)`.
    pub fn mu_beta(&self) -> Result<T> {
        let denom = self.beta - self.p * self.tau1;
        if denom == T::zero() {
            return Err(Error::domain("beta - p*tau1 vanishes"));
        }
        Ok(self.lambda * self.beta / denom)
    }

    fn require_weak_censoring(&self) -> Result<()> {
        if self.p > T::lit(0.5) && self.p < T::one() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "comparison needs 1/2 < p < 1, got {}",
                self.p
            )))
        }
    }

    /// `σ²_β − σ²_p`: variance of the weighted estimator minus that of the
    /// unweighted (MNS/Worms) one. Negative iff `1 < β < p/(2p − 1)`.
    pub fn variance_gap_mns(&self) -> Result<T> {
        self.require_weak_censoring()?;
        if !(self.beta > T::lit(0.5)) {
            return Err(Error::domain(format!(
                "needs beta > 1/2, got {}",
                self.beta
            )));
        }
        let (b, p, one, two) = (self.beta, self.p, T::one(), T::lit(2.0));
        Ok((b - p) * (two * p * b - p - b) * self.gamma1 * self.gamma1
            / (p * (two * p - one) * (two * b - one)))
    }

    /// Worms's asymptotic variance `γ₁²p/(2p − 1)`.
    pub fn worms_variance(&self) -> Result<T> {
        self.require_weak_censoring()?;
        let g2 = self.gamma1 * self.gamma1;
        Ok(g2 * self.p / (T::lit(2.0) * self.p - T::one()))
    }

    /// Beirlant-Worms asymptotic variance `γ₁²p(1 + βγ₁)²/(2p(1 + βγ₁) − 1)`.
    pub fn bw_variance(&self) -> Result<T> {
        self.require_weak_censoring()?;
        let a = T::one() + self.beta * self.gamma1;
        if !(a > T::zero()) {
            return Err(Error::domain("BW variance needs gamma1*beta > -1"));
        }
        let denom = T::lit(2.0) * self.p * a - T::one();
        if denom == T::zero() {
            return Err(Error::domain("2p(1 + beta*gamma1) - 1 vanishes"));
        }
        Ok(self.gamma1 * self.gamma1 * self.p * a * a / denom)
    }

    /// BW variance minus Worms variance,
    /// `γ₁²·(pβγ₁/(2p−1))·((2p−1)βγ₁ − 2(1−p))/(2p(1+βγ₁) − 1)`.
    /// Negative iff `0 < γ₁β < 2(1 − p)/(2p − 1)`.
    pub fn variance_gap_bw(&self) -> Result<T> {
        self.bw_variance()?;
        let (p, g, b, one, two) = (self.p, self.gamma1, self.beta, T::one(), T::lit(2.0));
        let a = b * g;
        let lead = p * a / (two * p - one);
        let tail = ((two * p - one) * a - two * (one - p)) / (two * p * (one + a) - one);
        Ok(g * g * lead * tail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CiResult<T> {
    pub point: T,
    pub lower: T,
    pub upper: T,
    pub level: T,
    pub se: T,
}

/// Plug-in normal interval `γ̂ ± z·γ̂β/√(k p̂ (2β − 1))`, ignoring the
/// asymptotic bias.
///
/// For the unweighted MNS/Worms estimators pass `β = p̂`; for Hill on
/// uncensored data pass `β = p̂ = 1`.
pub fn confidence_interval<T: Scalar>(
    estimate: T,
    k: usize,
    p_hat: T,
    beta: T,
    level: T,
) -> Result<CiResult<T>> {
    if !(level >= T::zero() && level < T::one()) {
        return Err(Error::domain(format!(
            "level must lie in [0,1), got {level}"
        )));
    }
    if k == 0 {
        return Err(Error::domain("k must be >= 1"));
    }
    if !(p_hat > T::zero() && p_hat <= T::one()) {
        return Err(Error::domain(format!(
            "p_hat must lie in (0,1], got {p_hat}"
        )));
    }
    if !(beta > T::lit(0.5)) {
        return Err(Error::domain(format!(
            "interval needs beta > 1/2, got {beta}"
        )));
    }
    let var_unit = beta * beta / (p_hat * (T::lit(2.0) * beta - T::one()));
    let se = estimate.abs() * (var_unit / T::from_count(k)).sqrt();
    let z = T::lit(normal_quantile(0.5 * (1.0 + level.to_f64_lossy()))?);
    let half = z * se;
    Ok(CiResult {
        point: estimate,
        lower: estimate - half,
        upper: estimate + half,
        level,
        se,
    })
}

/// Standard normal quantile (Wichura's AS 241, about 1e−16 relative).
#[allow(clippy::inconsistent_digit_grouping)]
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::domain(format!(
            "probability must lie in (0,1), got {prob}"
        )));
    }
    let q = prob - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2509.080_928_730_122_7 + 33430.575_583_588_13) * r
            + 67265.770_927_008_7)
            * r
            + 45921.953_931_549_87)
            * r
            + 13_731.693_765_509_46)
            * r
            + 1971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((r * 5226.495_278_852_546 + 28729.085_735_721_943) * r
            + 39307.895_800_092_71)
            * r
            + 21213.794_301_586_597)
            * r
            + 5394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return Ok(q * num / den);
    }
    let tail = if q < 0.0 { prob } else { 1.0 - prob };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_07)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_888)
            * r
            + 1.0;
        num / den
    };
    Ok(if q < 0.0 { -value } else { value })
}
