//! Tail-index estimation for heavy-tailed data under random right censoring.
//!
//! The crate covers the whole workflow:
//!
//! * [`sampling`]: Burr, Fréchet and Pareto variates and the censoring
//!   mechanism `Z = min(X, C)`, `δ = 1{X ≤ C}`;
//! * [`survival`]: Kaplan-Meier and Nelson-Aalen curves on ranked data;
//! * [`estimators`]: Hill, EFG, Worms, MNS, Beirlant-Worms and the weighted
//!   Kaplan-Meier / Nelson-Aalen integral estimators, for any `k`;
//! * [`asymptotics`]: limiting bias and variance and normal intervals;
//! * [`kselect`]: Reiss-Thomas choice of `k`;
//! * [`montecarlo`]: bias/MSE studies over replicated samples;
//! * [`io`]: CSV datasets and tables, JSON run configurations.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `…64`
//! aliases below fix the common double-precision case.
//!
//! ```
//! use censtail::{CensoredSample, TailSample64};
//!
//! let z = vec![1.0, 2.5, 3.0, 7.0, 12.0, 30.0];
//! let delta = vec![true, true, false, true, true, false];
//! let tail = TailSample64::from_sample(&CensoredSample::new(z, delta).unwrap());
//! let gamma = tail.weighted_na(4, 1.01).unwrap();
//! assert!(gamma > 0.0);
//! ```

// `!(x > 0)` style guards are there to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod error;
pub mod estimators;
pub mod io;
pub mod kselect;
pub mod montecarlo;
pub mod sampling;
pub mod scalar;
pub mod survival;

pub use asymptotics::{confidence_interval, AsymptoticParams, CiResult};
pub use error::{Error, Result};
pub use estimators::{EstimatePath, EstimatorSpec, ReasonCode, TailSample};
pub use kselect::{reiss_thomas, KSelectConfig, KSelection};
pub use montecarlo::{figure_table, FigureRow, McConfig, McSummary};
pub use sampling::{CensoringScenario, HeavyTailModel, Seed};
pub use scalar::Scalar;
pub use survival::{km_curve, na_curve, rank, CensoredSample, RankedSample, SurvivalCurve};

pub type CensoredSample64 = CensoredSample<f64>;
pub type RankedSample64 = RankedSample<f64>;
pub type SurvivalCurve64 = SurvivalCurve<f64>;
pub type TailSample64 = TailSample<f64>;
pub type EstimatePath64 = EstimatePath<f64>;
pub type AsymptoticParams64 = AsymptoticParams<f64>;

pub type TailSample32 = TailSample<f32>;
pub type EstimatePath32 = EstimatePath<f32>;
