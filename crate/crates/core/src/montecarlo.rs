//! Replication engine: bias and MSE of estimator paths over simulated
//! censored samples.
//!
//! Replication `r` draws its sample from `seed.stream(r)`, and replication
//! results are folded in replication order, so a summary is bit-identical
//! whatever the number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimators::{EstimatorSpec, TailSample};
use crate::sampling::{generate_with, CensoringScenario, Seed};
use crate::scalar::{CompensatedSum, Scalar};

/// Replications handed to the thread pool per batch.
const BATCH: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub scenario: CensoringScenario,
    pub n: usize,
    pub replications: usize,
    pub estimators: Vec<EstimatorSpec>,
    pub k_grid: Vec<usize>,
    pub seed: Seed,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.n < 3 {
            return Err(Error::Config(format!("n must be >= 3, got {}", self.n)));
        }
        if self.estimators.is_empty() {
            return Err(Error::Config("at least one estimator is required".into()));
        }
        for e in &self.estimators {
            e.validate()?;
        }
        if self.k_grid.is_empty() {
            return Err(Error::Config("k_grid must not be empty".into()));
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("k_grid must be strictly increasing".into()));
        }
        let (lo, hi) = (self.k_grid[0], *self.k_grid.last().unwrap());
        if lo < 2 || hi > self.n - 1 {
            return Err(Error::Config(format!(
                "k_grid must lie in [2, {}], got [{lo}, {hi}]",
                self.n - 1
            )));
        }
        Ok(())
    }

    /// Every `k` in `[2, n−1]` taken with the given stride.
    pub fn full_grid(n: usize, stride: usize) -> Vec<usize> {
        (2..n).step_by(stride.max(1)).collect()
    }
}

/// Runs `f` on the sample of each replication `0..replications`, returning
/// results in replication order.
pub fn map_replications<T, R, F>(
    scenario: &CensoringScenario,
    n: usize,
    replications: usize,
    seed: Seed,
    f: F,
) -> Result<Vec<R>>
where
    T: Scalar,
    R: Send,
    F: Fn(&TailSample<T>) -> R + Sync,
{
    (0..replications as u64)
        .into_par_iter()
        .map(|r| {
            let sample = generate_with::<T, _>(scenario, n, &mut seed.stream(r))?;
            Ok(f(&TailSample::from_sample(&sample)))
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
struct CellAccumulator {
    successes: usize,
    failures: usize,
    sum: CompensatedSum,
    squared_error: CompensatedSum,
    mean: f64,
    m2: f64,
}

impl CellAccumulator {
    fn push(&mut self, value: Option<f64>, truth: f64) {
        let Some(x) = value else {
            self.failures += 1;
            return;
        };
        self.successes += 1;
        self.sum.add(x);
        self.squared_error.add((x - truth) * (x - truth));
        let delta = x - self.mean;
        self.mean += delta / self.successes as f64;
        self.m2 += delta * (x - self.mean);
    }
}

/// Moments of one estimator at one `k`. Moments are NaN when every
/// replication failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCell {
    pub estimator: EstimatorSpec,
    pub k: usize,
    pub mean_estimate: f64,
    pub abs_bias: f64,
    pub mse: f64,
    /// Population variance of the successful replications.
    pub variance: f64,
    pub failures: usize,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub gamma1: f64,
    pub n: usize,
    pub replications: usize,
    /// Ordered by estimator (config order), then `k`.
    pub cells: Vec<McCell>,
}

impl McSummary {
    pub fn cells_for<'a>(
        &'a self,
        spec: &'a EstimatorSpec,
    ) -> impl Iterator<Item = &'a McCell> + 'a {
        self.cells.iter().filter(move |c| c.estimator == *spec)
    }

    /// Smallest MSE over `k` for one estimator.
    pub fn min_mse<'a>(&'a self, spec: &'a EstimatorSpec) -> Option<&'a McCell> {
        self.cells_for(spec)
            .filter(|c| c.mse.is_finite())
            .min_by(|a, b| a.mse.total_cmp(&b.mse))
    }
}

/// Runs the study on the current rayon pool.
pub fn run<T: Scalar>(config: &McConfig) -> Result<McSummary> {
    config.validate()?;
    let truth = config.scenario.gamma1();
    let cells_per_rep = config.estimators.len() * config.k_grid.len();
    let mut acc = vec![CellAccumulator::default(); cells_per_rep];

    let mut done = 0;
    while done < config.replications {
        let batch = BATCH.min(config.replications - done);
        let results: Vec<Vec<Option<f64>>> = (done as u64..(done + batch) as u64)
            .into_par_iter()
            .map(|r| {
                let sample =
                    generate_with::<T, _>(&config.scenario, config.n, &mut config.seed.stream(r))?;
                let tail = TailSample::from_sample(&sample);
                let mut row = Vec::with_capacity(cells_per_rep);
                for spec in &config.estimators {
                    for &k in &config.k_grid {
                        row.push(tail.estimate(spec, k).ok().map(|v| v.to_f64_lossy()));
                    }
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        for row in results {
            for (cell, value) in acc.iter_mut().zip(row) {
                cell.push(value, truth);
            }
        }
        done += batch;
    }

    let mut cells = Vec::with_capacity(cells_per_rep);
    let mut it = acc.into_iter();
    for spec in &config.estimators {
        for &k in &config.k_grid {
            let a = it.next().expect("one accumulator per cell");
            let m = a.successes as f64;
            let (mean, mse, variance) = if a.successes == 0 {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                (a.sum.value() / m, a.squared_error.value() / m, a.m2 / m)
            };
            cells.push(McCell {
                estimator: *spec,
                k,
                mean_estimate: mean,
                abs_bias: (mean - truth).abs(),
                mse,
                variance,
                failures: a.failures,
                successes: a.successes,
            });
        }
    }
    Ok(McSummary {
        gamma1: truth,
        n: config.n,
        replications: config.replications,
        cells,
    })
}

/// Runs the study on a dedicated pool of `workers` threads.
pub fn run_with_workers<T: Scalar>(config: &McConfig, workers: usize) -> Result<McSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run::<T>(config))
}

/// One row of the bias/MSE table behind a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRow {
    pub k: usize,
    pub estimator_id: String,
    pub beta: Option<f64>,
    pub abs_bias: f64,
    pub mse: f64,
    pub failures: usize,
}

/// Rows sorted by `(estimator_id, k)`.
pub fn figure_table(summary: &McSummary) -> Vec<FigureRow> {
    let mut rows: Vec<FigureRow> = summary
        .cells
        .iter()
        .map(|c| FigureRow {
            k: c.k,
            estimator_id: c.estimator.id(),
            beta: c.estimator.beta(),
            abs_bias: c.abs_bias,
            mse: c.mse,
            failures: c.failures,
        })
        .collect();
    rows.sort_by(|a, b| a.estimator_id.cmp(&b.estimator_id).then(a.k.cmp(&b.k)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{generate_with, HeavyTailModel};

    fn pareto_uncensored() -> CensoringScenario {
        CensoringScenario::uncensored(HeavyTailModel::Pareto { zeta: 0.4 }).unwrap()
    }

    #[test]
    fn single_replication_moments() {
        let config = McConfig {
            scenario: pareto_uncensored(),
            n: 200,
            replications: 1,
            estimators: vec![EstimatorSpec::Hill],
            k_grid: vec![50],
            seed: Seed(11),
        };
        let summary = run::<f64>(&config).unwrap();
        let sample =
            generate_with::<f64, _>(&config.scenario, 200, &mut Seed(11).stream(0)).unwrap();
        let hill = TailSample::from_sample(&sample).hill(50).unwrap();
        let cell = &summary.cells[0];
        let bias = (hill - 0.4).abs();
        assert!((cell.abs_bias - bias).abs() < 1e-15);
        assert!((cell.mse - bias * bias).abs() < 1e-15);
        assert_eq!(cell.variance, 0.0);
        assert_eq!((cell.successes, cell.failures), (1, 0));
    }

    #[test]
    fn config_validation() {
        let base = McConfig {
            scenario: pareto_uncensored(),
            n: 50,
            replications: 3,
            estimators: vec![EstimatorSpec::Hill],
            k_grid: vec![2, 5],
            seed: Seed(0),
        };
        assert!(base.validate().is_ok());
        assert!(McConfig {
            replications: 0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            k_grid: vec![],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            k_grid: vec![5, 2],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            k_grid: vec![2, 50],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            k_grid: vec![1, 5],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            estimators: vec![],
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(McConfig {
            estimators: vec![EstimatorSpec::WeightedNa { beta: -1.0 }],
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn failures_are_counted_per_cell() {
        // heavy censoring makes p̂ₖ = 0 likely at k = 2
        let scenario =
            CensoringScenario::matched(HeavyTailModel::Pareto { zeta: 0.7 }, 0.05).unwrap();
        let config = McConfig {
            scenario,
            n: 100,
            replications: 40,
            estimators: vec![EstimatorSpec::Efg, EstimatorSpec::Hill],
            k_grid: vec![2, 30],
            seed: Seed(5),
        };
        let s = run::<f64>(&config).unwrap();
        assert!(s.cells[0].failures > 0);
        for c in &s.cells {
            assert_eq!(c.failures + c.successes, 40);
        }
        assert!(s.cells_for(&EstimatorSpec::Hill).all(|c| c.failures == 0));
    }

    #[test]
    fn table_rows_are_sorted() {
        let config = McConfig {
            scenario: pareto_uncensored(),
            n: 60,
            replications: 2,
            estimators: vec![EstimatorSpec::WeightedNa { beta: 1.5 }, EstimatorSpec::Efg],
            k_grid: vec![4, 9, 20],
            seed: Seed(1),
        };
        let rows = figure_table(&run::<f64>(&config).unwrap());
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].estimator_id, "efg");
        assert_eq!(rows[0].beta, None);
        assert_eq!(rows[3].estimator_id, "weighted_na[1.5]");
        assert_eq!(rows[3].beta, Some(1.5));
        assert_eq!(
            rows.iter().map(|r| r.k).collect::<Vec<_>>(),
            vec![4, 9, 20, 4, 9, 20]
        );
    }

    #[test]
    fn map_replications_is_ordered() {
        let s = pareto_uncensored();
        let a = map_replications::<f64, _, _>(&s, 30, 10, Seed(2), |t| t.hill(5).unwrap()).unwrap();
        let b: Vec<f64> = (0..10)
            .map(|r| {
                let sample = generate_with::<f64, _>(&s, 30, &mut Seed(2).stream(r)).unwrap();
                TailSample::from_sample(&sample).hill(5).unwrap()
            })
            .collect();
        assert_eq!(a, b);
    }
}
