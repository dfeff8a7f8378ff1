//! Dataset ingestion, run configuration and CSV tables.
//!
//! Floats are written in Rust's shortest round-trip form, so every table
//! re-parses to identical values.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatePath, EstimatorSpec, PathFailure, ReasonCode};
use crate::montecarlo::{FigureRow, McConfig};
use crate::sampling::{CensoringScenario, HeavyTailModel, Seed};
use crate::scalar::Scalar;
use crate::survival::CensoredSample;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub censored: usize,
}

impl DatasetSummary {
    pub fn of<T: Scalar>(sample: &CensoredSample<T>) -> Self {
        Self {
            n: sample.len(),
            censored: sample.censored_count(),
        }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n as f64
    }
}

fn data_error(line: u64, message: impl Into<String>) -> Error {
    Error::Data {
        line: line as usize,
        message: message.into(),
    }
}

/// Reads a `z,delta[,id]` CSV with a header row; row order is preserved.
pub fn ingest_reader<T: Scalar, R: Read>(reader: R) -> Result<CensoredSample<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| data_error(1, e.to_string()))?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(zi), Some(di)) = (column("z"), column("delta")) else {
        return Err(data_error(1, "header must contain `z` and `delta` columns"));
    };
    if let Some(extra) = headers.iter().find(|h| !matches!(*h, "z" | "delta" | "id")) {
        return Err(data_error(1, format!("unexpected column `{extra}`")));
    }

    let mut z = Vec::new();
    let mut delta = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            data_error(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let zv: f64 = record[zi]
            .parse()
            .map_err(|_| data_error(line, format!("z = `{}` is not a number", &record[zi])))?;
        if !(zv.is_finite() && zv > 0.0) {
            return Err(data_error(line, format!("z = {zv} must be positive")));
        }
        let dv = match &record[di] {
            "0" => false,
            "1" => true,
            other => {
                return Err(data_error(
                    line,
                    format!("delta = `{other}` must be 0 or 1"),
                ))
            }
        };
        z.push(T::lit(zv));
        delta.push(dv);
    }
    if z.is_empty() {
        return Err(Error::EmptySample);
    }
    CensoredSample::new(z, delta)
}

pub fn ingest<T: Scalar>(path: impl AsRef<Path>) -> Result<CensoredSample<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    ingest_reader(file)
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
        _ => data_error(e.position().map_or(0, |p| p.line()), e.to_string()),
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn parse_f64(field: &str, line: u64) -> Result<f64> {
    field
        .parse()
        .map_err(|_| data_error(line, format!("`{field}` is not a number")))
}

fn parse_usize(field: &str, line: u64) -> Result<usize> {
    field
        .parse()
        .map_err(|_| data_error(line, format!("`{field}` is not a count")))
}

pub const FIGURE_HEADER: [&str; 6] = ["k", "estimator_id", "beta", "abs_bias", "mse", "failures"];

pub fn write_figure_table<W: Write>(rows: &[FigureRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIGURE_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.estimator_id.clone(),
            r.beta.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.abs_bias),
            fmt_f64(r.mse),
            r.failures.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_figure_table<R: Read>(input: R) -> Result<Vec<FigureRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?;
    if headers.iter().ne(FIGURE_HEADER) {
        return Err(data_error(
            1,
            format!("expected header {}", FIGURE_HEADER.join(",")),
        ));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map_or(0, |p| p.line());
            Ok(FigureRow {
                k: parse_usize(&rec[0], line)?,
                estimator_id: rec[1].to_owned(),
                beta: if rec[2].is_empty() {
                    None
                } else {
                    Some(parse_f64(&rec[2], line)?)
                },
                abs_bias: parse_f64(&rec[3], line)?,
                mse: parse_f64(&rec[4], line)?,
                failures: parse_usize(&rec[5], line)?,
            })
        })
        .collect()
}

pub const PATH_HEADER: [&str; 3] = ["k", "estimate", "reason"];

/// `k,estimate,reason`; failed `k`s have an empty estimate and a reason code.
pub fn write_path<T: Scalar, W: Write>(path: &EstimatePath<T>, out: W) -> Result<()> {
    let mut rows: Vec<(usize, String, &str)> = path
        .iter()
        .map(|(k, v)| (k, fmt_f64(v.to_f64_lossy()), ""))
        .chain(
            path.failures
                .iter()
                .map(|f| (f.k, String::new(), f.reason.as_str())),
        )
        .collect();
    rows.sort_by_key(|r| r.0);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PATH_HEADER).map_err(csv_error)?;
    for (k, v, reason) in rows {
        w.write_record([k.to_string(), v, reason.to_owned()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path<R: Read>(input: R, estimator: EstimatorSpec) -> Result<EstimatePath<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(csv_error)?;
    if headers.iter().ne(PATH_HEADER) {
        return Err(data_error(
            1,
            format!("expected header {}", PATH_HEADER.join(",")),
        ));
    }
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let k = parse_usize(&rec[0], line)?;
        if rec[1].is_empty() {
            let reason = match &rec[2] {
                "all_censored_tail" => ReasonCode::AllCensoredTail,
                "degenerate" => ReasonCode::Degenerate,
                "out_of_range" => ReasonCode::OutOfRange,
                _ => ReasonCode::Domain,
            };
            failures.push(PathFailure { k, reason });
        } else {
            points.push((k, parse_f64(&rec[1], line)?));
        }
    }
    EstimatePath::from_points(estimator, points, failures)
}

/// Columns `k,<id>,<id>,…`; a failed estimate is an empty field.
pub fn write_comparison<T: Scalar, W: Write>(paths: &[EstimatePath<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_owned()];
    header.extend(paths.iter().map(|p| p.estimator.id()));
    w.write_record(&header).map_err(csv_error)?;
    let lo = paths
        .iter()
        .filter_map(|p| p.k_values.first().copied())
        .chain(paths.iter().flat_map(|p| p.failures.first().map(|f| f.k)))
        .min();
    let hi = paths
        .iter()
        .filter_map(|p| p.k_values.last().copied())
        .chain(paths.iter().flat_map(|p| p.failures.last().map(|f| f.k)))
        .max();
    if let (Some(lo), Some(hi)) = (lo, hi) {
        for k in lo..=hi {
            let mut row = vec![k.to_string()];
            row.extend(paths.iter().map(|p| {
                p.get(k)
                    .map(|v| fmt_f64(v.to_f64_lossy()))
                    .unwrap_or_default()
            }));
            w.write_record(&row).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Censoring distribution in a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CensorSpec {
    /// No censoring (`C ≡ +∞`).
    None,
    /// Target's family with `γ₂` solved from the uncensored proportion `p`.
    Matched {
        p: f64,
    },
    Model(HeavyTailModel),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub target: HeavyTailModel,
    pub censor: CensorSpec,
}

impl ScenarioSpec {
    pub fn build(&self) -> Result<CensoringScenario> {
        match self.censor {
            CensorSpec::None => CensoringScenario::uncensored(self.target),
            CensorSpec::Matched { p } => CensoringScenario::matched(self.target, p),
            CensorSpec::Model(m) => CensoringScenario::new(self.target, Some(m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KGridSpec {
    Range {
        min: usize,
        max: usize,
        #[serde(default = "one")]
        stride: usize,
    },
    List(Vec<usize>),
}

fn one() -> usize {
    1
}

/// JSON document driving `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub replications: usize,
    pub estimators: Vec<EstimatorSpec>,
    /// Defaults to every `k` in `[2, n−1]`.
    #[serde(default)]
    pub k_grid: Option<KGridSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_mc_config(&self) -> Result<McConfig> {
        let k_grid = match &self.k_grid {
            None => McConfig::full_grid(self.n, 1),
            Some(KGridSpec::Range { min, max, stride }) => {
                if *stride == 0 {
                    return Err(Error::Config("k_grid.range.stride must be >= 1".into()));
                }
                (*min..=*max).step_by(*stride).collect()
            }
            Some(KGridSpec::List(ks)) => ks.clone(),
        };
        let config = McConfig {
            scenario: self.scenario.build()?,
            n: self.n,
            replications: self.replications,
            estimators: self.estimators.clone(),
            k_grid,
            seed: Seed(self.seed),
        };
        config.validate()?;
        Ok(config)
    }
}
