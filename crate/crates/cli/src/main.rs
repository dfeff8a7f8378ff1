use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use censtail::io::{self as cio, DatasetSummary, RunConfig};
use censtail::{
    confidence_interval, reiss_thomas, CensoredSample64, CiResult, Error, EstimatorSpec,
    KSelectConfig, TailSample64,
};

/// Tail-index estimation for right-censored heavy-tailed data.
#[derive(Parser, Debug)]
#[command(name = "censtail", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate the tail index at a given or automatically chosen k
    Estimate(EstimateArgs),
    /// Write the estimate for every k as CSV (k,estimate,reason)
    Path(PathArgs),
    /// Reiss-Thomas choice of k, as CSV (k_opt,criterion)
    Kselect(KselectArgs),
    /// Run a Monte Carlo study from a JSON config and write the bias/MSE table
    Simulate(SimulateArgs),
    /// Paths of all estimators side by side
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct EstimatorArgs {
    /// hill, p-hat, efg, worms-km, mns-na, weighted-na, weighted-km, bw
    #[arg(long = "est")]
    est: String,
    /// Tuning parameter for weighted-na, weighted-km and bw
    #[arg(long)]
    beta: Option<f64>,
}

impl EstimatorArgs {
    fn spec(&self) -> anyhow::Result<EstimatorSpec> {
        let spec = EstimatorSpec::from_name(&self.est, self.beta)?;
        if spec.beta().is_none() && self.beta.is_some() {
            return Err(Error::Config(format!("estimator `{}` takes no --beta", self.est)).into());
        }
        for w in spec.validate()? {
            eprintln!("warning: {spec}: {w:?}");
        }
        Ok(spec)
    }
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,
    /// Number of top order statistics
    #[arg(long, conflicts_with = "auto_k", required_unless_present = "auto_k")]
    k: Option<usize>,
    /// Choose k by the Reiss-Thomas criterion
    #[arg(long)]
    auto_k: bool,
    #[arg(long, default_value_t = censtail::kselect::DEFAULT_NU)]
    nu: f64,
    /// Confidence level of a normal interval (weighted estimators only)
    #[arg(long)]
    ci: Option<f64>,
    /// Also write the report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    file: PathBuf,
}

#[derive(Args, Debug)]
struct PathArgs {
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    /// Defaults to the largest k the estimator admits
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    file: PathBuf,
}

#[derive(Args, Debug)]
struct KselectArgs {
    /// Estimator whose path is scanned (required with a dataset)
    #[arg(long = "est")]
    est: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Read a path CSV (k,estimate,reason) instead of a dataset
    #[arg(long, conflicts_with_all = ["est", "beta", "file"])]
    from_path: Option<PathBuf>,
    #[arg(long, default_value_t = censtail::kselect::DEFAULT_NU)]
    nu: f64,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(required_unless_present = "from_path")]
    file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (capped by CENSTAIL_THREADS)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// β of the weighted estimators
    #[arg(long, default_value_t = 1.01)]
    beta: f64,
    /// β of the Beirlant-Worms estimator
    #[arg(long, default_value_t = 0.0)]
    bw_beta: f64,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    file: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed early (`| head`)
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| match c.downcast_ref::<std::io::Error>() {
        Some(io) => io.kind() == std::io::ErrorKind::BrokenPipe,
        None => {
            matches!(c.downcast_ref::<Error>(), Some(Error::Io(m)) if m.contains("Broken pipe"))
        }
    })
}

/// 2 usage, 3 data, 4 numerical failure.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(err) if err.is_numerical() => 4,
        Some(Error::Domain(_) | Error::OutOfRange { .. } | Error::Config(_)) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Estimate(a) => estimate(a),
        Command::Path(a) => path(a),
        Command::Kselect(a) => kselect(a),
        Command::Simulate(a) => simulate(a),
        Command::Compare(a) => compare(a),
    }
}

fn load(file: &Path) -> anyhow::Result<(CensoredSample64, DatasetSummary)> {
    let sample: CensoredSample64 =
        cio::ingest(file).with_context(|| format!("reading {}", file.display()))?;
    let summary = DatasetSummary::of(&sample);
    eprintln!(
        "{}: n={} censored={} ({:.2}%)",
        file.display(),
        summary.n,
        summary.censored,
        100.0 * summary.censored_fraction()
    );
    Ok((sample, summary))
}

fn output(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

/// Reiss-Thomas over `[k_min, k_max]`, scanning the path from `spec.min_k()`.
fn select_k(
    tail: &TailSample64,
    spec: &EstimatorSpec,
    config: KSelectConfig,
) -> anyhow::Result<censtail::KSelection<f64>> {
    let n = tail.n();
    let hi = config.k_max.unwrap_or(n - 1).min(spec.max_k(n));
    let path = tail.path(spec, spec.min_k(), hi)?;
    Ok(reiss_thomas(
        &path,
        &KSelectConfig {
            k_max: Some(hi),
            ..config
        },
    )?)
}

#[derive(Serialize)]
struct EstimateReport {
    estimator: String,
    n: usize,
    censored: usize,
    k: usize,
    estimate: f64,
    p_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ci: Option<CiResult<f64>>,
}

fn estimate(a: EstimateArgs) -> anyhow::Result<()> {
    let spec = a.estimator.spec()?;
    if a.ci.is_some()
        && !matches!(
            spec,
            EstimatorSpec::WeightedNa { .. } | EstimatorSpec::WeightedKm { .. }
        )
    {
        bail!(Error::Config(
            "--ci is available for weighted-na and weighted-km only".into()
        ));
    }
    let (sample, summary) = load(&a.file)?;
    let tail = TailSample64::from_sample(&sample);
    let (k, criterion) = match a.k {
        Some(k) => (k, None),
        None => {
            let sel = select_k(
                &tail,
                &spec,
                KSelectConfig {
                    nu: a.nu,
                    ..Default::default()
                },
            )?;
            (sel.k_opt, Some(sel.criterion))
        }
    };
    let gamma = tail.estimate(&spec, k)?;
    let p_hat = tail.p_hat(k)?;
    let ci = match (a.ci, spec.beta()) {
        (Some(level), Some(beta)) => Some(confidence_interval(gamma, k, p_hat, beta, level)?),
        _ => None,
    };
    let report = EstimateReport {
        estimator: spec.id(),
        n: summary.n,
        censored: summary.censored,
        k,
        estimate: gamma,
        p_hat,
        criterion,
        ci,
    };

    let mut out = io::stdout().lock();
    writeln!(out, "estimator  {}", report.estimator)?;
    match report.criterion {
        Some(c) => writeln!(
            out,
            "k          {k} (reiss-thomas, nu={}, criterion={c})",
            a.nu
        )?,
        None => writeln!(out, "k          {k}")?,
    }
    writeln!(out, "estimate   {gamma}")?;
    writeln!(out, "p_hat      {p_hat}")?;
    if let Some(ci) = &report.ci {
        writeln!(
            out,
            "ci         [{}, {}] level={} se={}",
            ci.lower, ci.upper, ci.level, ci.se
        )?;
    }
    if let Some(p) = &a.json {
        let f = File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &report)?;
    }
    Ok(())
}

fn path(a: PathArgs) -> anyhow::Result<()> {
    let spec = a.estimator.spec()?;
    let (sample, _) = load(&a.file)?;
    let tail = TailSample64::from_sample(&sample);
    let k_max = a.k_max.unwrap_or_else(|| spec.max_k(tail.n()));
    let path = tail.path(&spec, a.k_min, k_max)?;
    cio::write_path(&path, output(a.out.as_deref())?)?;
    Ok(())
}

fn kselect(a: KselectArgs) -> anyhow::Result<()> {
    let config = KSelectConfig {
        nu: a.nu,
        k_min: a.k_min,
        k_max: a.k_max,
    };
    let selection = match (&a.from_path, &a.file) {
        (Some(p), _) => {
            let f = File::open(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            // the estimator label is not stored in the CSV and does not matter here
            let path = cio::read_path(f, EstimatorSpec::Hill)
                .with_context(|| format!("reading {}", p.display()))?;
            reiss_thomas(&path, &config)?
        }
        (None, Some(file)) => {
            let Some(est) = &a.est else {
                bail!(Error::Config(
                    "--est is required when selecting from a dataset".into()
                ));
            };
            let spec = EstimatorArgs {
                est: est.clone(),
                beta: a.beta,
            }
            .spec()?;
            let (sample, _) = load(file)?;
            select_k(&TailSample64::from_sample(&sample), &spec, config)?
        }
        (None, None) => unreachable!("clap requires a file or --from-path"),
    };
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "k_opt,criterion")?;
    writeln!(out, "{},{}", selection.k_opt, selection.criterion)?;
    out.flush()?;
    Ok(())
}

fn worker_count(requested: Option<usize>) -> anyhow::Result<usize> {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut workers = requested.unwrap_or(default);
    if let Ok(cap) = std::env::var("CENSTAIL_THREADS") {
        let cap: usize = cap
            .parse()
            .map_err(|_| Error::Config(format!("CENSTAIL_THREADS=`{cap}` is not a count")))?;
        workers = workers.min(cap);
    }
    Ok(workers.max(1))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let mut config =
        RunConfig::load(&a.config).with_context(|| format!("loading {}", a.config.display()))?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    let mc = config.to_mc_config()?;
    for spec in &mc.estimators {
        for w in spec.validate()? {
            eprintln!("warning: {spec}: {w:?}");
        }
    }
    let workers = worker_count(a.threads)?;
    let summary = censtail::montecarlo::run_with_workers::<f64>(&mc, workers)?;
    cio::write_figure_table(&censtail::figure_table(&summary), output(a.out.as_deref())?)?;
    Ok(())
}

fn compare(a: CompareArgs) -> anyhow::Result<()> {
    let (sample, _) = load(&a.file)?;
    let tail = TailSample64::from_sample(&sample);
    let k_max = a.k_max.unwrap_or(tail.n() - 1);
    let specs = [
        EstimatorSpec::Hill,
        EstimatorSpec::PHat,
        EstimatorSpec::Efg,
        EstimatorSpec::WormsKm,
        EstimatorSpec::MnsNa,
        EstimatorSpec::WeightedNa { beta: a.beta },
        EstimatorSpec::WeightedKm { beta: a.beta },
        EstimatorSpec::Bw { beta: a.bw_beta },
    ];
    let paths = specs
        .iter()
        .map(|s| tail.path(s, a.k_min, k_max))
        .collect::<censtail::Result<Vec<_>>>()
        .map_err(|e| anyhow!(e))?;
    cio::write_comparison(&paths, output(a.out.as_deref())?)?;
    Ok(())
}
