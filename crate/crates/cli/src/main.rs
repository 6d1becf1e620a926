//! `cgmm`: generate censored mixture samples, estimate mixtures from them,
//! sweep sample sizes or basis sizes, and run the verification suite.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 verification failure.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use censored_gmm::experiment::{
    generate, match_parameters, run_oracle, run_pipeline, sweep, verify_suite, ExperimentConfig, ModelSpec, SweepAxis,
    VerifyLevel,
};
use censored_gmm::report::to_json_string;
use censored_gmm::sample_file::{read_sample_file, write_sample_file, write_samples};
use censored_gmm::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cgmm", version, about = "Learn Gaussian mixtures from censored samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a censored sample from the configured model.
    Generate(ConfigArgs),
    /// Estimate weights and means from a sample file.
    Estimate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Sample file to read.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        /// Substitute the model's exact moments for the sample estimates.
        #[arg(long)]
        oracle: bool,
    },
    /// Repeat generate-and-estimate over sample sizes or basis sizes; writes CSV.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        vary: Axis,
        /// Comma-separated values for the varied parameter.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<u64>,
        /// Seeds per cell, counting up from --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Run the verification suite.
    Verify {
        #[arg(long, value_enum, default_value_t = Level::Fast)]
        level: Level,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    N,
    Ell,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Fast,
    Full,
}

/// Every config field as a flag; flags win over the config file.
#[derive(Args, Default)]
struct ConfigArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long = "R", value_name = "R")]
    r: Option<f64>,
    #[arg(long = "M", value_name = "M")]
    m: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Ground-truth weights, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    weights: Option<Vec<f64>>,
    /// Ground-truth means, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    means: Option<Vec<f64>>,
    #[arg(long)]
    quadrature_tolerance: Option<f64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

/// Config file keys present, so header values only fill in what the user left unset.
fn file_keys(path: &Option<PathBuf>) -> Result<Vec<String>, Failure> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config: {e}")))?;
    Ok(value.as_object().map(|o| o.keys().map(|k| k.to_lowercase()).collect()).unwrap_or_default())
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(if let Some(v) = self.$flag { c.$field = v; })*};
        }
        set!(seed => seed, n => n, k => k, r => r, m => m, sigma => sigma, epsilon => epsilon, quadrature_tolerance => quadrature_tolerance);
        if self.ell.is_some() {
            c.ell = self.ell;
        }
        if self.delta.is_some() {
            c.delta = self.delta;
        }
        if let Some(out) = &self.out {
            c.output_path = Some(out.clone());
        }
        match (&self.weights, &self.means) {
            (Some(w), Some(m)) => c.model = Some(ModelSpec { weights: w.clone(), means: m.clone() }),
            (None, None) => {}
            _ => return Err(Failure::Usage("--weights and --means must be given together".into())),
        }
        if self.k.is_none() {
            if let Some(model) = &c.model {
                if self.config.is_none() {
                    c.k = model.weights.len();
                }
            }
        }
        Ok(c)
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Generate(args) => {
            let config = args.resolve()?;
            warn_all(&config.validate()?);
            let batch = generate(&config)?;
            match &config.output_path {
                Some(p) => write_sample_file(p, &batch)?,
                None => write_samples(io::stdout().lock(), &batch)?,
            }
            Ok(())
        }
        Command::Estimate { config: args, input, oracle } => {
            let mut config = args.resolve()?;
            let result = if oracle {
                run_oracle(&config)?
            } else {
                let path = input.ok_or_else(|| Failure::Usage("estimate needs --in <PATH> (or --oracle)".into()))?;
                let batch = read_sample_file(&path)?;
                let keys = file_keys(&args.config)?;
                if args.r.is_none() && !keys.iter().any(|k| k == "r") {
                    if !batch.window.is_symmetric() {
                        return Err(Failure::Usage("sample window is not symmetric".into()));
                    }
                    config.r = batch.window.upper();
                }
                if args.sigma.is_none() && !keys.iter().any(|k| k == "sigma") {
                    config.sigma = batch.sigma;
                }
                config.seed = batch.seed;
                run_pipeline(&config, &batch)?
            };
            warn_all(&result.diagnostics.warnings);
            if let Some(truth) = config.truth()? {
                if let Ok(m) = match_parameters(&result.weights, &result.means, truth.weights(), truth.means()) {
                    eprintln!("max_weight_err={:e} max_mean_err={:e}", m.max_weight_err, m.max_mean_err);
                }
            }
            emit(&config.output_path, &to_json_string(&result)?)
        }
        Command::Sweep { config: args, vary, values, seeds } => {
            let config = args.resolve()?;
            let axis = match vary {
                Axis::N => SweepAxis::N(values),
                Axis::Ell => SweepAxis::Ell(values.iter().map(|&v| v as usize).collect()),
            };
            let seed_list: Vec<u64> = (0..seeds.max(1)).map(|i| config.seed.wrapping_add(i)).collect();
            let rows = sweep(&config, &axis, &seed_list)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row).map_err(|e| Failure::Usage(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Usage(e.to_string()))?;
            emit(&config.output_path, &String::from_utf8(bytes).expect("csv writes UTF-8"))
        }
        Command::Verify { level, out } => {
            let level = match level {
                Level::Fast => VerifyLevel::Fast,
                Level::Full => VerifyLevel::Full,
            };
            let report = verify_suite(level);
            for c in &report.checks {
                eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            emit(&out, &to_json_string(&report)?)?;
            if report.passed {
                Ok(())
            } else {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                Err(Failure::Verification(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}
