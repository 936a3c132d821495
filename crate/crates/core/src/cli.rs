//! `sparsemm` command line: `fit`, `median`, `emlift` and `bench`.
//!
//! Exit codes: 0 on success, 2 on usage errors (including parameter values
//! rejected by the library), 1 on runtime failures. Results go to `--out` or
//! standard output, diagnostics to standard error.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bench::{self, ExperimentConfig};
use crate::em_lift::{self, EquivalenceOptions};
use crate::format::sig12;
use crate::mm_solver::{decompose_uniform, default_initializer, MmSolver, RegressionModel, SurrogateChoice};
use crate::penalty::{PenaltySpec, DEFAULT_SCAD_A};
use crate::posterior_median::{threshold_vector, SpikeSlabPrior};
use crate::{Error, Result};

pub const MEDIAN_CSV_HEADER: &str = "index,y,pi_y,odds,delta,branch,median";
pub const FIT_CSV_HEADER: &str = "index,beta";

#[derive(Debug, Parser)]
#[command(name = "sparsemm", version, about = "Penalized MM fits, MM-as-EM certificates and posterior-median thresholding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one penalized regression by LLA or LQA iterations.
    Fit(FitArgs),
    /// Posterior-median thresholding of normal means.
    Median(MedianArgs),
    /// Report whether a penalty's LLA surrogate is an EM Q-function.
    Emlift(EmliftArgs),
    /// Run a Monte Carlo comparison from a config file.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SurrogateArg {
    Lla,
    Lqa,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row; first column is the response, the rest predictors.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub data: Option<PathBuf>,
    /// Bench config whose scenario is simulated (with --seed, or the config seed).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "scad")]
    pub penalty: String,
    #[arg(long)]
    pub lambda: f64,
    /// SCAD shape.
    #[arg(long, default_value_t = DEFAULT_SCAD_A)]
    pub a: f64,
    /// Run exactly k steps; without it, iterate to convergence.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, value_enum, default_value = "lla")]
    pub surrogate: SurrogateArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MedianArgs {
    /// Prior atom mass at zero.
    #[arg(long)]
    pub pi: f64,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: f64,
    /// Slab standard deviation.
    #[arg(long)]
    pub tau: f64,
    /// Observations, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, required = true)]
    pub y: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EmliftArgs {
    /// l1, log or quadratic.
    #[arg(long, default_value = "l1")]
    pub penalty: String,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Seed for the anchor points.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = em_lift::DEFAULT_EQUIVALENCE_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub pi: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub tau: Option<Vec<f64>>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub allow_marginal_approx: bool,
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn parse_and_dispatch<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(rendered.as_bytes());
                    0
                }
                _ => {
                    let _ = stderr.write_all(rendered.as_bytes());
                    2
                }
            };
        }
    };
    match run(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                Error::Argument(_) | Error::Config(_) | Error::Domain(_) | Error::Contract(_) => 2,
                Error::Numerical(_) | Error::Io(_) => 1,
            }
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Fit(args) => run_fit(args, stdout, stderr),
        Command::Median(args) => run_median(args, stdout),
        Command::Emlift(args) => run_emlift(args, stdout),
        Command::Bench(args) => run_bench(args, stdout, stderr),
    }
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Reads a response-first CSV with a header row.
pub fn read_regression_csv(text: &str) -> Result<RegressionModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::arg("data file is empty"))?;
    let width = header.split(',').count();
    if width < 2 {
        return Err(Error::arg("data needs a response column and at least one predictor"));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let fields = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::arg(format!("data row {}: {e}", lineno + 2)))?;
        if fields.len() != width {
            return Err(Error::arg(format!("data row {} has {} fields, expected {width}", lineno + 2, fields.len())));
        }
        y.push(fields[0]);
        rows.push(fields[1..].to_vec());
    }
    if rows.is_empty() {
        return Err(Error::arg("data file has no rows"));
    }
    RegressionModel::from_rows(&rows, &y)
}

fn run_fit(args: FitArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let model = if let Some(path) = &args.data {
        read_regression_csv(&std::fs::read_to_string(path)?)?
    } else {
        let path = args.config.as_ref().expect("clap enforces --data or --config");
        let cfg = ExperimentConfig::from_path(path)?;
        let mut scenario = cfg.scenario.clone();
        scenario.seed = args.seed.unwrap_or(cfg.seed);
        bench::generate(&scenario)?.model
    };
    let penalty = PenaltySpec::from_name(&args.penalty, args.lambda, args.a, model.n_obs())?;
    let decomp = decompose_uniform(model.clone(), penalty)?;
    let init = default_initializer(&model)?;
    let solver = MmSolver {
        surrogate: match args.surrogate {
            SurrogateArg::Lla => SurrogateChoice::Lla,
            SurrogateArg::Lqa => SurrogateChoice::lqa(),
        },
        ..MmSolver::default()
    };
    let fit = match args.k {
        Some(k) => solver.k_step(&decomp, &init, k, args.tol)?,
        None => solver.iterate(&decomp, &init, args.tol, args.max_iter)?,
    };
    let mut text = format!("{FIT_CSV_HEADER}\n");
    for (j, b) in fit.beta_hat.iter().enumerate() {
        text.push_str(&format!("{j},{}\n", sig12(*b)));
    }
    emit(&args.out, &text, stdout)?;
    writeln!(
        stderr,
        "steps={} converged={} objective={} nonzero={}",
        fit.steps_taken,
        fit.converged,
        sig12(fit.final_objective()),
        fit.support.len()
    )?;
    Ok(())
}

fn run_median(args: MedianArgs, stdout: &mut dyn Write) -> Result<()> {
    let prior = SpikeSlabPrior::normal(args.pi, args.tau)?;
    let out = threshold_vector(&prior, &args.y, args.sigma)?;
    let mut text = format!("{MEDIAN_CSV_HEADER}\n");
    for c in &out.coordinates {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.index,
            sig12(c.y),
            sig12(c.pi_y),
            sig12(c.result.odds),
            sig12(c.result.threshold_delta),
            c.result.branch.as_str(),
            sig12(c.result.median)
        ));
    }
    emit(&args.out, &text, stdout)
}

/// Anchors and θ grid used by the `emlift` report.
pub fn emlift_points(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let anchors = (0..5).map(|_| rng.random_range(0.05..3.0)).collect();
    let grid = (0..100).map(|i| -5.0 + 10.0 * i as f64 / 99.0).collect();
    (anchors, grid)
}

fn run_emlift(args: EmliftArgs, stdout: &mut dyn Write) -> Result<()> {
    let canon = em_lift::canonical_lift(&args.penalty, args.lambda)?;
    let (anchors, grid) = emlift_points(args.seed);
    let u_grid: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
    let opts = EquivalenceOptions { tol: args.tol, ..EquivalenceOptions::default() };
    let r = em_lift::canonical_report(&canon, &anchors, &grid, &u_grid, opts)?;

    let mut text = String::new();
    let mut kv = |k: &str, v: String| text.push_str(&format!("{k} = {v}\n"));
    kv("penalty", args.penalty.clone());
    kv("lambda", sig12(args.lambda));
    kv("latent", r.description.clone());
    kv("verdict", r.verdict.as_str().to_string());
    kv("max_constant_deviation", sig12(r.max_constant_deviation));
    kv("mgf_max_rel_error", sig12(r.mgf_max_rel_error));
    kv("mean_identity_max_error", sig12(r.mean_identity_max_error));
    kv("concavity_ok", r.concavity_ok.to_string());
    kv("concavity_certificate", r.certificate.concave.to_string());
    kv("worst_second_difference", sig12(r.certificate.worst_second_difference));
    kv("variance_identity_max_rel_error", sig12(r.certificate.variance_identity_max_rel_error.unwrap_or(f64::NAN)));
    emit(&args.out, &text, stdout)
}

fn run_bench(args: BenchArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.scenario.seed = seed;
    }
    if let Some(l) = args.lambda {
        cfg.lambda_grid = l;
    }
    if let Some(p) = args.pi {
        cfg.pi = p;
    }
    if let Some(t) = args.tau {
        cfg.tau = t;
    }
    if let Some(k) = args.k {
        cfg.k = k;
    }
    if let Some(tol) = args.tol {
        cfg.tol = tol;
    }
    cfg.allow_marginal_approx |= args.allow_marginal_approx;
    cfg.validate()?;

    let table = bench::run_experiment(&cfg)?;
    for (label, reason) in &table.skipped {
        writeln!(stderr, "skipped {label}: {reason}")?;
    }
    for row in &table.rows {
        if row.failures > 0 {
            writeln!(stderr, "{}: {} replicate(s) failed", row.method, row.failures)?;
        }
    }
    let contrast = table.overfit_contrast(&cfg.lambda_grid);
    if !contrast.is_empty() {
        let widest = contrast
            .iter()
            .filter(|c| c.full_overfits_more())
            .max_by(|a, b| (a.full_over - a.one_step_over).total_cmp(&(b.full_over - b.one_step_over)));
        match widest {
            Some(c) => writeln!(
                stderr,
                "scad-full over-fits more than scad-1step at lambda={} ({} vs {})",
                sig12(c.lambda),
                sig12(c.full_over),
                sig12(c.one_step_over)
            )?,
            None => writeln!(stderr, "scad-full over-fit excess over scad-1step: not found at desk scale")?,
        }
    }
    let out = args.out.clone().or_else(|| cfg.output.clone().map(PathBuf::from));
    emit(&out, &table.to_csv(), stdout)
}
