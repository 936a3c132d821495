//! Monte Carlo comparison of one-step, k-step and fully iterated SCAD, the
//! lasso and posterior-median thresholding on simulated sparse regressions.
//!
//! Every replicate draws its own data from a ChaCha20 stream seeded by
//! [`replicate_seed`]`(master, index)`, so results do not depend on the order
//! in which replicates are executed.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::format::sig12;
use crate::mm_solver::{decompose_uniform, default_initializer, support_of, Decomposition, MmSolver, RegressionModel};
use crate::penalty::{PenaltySpec, DEFAULT_SCAD_A};
use crate::posterior_median::{threshold_vector_heteroscedastic, SpikeSlabPrior};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "method,correct,over,under,model_error,mean_nonzero,replicates";

/// Ridge added (times `n_obs`) to the Gram matrix when posterior-median
/// statistics are formed on a correlated design.
pub const MARGINAL_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Design {
    /// Columns orthogonal with `XᵀX = n·I`.
    Orthonormal,
    /// Rows iid Gaussian with AR(1) correlation `rho^|j-k|` between columns.
    GaussianCorrelated { rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub n_obs: usize,
    pub p: usize,
    pub beta_true: Vec<f64>,
    pub noise_sd: f64,
    pub design: Design,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_obs == 0 || self.p == 0 {
            return Err(Error::arg("scenario needs n_obs >= 1 and p >= 1"));
        }
        if self.beta_true.len() != self.p {
            return Err(Error::arg(format!("beta_true has {} entries, p = {}", self.beta_true.len(), self.p)));
        }
        if self.beta_true.iter().any(|b| !b.is_finite()) {
            return Err(Error::arg("beta_true must be finite"));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::arg("noise_sd must be positive"));
        }
        match self.design {
            Design::Orthonormal if self.p > self.n_obs => {
                Err(Error::arg(format!("orthonormal design needs p <= n_obs, got p = {} > {}", self.p, self.n_obs)))
            }
            Design::GaussianCorrelated { rho } if !(0.0..1.0).contains(&rho) => {
                Err(Error::arg(format!("rho must lie in [0, 1), got {rho}")))
            }
            _ => Ok(()),
        }
    }

    pub fn true_support(&self) -> Vec<usize> {
        self.beta_true.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RegressionData {
    pub model: RegressionModel,
    pub beta_true: DVector<f64>,
}

/// Draws `(X, y)` for the scenario from its own seed.
pub fn generate(scenario: &Scenario) -> Result<RegressionData> {
    scenario.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
    let (n, p) = (scenario.n_obs, scenario.p);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };

    let x = match scenario.design {
        Design::Orthonormal => {
            let g = DMatrix::from_fn(n, p, |_, _| draw());
            let q = g.qr().q();
            q * (n as f64).sqrt()
        }
        Design::GaussianCorrelated { rho } => {
            let innov = (1.0 - rho * rho).sqrt();
            let mut x = DMatrix::zeros(n, p);
            for i in 0..n {
                let mut prev = draw();
                x[(i, 0)] = prev;
                for j in 1..p {
                    prev = rho * prev + innov * draw();
                    x[(i, j)] = prev;
                }
            }
            x
        }
    };
    let beta_true = DVector::from_column_slice(&scenario.beta_true);
    let noise = DVector::from_fn(n, |_, _| draw());
    let y = &x * &beta_true + noise * scenario.noise_sd;
    Ok(RegressionData { model: RegressionModel::new(x, y)?, beta_true })
}

/// SplitMix64 finalizer applied to `master ^ (index + 1)·φ64`.
pub fn replicate_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitClass {
    Correct,
    OverFit,
    UnderFit,
}

/// Correct if the supports agree, under-fit if any true index is missing,
/// over-fit otherwise.
pub fn classify_fit(estimated: &[usize], truth: &[usize]) -> FitClass {
    let est: BTreeSet<_> = estimated.iter().collect();
    let tru: BTreeSet<_> = truth.iter().collect();
    if est == tru {
        FitClass::Correct
    } else if !tru.is_subset(&est) {
        FitClass::UnderFit
    } else {
        FitClass::OverFit
    }
}

/// `(β̂ - β)ᵀ (XᵀX / n) (β̂ - β)`.
pub fn model_error(model: &RegressionModel, beta_hat: &DVector<f64>, beta_true: &DVector<f64>) -> f64 {
    let d = model.x() * (beta_hat - beta_true);
    d.norm_squared() / model.n_obs() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum MethodName {
    #[serde(rename = "lasso-lla")]
    LassoLla,
    #[serde(rename = "scad-1step")]
    ScadOneStep,
    #[serde(rename = "scad-kstep")]
    ScadKStep,
    #[serde(rename = "scad-full")]
    ScadFull,
    #[serde(rename = "posterior-median")]
    PosteriorMedian,
}

/// One row of the comparison: a method with its tuning values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    LassoLla { lambda: f64 },
    ScadOneStep { lambda: f64 },
    ScadKStep { lambda: f64, k: usize },
    ScadFull { lambda: f64 },
    PosteriorMedian { pi: f64, tau: f64 },
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::LassoLla { lambda } => format!("lasso-lla[lambda={}]", sig12(*lambda)),
            Method::ScadOneStep { lambda } => format!("scad-1step[lambda={}]", sig12(*lambda)),
            Method::ScadKStep { lambda, k } => format!("scad-kstep[k={k} lambda={}]", sig12(*lambda)),
            Method::ScadFull { lambda } => format!("scad-full[lambda={}]", sig12(*lambda)),
            Method::PosteriorMedian { pi, tau } => {
                format!("posterior-median[pi={} tau={}]", sig12(*pi), sig12(*tau))
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum DesignName {
    Orthonormal,
    Correlated,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    n_obs: usize,
    p: usize,
    beta_true: Vec<f64>,
    noise_sd: f64,
    design: DesignName,
    #[serde(default)]
    rho: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    scenario: ScenarioFile,
    methods: Vec<MethodName>,
    #[serde(default)]
    lambda_grid: Option<OneOrMany>,
    #[serde(default)]
    pi: Option<OneOrMany>,
    #[serde(default)]
    tau: Option<OneOrMany>,
    replicates: usize,
    seed: u64,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    scad_a: Option<f64>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    max_iter: Option<usize>,
    #[serde(default)]
    allow_marginal_approx: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub methods: Vec<MethodName>,
    pub lambda_grid: Vec<f64>,
    pub pi: Vec<f64>,
    pub tau: Vec<f64>,
    pub replicates: usize,
    /// Master seed; replicate `r` uses [`replicate_seed`]`(seed, r)`.
    pub seed: u64,
    pub output: Option<String>,
    pub k: usize,
    pub scad_a: f64,
    /// Outer tolerance of the fully iterated fit.
    pub tol: f64,
    pub max_iter: usize,
    pub allow_marginal_approx: bool,
}

impl ExperimentConfig {
    /// Parses the TOML config. Unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let s = file.scenario;
        let design = match (s.design, s.rho) {
            (DesignName::Orthonormal, None) => Design::Orthonormal,
            (DesignName::Orthonormal, Some(_)) => {
                return Err(Error::Config("scenario.rho only applies to the correlated design".into()))
            }
            (DesignName::Correlated, rho) => Design::GaussianCorrelated { rho: rho.unwrap_or(0.0) },
        };
        let cfg = ExperimentConfig {
            scenario: Scenario { n_obs: s.n_obs, p: s.p, beta_true: s.beta_true, noise_sd: s.noise_sd, design, seed: file.seed },
            methods: file.methods,
            lambda_grid: file.lambda_grid.map(OneOrMany::into_vec).unwrap_or_default(),
            pi: file.pi.map(OneOrMany::into_vec).unwrap_or_default(),
            tau: file.tau.map(OneOrMany::into_vec).unwrap_or_default(),
            replicates: file.replicates,
            seed: file.seed,
            output: file.output,
            k: file.k.unwrap_or(3),
            scad_a: file.scad_a.unwrap_or(DEFAULT_SCAD_A),
            tol: file.tol.unwrap_or(1e-8),
            max_iter: file.max_iter.unwrap_or(1000),
            allow_marginal_approx: file.allow_marginal_approx.unwrap_or(false),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must be nonempty".into()));
        }
        let penalized = self.methods.iter().any(|m| *m != MethodName::PosteriorMedian);
        if penalized && self.lambda_grid.is_empty() {
            return Err(Error::Config("penalized methods need a nonempty lambda_grid".into()));
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Config("lambda_grid entries must be finite and >= 0".into()));
        }
        if self.methods.contains(&MethodName::PosteriorMedian) {
            if self.pi.is_empty() || self.tau.is_empty() {
                return Err(Error::Config("posterior-median needs pi and tau".into()));
            }
            if self.pi.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Config("pi entries must lie in [0, 1]".into()));
            }
            if self.tau.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(Error::Config("tau entries must be positive".into()));
            }
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        if !(self.scad_a > 2.0) {
            return Err(Error::Config("scad_a must exceed 2".into()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config("tol must be positive and max_iter >= 1".into()));
        }
        Ok(())
    }

    /// Expands the method list over the tuning grids, in config order.
    pub fn expanded_methods(&self) -> Vec<Method> {
        let mut out = Vec::new();
        for name in &self.methods {
            match name {
                MethodName::PosteriorMedian => {
                    for &pi in &self.pi {
                        for &tau in &self.tau {
                            out.push(Method::PosteriorMedian { pi, tau });
                        }
                    }
                }
                _ => {
                    for &lambda in &self.lambda_grid {
                        out.push(match name {
                            MethodName::LassoLla => Method::LassoLla { lambda },
                            MethodName::ScadOneStep => Method::ScadOneStep { lambda },
                            MethodName::ScadKStep => Method::ScadKStep { lambda, k: self.k },
                            MethodName::ScadFull => Method::ScadFull { lambda },
                            MethodName::PosteriorMedian => unreachable!(),
                        });
                    }
                }
            }
        }
        out
    }
}

/// Tallies for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub method: String,
    pub correct: usize,
    pub over: usize,
    pub under: usize,
    pub failures: usize,
    pub model_error_sum: f64,
    pub nonzero_sum: usize,
}

impl MethodRow {
    fn new(method: String) -> Self {
        MethodRow { method, correct: 0, over: 0, under: 0, failures: 0, model_error_sum: 0.0, nonzero_sum: 0 }
    }

    /// Replicates that produced a fit.
    pub fn completed(&self) -> usize {
        self.correct + self.over + self.under
    }

    fn rate(&self, count: usize) -> f64 {
        count as f64 / self.completed() as f64
    }

    pub fn correct_fit_rate(&self) -> f64 {
        self.rate(self.correct)
    }

    pub fn over_fit_rate(&self) -> f64 {
        self.rate(self.over)
    }

    pub fn under_fit_rate(&self) -> f64 {
        self.rate(self.under)
    }

    pub fn mean_model_error(&self) -> f64 {
        self.model_error_sum / self.completed() as f64
    }

    pub fn mean_nonzero(&self) -> f64 {
        self.nonzero_sum as f64 / self.completed() as f64
    }

    fn absorb(&mut self, record: &ReplicateRecord) {
        match &record.outcome {
            Ok(fit) => {
                match fit.class {
                    FitClass::Correct => self.correct += 1,
                    FitClass::OverFit => self.over += 1,
                    FitClass::UnderFit => self.under += 1,
                }
                self.model_error_sum += fit.model_error;
                self.nonzero_sum += fit.nonzero;
            }
            Err(_) => self.failures += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub rows: Vec<MethodRow>,
    /// Methods not run, with the reason.
    pub skipped: Vec<(String, String)>,
}

impl MetricsTable {
    pub fn row(&self, label: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == label)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.method,
                sig12(r.correct_fit_rate()),
                sig12(r.over_fit_rate()),
                sig12(r.under_fit_rate()),
                sig12(r.mean_model_error()),
                sig12(r.mean_nonzero()),
                r.completed()
            );
        }
        s
    }

    /// Per λ, the over-fit rates of one-step and fully iterated SCAD.
    pub fn overfit_contrast(&self, lambda_grid: &[f64]) -> Vec<OverfitContrast> {
        lambda_grid
            .iter()
            .filter_map(|&lambda| {
                let one = self.row(&Method::ScadOneStep { lambda }.label())?;
                let full = self.row(&Method::ScadFull { lambda }.label())?;
                if one.completed() == 0 || full.completed() == 0 {
                    return None;
                }
                Some(OverfitContrast { lambda, one_step_over: one.over_fit_rate(), full_over: full.over_fit_rate() })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverfitContrast {
    pub lambda: f64,
    pub one_step_over: f64,
    pub full_over: f64,
}

impl OverfitContrast {
    pub fn full_overfits_more(&self) -> bool {
        self.full_over > self.one_step_over
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub class: FitClass,
    pub model_error: f64,
    pub nonzero: usize,
    /// Penalized log-likelihood at the estimate, for penalized methods.
    pub objective: Option<f64>,
    pub beta_hat: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub method: Method,
    pub outcome: std::result::Result<MethodFit, String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub table: MetricsTable,
    pub records: Vec<ReplicateRecord>,
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<MetricsTable> {
    Ok(run_experiment_detailed(config)?.table)
}

/// Runs every replicate and keeps per-replicate records alongside the table.
pub fn run_experiment_detailed(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mut methods = config.expanded_methods();
    let mut skipped = Vec::new();
    let correlated = matches!(config.scenario.design, Design::GaussianCorrelated { .. });
    if correlated && !config.allow_marginal_approx {
        methods.retain(|m| {
            let unsupported = matches!(m, Method::PosteriorMedian { .. });
            if unsupported {
                skipped.push((
                    m.label(),
                    "posterior median on a correlated design needs allow_marginal_approx".to_string(),
                ));
            }
            !unsupported
        });
    }
    let mut rows: Vec<MethodRow> = methods.iter().map(|m| MethodRow::new(m.label())).collect();
    let truth = config.scenario.true_support();
    let mut records = Vec::with_capacity(methods.len() * config.replicates);
    for r in 0..config.replicates {
        let scenario = Scenario { seed: replicate_seed(config.seed, r as u64), ..config.scenario.clone() };
        let data = generate(&scenario)?;
        let replicate = run_replicate(config, &data, &methods, &truth);
        for ((method, outcome), row) in methods.iter().zip(replicate).zip(rows.iter_mut()) {
            let record = ReplicateRecord { replicate: r, method: *method, outcome };
            row.absorb(&record);
            records.push(record);
        }
    }
    Ok(ExperimentOutcome { table: MetricsTable { rows, skipped }, records })
}

fn run_replicate(
    config: &ExperimentConfig,
    data: &RegressionData,
    methods: &[Method],
    truth: &[usize],
) -> Vec<std::result::Result<MethodFit, String>> {
    let init = default_initializer(&data.model);
    let finish = |beta: DVector<f64>, objective: Option<f64>| {
        let support = support_of(&beta);
        MethodFit {
            class: classify_fit(&support, truth),
            model_error: model_error(&data.model, &beta, &data.beta_true),
            nonzero: support.len(),
            objective,
            beta_hat: beta.iter().copied().collect(),
        }
    };
    methods
        .iter()
        .map(|method| {
            let outcome = match *method {
                Method::PosteriorMedian { pi, tau } => posterior_median_fit(config, data, pi, tau).map(|b| finish(b, None)),
                Method::LassoLla { lambda } => {
                    penalized_fit(config, data, init.as_ref(), PenaltySpec::l1(lambda), Iterations::Full)
                        .map(|(b, obj)| finish(b, Some(obj)))
                }
                Method::ScadOneStep { lambda } => {
                    penalized_fit(config, data, init.as_ref(), PenaltySpec::scad(lambda, config.scad_a), Iterations::Fixed(1))
                        .map(|(b, obj)| finish(b, Some(obj)))
                }
                Method::ScadKStep { lambda, k } => {
                    penalized_fit(config, data, init.as_ref(), PenaltySpec::scad(lambda, config.scad_a), Iterations::Fixed(k))
                        .map(|(b, obj)| finish(b, Some(obj)))
                }
                Method::ScadFull { lambda } => {
                    penalized_fit(config, data, init.as_ref(), PenaltySpec::scad(lambda, config.scad_a), Iterations::Full)
                        .map(|(b, obj)| finish(b, Some(obj)))
                }
            };
            outcome.map_err(|e| e.to_string())
        })
        .collect()
}

enum Iterations {
    Fixed(usize),
    Full,
}

fn penalized_fit(
    config: &ExperimentConfig,
    data: &RegressionData,
    init: std::result::Result<&DVector<f64>, &Error>,
    penalty: Result<PenaltySpec>,
    iterations: Iterations,
) -> Result<(DVector<f64>, f64)> {
    let init = init.map_err(|e| Error::numerical(format!("initializer failed: {e}")))?;
    let penalty = penalty?.with_n(data.model.n_obs())?;
    let decomp: Decomposition = decompose_uniform(data.model.clone(), penalty)?;
    let solver = MmSolver::default();
    let fit = match iterations {
        Iterations::Fixed(k) => solver.k_step(&decomp, init, k, config.tol)?,
        Iterations::Full => solver.iterate(&decomp, init, config.tol, config.max_iter)?,
    };
    Ok((fit.beta_hat.clone(), fit.final_objective()))
}

/// Per-coordinate statistics and noise scales for marginal thresholding.
///
/// Orthonormal designs give `z = Xᵀy / n` with scale `σ / √n`; correlated
/// designs use ridge-adjusted least squares with the matching marginal
/// standard deviations.
pub fn marginal_statistics(data: &RegressionData, noise_sd: f64, design: Design) -> Result<(Vec<f64>, Vec<f64>)> {
    let model = &data.model;
    let n = model.n_obs() as f64;
    match design {
        Design::Orthonormal => {
            let z = model.x().tr_mul(model.y()) / n;
            Ok((z.iter().copied().collect(), vec![noise_sd / n.sqrt(); model.p()]))
        }
        Design::GaussianCorrelated { .. } => {
            let gram = model.x().tr_mul(model.x());
            let mut a = gram.clone();
            for j in 0..model.p() {
                a[(j, j)] += MARGINAL_RIDGE * n;
            }
            let inv = a
                .cholesky()
                .ok_or_else(|| Error::numerical("ridge-adjusted Gram matrix is not positive definite"))?
                .inverse();
            let z = &inv * model.x().tr_mul(model.y());
            let cov = &inv * gram * &inv;
            let sd = (0..model.p()).map(|j| noise_sd * cov[(j, j)].max(0.0).sqrt()).collect();
            Ok((z.iter().copied().collect(), sd))
        }
    }
}

fn posterior_median_fit(config: &ExperimentConfig, data: &RegressionData, pi: f64, tau: f64) -> Result<DVector<f64>> {
    let (z, sd) = marginal_statistics(data, config.scenario.noise_sd, config.scenario.design)?;
    let prior = SpikeSlabPrior::normal(pi, tau)?;
    let out = threshold_vector_heteroscedastic(&prior, &z, &sd)?;
    Ok(DVector::from_vec(out.estimates))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(design: Design) -> Scenario {
        Scenario { n_obs: 40, p: 6, beta_true: vec![3.0, 0.0, 1.5, 0.0, 0.0, 2.0], noise_sd: 1.0, design, seed: 7 }
    }

    #[test]
    fn classification() {
        assert_eq!(classify_fit(&[1, 2], &[1, 2]), FitClass::Correct);
        assert_eq!(classify_fit(&[1, 2, 3], &[1, 2]), FitClass::OverFit);
        assert_eq!(classify_fit(&[1], &[1, 2]), FitClass::UnderFit);
        assert_eq!(classify_fit(&[1, 3], &[1, 2]), FitClass::UnderFit);
        assert_eq!(classify_fit(&[], &[]), FitClass::Correct);
    }

    #[test]
    fn orthonormal_design_is_exact() {
        let data = generate(&scenario(Design::Orthonormal)).unwrap();
        let g = data.model.x().tr_mul(data.model.x()) / 40.0;
        assert!((g - DMatrix::identity(6, 6)).amax() <= 1e-10);
    }

    #[test]
    fn generation_is_deterministic() {
        for design in [Design::Orthonormal, Design::GaussianCorrelated { rho: 0.5 }] {
            let a = generate(&scenario(design)).unwrap();
            let b = generate(&scenario(design)).unwrap();
            assert_eq!(a.model.x(), b.model.x());
            assert_eq!(a.model.y(), b.model.y());
        }
    }

    #[test]
    fn tiny_noise_recovers_truth() {
        let mut s = scenario(Design::GaussianCorrelated { rho: 0.3 });
        s.noise_sd = 1e-12;
        let data = generate(&s).unwrap();
        let ols = default_initializer(&data.model).unwrap();
        assert!((ols - &data.beta_true).amax() < 1e-6);
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = scenario(Design::Orthonormal);
        s.p = 50;
        s.beta_true = vec![0.0; 50];
        assert!(generate(&s).is_err());
        let mut s = scenario(Design::GaussianCorrelated { rho: 1.0 });
        assert!(generate(&s).is_err());
        s.design = Design::Orthonormal;
        s.noise_sd = 0.0;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn replicate_seeds_differ() {
        let seeds: BTreeSet<u64> = (0..1000).map(|r| replicate_seed(42, r)).collect();
        assert_eq!(seeds.len(), 1000);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"
            replicates = 2
            seed = 1
            methods = ["scad-1step"]
            lambda_grid = 0.5
            bogus = 3
            [scenario]
            n_obs = 20
            p = 2
            beta_true = [1.0, 0.0]
            noise_sd = 1.0
            design = "orthonormal"
        "#;
        assert!(matches!(ExperimentConfig::from_toml_str(text), Err(Error::Config(_))));
        let ok = text.replace("bogus = 3", "");
        let cfg = ExperimentConfig::from_toml_str(&ok).unwrap();
        assert_eq!(cfg.lambda_grid, vec![0.5]);
        assert_eq!(cfg.expanded_methods(), vec![Method::ScadOneStep { lambda: 0.5 }]);
    }

    #[test]
    fn correlated_design_skips_posterior_median_without_flag() {
        let cfg = ExperimentConfig {
            scenario: scenario(Design::GaussianCorrelated { rho: 0.5 }),
            methods: vec![MethodName::ScadOneStep, MethodName::PosteriorMedian],
            lambda_grid: vec![0.3],
            pi: vec![0.5],
            tau: vec![1.0],
            replicates: 2,
            seed: 3,
            output: None,
            k: 2,
            scad_a: 3.7,
            tol: 1e-8,
            max_iter: 200,
            allow_marginal_approx: false,
        };
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.skipped.len(), 1);
        let t = run_experiment(&ExperimentConfig { allow_marginal_approx: true, ..cfg }).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].completed(), 2);
    }
}
