//! Posterior-median thresholding under a spike-and-slab prior.
//!
//! With prior `β ~ π·δ₀ + (1-π)·F`, the marginal posterior of each coefficient
//! is again a mixture of an atom at zero (mass `π_y`) and a continuous part
//! `F_c`. Writing `O_y = π_y / (1 - π_y)` and `Δ = |1 - 2F_c(0)|`, the median
//! is exactly zero when `O_y ≥ Δ` and otherwise equals
//! `F_c⁻¹((1 - S·O_y) / 2)` with `S` the sign of the median of `F_c`.
//!
//! For a symmetric location-scale `F_c` the nonzero branch reads
//! `Med_c - S·σ_c·G⁻¹((1 + O_y) / 2)`: the already shrunk `Med_c` is pulled
//! further toward zero, more so for larger `σ_c` or `O_y`.

use crate::numeric::{std_normal_cdf, std_normal_ln_pdf, std_normal_quantile};
use crate::{Error, Result};

/// Continuous component of a prior or posterior, strictly increasing on its
/// support.
#[derive(Debug, Clone, PartialEq)]
pub enum ContinuousDist {
    Normal { mean: f64, sd: f64 },
    Grid(GridCdf),
}

/// Piecewise-linear CDF through `(points[k], values[k])`, with `values` running
/// strictly from 0 to 1. Flat stretches are rejected since they make the
/// median non-unique.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl GridCdf {
    pub fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points.len() != values.len() {
            return Err(Error::arg("grid CDF needs >= 2 points and one value per point"));
        }
        if points.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::arg("grid CDF entries must be finite"));
        }
        if !crate::numeric::strictly_increasing(&points) {
            return Err(Error::arg("grid CDF points must be strictly increasing"));
        }
        if !crate::numeric::strictly_increasing(&values) {
            return Err(Error::arg("grid CDF values must be strictly increasing (no flat regions)"));
        }
        if values[0] != 0.0 || *values.last().unwrap() != 1.0 {
            return Err(Error::arg("grid CDF values must start at 0 and end at 1"));
        }
        Ok(GridCdf { points, values })
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= x);
        if k == 0 {
            return 0.0;
        }
        if k == self.points.len() {
            return 1.0;
        }
        let (x0, x1) = (self.points[k - 1], self.points[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let k = self.values.partition_point(|&v| v < p);
        if k == 0 {
            return self.points[0];
        }
        if k == self.values.len() {
            return *self.points.last().unwrap();
        }
        let (x0, x1) = (self.points[k - 1], self.points[k]);
        let (v0, v1) = (self.values[k - 1], self.values[k]);
        x0 + (x1 - x0) * (p - v0) / (v1 - v0)
    }
}

impl ContinuousDist {
    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(Error::arg(format!("normal needs finite mean and sd > 0, got ({mean}, {sd})")));
        }
        Ok(ContinuousDist::Normal { mean, sd })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            ContinuousDist::Normal { mean, sd } => std_normal_cdf((x - mean) / sd),
            ContinuousDist::Grid(g) => g.cdf(x),
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        match self {
            ContinuousDist::Normal { mean, sd } => {
                let z = std_normal_quantile(p);
                if z == 0.0 {
                    *mean
                } else {
                    mean + sd * z
                }
            }
            ContinuousDist::Grid(g) => g.quantile(p),
        }
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    pub fn mean(&self) -> f64 {
        match self {
            ContinuousDist::Normal { mean, .. } => *mean,
            ContinuousDist::Grid(g) => {
                // piecewise-uniform density
                g.points
                    .windows(2)
                    .zip(g.values.windows(2))
                    .map(|(x, v)| (v[1] - v[0]) * 0.5 * (x[0] + x[1]))
                    .sum()
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ContinuousDist::Normal { sd, .. } => sd * sd,
            ContinuousDist::Grid(g) => {
                let m = self.mean();
                let second: f64 = g
                    .points
                    .windows(2)
                    .zip(g.values.windows(2))
                    .map(|(x, v)| (v[1] - v[0]) * (x[0] * x[0] + x[0] * x[1] + x[1] * x[1]) / 3.0)
                    .sum();
                second - m * m
            }
        }
    }
}

/// Atom mass `pi` at zero plus `(1 - pi)` times a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSlabPrior {
    pi: f64,
    slab: ContinuousDist,
}

impl SpikeSlabPrior {
    pub fn new(pi: f64, slab: ContinuousDist) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::arg(format!("prior atom mass must lie in [0, 1], got {pi}")));
        }
        Ok(SpikeSlabPrior { pi, slab })
    }

    /// Atom at zero with a `Normal(0, tau²)` slab.
    pub fn normal(pi: f64, tau: f64) -> Result<Self> {
        Self::new(pi, ContinuousDist::normal(0.0, tau)?)
    }

    pub fn pi(&self) -> f64 {
        self.pi
    }

    pub fn slab(&self) -> &ContinuousDist {
        &self.slab
    }
}

/// The data that produced a posterior mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMeta {
    pub y: f64,
    pub sigma: f64,
    pub prior: SpikeSlabPrior,
}

/// `π_y·1(β ≥ 0) + (1 - π_y)·F_c(β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMixture {
    pi_y: f64,
    continuous: ContinuousDist,
    meta: Option<MixtureMeta>,
}

impl PosteriorMixture {
    pub fn new(pi_y: f64, continuous: ContinuousDist) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi_y) {
            return Err(Error::arg(format!("posterior atom mass must lie in [0, 1], got {pi_y}")));
        }
        Ok(PosteriorMixture { pi_y, continuous, meta: None })
    }

    pub fn pi_y(&self) -> f64 {
        self.pi_y
    }

    pub fn continuous(&self) -> &ContinuousDist {
        &self.continuous
    }

    pub fn meta(&self) -> Option<&MixtureMeta> {
        self.meta.as_ref()
    }

    /// Right-continuous mixture CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        let atom = if x >= 0.0 { self.pi_y } else { 0.0 };
        atom + (1.0 - self.pi_y) * self.continuous.cdf(x)
    }

    /// `F(x-)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let atom = if x > 0.0 { self.pi_y } else { 0.0 };
        atom + (1.0 - self.pi_y) * self.continuous.cdf(x)
    }

    /// Mean of the full posterior (atom included).
    pub fn mean(&self) -> f64 {
        (1.0 - self.pi_y) * self.continuous.mean()
    }

    /// Variance of the full posterior (atom included).
    pub fn variance(&self) -> f64 {
        let m = self.continuous.mean();
        let second = (1.0 - self.pi_y) * (self.continuous.variance() + m * m);
        second - self.mean() * self.mean()
    }
}

/// Marginal posterior for `y | β ~ Normal(β, σ²)` under a spike and normal
/// slab prior.
pub fn marginal_posterior(prior: &SpikeSlabPrior, y: f64, sigma: f64) -> Result<PosteriorMixture> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::arg(format!("noise scale sigma must be positive, got {sigma}")));
    }
    if !y.is_finite() {
        return Err(Error::arg("observation must be finite"));
    }
    let ContinuousDist::Normal { mean: m0, sd: tau } = prior.slab else {
        return Err(Error::arg("closed-form marginal posterior needs a normal slab"));
    };
    let (s2, t2) = (sigma * sigma, tau * tau);
    let total = s2 + t2;
    let pi = prior.pi;
    let pi_y = if pi == 0.0 {
        0.0
    } else if pi == 1.0 {
        1.0
    } else {
        let ln_atom = pi.ln() + std_normal_ln_pdf(y / sigma) - sigma.ln();
        let sd_marg = total.sqrt();
        let ln_slab = (-pi).ln_1p() + std_normal_ln_pdf((y - m0) / sd_marg) - sd_marg.ln();
        1.0 / (1.0 + (ln_slab - ln_atom).exp())
    };
    let continuous = ContinuousDist::normal((y * t2 + m0 * s2) / total, sigma * tau / total.sqrt())?;
    Ok(PosteriorMixture { pi_y, continuous, meta: Some(MixtureMeta { y, sigma, prior: prior.clone() }) })
}

/// `O_y = π_y / (1 - π_y)`, infinite when `π_y = 1`.
pub fn posterior_odds(mix: &PosteriorMixture) -> f64 {
    if mix.pi_y >= 1.0 {
        f64::INFINITY
    } else {
        mix.pi_y / (1.0 - mix.pi_y)
    }
}

/// `Δ = |1 - 2F_c(0)|`: the odds level at and above which the median is zero.
pub fn threshold_delta(mix: &PosteriorMixture) -> f64 {
    (1.0 - 2.0 * mix.continuous.cdf(0.0)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianBranch {
    /// `O_y ≥ Δ > 0`.
    ZeroByOdds,
    PositiveBranch,
    NegativeBranch,
    /// The continuous median is exactly zero, so `Δ = 0`.
    ZeroByCenteredSlab,
}

impl MedianBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            MedianBranch::ZeroByOdds => "zero_by_odds",
            MedianBranch::PositiveBranch => "positive",
            MedianBranch::NegativeBranch => "negative",
            MedianBranch::ZeroByCenteredSlab => "zero_by_centered_slab",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianResult {
    pub median: f64,
    pub odds: f64,
    pub threshold_delta: f64,
    pub branch: MedianBranch,
    /// Sign of the continuous component's median.
    pub sign_s: i8,
}

fn continuous_sign(mix: &PosteriorMixture) -> i8 {
    let f0 = mix.continuous.cdf(0.0);
    if f0 < 0.5 {
        1
    } else if f0 > 0.5 {
        -1
    } else {
        0
    }
}

/// Closed-form posterior median. The boundary `O_y = Δ` belongs to the zero
/// branch.
pub fn median_lemma1(mix: &PosteriorMixture) -> MedianResult {
    let odds = posterior_odds(mix);
    let delta = threshold_delta(mix);
    let sign_s = continuous_sign(mix);
    let zero = |branch| MedianResult { median: 0.0, odds, threshold_delta: delta, branch, sign_s };
    if sign_s == 0 {
        return zero(MedianBranch::ZeroByCenteredSlab);
    }
    if odds >= delta {
        return zero(MedianBranch::ZeroByOdds);
    }
    let s = f64::from(sign_s);
    let median = mix.continuous.quantile((1.0 - s * odds) / 2.0);
    let branch = if sign_s > 0 { MedianBranch::PositiveBranch } else { MedianBranch::NegativeBranch };
    MedianResult { median, odds, threshold_delta: delta, branch, sign_s }
}

/// Location-scale form of the nonzero branch:
/// `med_c ∓ σ_c·G⁻¹((1 + O)/2)`, shrinking `med_c` toward zero.
///
/// Only valid when `odds < delta`; otherwise the median is zero and this
/// returns a contract error.
pub fn median_location_scale<G: Fn(f64) -> f64>(med_c: f64, sigma_c: f64, g_quantile: G, odds: f64, delta: f64) -> Result<f64> {
    if !(odds < delta) {
        return Err(Error::Contract(format!("odds {odds} >= threshold {delta}: the median is zero")));
    }
    if med_c == 0.0 || !med_c.is_finite() {
        return Err(Error::arg("continuous median must be finite and nonzero"));
    }
    if !(sigma_c > 0.0) {
        return Err(Error::arg("posterior scale must be positive"));
    }
    let shrink = sigma_c * g_quantile((1.0 + odds) / 2.0);
    Ok(if med_c > 0.0 { med_c - shrink } else { med_c + shrink })
}

/// Median by direct search on the mixture CDF: `F(M) ≥ 1/2 ≥ F(M-)`.
/// Returns exactly zero when the atom straddles 1/2.
pub fn median_oracle(mix: &PosteriorMixture, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::arg("tolerance must be positive"));
    }
    if mix.cdf_left(0.0) <= 0.5 && mix.cdf(0.0) >= 0.5 {
        return Ok(0.0);
    }
    let positive = mix.cdf(0.0) < 0.5;
    // bracket [lo, hi] with F(lo) < 1/2 <= F(hi)
    let (mut lo, mut hi) = if positive { (0.0, 1.0) } else { (-1.0, 0.0) };
    loop {
        if positive && mix.cdf(hi) < 0.5 {
            lo = hi;
            hi *= 2.0;
        } else if !positive && mix.cdf(lo) >= 0.5 {
            hi = lo;
            lo *= 2.0;
        } else {
            break;
        }
        if hi.abs() > 1e300 || lo.abs() > 1e300 {
            return Err(Error::numerical("could not bracket the median"));
        }
    }
    for _ in 0..4096 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mix.cdf(mid) >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMedian {
    pub index: usize,
    pub y: f64,
    pub pi_y: f64,
    pub result: MedianResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdOutput {
    pub coordinates: Vec<CoordinateMedian>,
    pub estimates: Vec<f64>,
    /// Indices with exactly nonzero median.
    pub support: Vec<usize>,
}

/// Coordinatewise posterior-median thresholding with one prior for all
/// coordinates.
pub fn threshold_vector(prior: &SpikeSlabPrior, y: &[f64], sigma: f64) -> Result<ThresholdOutput> {
    threshold_with(|_| prior, y, |_| sigma)
}

/// Coordinatewise thresholding with a prior per coordinate.
pub fn threshold_vector_per_coordinate(priors: &[SpikeSlabPrior], y: &[f64], sigma: f64) -> Result<ThresholdOutput> {
    if priors.len() != y.len() {
        return Err(Error::arg(format!("{} priors for {} observations", priors.len(), y.len())));
    }
    threshold_with(|j| &priors[j], y, |_| sigma)
}

/// Coordinatewise thresholding with a noise scale per coordinate.
pub fn threshold_vector_heteroscedastic(prior: &SpikeSlabPrior, y: &[f64], sigmas: &[f64]) -> Result<ThresholdOutput> {
    if sigmas.len() != y.len() {
        return Err(Error::arg(format!("{} noise scales for {} observations", sigmas.len(), y.len())));
    }
    threshold_with(|_| prior, y, |j| sigmas[j])
}

fn threshold_with<'a, P, S>(prior_for: P, y: &[f64], sigma_for: S) -> Result<ThresholdOutput>
where
    P: Fn(usize) -> &'a SpikeSlabPrior,
    S: Fn(usize) -> f64,
{
    let mut coordinates = Vec::with_capacity(y.len());
    for (index, &yj) in y.iter().enumerate() {
        let mix = marginal_posterior(prior_for(index), yj, sigma_for(index))?;
        let result = median_lemma1(&mix);
        coordinates.push(CoordinateMedian { index, y: yj, pi_y: mix.pi_y, result });
    }
    let estimates: Vec<f64> = coordinates.iter().map(|c| c.result.median).collect();
    let support = estimates.iter().enumerate().filter(|(_, m)| **m != 0.0).map(|(j, _)| j).collect();
    Ok(ThresholdOutput { coordinates, estimates, support })
}
