//! Lifting an LLA iteration to an EM algorithm.
//!
//! If `exp(-g_j(u)) = ∫ exp(u z) h_j(z) dz` for a latent density `h_j`, then
//! augmenting the likelihood with `Z_j` (tilted by `|θ_j|`) yields an EM
//! Q-function
//!
//! ```text
//! Q_EM(θ | θ_t) = f(θ) + Σ_j |θ_j| E[Z_j | θ_t] + Σ_j E[log h_j(Z_j) | θ_t]
//! ```
//!
//! and since `E[Z_j | u] = -g_j'(u)`, this differs from the LLA surrogate by a
//! constant in `θ`. Differentiating twice gives `g_j''(u) = -Var(Z_j | u)`, so
//! concavity of `g` is necessary. This module verifies supplied candidate lifts
//! numerically; it does not decide whether a lift exists.

use nalgebra::DVector;

use crate::mm_solver::Decomposition;
use crate::numeric::{simpson, strictly_increasing, trapezoid_weights};
use crate::penalty::{scan_concavity, validate_grid, ConcavityReport};
use crate::{Error, Result};

/// Subintervals for Simpson quadrature of exponential-family moments.
const EXP_QUAD_INTERVALS: usize = 40_000;
/// The tilted exponential is integrated over `[0, EXP_QUAD_SPAN / rate]`.
const EXP_QUAD_SPAN: f64 = 60.0;

/// Largest spread of `Q_EM - Q_LLA` over the θ grid still counted as constant.
pub const DEFAULT_EQUIVALENCE_TOL: f64 = 1e-8;
/// Relative MGF error tolerated before a lift is declared invalid.
pub const DEFAULT_MGF_TOL: f64 = 1e-6;
/// Relative tolerance for `g'' = -Var(Z)`.
pub const VARIANCE_IDENTITY_TOL: f64 = 1e-4;

/// Latent density `h(z)` whose MGF should equal `exp(-g)`.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentDensity {
    /// All mass at `location`.
    PointMass { location: f64 },
    /// Density tabulated on a grid. `masses` are trapezoid-rule probability
    /// masses (`density * node weight`) and sum to one.
    Grid(GridDensity),
    /// `Z = -W` with `W ~ Exponential(rate)`.
    NegExponential { rate: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    z: Vec<f64>,
    density: Vec<f64>,
    masses: Vec<f64>,
}

impl GridDensity {
    /// Tabulated density values on a strictly increasing grid. The values are
    /// rescaled so that the trapezoid rule integrates them to one.
    pub fn from_density(z: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if z.len() < 2 || z.len() != density.len() {
            return Err(Error::arg("grid density needs >= 2 nodes and one value per node"));
        }
        if !strictly_increasing(&z) || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("grid density nodes must be finite and strictly increasing"));
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(Error::arg("grid density values must be finite and nonnegative"));
        }
        let tw = trapezoid_weights(&z);
        let total: f64 = tw.iter().zip(&density).map(|(w, d)| w * d).sum();
        if !(total > 0.0) {
            return Err(Error::arg("grid density has zero total mass"));
        }
        let density: Vec<f64> = density.iter().map(|d| d / total).collect();
        let masses = tw.iter().zip(&density).map(|(w, d)| w * d).collect();
        Ok(GridDensity { z, density, masses })
    }

    /// Probability masses on the nodes (must sum to one within 1e-10).
    pub fn from_masses(z: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if z.len() < 2 || z.len() != masses.len() {
            return Err(Error::arg("grid density needs >= 2 nodes and one mass per node"));
        }
        if !strictly_increasing(&z) {
            return Err(Error::arg("grid density nodes must be strictly increasing"));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::arg("grid masses must be finite and nonnegative"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::arg(format!("grid masses sum to {total}, expected 1")));
        }
        let tw = trapezoid_weights(&z);
        let density = masses.iter().zip(&tw).map(|(m, w)| m / w).collect();
        Ok(GridDensity { z, density, masses })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.z
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Moments of the tilted law `∝ exp(u z) h(z)`: `(log normalizer, mean,
    /// variance, E[log h])`.
    fn tilted(&self, u: f64) -> (f64, f64, f64, f64) {
        // shift the exponent for stability
        let shift = self
            .z
            .iter()
            .zip(&self.masses)
            .filter(|(_, m)| **m > 0.0)
            .map(|(z, _)| u * z)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for (z, m) in self.z.iter().zip(&self.masses) {
            if *m > 0.0 {
                let w = m * (u * z - shift).exp();
                s0 += w;
                s1 += w * z;
            }
        }
        let mean = s1 / s0;
        let mut var = 0.0;
        let mut elog = 0.0;
        for ((z, m), d) in self.z.iter().zip(&self.masses).zip(&self.density) {
            if *m > 0.0 {
                let w = m * (u * z - shift).exp() / s0;
                var += w * (z - mean) * (z - mean);
                elog += w * d.ln();
            }
        }
        (s0.ln() + shift, mean, var, elog)
    }
}

/// First two moments of the tilted latent law and the entropy-like term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedMoments {
    pub mean: f64,
    pub variance: f64,
    /// `E[log h(Z)]`; zero by convention for a point mass.
    pub expected_log_density: f64,
}

impl LatentDensity {
    pub fn point_mass(location: f64) -> Self {
        LatentDensity::PointMass { location }
    }

    pub fn neg_exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::arg(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(LatentDensity::NegExponential { rate })
    }

    /// `∫ exp(u z) h(dz)`.
    pub fn mgf(&self, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::domain(format!("MGF argument must be >= 0, got {u}")));
        }
        Ok(match self {
            LatentDensity::PointMass { location } => (u * location).exp(),
            LatentDensity::Grid(g) => g.tilted(u).0.exp(),
            LatentDensity::NegExponential { rate } => rate / (rate + u),
        })
    }

    /// Moments of the law `∝ exp(u z) h(z)`. Non-atomic laws are integrated
    /// numerically: the grid by its own trapezoid masses, the exponential by
    /// composite Simpson.
    pub fn tilted_moments(&self, u: f64) -> Result<TiltedMoments> {
        if !(u >= 0.0) {
            return Err(Error::domain(format!("tilt must be >= 0, got {u}")));
        }
        match self {
            LatentDensity::PointMass { location } => {
                Ok(TiltedMoments { mean: *location, variance: 0.0, expected_log_density: 0.0 })
            }
            LatentDensity::Grid(g) => {
                let (_, mean, variance, elog) = g.tilted(u);
                if !elog.is_finite() {
                    return Err(Error::numerical("E[log h] is not finite on the grid"));
                }
                Ok(TiltedMoments { mean, variance, expected_log_density: elog })
            }
            LatentDensity::NegExponential { rate } => {
                // W = -Z has density ∝ exp(-(rate + u) w) on w > 0.
                let r = rate + u;
                let upper = EXP_QUAD_SPAN / r;
                let kernel = |w: f64| (-r * w).exp();
                let m0 = simpson(kernel, 0.0, upper, EXP_QUAD_INTERVALS);
                let m1 = simpson(|w| w * kernel(w), 0.0, upper, EXP_QUAD_INTERVALS) / m0;
                let m2 = simpson(|w| w * w * kernel(w), 0.0, upper, EXP_QUAD_INTERVALS) / m0;
                let mean_w = m1;
                // log h(z) = log(rate) - rate·w
                Ok(TiltedMoments {
                    mean: -mean_w,
                    variance: m2 - mean_w * mean_w,
                    expected_log_density: rate.ln() - rate * mean_w,
                })
            }
        }
    }
}

fn check_lift(decomp: &Decomposition, lift: &[LatentDensity]) -> Result<()> {
    if lift.len() != decomp.dim() {
        return Err(Error::arg(format!(
            "lift has {} latent densities for {} coordinates",
            lift.len(),
            decomp.dim()
        )));
    }
    Ok(())
}

/// Max over coordinates and `u_grid` of the relative error between the
/// latent MGF and `exp(-g_j(u))`.
pub fn verify_mgf_representation(decomp: &Decomposition, lift: &[LatentDensity], u_grid: &[f64]) -> Result<f64> {
    check_lift(decomp, lift)?;
    let mut worst: f64 = 0.0;
    for (j, h) in lift.iter().enumerate() {
        for &u in u_grid {
            let target = (-decomp.g_coordinate(j, u)?).exp();
            let mgf = h.mgf(u)?;
            let err = (mgf - target).abs() / target;
            worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
        }
    }
    Ok(worst)
}

/// `E[Z_j | u] = -g_j'(u)`; the right limit at `u = 0`.
pub fn latent_posterior_mean(decomp: &Decomposition, j: usize, u: f64) -> Result<f64> {
    Ok(-decomp.g_slope(j, u)?)
}

/// EM Q-function with `θ` entering through `|θ|`.
pub fn em_q(decomp: &Decomposition, lift: &[LatentDensity], theta: &DVector<f64>, theta_t: &DVector<f64>) -> Result<f64> {
    check_lift(decomp, lift)?;
    if theta.len() != decomp.dim() || theta_t.len() != decomp.dim() {
        return Err(Error::arg("parameter vectors do not match the decomposition"));
    }
    let mut q = decomp.f(theta);
    for (j, h) in lift.iter().enumerate() {
        let m = h.tilted_moments(theta_t[j].abs())?;
        q += theta[j].abs() * m.mean + m.expected_log_density;
    }
    if !q.is_finite() {
        return Err(Error::numerical("EM Q-function is not finite"));
    }
    Ok(q)
}

/// The LLA surrogate on the objective scale:
/// `f(θ) - Σ_j g_j'(|θ_t,j|)(|θ_j| - |θ_t,j|)`.
pub fn lla_q(decomp: &Decomposition, theta: &DVector<f64>, theta_t: &DVector<f64>) -> Result<f64> {
    let mut q = decomp.f(theta);
    for j in 0..decomp.dim() {
        q -= decomp.g_slope(j, theta_t[j].abs())? * (theta[j].abs() - theta_t[j].abs());
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    EquivalentUpToConstant,
    NotEquivalent,
    MgfInvalid,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::EquivalentUpToConstant => "EquivalentUpToConstant",
            Verdict::NotEquivalent => "NotEquivalent",
            Verdict::MgfInvalid => "MgfInvalid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `max D - min D` over the θ grid.
    pub max_constant_deviation: f64,
    pub mgf_max_rel_error: f64,
    pub concavity_ok: bool,
    /// `max |E[Z_j | u] + g_j'(u)|` over the anchor coordinates.
    pub mean_identity_max_error: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Copy)]
pub struct EquivalenceOptions {
    pub tol: f64,
    pub mgf_tol: f64,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions { tol: DEFAULT_EQUIVALENCE_TOL, mgf_tol: DEFAULT_MGF_TOL }
    }
}

/// Checks that the EM Q-function and the LLA surrogate differ by a constant
/// over `theta_grid`. The MGF is checked at every `|θ_j|` that appears in the
/// grid or the anchor.
pub fn verify_mm_em_equivalence(
    decomp: &Decomposition,
    lift: &[LatentDensity],
    theta_t: &DVector<f64>,
    theta_grid: &[DVector<f64>],
    opts: EquivalenceOptions,
) -> Result<EquivalenceReport> {
    check_lift(decomp, lift)?;
    if theta_grid.is_empty() {
        return Err(Error::arg("theta grid must be nonempty"));
    }
    if theta_grid.iter().chain(std::iter::once(theta_t)).any(|t| t.len() != decomp.dim() || t.iter().any(|v| !v.is_finite())) {
        return Err(Error::arg("theta grid entries must be finite with the model dimension"));
    }

    let mut u_points: Vec<f64> = theta_grid.iter().chain(std::iter::once(theta_t)).flat_map(|t| t.iter().map(|v| v.abs())).collect();
    u_points.sort_by(f64::total_cmp);
    u_points.dedup();
    let mgf_err = verify_mgf_representation(decomp, lift, &u_points)?;

    let mut mean_err: f64 = 0.0;
    for (j, h) in lift.iter().enumerate() {
        let u = theta_t[j].abs();
        let e = h.tilted_moments(u)?.mean;
        mean_err = mean_err.max((e - latent_posterior_mean(decomp, j, u)?).abs());
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for theta in theta_grid {
        let d = em_q(decomp, lift, theta, theta_t)? - lla_q(decomp, theta, theta_t)?;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let spread = hi - lo;

    let concavity_ok = (0..decomp.dim()).all(|j| {
        let u_max = u_points.last().copied().unwrap_or(1.0).max(1.0);
        let grid: Vec<f64> = (0..=200).map(|i| u_max * i as f64 / 200.0).collect();
        coordinate_concavity(decomp, j, &grid).map(|r| r.concave).unwrap_or(false)
    });

    let verdict = if !(mgf_err <= opts.mgf_tol) {
        Verdict::MgfInvalid
    } else if spread <= opts.tol {
        Verdict::EquivalentUpToConstant
    } else {
        Verdict::NotEquivalent
    };
    Ok(EquivalenceReport {
        max_constant_deviation: spread,
        mgf_max_rel_error: mgf_err,
        concavity_ok,
        mean_identity_max_error: mean_err,
        verdict,
    })
}

fn coordinate_concavity(decomp: &Decomposition, j: usize, grid: &[f64]) -> Result<ConcavityReport> {
    let values = grid.iter().map(|&u| decomp.g_coordinate(j, u)).collect::<Result<Vec<_>>>()?;
    Ok(scan_concavity(grid, &values))
}

/// One-sided (at the origin) or central finite-difference estimate of `g_j''`
/// from the derivative oracle.
pub fn second_derivative_estimate(decomp: &Decomposition, j: usize, u: f64) -> Result<f64> {
    let h = 1e-5 * u.abs().max(1.0);
    if u < h {
        let d0 = decomp.g_slope(j, u)?;
        let d1 = decomp.g_slope(j, u + h)?;
        let d2 = decomp.g_slope(j, u + 2.0 * h)?;
        Ok((-3.0 * d0 + 4.0 * d1 - d2) / (2.0 * h))
    } else {
        Ok((decomp.g_slope(j, u + h)? - decomp.g_slope(j, u - h)?) / (2.0 * h))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityCertificate {
    /// Every second divided difference of `g` on the grid is `<= 1e-9`.
    pub concave: bool,
    pub worst_second_difference: f64,
    pub worst_coordinate: usize,
    pub worst_at: f64,
    /// `max |g'' + Var(Z)| / max(|g''|, Var(Z))` over the grid, when a
    /// non-atomic lift was supplied.
    pub variance_identity_max_rel_error: Option<f64>,
    pub variance_identity_ok: Option<bool>,
}

/// Concavity screen for `g` on `u_grid`, and, given a lift, the check
/// `g''(u) = -Var(Z | u)`.
pub fn concavity_certificate(decomp: &Decomposition, lift: Option<&[LatentDensity]>, u_grid: &[f64]) -> Result<ConcavityCertificate> {
    validate_grid(u_grid)?;
    let mut cert = ConcavityCertificate {
        concave: true,
        worst_second_difference: f64::NEG_INFINITY,
        worst_coordinate: 0,
        worst_at: u_grid[1],
        variance_identity_max_rel_error: None,
        variance_identity_ok: None,
    };
    for j in 0..decomp.dim() {
        let r = coordinate_concavity(decomp, j, u_grid)?;
        if r.worst_second_difference > cert.worst_second_difference {
            cert.worst_second_difference = r.worst_second_difference;
            cert.worst_coordinate = j;
            cert.worst_at = r.worst_at;
        }
        cert.concave &= r.concave;
    }
    if let Some(lift) = lift {
        check_lift(decomp, lift)?;
        let mut worst: f64 = 0.0;
        for (j, h) in lift.iter().enumerate() {
            for &u in u_grid {
                let g2 = second_derivative_estimate(decomp, j, u)?;
                let var = h.tilted_moments(u)?.variance;
                let scale = g2.abs().max(var.abs());
                let rel = if scale == 0.0 { 0.0 } else { (g2 + var).abs() / scale };
                worst = worst.max(if rel.is_nan() { f64::INFINITY } else { rel });
            }
        }
        cert.variance_identity_max_rel_error = Some(worst);
        cert.variance_identity_ok = Some(worst <= VARIANCE_IDENTITY_TOL);
    }
    Ok(cert)
}

/// Fits grid masses on `z_nodes` so that the grid MGF approximates
/// `exp(-target(u))` on `u_fit` in least squares, subject to nonnegativity and
/// unit total mass.
///
/// Useful for probing whether a penalty admits any lift at all: for a convex
/// `g` the fitted MGF stays far from `exp(-g)` because every MGF is
/// log-convex.
pub fn fit_grid_density<F: Fn(f64) -> f64>(target: F, z_nodes: &[f64], u_fit: &[f64]) -> Result<LatentDensity> {
    if z_nodes.len() < 2 || !strictly_increasing(z_nodes) {
        return Err(Error::arg("fit nodes must be strictly increasing with >= 2 points"));
    }
    if u_fit.is_empty() || u_fit.iter().any(|u| !(*u >= 0.0)) {
        return Err(Error::arg("fit abscissae must be nonnegative"));
    }
    // Rows: exp(u z_k) per fit point, plus a heavily weighted normalization row.
    const NORMALIZATION_WEIGHT: f64 = 1e3;
    let mut rows: Vec<Vec<f64>> = u_fit.iter().map(|&u| z_nodes.iter().map(|&z| (u * z).exp()).collect()).collect();
    let mut rhs: Vec<f64> = u_fit.iter().map(|&u| (-target(u)).exp()).collect();
    rows.push(vec![NORMALIZATION_WEIGHT; z_nodes.len()]);
    rhs.push(NORMALIZATION_WEIGHT);

    let masses = nnls_coordinate_descent(&rows, &rhs, 5_000);
    let total: f64 = masses.iter().sum();
    if !(total > 0.0) {
        return Err(Error::numerical("least-squares fit produced zero mass"));
    }
    let masses = masses.iter().map(|m| m / total).collect();
    Ok(LatentDensity::Grid(GridDensity::from_masses(z_nodes.to_vec(), masses)?))
}

fn nnls_coordinate_descent(rows: &[Vec<f64>], rhs: &[f64], sweeps: usize) -> Vec<f64> {
    let k = rows[0].len();
    let col_sq: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j] * r[j]).sum()).collect();
    let mut x = vec![1.0 / k as f64; k];
    let mut resid: Vec<f64> = rows.iter().zip(rhs).map(|(r, b)| b - r.iter().zip(&x).map(|(a, xi)| a * xi).sum::<f64>()).collect();
    for _ in 0..sweeps {
        let mut moved: f64 = 0.0;
        for j in 0..k {
            if col_sq[j] == 0.0 {
                continue;
            }
            let grad: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
            let new = (x[j] + grad / col_sq[j]).max(0.0);
            let delta = new - x[j];
            if delta != 0.0 {
                for (r, e) in rows.iter().zip(resid.iter_mut()) {
                    *e -= r[j] * delta;
                }
                x[j] = new;
                moved = moved.max(delta.abs());
            }
        }
        if moved < 1e-14 {
            break;
        }
    }
    x
}

/// A penalty together with a latent density family known (or, for the
/// quadratic control, hoped) to represent `exp(-g)`.
#[derive(Debug, Clone)]
pub struct CanonicalLift {
    pub decomposition: Decomposition,
    pub lift: Vec<LatentDensity>,
    pub description: String,
}

/// Scalar lifts used by the `emlift` report:
///
/// - `l1`: `g(u) = λu` with a point mass at `-λ`;
/// - `log`: `g(u) = log(1 + u/λ)` with `Z = -Exponential(λ)`;
/// - `quadratic`: `g(u) = λu²/2` with a least-squares grid fit (no valid lift
///   exists).
///
/// The regression part is a single observation; it cancels from every
/// comparison made here.
pub fn canonical_lift(family: &str, lambda: f64) -> Result<CanonicalLift> {
    use crate::mm_solver::{decompose_uniform, RegressionModel};
    use crate::penalty::PenaltySpec;
    use nalgebra::DMatrix;

    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
    }
    let model = RegressionModel::new(DMatrix::from_element(1, 1, 1.0), DVector::from_element(1, 0.5))?;
    let (penalty, h, description) = match family {
        "l1" => (PenaltySpec::l1(lambda)?, LatentDensity::point_mass(-lambda), format!("point-mass(location={})", crate::format::sig12(-lambda))),
        "log" => (
            PenaltySpec::log_with_scale(1.0, lambda)?,
            LatentDensity::neg_exponential(lambda)?,
            format!("neg-exponential(rate={})", crate::format::sig12(lambda)),
        ),
        "quadratic" => {
            let pen = PenaltySpec::quadratic(lambda)?;
            let z: Vec<f64> = (0..=120).map(|i| -6.0 + 0.1 * i as f64).collect();
            let u: Vec<f64> = (0..=30).map(|i| 0.1 * i as f64).collect();
            let h = fit_grid_density(|t| pen.value_unchecked(t), &z, &u)?;
            (pen, h, "grid-least-squares(nodes=121)".to_string())
        }
        other => return Err(Error::arg(format!("no canonical lift for penalty '{other}' (expected l1, log or quadratic)"))),
    };
    Ok(CanonicalLift { decomposition: decompose_uniform(model, penalty)?, lift: vec![h], description })
}

/// Equivalence checks of a [`CanonicalLift`] aggregated over several anchors.
#[derive(Debug, Clone)]
pub struct CanonicalReport {
    pub description: String,
    /// Worst verdict over the anchors.
    pub verdict: Verdict,
    pub max_constant_deviation: f64,
    pub mgf_max_rel_error: f64,
    pub mean_identity_max_error: f64,
    pub concavity_ok: bool,
    pub certificate: ConcavityCertificate,
}

/// Runs [`verify_mm_em_equivalence`] at every scalar anchor over `theta_grid`
/// and a [`concavity_certificate`] over `u_grid`.
pub fn canonical_report(
    canon: &CanonicalLift,
    anchors: &[f64],
    theta_grid: &[f64],
    u_grid: &[f64],
    opts: EquivalenceOptions,
) -> Result<CanonicalReport> {
    if anchors.is_empty() {
        return Err(Error::arg("at least one anchor is required"));
    }
    let grid: Vec<DVector<f64>> = theta_grid.iter().map(|&t| DVector::from_element(1, t)).collect();
    let mut out = CanonicalReport {
        description: canon.description.clone(),
        verdict: Verdict::EquivalentUpToConstant,
        max_constant_deviation: 0.0,
        mgf_max_rel_error: 0.0,
        mean_identity_max_error: 0.0,
        concavity_ok: true,
        certificate: concavity_certificate(&canon.decomposition, Some(&canon.lift), u_grid)?,
    };
    for &a in anchors {
        let r = verify_mm_em_equivalence(&canon.decomposition, &canon.lift, &DVector::from_element(1, a), &grid, opts)?;
        out.max_constant_deviation = out.max_constant_deviation.max(r.max_constant_deviation);
        out.mgf_max_rel_error = out.mgf_max_rel_error.max(r.mgf_max_rel_error);
        out.mean_identity_max_error = out.mean_identity_max_error.max(r.mean_identity_max_error);
        out.concavity_ok &= r.concavity_ok;
        out.verdict = match (out.verdict, r.verdict) {
            (Verdict::MgfInvalid, _) | (_, Verdict::MgfInvalid) => Verdict::MgfInvalid,
            (Verdict::NotEquivalent, _) | (_, Verdict::NotEquivalent) => Verdict::NotEquivalent,
            _ => Verdict::EquivalentUpToConstant,
        };
    }
    Ok(out)
}
