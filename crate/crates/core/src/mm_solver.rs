//! Majorization-minimization for penalized Gaussian regression.
//!
//! The penalized log-likelihood is split as `L(β) = f(β) - g(|β|)` with
//! `f(β) = -½‖y - Xβ‖²` and `g(u) = Σ_j n_j p_j(u_j)`. Both pieces are
//! concave for the concave penalty families, so linearizing `g` at the
//! current iterate (LLA) gives a minorizer of `L` whose maximizer is a
//! weighted lasso. The quadratic variant (LQA) replaces the linearization by
//! a tangent in `β²`, giving a ridge subproblem.
//!
//! Each outer step maximizes the surrogate from the current anchor, so the
//! objective trace is nondecreasing.

use nalgebra::{DMatrix, DVector};

use crate::numeric::soft_threshold;
use crate::penalty::PenaltySpec;
use crate::{Error, Result};

/// Default perturbation floor for LQA denominators.
pub const DEFAULT_LQA_FLOOR: f64 = 1e-8;

/// Ridge penalty used by the default initializer when `n_obs <= p`.
pub const INIT_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loss {
    GaussianLeastSquares,
}

#[derive(Debug, Clone)]
pub struct RegressionModel {
    x: DMatrix<f64>,
    y: DVector<f64>,
    loss: Loss,
}

impl RegressionModel {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::arg("design matrix must have at least one row and column"));
        }
        if x.nrows() != y.len() {
            return Err(Error::arg(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::arg("design and response must be finite"));
        }
        Ok(RegressionModel { x, y, loss: Loss::GaussianLeastSquares })
    }

    /// Builds a model from row-major data.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::arg("design rows have unequal lengths"));
        }
        let x = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y))
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// `-½‖y - Xβ‖²`.
    pub fn log_likelihood(&self, beta: &DVector<f64>) -> f64 {
        let r = &self.y - &self.x * beta;
        -0.5 * r.norm_squared()
    }

    /// `Xᵀ(y - Xβ)`.
    pub fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        self.x.tr_mul(&(&self.y - &self.x * beta))
    }
}

/// The pair `(f, g)` with `objective(β) = f(β) - g(|β|)`.
#[derive(Debug, Clone)]
pub struct Decomposition {
    model: RegressionModel,
    penalties: Vec<PenaltySpec>,
}

/// Splits the penalized log-likelihood into its concave pieces. One penalty per
/// coefficient.
pub fn decompose(model: RegressionModel, penalties: Vec<PenaltySpec>) -> Result<Decomposition> {
    if penalties.len() != model.p() {
        return Err(Error::arg(format!(
            "{} penalties supplied for {} coefficients",
            penalties.len(),
            model.p()
        )));
    }
    Ok(Decomposition { model, penalties })
}

/// [`decompose`] with the same penalty on every coefficient.
pub fn decompose_uniform(model: RegressionModel, penalty: PenaltySpec) -> Result<Decomposition> {
    let p = model.p();
    decompose(model, vec![penalty; p])
}

impl Decomposition {
    pub fn model(&self) -> &RegressionModel {
        &self.model
    }

    pub fn penalties(&self) -> &[PenaltySpec] {
        &self.penalties
    }

    pub fn dim(&self) -> usize {
        self.penalties.len()
    }

    pub fn f(&self, theta: &DVector<f64>) -> f64 {
        self.model.log_likelihood(theta)
    }

    pub fn grad_f(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.model.gradient(theta)
    }

    /// `g_j(u) = n_j p_j(u)` for one coordinate.
    pub fn g_coordinate(&self, j: usize, u: f64) -> Result<f64> {
        let pen = &self.penalties[j];
        Ok(pen.n() as f64 * pen.value(u)?)
    }

    /// `g'_j(u)`, with the right limit at `u = 0`.
    pub fn g_slope(&self, j: usize, u: f64) -> Result<f64> {
        if !(u >= 0.0) {
            return Err(Error::domain(format!("g' needs u >= 0, got {u}")));
        }
        let pen = &self.penalties[j];
        Ok(pen.n() as f64 * pen.slope(u))
    }

    /// `g(u) = Σ_j g_j(u_j)` on a nonnegative vector.
    pub fn g(&self, u: &DVector<f64>) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::arg("g argument has the wrong length"));
        }
        u.iter().enumerate().map(|(j, &uj)| self.g_coordinate(j, uj)).sum()
    }

    /// `f(β) - g(|β|)`.
    pub fn objective(&self, beta: &DVector<f64>) -> f64 {
        let g: f64 = beta
            .iter()
            .zip(&self.penalties)
            .map(|(b, pen)| pen.n() as f64 * pen.value_unchecked(b.abs()))
            .sum();
        self.f(beta) - g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurrogateKind {
    /// Maximize `f(θ) - Σ w_j |θ_j|`.
    WeightedL1,
    /// Maximize `f(θ) - Σ c_j θ_j²`.
    WeightedRidge,
}

/// A minorizing surrogate `Q(θ | anchor)` reduced to a weighted lasso or ridge
/// problem over the same Gaussian loss.
///
/// `value(θ) - constant_shift` is the surrogate on the scale of the objective,
/// so `value(anchor) = objective(anchor) + constant_shift`.
#[derive(Debug, Clone)]
pub struct SurrogateProblem {
    pub kind: SurrogateKind,
    /// Lasso weights `w_j` or ridge coefficients `c_j`.
    pub weights: DVector<f64>,
    pub anchor: DVector<f64>,
    pub constant_shift: f64,
    /// Coordinates pinned at zero (LQA drop rule only).
    pub pinned_zero: Vec<bool>,
}

impl SurrogateProblem {
    /// `f(θ) - penalty term` without the constant shift.
    pub fn value(&self, decomp: &Decomposition, theta: &DVector<f64>) -> f64 {
        let pen: f64 = match self.kind {
            SurrogateKind::WeightedL1 => {
                self.weights.iter().zip(theta.iter()).map(|(w, t)| w * t.abs()).sum()
            }
            SurrogateKind::WeightedRidge => {
                self.weights.iter().zip(theta.iter()).map(|(c, t)| c * t * t).sum()
            }
        };
        decomp.f(theta) - pen
    }

    fn penalty_at_anchor(&self) -> f64 {
        match self.kind {
            SurrogateKind::WeightedL1 => {
                self.weights.iter().zip(self.anchor.iter()).map(|(w, t)| w * t.abs()).sum()
            }
            SurrogateKind::WeightedRidge => {
                self.weights.iter().zip(self.anchor.iter()).map(|(c, t)| c * t * t).sum()
            }
        }
    }
}

fn check_anchor(decomp: &Decomposition, theta_t: &DVector<f64>) -> Result<()> {
    if theta_t.len() != decomp.dim() {
        return Err(Error::arg(format!(
            "anchor has length {} but the model has {} coefficients",
            theta_t.len(),
            decomp.dim()
        )));
    }
    if theta_t.iter().any(|v| !v.is_finite()) {
        return Err(Error::arg("anchor must be finite"));
    }
    Ok(())
}

/// Local linear approximation at `theta_t`: weights `w_j = n_j p'_j(|θ_t,j|)`,
/// using the right derivative for zero coordinates.
pub fn lla_surrogate(decomp: &Decomposition, theta_t: &DVector<f64>) -> Result<SurrogateProblem> {
    check_anchor(decomp, theta_t)?;
    let weights = DVector::from_iterator(
        decomp.dim(),
        decomp.penalties.iter().zip(theta_t.iter()).map(|(pen, t)| pen.n() as f64 * pen.slope(t.abs())),
    );
    let mut problem = SurrogateProblem {
        kind: SurrogateKind::WeightedL1,
        weights,
        anchor: theta_t.clone(),
        constant_shift: 0.0,
        pinned_zero: vec![false; decomp.dim()],
    };
    let g_anchor = decomp.g(&theta_t.abs())?;
    problem.constant_shift = g_anchor - problem.penalty_at_anchor();
    Ok(problem)
}

/// Local quadratic approximation at `theta_t` with perturbation `floor`:
/// coefficient `n_j p'_j(m) / (2m)` with `m = max(|θ_t,j|, floor)`.
///
/// With `drop_below_floor`, coordinates whose anchor is below the floor are
/// pinned at zero instead of being kept with a large coefficient.
pub fn lqa_surrogate_with(
    decomp: &Decomposition,
    theta_t: &DVector<f64>,
    floor: f64,
    drop_below_floor: bool,
) -> Result<SurrogateProblem> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::arg(format!("LQA floor must be positive, got {floor}")));
    }
    check_anchor(decomp, theta_t)?;
    let mut pinned = vec![false; decomp.dim()];
    let mut weights = DVector::zeros(decomp.dim());
    for (j, (pen, t)) in decomp.penalties.iter().zip(theta_t.iter()).enumerate() {
        let m = t.abs().max(floor);
        weights[j] = pen.n() as f64 * pen.slope(m) / (2.0 * m);
        if drop_below_floor && t.abs() < floor {
            pinned[j] = true;
        }
    }
    let mut problem = SurrogateProblem {
        kind: SurrogateKind::WeightedRidge,
        weights,
        anchor: theta_t.clone(),
        constant_shift: 0.0,
        pinned_zero: pinned,
    };
    let g_anchor = decomp.g(&theta_t.abs())?;
    problem.constant_shift = g_anchor - problem.penalty_at_anchor();
    Ok(problem)
}

pub fn lqa_surrogate(decomp: &Decomposition, theta_t: &DVector<f64>, floor: f64) -> Result<SurrogateProblem> {
    lqa_surrogate_with(decomp, theta_t, floor, false)
}

/// Inner solver settings.
#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    /// Coordinate descent stops once a full sweep moves no coordinate by this much.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { tol: 1e-10, max_sweeps: 100_000 }
    }
}

/// Maximizes the surrogate. Weighted L1 problems use cyclic coordinate descent
/// in ascending index order, warm-started at the anchor; ridge problems are
/// solved exactly.
pub fn solve_surrogate(problem: &SurrogateProblem, model: &RegressionModel, tol: f64) -> Result<DVector<f64>> {
    solve_surrogate_with(problem, model, InnerOptions { tol, ..InnerOptions::default() })
}

pub fn solve_surrogate_with(
    problem: &SurrogateProblem,
    model: &RegressionModel,
    opts: InnerOptions,
) -> Result<DVector<f64>> {
    if problem.weights.len() != model.p() || problem.anchor.len() != model.p() {
        return Err(Error::arg("surrogate and model dimensions differ"));
    }
    if problem.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::arg("surrogate weights must be finite and nonnegative"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::arg("inner tolerance must be positive"));
    }
    match problem.kind {
        SurrogateKind::WeightedL1 => weighted_lasso_cd(model, &problem.weights, &problem.anchor, opts),
        SurrogateKind::WeightedRidge => weighted_ridge(model, &problem.weights, &problem.pinned_zero),
    }
}

fn weighted_lasso_cd(
    model: &RegressionModel,
    weights: &DVector<f64>,
    start: &DVector<f64>,
    opts: InnerOptions,
) -> Result<DVector<f64>> {
    let x = model.x();
    let p = model.p();
    let col_sq: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut beta = start.clone();
    let mut resid = model.y() - x * &beta;
    for _ in 0..opts.max_sweeps {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let old = beta[j];
            let new = if col_sq[j] == 0.0 {
                0.0
            } else {
                let rho = x.column(j).dot(&resid) + col_sq[j] * old;
                soft_threshold(rho, weights[j]) / col_sq[j]
            };
            if new != old {
                resid.axpy(old - new, &x.column(j), 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < opts.tol {
            return Ok(beta);
        }
    }
    Err(Error::numerical(format!(
        "coordinate descent did not reach tolerance {} in {} sweeps",
        opts.tol, opts.max_sweeps
    )))
}

fn weighted_ridge(model: &RegressionModel, coef: &DVector<f64>, pinned: &[bool]) -> Result<DVector<f64>> {
    let free: Vec<usize> = (0..model.p()).filter(|&j| !pinned[j]).collect();
    let mut beta = DVector::zeros(model.p());
    if free.is_empty() {
        return Ok(beta);
    }
    let xf = model.x().select_columns(&free);
    let mut gram = xf.tr_mul(&xf);
    for (k, &j) in free.iter().enumerate() {
        gram[(k, k)] += 2.0 * coef[j];
    }
    let rhs = xf.tr_mul(model.y());
    let sol = solve_spd(gram, &rhs)?;
    for (k, &j) in free.iter().enumerate() {
        beta[j] = sol[k];
    }
    Ok(beta)
}

/// Reciprocal condition estimate below which a system counts as singular.
const RCOND_MIN: f64 = 1e-13;

fn solve_spd(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let singular = |a: &DMatrix<f64>| {
        let sv = a.singular_values();
        let max = sv.max();
        let min = sv.min();
        Error::numerical(format!(
            "singular ridge system (condition number {:.3e})",
            if min > 0.0 { max / min } else { f64::INFINITY }
        ))
    };
    let Some(chol) = a.clone().cholesky() else {
        return Err(singular(&a));
    };
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = (diag.min(), diag.max());
    if !(lo > 0.0) || (lo / hi).powi(2) < RCOND_MIN {
        return Err(singular(&a));
    }
    Ok(chol.solve(b))
}

/// Least squares start: OLS when `n_obs > p`, otherwise ridge with
/// [`INIT_RIDGE`].
pub fn default_initializer(model: &RegressionModel) -> Result<DVector<f64>> {
    let ridge = if model.n_obs() > model.p() { 0.0 } else { INIT_RIDGE };
    ridge_fit(model, ridge)
}

/// `(XᵀX + ridge·I)⁻¹ Xᵀy`.
pub fn ridge_fit(model: &RegressionModel, ridge: f64) -> Result<DVector<f64>> {
    let mut gram = model.x().tr_mul(model.x());
    for j in 0..model.p() {
        gram[(j, j)] += ridge;
    }
    solve_spd(gram, &model.x().tr_mul(model.y()))
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta_hat: DVector<f64>,
    /// Indices of exactly nonzero coefficients, ascending.
    pub support: Vec<usize>,
    /// Objective at the start and after every outer step.
    pub objective_trace: Vec<f64>,
    pub steps_taken: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace is never empty")
    }
}

pub fn support_of(beta: &DVector<f64>) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SurrogateChoice {
    Lla,
    Lqa { floor: f64, drop_below_floor: bool },
}

impl SurrogateChoice {
    pub fn lqa() -> Self {
        SurrogateChoice::Lqa { floor: DEFAULT_LQA_FLOOR, drop_below_floor: false }
    }
}

/// MM driver: repeated surrogate construction and maximization.
#[derive(Debug, Clone, Copy)]
pub struct MmSolver {
    pub surrogate: SurrogateChoice,
    pub inner: InnerOptions,
}

impl Default for MmSolver {
    fn default() -> Self {
        MmSolver { surrogate: SurrogateChoice::Lla, inner: InnerOptions::default() }
    }
}

impl MmSolver {
    pub fn lqa() -> Self {
        MmSolver { surrogate: SurrogateChoice::lqa(), ..Self::default() }
    }

    pub fn step(&self, decomp: &Decomposition, theta: &DVector<f64>) -> Result<DVector<f64>> {
        let problem = match self.surrogate {
            SurrogateChoice::Lla => lla_surrogate(decomp, theta)?,
            SurrogateChoice::Lqa { floor, drop_below_floor } => {
                lqa_surrogate_with(decomp, theta, floor, drop_below_floor)?
            }
        };
        solve_surrogate_with(&problem, decomp.model(), self.inner)
    }

    /// Exactly `k` outer steps. `converged` reports whether the last step moved
    /// every coordinate by less than `tol`.
    pub fn k_step(&self, decomp: &Decomposition, theta0: &DVector<f64>, k: usize, tol: f64) -> Result<FitResult> {
        if k == 0 {
            return Err(Error::arg("k must be at least 1"));
        }
        self.run(decomp, theta0, k, tol, false)
    }

    /// Steps until the largest coordinate change falls below `tol` or
    /// `max_iter` steps have run.
    pub fn iterate(&self, decomp: &Decomposition, theta0: &DVector<f64>, tol: f64, max_iter: usize) -> Result<FitResult> {
        if max_iter == 0 {
            return Err(Error::arg("max_iter must be at least 1"));
        }
        self.run(decomp, theta0, max_iter, tol, true)
    }

    fn run(&self, decomp: &Decomposition, theta0: &DVector<f64>, steps: usize, tol: f64, stop_early: bool) -> Result<FitResult> {
        check_anchor(decomp, theta0)?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(Error::arg(format!("tolerance must be positive, got {tol}")));
        }
        let mut theta = theta0.clone();
        let mut trace = vec![decomp.objective(&theta)];
        let mut converged = false;
        let mut taken = 0;
        while taken < steps {
            let next = self.step(decomp, &theta)?;
            let change = (&next - &theta).amax();
            theta = next;
            taken += 1;
            trace.push(decomp.objective(&theta));
            converged = change < tol;
            if stop_early && converged {
                break;
            }
        }
        Ok(FitResult { support: support_of(&theta), beta_hat: theta, objective_trace: trace, steps_taken: taken, converged })
    }
}

/// `k` LLA steps from `theta0`; `tol` is the inner coordinate-descent tolerance.
pub fn k_step(decomp: &Decomposition, theta0: &DVector<f64>, k: usize, tol: f64) -> Result<FitResult> {
    let solver = MmSolver { inner: InnerOptions { tol: tol.min(InnerOptions::default().tol), ..InnerOptions::default() }, ..MmSolver::default() };
    solver.k_step(decomp, theta0, k, tol)
}

/// Fully iterated LLA.
pub fn iterate(decomp: &Decomposition, theta0: &DVector<f64>, tol: f64, max_iter: usize) -> Result<FitResult> {
    MmSolver::default().iterate(decomp, theta0, tol, max_iter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::DEFAULT_SCAD_A;

    fn scalar_model(x: f64, y: f64) -> RegressionModel {
        RegressionModel::new(DMatrix::from_element(1, 1, x), DVector::from_element(1, y)).unwrap()
    }

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn objective_on_one_observation() {
        let d = decompose_uniform(scalar_model(1.0, 0.0), PenaltySpec::l1(1.0).unwrap()).unwrap();
        assert_eq!(d.objective(&v(&[0.0])), 0.0);
        assert_eq!(d.objective(&v(&[1.0])), -1.5);
        assert_eq!(d.objective(&v(&[-1.0])), -1.5);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let m = scalar_model(1.0, 0.0);
        let pen = PenaltySpec::l1(1.0).unwrap();
        assert!(matches!(decompose(m.clone(), vec![pen, pen]), Err(Error::Argument(_))));
        let d = decompose_uniform(m, pen).unwrap();
        assert!(lla_surrogate(&d, &v(&[0.0, 1.0])).is_err());
        assert!(lla_surrogate(&d, &v(&[f64::NAN])).is_err());
    }

    #[test]
    fn lla_weights() {
        let m = RegressionModel::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 1.0]], &[1.0, 2.0]).unwrap();
        let scad = PenaltySpec::scad(1.0, DEFAULT_SCAD_A).unwrap().with_n(2).unwrap();
        let d = decompose_uniform(m.clone(), scad).unwrap();
        let s = lla_surrogate(&d, &v(&[5.0, 0.0, -0.5])).unwrap();
        assert_eq!(s.weights.as_slice(), &[0.0, 2.0, 2.0]);
        let l1 = decompose_uniform(m, PenaltySpec::l1(0.3).unwrap().with_n(2).unwrap()).unwrap();
        let s = lla_surrogate(&l1, &v(&[5.0, 0.0, -0.5])).unwrap();
        assert!(s.weights.iter().all(|w| (*w - 0.6).abs() < 1e-15));
    }

    #[test]
    fn lqa_coefficients() {
        let d = decompose_uniform(scalar_model(1.0, 2.0), PenaltySpec::l1(1.0).unwrap()).unwrap();
        let s = lqa_surrogate(&d, &v(&[2.0]), 1e-8).unwrap();
        assert_eq!(s.weights[0], 0.25);
        let s = lqa_surrogate(&d, &v(&[0.0]), 1e-8).unwrap();
        assert!(s.weights[0].is_finite());
        assert!((s.weights[0] - 0.5e8).abs() < 1e-3);
        assert!(lqa_surrogate(&d, &v(&[1.0]), 0.0).is_err());
        assert!(lqa_surrogate(&d, &v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn lqa_scalar_step_shrinks_strictly() {
        let d = decompose_uniform(scalar_model(1.0, 2.0), PenaltySpec::l1(0.5).unwrap()).unwrap();
        let s = lqa_surrogate(&d, &v(&[2.0]), DEFAULT_LQA_FLOOR).unwrap();
        let b = solve_surrogate(&s, d.model(), 1e-12).unwrap()[0];
        // z / (1 + 2c) with c = 0.5 / 4
        assert!((b - 2.0 / 1.25).abs() < 1e-14);
        assert!(b > 0.0 && b < 2.0);
    }

    #[test]
    fn lqa_drop_rule_pins_small_coordinates() {
        let m = RegressionModel::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[2.0, 0.1]).unwrap();
        let d = decompose_uniform(m, PenaltySpec::l1(0.5).unwrap()).unwrap();
        let s = lqa_surrogate_with(&d, &v(&[2.0, 0.0]), 1e-8, true).unwrap();
        let b = solve_surrogate(&s, d.model(), 1e-12).unwrap();
        assert_eq!(b[1], 0.0);
        assert!(b[0] > 0.0);
    }

    #[test]
    fn scalar_lasso_matches_closed_form() {
        for (z, w, expected) in [(2.0, 0.5, 1.5), (0.3, 0.5, 0.0), (-2.0, 0.5, -1.5), (0.5, 0.5, 0.0)] {
            let m = scalar_model(1.0, z);
            let problem = SurrogateProblem {
                kind: SurrogateKind::WeightedL1,
                weights: v(&[w]),
                anchor: v(&[0.0]),
                constant_shift: 0.0,
                pinned_zero: vec![false],
            };
            assert_eq!(solve_surrogate(&problem, &m, 1e-12).unwrap()[0], expected);
        }
    }

    #[test]
    fn zero_weights_give_least_squares() {
        let m = RegressionModel::from_rows(
            &[vec![1.0, 0.5], vec![0.2, 1.0], vec![1.0, 1.0], vec![-0.3, 2.0]],
            &[1.0, 2.0, 2.5, 3.0],
        )
        .unwrap();
        let problem = SurrogateProblem {
            kind: SurrogateKind::WeightedL1,
            weights: DVector::zeros(2),
            anchor: DVector::zeros(2),
            constant_shift: 0.0,
            pinned_zero: vec![false; 2],
        };
        let b = solve_surrogate(&problem, &m, 1e-13).unwrap();
        let ols = ridge_fit(&m, 0.0).unwrap();
        assert!((b - ols).amax() < 1e-9);
    }

    #[test]
    fn singular_ridge_reports_condition() {
        let m = RegressionModel::from_rows(&[vec![1.0, 1.0]], &[1.0]).unwrap();
        let problem = SurrogateProblem {
            kind: SurrogateKind::WeightedRidge,
            weights: DVector::zeros(2),
            anchor: DVector::zeros(2),
            constant_shift: 0.0,
            pinned_zero: vec![false; 2],
        };
        let err = solve_surrogate(&problem, &m, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Numerical(ref s) if s.contains("condition number")), "{err}");
    }

    #[test]
    fn default_initializer_handles_wide_designs() {
        let m = RegressionModel::from_rows(&[vec![1.0, 1.0, 0.0]], &[1.0]).unwrap();
        let b = default_initializer(&m).unwrap();
        assert!(b.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn l1_iterate_stops_after_two_steps() {
        let m = RegressionModel::from_rows(
            &[vec![1.0, 0.5], vec![0.2, 1.0], vec![1.0, 1.0], vec![-0.3, 2.0]],
            &[1.0, 2.0, 2.5, 3.0],
        )
        .unwrap();
        let d = decompose_uniform(m.clone(), PenaltySpec::l1(0.4).unwrap().with_n(4).unwrap()).unwrap();
        let init = default_initializer(&m).unwrap();
        let fit = iterate(&d, &init, 1e-8, 50).unwrap();
        assert!(fit.converged);
        assert!(fit.steps_taken <= 2);
        let one = k_step(&d, &init, 1, 1e-12).unwrap();
        let two = k_step(&d, &init, 2, 1e-12).unwrap();
        assert!((one.beta_hat - two.beta_hat).amax() < 1e-10);
    }

    #[test]
    fn infinite_tolerance_is_one_step() {
        let m = RegressionModel::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0], vec![1.0, 1.0]], &[1.0, 0.1, 2.0]).unwrap();
        let d = decompose_uniform(m.clone(), PenaltySpec::scad(0.6, 3.7).unwrap().with_n(3).unwrap()).unwrap();
        let init = default_initializer(&m).unwrap();
        let it = iterate(&d, &init, f64::INFINITY, 100).unwrap();
        let ks = MmSolver::default().k_step(&d, &init, 1, 1e-8).unwrap();
        assert_eq!(it.steps_taken, 1);
        assert_eq!(it.beta_hat, ks.beta_hat);
        assert_eq!(it.objective_trace.len(), 2);
    }

    #[test]
    fn k_step_trace_length() {
        let m = RegressionModel::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0], vec![1.0, 1.0]], &[1.0, 0.1, 2.0]).unwrap();
        let d = decompose_uniform(m.clone(), PenaltySpec::scad(0.6, 3.7).unwrap().with_n(3).unwrap()).unwrap();
        let init = default_initializer(&m).unwrap();
        let fit = k_step(&d, &init, 4, 1e-10).unwrap();
        assert_eq!(fit.steps_taken, 4);
        assert_eq!(fit.objective_trace.len(), 5);
        assert_eq!(fit.objective_trace[0], d.objective(&init));
        assert!(k_step(&d, &init, 0, 1e-10).is_err());
    }
}
