//! The difference-of-convex outer loop.
//!
//! The full objective
//!
//! ```text
//! F(X) = lambda (Tr(X) - ||X||_F) + mu ||X||_1 + 1/2 ||A(X) - b||_2^2
//! ```
//!
//! is convex except for `-lambda ||X||_F`. Each outer iteration linearizes
//! that term at the current iterate (Y = X / ||X||_F, or 0 at X = 0) and
//! solves the convex subproblem
//!
//! ```text
//! X_{k+1} = argmin_{X >= 0} 1/2 ||A(X) - b||^2 + <X, lambda (I - Y)> + mu ||X||_1
//! ```
//!
//! with the consensus ADMM of [`crate::admm`]. Exact subproblem solves make
//! `F(X_k)` monotonically decreasing; inner inexactness is budgeted by the
//! callers' slack.

use faer::Col;

use crate::admm::{AdmmConfig, AdmmSolver};
use crate::error::{LiftoffError, Result};
use crate::hermitian::{ComplexVector, HermitianMatrix};
use crate::measurement::MeasurementEnsemble;

/// Eigengap below which a solution matrix is certified numerically rank one.
pub const RANK_ONE_GAP_THRESHOLD: f64 = 1e-3;

/// Outer-loop parameters.
#[derive(Debug, Clone)]
pub struct DcaConfig {
    /// Weight of the rank-one surrogate Tr(X) - ||X||_F.
    pub lambda: f64,
    /// Weight of the entrywise l1 sparsity penalty.
    pub mu: f64,
    /// Stop when ||X_k - X_{k-1}||_F / max(||X_k||_F, 1) <= tol.
    pub tol: f64,
    pub max_iters: usize,
    pub admm: AdmmConfig,
    /// Start each subproblem from the previous ADMM state instead of zeros
    /// (the first subproblem always starts cold).
    pub warm_start: bool,
}

impl DcaConfig {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Self {
            lambda,
            mu,
            tol: 1e-6,
            max_iters: 100,
            admm: AdmmConfig::default(),
            warm_start: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.mu >= 0.0) {
            return Err(LiftoffError::InvalidConfig(format!(
                "lambda and mu must be >= 0, got lambda={}, mu={}",
                self.lambda, self.mu
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(LiftoffError::InvalidConfig(format!("tol must be >= 0, got {}", self.tol)));
        }
        if self.max_iters < 1 {
            return Err(LiftoffError::InvalidConfig("dca max_iters must be >= 1".into()));
        }
        self.admm.validate()
    }
}

impl Default for DcaConfig {
    fn default() -> Self {
        let (lambda, mu) = default_parameters(1, 0.0);
        Self::new(lambda, mu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIters,
    Diverged,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Converged => write!(f, "converged"),
            SolveStatus::MaxIters => write!(f, "max_iters"),
            SolveStatus::Diverged => write!(f, "diverged"),
        }
    }
}

/// Final iterate, extracted signal and the per-iteration objective trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x_final: HermitianMatrix,
    /// sqrt(lambda_1) u_1 of the final iterate, phase-normalized.
    pub x_extracted: ComplexVector,
    /// lambda_2 / lambda_1 of the final iterate; near 0 certifies rank one.
    pub eigengap: f64,
    /// F(X_0), F(X_1), ... including the starting value at X_0 = 0.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    pub status: SolveStatus,
}

/// Per-outer-iteration diagnostics for the optional trace callback.
#[derive(Debug, Clone, Copy)]
pub struct DcaTraceRow {
    pub outer_iter: usize,
    pub objective: f64,
    pub step_norm: f64,
    pub eigengap: f64,
}

/// The full nonconvex objective F(X).
pub fn objective(
    ens: &MeasurementEnsemble,
    b: &Col<f64>,
    lambda: f64,
    mu: f64,
    x: &HermitianMatrix,
) -> f64 {
    let norms = x.norms();
    let fwd = ens.forward_apply(x).expect("dimension checked by caller");
    let mut fit = 0.0;
    for i in 0..ens.m() {
        let r = fwd[i] - b[i];
        fit += r * r;
    }
    lambda * (norms.trace - norms.frobenius) + mu * norms.entrywise_l1 + 0.5 * fit
}

/// The linearization point Y = X / ||X||_F of the concave term, with the
/// zero-matrix case split.
pub fn dc_linearization(x: &HermitianMatrix) -> HermitianMatrix {
    let norm = x.frobenius_norm();
    if norm > 0.0 {
        x.scale(1.0 / norm)
    } else {
        HermitianMatrix::zeros(x.dim())
    }
}

/// Experiment parameter rule: mu = max(0.5 ||w||_2, 0.001) and
/// lambda = mu k / (sqrt(2) - 1).
pub fn default_parameters(k: usize, noise_norm: f64) -> (f64, f64) {
    assert!(k >= 1, "sparsity k must be >= 1");
    assert!(noise_norm >= 0.0, "noise norm must be >= 0");
    let mu = (0.5 * noise_norm).max(0.001);
    let lambda = mu * k as f64 / (std::f64::consts::SQRT_2 - 1.0);
    (lambda, mu)
}

/// The rank-one sufficiency bound on lambda,
/// `(mu d + ||A|| (sqrt(2 mu) ||x0||_1 + ||w||_2)) / (sqrt(2) - 1)`.
///
/// A reporting utility only: the experiments run far below it, and the solver
/// does not enforce it.
pub fn lemma_lambda_bound(mu: f64, x0_l1: f64, noise_norm: f64, opnorm: f64, d: usize) -> f64 {
    assert!(mu >= 0.0 && x0_l1 >= 0.0 && noise_norm >= 0.0 && opnorm >= 0.0);
    (mu * d as f64 + opnorm * ((2.0 * mu).sqrt() * x0_l1 + noise_norm))
        / (std::f64::consts::SQRT_2 - 1.0)
}

/// Numerical rank-one certification of a PSD matrix via its eigengap.
pub fn rank_one_certificate(x: &HermitianMatrix) -> Result<(bool, f64)> {
    let eig = x.eigh()?;
    let d = x.dim();
    let top = eig.values[d - 1];
    let gap = if top > 0.0 {
        let second = if d >= 2 { eig.values[d - 2].max(0.0) } else { 0.0 };
        second / top
    } else {
        0.0
    };
    Ok((gap < RANK_ONE_GAP_THRESHOLD, gap))
}

/// Runs the outer loop from X_0 = 0.
pub fn dca_run(ens: &MeasurementEnsemble, b: &Col<f64>, cfg: &DcaConfig) -> Result<SolveResult> {
    dca_run_with_trace(ens, b, cfg, None)
}

/// [`dca_run`] with a per-outer-iteration trace callback (the callback cost
/// includes one extra eigendecomposition per outer iteration).
pub fn dca_run_with_trace(
    ens: &MeasurementEnsemble,
    b: &Col<f64>,
    cfg: &DcaConfig,
    mut trace: Option<&mut dyn FnMut(&DcaTraceRow)>,
) -> Result<SolveResult> {
    cfg.validate()?;
    if b.nrows() != ens.m() {
        return Err(LiftoffError::DimensionMismatch {
            context: format!("b has length {}, ensemble m={}", b.nrows(), ens.m()),
        });
    }
    let d = ens.d();
    let identity = HermitianMatrix::identity(d);
    let mut x = HermitianMatrix::zeros(d);
    let mut objective_trace = vec![objective(ens, b, cfg.lambda, cfg.mu, &x)];
    let mut admm = AdmmSolver::new(ens, cfg.admm.clone());
    let mut status = SolveStatus::MaxIters;
    let mut outer_iters = 0;
    let mut total_inner_iters = 0;

    for k in 1..=cfg.max_iters {
        let y = dc_linearization(&x);
        let w = HermitianMatrix::lincomb(&[(cfg.lambda, &identity), (-cfg.lambda, &y)]);
        if !cfg.warm_start {
            admm.reset();
        }
        let solve = admm.solve(b, &w, cfg.mu);
        let (x_new, inner_state) = match solve {
            Ok(pair) => pair,
            Err(LiftoffError::Diverged { .. }) => {
                status = SolveStatus::Diverged;
                outer_iters = k;
                break;
            }
            Err(other) => return Err(other),
        };
        total_inner_iters += inner_state.iter;
        outer_iters = k;

        let f_new = objective(ens, b, cfg.lambda, cfg.mu, &x_new);
        objective_trace.push(f_new);
        let step_norm =
            HermitianMatrix::diff_frobenius(&x_new, &x) / x_new.frobenius_norm().max(1.0);
        x = x_new;

        if !f_new.is_finite() {
            status = SolveStatus::Diverged;
            break;
        }
        if let Some(cb) = trace.as_deref_mut() {
            let (_, gap) = rank_one_certificate(&x)?;
            cb(&DcaTraceRow {
                outer_iter: k,
                objective: f_new,
                step_norm,
                eigengap: gap,
            });
        }
        if step_norm <= cfg.tol {
            status = SolveStatus::Converged;
            break;
        }
    }

    let (x_extracted, eigengap) = if status == SolveStatus::Diverged || !x.is_finite() {
        (Col::zeros(d), 1.0)
    } else {
        x.rank_one_extract()?
    };
    Ok(SolveResult {
        x_final: x,
        x_extracted,
        eigengap,
        objective_trace,
        outer_iters,
        total_inner_iters,
        status,
    })
}
