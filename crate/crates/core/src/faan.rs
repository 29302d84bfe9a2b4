//! Alternating-minimization MLFA solver: each outer iteration performs a
//! closed-form whitened principal-subspace update followed by cyclic
//! coordinate updates of the noise standard deviations.
//!
//! With `C` reparametrized as `Q^{1/2}(U·Λ·Uᴴ + I)Q^{1/2}`, the subspace step
//! globally minimizes the objective over `(U, Λ)` at fixed `Q`, and each
//! sweep coordinate update is the exact scalar minimizer at fixed `(U, Λ)`,
//! so the objective never increases.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::model::SampleCovariance;
use crate::numerics::{hermitian_eig, pd_inverse, ComplexMatrix, HermitianMatrix};
use crate::objective::{negative_llf, FactorEstimate};
use crate::{Error, Result};

/// Result of the whitened principal-subspace step: `M` orthonormal basis
/// columns, the shrunk diagonal `Λ_mm = (λ_m − 1)₊`, and the full whitened
/// spectrum for diagnostics.
#[derive(Debug, Clone)]
pub struct SubspaceUpdate {
    /// `N×M`, orthonormal columns (principal whitened eigenvectors).
    pub basis: ComplexMatrix,
    /// `M` nonnegative entries, sorted descending.
    pub lambda: Vec<f64>,
    /// All `N` eigenvalues of the whitened covariance, sorted descending.
    pub eigenvalues: Vec<f64>,
}

/// Per-iteration objective values and timings of one solver run.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    /// Objective value after each completed outer iteration.
    pub objectives: Vec<f64>,
    /// Wall time of each outer iteration, in seconds.
    pub iteration_seconds: Vec<f64>,
}

impl SolverTrace {
    pub fn iterations_run(&self) -> usize {
        self.objectives.len()
    }

    pub(crate) fn new() -> Self {
        Self {
            objectives: Vec::new(),
            iteration_seconds: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, objective: f64, seconds: f64) {
        self.objectives.push(objective);
        self.iteration_seconds.push(seconds);
    }
}

/// Optional early-stopping rule: stop once `|Δ objective|` stays below
/// `tolerance` for `consecutive` iterations in a row. Solvers run their full
/// iteration budget when no rule is given.
#[derive(Debug, Clone, Copy)]
pub struct StopRule {
    pub tolerance: f64,
    pub consecutive: usize,
}

impl StopRule {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            consecutive: 3,
        }
    }
}

pub(crate) struct StopTracker {
    rule: Option<StopRule>,
    last: Option<f64>,
    streak: usize,
}

impl StopTracker {
    pub(crate) fn new(rule: Option<StopRule>) -> Self {
        Self {
            rule,
            last: None,
            streak: 0,
        }
    }

    /// Records an objective value and reports whether the rule fires.
    pub(crate) fn should_stop(&mut self, objective: f64) -> bool {
        let Some(rule) = self.rule else {
            return false;
        };
        if let Some(last) = self.last {
            if (objective - last).abs() < rule.tolerance {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
        }
        self.last = Some(objective);
        self.streak >= rule.consecutive
    }
}

/// Whitened covariance `R̃` with entries `R̂_{ij}/(σ_i·σ_j)`.
pub fn whiten(rhat: &SampleCovariance, noise_vars: &[f64]) -> Result<HermitianMatrix> {
    if noise_vars.len() != rhat.order() {
        return Err(Error::InvalidInput(format!(
            "expected {} noise variances, got {}",
            rhat.order(),
            noise_vars.len()
        )));
    }
    if noise_vars.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(
            "whitening requires positive finite noise variances".into(),
        ));
    }
    // sqrt(q_i·q_j) rather than sqrt(q_i)·sqrt(q_j): the diagonal of the
    // whitened matrix is then exactly 1 whenever R̂ is exactly diagonal, so a
    // no-signal input shrinks to Λ = 0 without rounding residue.
    Ok(HermitianMatrix::from_fn_lower(rhat.order(), |i, j| {
        rhat.matrix().entry(i, j) / (noise_vars[i] * noise_vars[j]).sqrt()
    }))
}

/// Principal-subspace step: the top-`M` eigenpairs of the whitened covariance
/// with eigenvalues shrunk by one and clamped at zero. This pair is the
/// global minimizer of the subspace subproblem at the current noise estimate.
pub fn principal_subspace_update(
    whitened: &HermitianMatrix,
    factor_count: usize,
) -> Result<SubspaceUpdate> {
    let n = whitened.order();
    if factor_count == 0 || factor_count >= n {
        return Err(Error::InvalidInput(format!(
            "need 0 < factor count < order, got M={factor_count}, N={n}"
        )));
    }
    let eig = hermitian_eig(whitened)?;
    let basis = eig.vectors.columns(0, factor_count).into_owned();
    let lambda: Vec<f64> = eig.values[..factor_count]
        .iter()
        .map(|&l| (l - 1.0).max(0.0))
        .collect();
    Ok(SubspaceUpdate {
        basis,
        lambda,
        eigenvalues: eig.values,
    })
}

/// `Γ = (U·Λ·Uᴴ + I)⁻¹` by direct positive-definite inversion. The low-rank
/// inversion identity is deliberately not used; it loses accuracy once Λ has
/// small entries.
pub fn gamma_matrix(sub: &SubspaceUpdate) -> Result<HermitianMatrix> {
    let n = sub.basis.nrows();
    let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        sub.lambda.len(),
        sub.lambda.iter().map(|&l| Complex64::new(l, 0.0)),
    ));
    let inner = &sub.basis * lam * sub.basis.adjoint() + ComplexMatrix::identity(n, n);
    pd_inverse(&HermitianMatrix::from_dense(&inner))
}

/// One full cyclic pass of the noise-deviation updates, ascending sensor
/// order, each update consuming the freshly updated values before it
/// (Gauss–Seidel). Every update is the exact positive root of the scalar
/// optimality condition `σ² − b·σ − c = 0` in its coordinate.
pub fn sigma_sweep(
    rhat: &SampleCovariance,
    gamma: &HermitianMatrix,
    sigmas: &[f64],
) -> Result<Vec<f64>> {
    let n = rhat.order();
    if gamma.order() != n || sigmas.len() != n {
        return Err(Error::InvalidInput(
            "sigma sweep dimension mismatch".into(),
        ));
    }
    let mut out = sigmas.to_vec();
    for sensor in 0..n {
        // c_n = R̂_nn·Γ_nn, b_n = Σ_{i≠n} Re{R̂_{i,n}·Γ_{n,i}}/σ_i: the σ_n
        // coefficients of tr(Q^{-1/2}·R̂·Q^{-1/2}·Γ).
        let c = rhat.matrix().entry(sensor, sensor).re * gamma.entry(sensor, sensor).re;
        if c <= 0.0 {
            return Err(Error::Internal(format!(
                "nonpositive quadratic coefficient c_{sensor} = {c:.3e} in sigma sweep"
            )));
        }
        let mut b = 0.0;
        for i in 0..n {
            if i != sensor {
                b += (rhat.matrix().entry(i, sensor) * gamma.entry(sensor, i)).re / out[i];
            }
        }
        out[sensor] = 0.5 * (b + (b * b + 4.0 * c).sqrt());
    }
    Ok(out)
}

/// Loadings `S = Q^{1/2}·U·Λ^{1/2}` from a subspace update and the current
/// noise variances.
pub(crate) fn loadings_from_subspace(sub: &SubspaceUpdate, noise_vars: &[f64]) -> ComplexMatrix {
    let (n, m) = (sub.basis.nrows(), sub.basis.ncols());
    ComplexMatrix::from_fn(n, m, |i, j| {
        sub.basis[(i, j)] * (noise_vars[i].sqrt() * sub.lambda[j].sqrt())
    })
}

pub(crate) fn validate_solver_inputs(
    rhat: &SampleCovariance,
    factor_count: usize,
    initial_noise_vars: &[f64],
) -> Result<()> {
    if !rhat.is_positive_definite() {
        return Err(Error::NotPositiveDefinite {
            smallest: rhat.min_eigenvalue(),
        });
    }
    if factor_count == 0 || factor_count >= rhat.order() {
        return Err(Error::InvalidInput(format!(
            "need 0 < factor count < order, got M={factor_count}, N={}",
            rhat.order()
        )));
    }
    if initial_noise_vars.len() != rhat.order() {
        return Err(Error::InvalidInput(format!(
            "expected {} initial noise variances, got {}",
            rhat.order(),
            initial_noise_vars.len()
        )));
    }
    if initial_noise_vars
        .iter()
        .any(|&v| !(v > 0.0) || !v.is_finite())
    {
        return Err(Error::InvalidInput(
            "initial noise variances must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Runs the alternating solver for `outer_iterations` iterations of
/// `inner_sweeps` noise sweeps each, starting from the noise variances `q0`.
///
/// Returns the final estimate `(S, Q)` with `S = Q^{1/2}·U·Λ^{1/2}` and a
/// trace holding the objective after every outer iteration.
pub fn faan_solve(
    rhat: &SampleCovariance,
    factor_count: usize,
    q0: &[f64],
    outer_iterations: usize,
    inner_sweeps: usize,
    stop: Option<StopRule>,
) -> Result<(FactorEstimate, SolverTrace)> {
    validate_solver_inputs(rhat, factor_count, q0)?;
    if outer_iterations == 0 {
        return Err(Error::InvalidInput(
            "outer iteration budget must be at least 1".into(),
        ));
    }
    if inner_sweeps == 0 {
        return Err(Error::InvalidInput(
            "inner sweep budget must be at least 1".into(),
        ));
    }

    let mut sigmas: Vec<f64> = q0.iter().map(|&v| v.sqrt()).collect();
    let mut trace = SolverTrace::new();
    let mut tracker = StopTracker::new(stop);
    let mut best: Option<FactorEstimate> = None;

    for _ in 0..outer_iterations {
        let tick = Instant::now();
        let vars: Vec<f64> = sigmas.iter().map(|&s| s * s).collect();
        let whitened = whiten(rhat, &vars)?;
        let sub = principal_subspace_update(&whitened, factor_count)?;
        let gamma = gamma_matrix(&sub)?;
        for _ in 0..inner_sweeps {
            sigmas = sigma_sweep(rhat, &gamma, &sigmas)?;
        }
        let vars: Vec<f64> = sigmas.iter().map(|&s| s * s).collect();
        let estimate = FactorEstimate::new(loadings_from_subspace(&sub, &vars), vars)?;
        let objective = negative_llf(&estimate, rhat)?;
        trace.push(objective, tick.elapsed().as_secs_f64());
        best = Some(estimate);
        if tracker.should_stop(objective) {
            break;
        }
    }

    Ok((best.expect("at least one iteration"), trace))
}
