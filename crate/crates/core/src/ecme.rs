//! Expectation/conditional-maximization MLFA solver.
//!
//! Each iteration performs three closed-form steps: the loadings update
//! minimizes the actual objective at the current noise estimate (the same
//! whitened principal-subspace kernel the alternating solver uses), the
//! expectation step forms the conditional second moment of the noise given
//! the data, and the noise update takes its diagonal. Both conditional steps
//! never increase the objective, so convergence is monotone.

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::faan::{
    loadings_from_subspace, principal_subspace_update, validate_solver_inputs, whiten, SolverTrace,
    StopRule, StopTracker,
};
use crate::model::SampleCovariance;
use crate::numerics::{hermitian_eig, pd_inverse, ComplexMatrix, HermitianMatrix};
use crate::objective::{negative_llf, FactorEstimate};
use crate::{Error, Result};

/// Conditional moments of the noise given the data at the current parameters
/// `(S, Q)`: with `C = S·Sᴴ + Q`,
///
/// * `delta = C⁻¹·Q` (its adjoint maps a snapshot to the conditional noise mean),
/// * `cond_cov = Q − Q·delta`, the per-snapshot conditional noise covariance,
/// * `noise_cov = deltaᴴ·R̂·delta + cond_cov`, the expected noise sample covariance.
#[derive(Debug, Clone)]
pub struct EStepResult {
    pub delta: ComplexMatrix,
    pub cond_cov: HermitianMatrix,
    pub noise_cov: HermitianMatrix,
}

/// Loadings update at fixed noise: `S = Q^{1/2}·U·Λ^{1/2}` from the whitened
/// principal subspace, the global minimizer of the objective over `S`.
pub fn cm_step1(
    rhat: &SampleCovariance,
    noise_vars: &[f64],
    factor_count: usize,
) -> Result<ComplexMatrix> {
    let whitened = whiten(rhat, noise_vars)?;
    let sub = principal_subspace_update(&whitened, factor_count)?;
    Ok(loadings_from_subspace(&sub, noise_vars))
}

/// Expectation step. `C⁻¹` is computed by direct positive-definite inversion;
/// the low-rank inversion identity is deliberately avoided for accuracy.
///
/// The result is checked on construction: `cond_cov` must be positive
/// semi-definite and `noise_cov` positive definite.
pub fn e_step(
    rhat: &SampleCovariance,
    loadings: &ComplexMatrix,
    noise_vars: &[f64],
) -> Result<EStepResult> {
    let n = rhat.order();
    if loadings.nrows() != n || noise_vars.len() != n {
        return Err(Error::InvalidInput(
            "expectation step dimension mismatch".into(),
        ));
    }
    let q = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        noise_vars.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    let c = HermitianMatrix::from_dense(&(loadings * loadings.adjoint() + &q));
    let c_inv = pd_inverse(&c)?;

    let delta = c_inv.as_matrix() * &q;
    let cond_cov = HermitianMatrix::from_dense(&(&q - &q * &delta));
    let noise_cov =
        HermitianMatrix::from_dense(&(delta.adjoint() * rhat.matrix().as_matrix() * &delta
            + cond_cov.as_matrix()));

    // Rounding in the inversion is absolute at the scale of Q and C, so the
    // semi-definiteness tolerances are anchored there even when the moments
    // themselves shrink toward zero near convergence.
    let q_trace: f64 = noise_vars.iter().sum();
    let cond_eigs = hermitian_eig(&cond_cov)?;
    let cond_min = *cond_eigs.values.last().expect("non-empty");
    if cond_min < -1e-10 * cond_cov.trace().max(q_trace) {
        return Err(Error::Internal(format!(
            "conditional noise covariance lost semi-definiteness (eigenvalue {cond_min:.3e})"
        )));
    }
    let noise_eigs = hermitian_eig(&noise_cov)?;
    let noise_min = *noise_eigs.values.last().expect("non-empty");
    if noise_min <= -1e-10 * noise_cov.trace().max(q_trace) {
        return Err(Error::Internal(format!(
            "expected noise covariance lost definiteness (eigenvalue {noise_min:.3e})"
        )));
    }

    Ok(EStepResult {
        delta,
        cond_cov,
        noise_cov,
    })
}

/// Noise update: the diagonal of the expected noise sample covariance, the
/// separable minimizer of the expected complete-data objective.
pub fn cm_step2(e: &EStepResult) -> Result<Vec<f64>> {
    let vars = e.noise_cov.real_diagonal();
    if vars.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Internal(
            "expected noise covariance produced a nonpositive diagonal".into(),
        ));
    }
    Ok(vars)
}

/// Runs the conditional-maximization solver for `iterations` iterations from
/// the noise variances `q0`. The trace records the objective at `(S^(k), Q^(k))`
/// after each iteration.
pub fn ecme_solve(
    rhat: &SampleCovariance,
    factor_count: usize,
    q0: &[f64],
    iterations: usize,
    stop: Option<StopRule>,
) -> Result<(FactorEstimate, SolverTrace)> {
    validate_solver_inputs(rhat, factor_count, q0)?;
    if iterations == 0 {
        return Err(Error::InvalidInput(
            "iteration budget must be at least 1".into(),
        ));
    }

    let mut vars = q0.to_vec();
    let mut trace = SolverTrace::new();
    let mut tracker = StopTracker::new(stop);
    let mut best: Option<FactorEstimate> = None;

    for _ in 0..iterations {
        let tick = Instant::now();
        let loadings = cm_step1(rhat, &vars, factor_count)?;
        let moments = e_step(rhat, &loadings, &vars)?;
        vars = cm_step2(&moments)?;
        let estimate = FactorEstimate::new(loadings, vars.clone())?;
        let objective = negative_llf(&estimate, rhat)?;
        trace.push(objective, tick.elapsed().as_secs_f64());
        best = Some(estimate);
        if tracker.should_stop(objective) {
            break;
        }
    }

    Ok((best.expect("at least one iteration"), trace))
}
