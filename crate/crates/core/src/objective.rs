//! The shared negative log-likelihood objective
//! `f(S, Q) = ln det C + tr(R̂ C⁻¹)` with `C = S·Sᴴ + Q`, plus a
//! finite-difference stationarity probe used to verify solver limits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::model::SampleCovariance;
use crate::numerics::{hermitian_eig, ComplexMatrix, HermitianMatrix};
use crate::{Error, Result};

/// A factor-model parameter point: `N×M` complex loadings and the positive
/// diagonal of the noise covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorEstimate {
    loadings: ComplexMatrix,
    noise_vars: Vec<f64>,
}

impl FactorEstimate {
    pub fn new(loadings: ComplexMatrix, noise_vars: Vec<f64>) -> Result<Self> {
        if loadings.nrows() != noise_vars.len() {
            return Err(Error::InvalidInput(format!(
                "loadings have {} rows but {} noise variances were given",
                loadings.nrows(),
                noise_vars.len()
            )));
        }
        if loadings.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("loadings must be finite".into()));
        }
        if noise_vars.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "noise variances must be positive and finite".into(),
            ));
        }
        Ok(Self {
            loadings,
            noise_vars,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.loadings.nrows()
    }

    pub fn factor_count(&self) -> usize {
        self.loadings.ncols()
    }

    pub fn loadings(&self) -> &ComplexMatrix {
        &self.loadings
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }
}

/// `C = S·Sᴴ + Q`; positive definite because `Q ≻ 0`.
pub fn assemble_covariance(est: &FactorEstimate) -> HermitianMatrix {
    let ss = &est.loadings * est.loadings.adjoint();
    let q = DMatrix::from_diagonal(&DVector::from_iterator(
        est.noise_vars.len(),
        est.noise_vars.iter().map(|&v| Complex64::new(v, 0.0)),
    ));
    HermitianMatrix::from_dense(&(ss + q))
}

/// `ln det C + tr(R̂ C⁻¹)`, evaluated through the Hermitian eigendecomposition
/// of `C` so the log-determinant is a sum of log-eigenvalues and cannot
/// overflow.
pub fn negative_llf(est: &FactorEstimate, rhat: &SampleCovariance) -> Result<f64> {
    if rhat.order() != est.sensor_count() {
        return Err(Error::InvalidInput(format!(
            "estimate order {} does not match covariance order {}",
            est.sensor_count(),
            rhat.order()
        )));
    }
    if !rhat.is_positive_definite() {
        return Err(Error::NotPositiveDefinite {
            smallest: rhat.min_eigenvalue(),
        });
    }
    let c = assemble_covariance(est);
    let eig = hermitian_eig(&c)?;
    let min = *eig.values.last().expect("non-empty");
    if min <= 0.0 {
        // Unreachable for valid estimates (Q ≻ 0 forces C ≻ 0).
        return Err(Error::Internal(format!(
            "assembled covariance lost positive definiteness (eigenvalue {min:.3e})"
        )));
    }
    let log_det: f64 = eig.values.iter().map(|&l| l.ln()).sum();
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| Complex64::new(1.0 / l, 0.0)),
    ));
    let c_inv = &eig.vectors * inv_diag * eig.vectors.adjoint();
    let trace = (rhat.matrix().as_matrix() * c_inv).trace();
    Ok(log_det + trace.re)
}

/// Central finite-difference gradient of the objective over the real
/// parametrization (Re/Im of each loading entry, each noise variance).
#[derive(Debug, Clone)]
pub struct ObjectiveGradient {
    /// One entry per loading coefficient, gradient w.r.t. its real part.
    pub loadings_re: Vec<f64>,
    /// One entry per loading coefficient, gradient w.r.t. its imaginary part.
    pub loadings_im: Vec<f64>,
    /// One entry per sensor, gradient w.r.t. its noise variance.
    pub noise_vars: Vec<f64>,
}

impl ObjectiveGradient {
    pub fn max_abs(&self) -> f64 {
        self.loadings_re
            .iter()
            .chain(&self.loadings_im)
            .chain(&self.noise_vars)
            .fold(0.0f64, |a, &g| a.max(g.abs()))
    }
}

/// Step size `h = 1e-5·(1 + |x|)` for parameter value `x`.
fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// Finite-difference gradient of `negative_llf` at `est`.
pub fn objective_gradient(
    est: &FactorEstimate,
    rhat: &SampleCovariance,
) -> Result<ObjectiveGradient> {
    let (n, m) = (est.sensor_count(), est.factor_count());
    let mut loadings_re = Vec::with_capacity(n * m);
    let mut loadings_im = Vec::with_capacity(n * m);

    let mut probe = est.clone();
    for j in 0..m {
        for i in 0..n {
            let base = est.loadings[(i, j)];
            for (imag_part, out) in [(false, &mut loadings_re), (true, &mut loadings_im)] {
                let x = if imag_part { base.im } else { base.re };
                let h = fd_step(x);
                let delta = if imag_part {
                    Complex64::new(0.0, h)
                } else {
                    Complex64::new(h, 0.0)
                };
                probe.loadings[(i, j)] = base + delta;
                let plus = negative_llf(&probe, rhat)?;
                probe.loadings[(i, j)] = base - delta;
                let minus = negative_llf(&probe, rhat)?;
                probe.loadings[(i, j)] = base;
                out.push((plus - minus) / (2.0 * h));
            }
        }
    }

    let mut noise_grad = Vec::with_capacity(n);
    for i in 0..n {
        let base = est.noise_vars[i];
        let h = fd_step(base);
        probe.noise_vars[i] = base + h;
        let plus = negative_llf(&probe, rhat)?;
        probe.noise_vars[i] = base - h;
        let minus = negative_llf(&probe, rhat)?;
        probe.noise_vars[i] = base;
        noise_grad.push((plus - minus) / (2.0 * h));
    }

    Ok(ObjectiveGradient {
        loadings_re,
        loadings_im,
        noise_vars: noise_grad,
    })
}

/// Max-abs component of the finite-difference gradient; small values certify
/// an approximate stationary point of the objective.
pub fn stationarity_residual(est: &FactorEstimate, rhat: &SampleCovariance) -> Result<f64> {
    Ok(objective_gradient(est, rhat)?.max_abs())
}
