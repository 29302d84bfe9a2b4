//! Uniform-linear-array signal model: steering vectors, synthetic snapshot
//! generation under nonuniform complex Gaussian noise, and sample covariance
//! formation.
//!
//! Conventions: half-wavelength element spacing, steering element
//! `exp(−j·n·π·cosθ)` for sensor `n`, angles in radians on `(0, π)`.
//! Degrees exist only at user-facing boundaries.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numerics::{hermitian_eig, ComplexMatrix, ComplexVector, HermitianMatrix};
use crate::{Error, Result};

/// Ground-truth description of array, sources and noise used to synthesize
/// data and compute bounds. Validated on construction: `M < N`, `L ≥ N`,
/// angles in `(0, π)`, positive noise variances, PSD source covariance.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    sensor_count: usize,
    source_count: usize,
    thetas: Vec<f64>,
    source_cov: HermitianMatrix,
    noise_vars: Vec<f64>,
    snapshot_count: usize,
    rng_seed: u64,
}

impl ScenarioConfig {
    pub fn new(
        sensor_count: usize,
        source_count: usize,
        thetas: Vec<f64>,
        source_cov: HermitianMatrix,
        noise_vars: Vec<f64>,
        snapshot_count: usize,
        rng_seed: u64,
    ) -> Result<Self> {
        if source_count == 0 || source_count >= sensor_count {
            return Err(Error::InvalidInput(format!(
                "need 0 < source count < sensor count, got M={source_count}, N={sensor_count}"
            )));
        }
        if thetas.len() != source_count {
            return Err(Error::InvalidInput(format!(
                "expected {source_count} angles, got {}",
                thetas.len()
            )));
        }
        for &t in &thetas {
            check_angle(t)?;
        }
        if source_cov.order() != source_count {
            return Err(Error::InvalidInput(format!(
                "source covariance order {} does not match source count {source_count}",
                source_cov.order()
            )));
        }
        let eig = hermitian_eig(&source_cov)?;
        let max = eig.values[0].max(0.0);
        if eig.values.iter().any(|&l| l < -1e-12 * max.max(1.0)) {
            return Err(Error::InvalidInput(
                "source covariance is not positive semi-definite".into(),
            ));
        }
        if noise_vars.len() != sensor_count {
            return Err(Error::InvalidInput(format!(
                "expected {sensor_count} noise variances, got {}",
                noise_vars.len()
            )));
        }
        if noise_vars.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "every noise variance must be positive and finite".into(),
            ));
        }
        if snapshot_count < sensor_count {
            return Err(Error::InvalidInput(format!(
                "snapshot count {snapshot_count} must be at least the sensor count {sensor_count} \
                 for a positive-definite sample covariance"
            )));
        }
        Ok(Self {
            sensor_count,
            source_count,
            thetas,
            source_cov,
            noise_vars,
            snapshot_count,
            rng_seed,
        })
    }

    pub fn sensor_count(&self) -> usize {
        self.sensor_count
    }

    pub fn source_count(&self) -> usize {
        self.source_count
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn source_cov(&self) -> &HermitianMatrix {
        &self.source_cov
    }

    pub fn noise_vars(&self) -> &[f64] {
        &self.noise_vars
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshot_count
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn with_seed(&self, rng_seed: u64) -> Self {
        Self { rng_seed, ..self.clone() }
    }

    pub fn with_snapshot_count(&self, snapshot_count: usize) -> Result<Self> {
        if snapshot_count < self.sensor_count {
            return Err(Error::InvalidInput(format!(
                "snapshot count {snapshot_count} must be at least the sensor count {}",
                self.sensor_count
            )));
        }
        Ok(Self {
            snapshot_count,
            ..self.clone()
        })
    }

    /// Population covariance `C = A·P·Aᴴ + Q` of the configured scenario.
    pub fn true_covariance(&self) -> HermitianMatrix {
        let a = manifold(&self.thetas, self.sensor_count).expect("validated angles");
        let apa = &a * self.source_cov.as_matrix() * a.adjoint();
        let q = HermitianMatrix::from_real_diagonal(&self.noise_vars);
        HermitianMatrix::from_dense(&(apa + q.as_matrix()))
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return Err(Error::InvalidInput(format!(
            "angle {theta} rad is outside the open interval (0, pi)"
        )));
    }
    Ok(())
}

/// `N×L` matrix whose column `t` is the snapshot `y(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: ComplexMatrix,
}

impl SnapshotMatrix {
    pub fn from_matrix(data: ComplexMatrix) -> Result<Self> {
        if data.ncols() == 0 {
            return Err(Error::InvalidInput("need at least one snapshot".into()));
        }
        Ok(Self { data })
    }

    pub fn sensor_count(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshot_count(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.data
    }
}

/// Sample covariance `R̂ = (1/L)·Σ_t y(t)y(t)ᴴ` with positive-definiteness
/// diagnostics attached. When built from fewer snapshots than sensors the
/// `pd_guaranteed` flag is lowered; solvers reject matrices that turn out
/// non-positive-definite.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    matrix: HermitianMatrix,
    snapshot_count: Option<usize>,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
}

impl SampleCovariance {
    fn with_spectrum(matrix: HermitianMatrix, snapshot_count: Option<usize>) -> Self {
        let eig = hermitian_eig(&matrix).expect("finite covariance");
        Self {
            matrix,
            snapshot_count,
            min_eigenvalue: *eig.values.last().expect("non-empty"),
            max_eigenvalue: eig.values[0],
        }
    }

    /// Wraps a covariance assembled directly (synthetic instances, tests).
    pub fn from_matrix(matrix: HermitianMatrix) -> Self {
        Self::with_spectrum(matrix, None)
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn snapshot_count(&self) -> Option<usize> {
        self.snapshot_count
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eigenvalue
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue > 0.0
    }

    /// False when the matrix came from fewer snapshots than sensors, in which
    /// case positive definiteness is not guaranteed by construction.
    pub fn pd_guaranteed(&self) -> bool {
        match self.snapshot_count {
            Some(l) => l >= self.order(),
            None => false,
        }
    }
}

/// Steering vector of a half-wavelength ULA: element `n` is
/// `exp(−j·n·π·cosθ)`.
pub fn steering_vector(theta: f64, sensor_count: usize) -> Result<ComplexVector> {
    check_angle(theta)?;
    if sensor_count == 0 {
        return Err(Error::InvalidInput("sensor count must be positive".into()));
    }
    let c = theta.cos();
    Ok(DVector::from_fn(sensor_count, |n, _| {
        Complex64::from_polar(1.0, -(n as f64) * std::f64::consts::PI * c)
    }))
}

/// Array manifold: column `m` is the steering vector of angle `m`.
pub fn manifold(thetas: &[f64], sensor_count: usize) -> Result<ComplexMatrix> {
    let cols = thetas
        .iter()
        .map(|&t| steering_vector(t, sensor_count))
        .collect::<Result<Vec<_>>>()?;
    if cols.is_empty() {
        return Err(Error::InvalidInput("need at least one angle".into()));
    }
    Ok(ComplexMatrix::from_columns(&cols))
}

/// One draw of a standard circular complex Gaussian vector: independent
/// entries `(g₁ + j·g₂)/√2` with `g` standard normal.
fn standard_complex_gaussian(len: usize, rng: &mut ChaCha8Rng) -> ComplexVector {
    DVector::from_fn(len, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Hermitian PSD square root via eigendecomposition, clamping the tiny
/// negative eigenvalues a PSD matrix may carry after rounding.
fn psd_sqrt(h: &HermitianMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let sqrt_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values
            .iter()
            .map(|&l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    ));
    Ok(&eig.vectors * sqrt_diag * eig.vectors.adjoint())
}

/// Synthesizes `y(t) = A·s(t) + v(t)`, `t = 1…L`, with `s ~ CN(0, P)` and
/// `v ~ CN(0, Q)` drawn independently. Deterministic in the configured seed:
/// snapshot `t` consumes the `M` source entries, then the `N` noise entries,
/// each as a (re, im) normal pair.
pub fn generate_snapshots(config: &ScenarioConfig) -> SnapshotMatrix {
    let n = config.sensor_count;
    let m = config.source_count;
    let l = config.snapshot_count;
    let a = manifold(&config.thetas, n).expect("validated angles");
    let p_sqrt = psd_sqrt(&config.source_cov).expect("validated PSD");
    let sigmas: Vec<f64> = config.noise_vars.iter().map(|&v| v.sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut data = ComplexMatrix::zeros(n, l);
    for t in 0..l {
        let s = &p_sqrt * standard_complex_gaussian(m, &mut rng);
        let w = standard_complex_gaussian(n, &mut rng);
        let mut y = &a * s;
        for i in 0..n {
            y[i] += sigmas[i] * w[i];
        }
        data.set_column(t, &y);
    }
    SnapshotMatrix { data }
}

/// Sample covariance of the snapshots, Hermitian by construction.
pub fn sample_covariance(y: &SnapshotMatrix) -> SampleCovariance {
    let l = y.snapshot_count();
    let outer = (y.as_matrix() * y.as_matrix().adjoint()).unscale(l as f64);
    SampleCovariance::with_spectrum(HermitianMatrix::from_dense(&outer), Some(l))
}

/// Per-realization seed derivation: a splitmix64 finalizer over the master
/// seed and the realization index, so Monte-Carlo workers never share RNG
/// state and any realization can be reproduced in isolation.
pub fn derive_seed(master: u64, realization: u64) -> u64 {
    let mut z = master
        .wrapping_add(realization.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Shared test fixture: the benchmark scenario used throughout the test
/// suites (6-sensor ULA, two sources at 60° and 120°, P = 10·I, nonuniform
/// noise diag{10,2,3,2,1,3}).
#[cfg(test)]
pub(crate) fn reference_scenario(l: usize, seed: u64) -> ScenarioConfig {
    let deg = std::f64::consts::PI / 180.0;
    ScenarioConfig::new(
        6,
        2,
        vec![60.0 * deg, 120.0 * deg],
        HermitianMatrix::from_real_diagonal(&[10.0, 10.0]),
        vec![10.0, 2.0, 3.0, 2.0, 1.0, 3.0],
        l,
        seed,
    )
    .unwrap()
}
