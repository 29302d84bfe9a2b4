//! Subspace-based direction finding from factor loadings: noise projector,
//! Root-MUSIC on a half-wavelength ULA, angle matching and RMSE, and the
//! stochastic Cramér–Rao lower bound of the generative model.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::model::{manifold, steering_vector, ScenarioConfig};
use crate::numerics::{
    hermitian_eig, pd_inverse, polynomial_roots, ComplexMatrix, ComplexVector, HermitianMatrix,
};
use crate::{Error, Result};

/// Roots this close to the unit circle still count as inside; exact-subspace
/// inputs put the signal roots on the circle up to rounding.
const INSIDE_TOLERANCE: f64 = 1e-9;

/// Two candidate roots closer than this to a conjugate-reciprocal match are
/// treated as the same physical root.
const PAIR_TOLERANCE: f64 = 1e-6;

/// Orthogonal projector onto the estimated noise subspace, built from the
/// minor eigenvectors of `S·Sᴴ`.
#[derive(Debug, Clone)]
pub struct NoiseProjector {
    matrix: HermitianMatrix,
    rank: usize,
    rank_deficient: bool,
}

impl NoiseProjector {
    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.matrix.order()
    }

    /// Projector rank, `N − M`.
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Raised when the loadings did not span a full `M`-dimensional subspace,
    /// in which case the eigen-split is still defined but partly arbitrary.
    pub fn rank_deficient(&self) -> bool {
        self.rank_deficient
    }
}

/// Angle estimates (radians, ascending) with their signed errors against a
/// reference after nearest-neighbor matching.
#[derive(Debug, Clone)]
pub struct DoaResult {
    pub estimates: Vec<f64>,
    pub matched_errors: Vec<f64>,
}

impl DoaResult {
    pub fn new(estimates: Vec<f64>, truth: &[f64]) -> Self {
        let matched_errors = match_angles(&estimates, truth);
        Self {
            estimates,
            matched_errors,
        }
    }
}

/// Square roots of the angle block of the inverse Fisher information, in
/// radians, one entry per source.
#[derive(Debug, Clone)]
pub struct CrlbResult {
    pub per_angle_std: Vec<f64>,
}

/// Builds the noise projector `Π = U_n·U_nᴴ` from the `N − M` minor
/// eigenvectors of `S·Sᴴ`. The complement form `I − S(SᴴS)⁻¹Sᴴ` is
/// deliberately not used; it degrades once `SᴴS` is ill-conditioned.
pub fn noise_projector(loadings: &ComplexMatrix) -> Result<NoiseProjector> {
    let (n, m) = (loadings.nrows(), loadings.ncols());
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!(
            "need 0 < factor count < sensor count, got M={m}, N={n}"
        )));
    }
    if loadings.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput("loadings must be finite".into()));
    }
    let gram = HermitianMatrix::from_dense(&(loadings * loadings.adjoint()));
    let eig = hermitian_eig(&gram)?;
    let minor = eig.vectors.columns(m, n - m);
    let projector = HermitianMatrix::from_dense(&(&minor * minor.adjoint()));
    let scale = eig.values[0];
    let rank_deficient =
        scale <= 0.0 || eig.values[..m].iter().any(|&l| l <= 1e-12 * scale);
    Ok(NoiseProjector {
        matrix: projector,
        rank: n - m,
        rank_deficient,
    })
}

fn angle_from_root(z: Complex64) -> f64 {
    (-z.arg() / std::f64::consts::PI).clamp(-1.0, 1.0).acos()
}

/// Keeps the unit-circle-adjacent roots, collapsing conjugate-reciprocal
/// pairs to their inside representative, and returns the `m` kept roots with
/// modulus closest to one.
fn select_unit_circle_roots(roots: &[Complex64], m: usize) -> Result<Vec<Complex64>> {
    let mut candidates: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| z.norm() <= 1.0 + INSIDE_TOLERANCE)
        .collect();
    // Inside representatives first so they survive deduplication, largest
    // modulus first within each group for determinism.
    candidates.sort_by(|a, b| {
        let (oa, ob) = (a.norm() > 1.0, b.norm() > 1.0);
        oa.cmp(&ob)
            .then(b.norm().partial_cmp(&a.norm()).expect("finite"))
            .then(a.arg().partial_cmp(&b.arg()).expect("finite"))
    });
    let mut kept: Vec<Complex64> = Vec::with_capacity(candidates.len());
    for z in candidates {
        let reciprocal = 1.0 / z.conj();
        let duplicate = kept
            .iter()
            .any(|w| (reciprocal - w).norm() < PAIR_TOLERANCE);
        if !duplicate {
            kept.push(z);
        }
    }
    kept.sort_by(|a, b| {
        let (da, db) = ((a.norm() - 1.0).abs(), (b.norm() - 1.0).abs());
        da.partial_cmp(&db)
            .expect("finite")
            .then(a.arg().partial_cmp(&b.arg()).expect("finite"))
    });
    if kept.len() < m {
        let mut partial: Vec<f64> = kept.iter().map(|&z| angle_from_root(z)).collect();
        partial.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        return Err(Error::RootDeficit {
            needed: m,
            found: kept.len(),
            partial,
        });
    }
    kept.truncate(m);
    Ok(kept)
}

/// Root-MUSIC: roots the polynomial `Σ_k c_k z^k` whose coefficient `c_k`
/// sums the `k`-th diagonal of the projector (`k = column − row`), selects
/// the `m` roots nearest the unit circle from inside, and maps each to
/// `θ = arccos(−arg(z)/π)`. Returns ascending angles in radians.
pub fn root_music(proj: &NoiseProjector, source_count: usize) -> Result<Vec<f64>> {
    let n = proj.order();
    if source_count == 0 || source_count >= n {
        return Err(Error::InvalidInput(format!(
            "need 0 < source count < sensor count, got M={source_count}, N={n}"
        )));
    }
    let mut coeffs = vec![Complex64::ZERO; 2 * n - 1];
    for p in 0..n {
        for q in 0..n {
            coeffs[q + (n - 1) - p] += proj.matrix().entry(p, q);
        }
    }
    let roots = polynomial_roots(&coeffs)?;
    let selected = select_unit_circle_roots(&roots, source_count)?;
    let mut angles: Vec<f64> = selected.into_iter().map(angle_from_root).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(angles)
}

/// Greedy nearest-neighbor matching of estimates to reference angles; each
/// reference is matched exactly once and the signed errors
/// `estimate − truth` come back in reference order.
pub fn match_angles(estimates: &[f64], truth: &[f64]) -> Vec<f64> {
    assert_eq!(
        estimates.len(),
        truth.len(),
        "estimate/reference count mismatch"
    );
    let m = truth.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(m * m);
    for (i, &e) in estimates.iter().enumerate() {
        for (j, &t) in truth.iter().enumerate() {
            pairs.push(((e - t).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut est_used = vec![false; m];
    let mut truth_used = vec![false; m];
    let mut errors = vec![0.0; m];
    for (_, i, j) in pairs {
        if !est_used[i] && !truth_used[j] {
            est_used[i] = true;
            truth_used[j] = true;
            errors[j] = estimates[i] - truth[j];
        }
    }
    errors
}

/// Per-angle root-mean-square error over realizations: entry `m` is
/// `sqrt((1/R)·Σ_r e²_{m,r})`.
pub fn rmse(errors_per_realization: &[Vec<f64>]) -> Vec<f64> {
    assert!(
        !errors_per_realization.is_empty(),
        "need at least one realization"
    );
    let m = errors_per_realization[0].len();
    let r = errors_per_realization.len() as f64;
    (0..m)
        .map(|k| {
            let sum_sq: f64 = errors_per_realization
                .iter()
                .map(|e| {
                    assert_eq!(e.len(), m, "ragged error rows");
                    e[k] * e[k]
                })
                .sum();
            (sum_sq / r).sqrt()
        })
        .collect()
}

/// Population covariance of a scenario and its derivatives with respect to
/// the real parameter vector `φ = (θ₁…θ_M, P-parameters, σ₁²…σ_N²)`.
///
/// The source covariance is charted by its `M` real diagonal entries followed
/// by a (real, imaginary) pair per off-diagonal `(m, m')`, `m < m'`, in
/// lexicographic order — `M²` real parameters in total.
#[derive(Debug, Clone)]
pub struct CovarianceDerivatives {
    pub covariance: HermitianMatrix,
    pub derivatives: Vec<ComplexMatrix>,
    pub theta_count: usize,
}

fn steering_derivative(theta: f64, n: usize) -> Result<ComplexVector> {
    let a = steering_vector(theta, n)?;
    let factor = Complex64::new(0.0, std::f64::consts::PI * theta.sin());
    Ok(ComplexVector::from_fn(n, |k, _| a[k] * factor * k as f64))
}

/// Analytic `∂C/∂φ` for every parameter of the scenario.
pub fn crlb_derivatives(config: &ScenarioConfig) -> Result<CovarianceDerivatives> {
    let n = config.sensor_count();
    let m = config.source_count();
    let a = manifold(config.thetas(), n)?;
    let p = config.source_cov().as_matrix();
    let mut derivatives: Vec<ComplexMatrix> = Vec::with_capacity(m + m * m + n);

    // Angles: C = A·P·Aᴴ touches column m of A only through d(θ_m).
    let pa = p * a.adjoint();
    for (idx, &theta) in config.thetas().iter().enumerate() {
        let d = steering_derivative(theta, n)?;
        let mut dm = ComplexMatrix::zeros(n, m);
        dm.set_column(idx, &d);
        derivatives.push(&dm * &pa + (&dm * &pa).adjoint());
    }

    // Source covariance diagonal, then (re, im) per off-diagonal pair.
    for k in 0..m {
        let ak = a.column(k);
        derivatives.push(&ak * ak.adjoint());
    }
    for r in 0..m {
        for c in (r + 1)..m {
            let ar = a.column(r);
            let ac = a.column(c);
            let cross = &ar * ac.adjoint();
            derivatives.push(&cross + cross.adjoint());
            let j = Complex64::new(0.0, 1.0);
            derivatives.push(&cross * j + (&cross * j).adjoint());
        }
    }

    // Noise variances.
    for k in 0..n {
        let mut d = ComplexMatrix::zeros(n, n);
        d[(k, k)] = Complex64::new(1.0, 0.0);
        derivatives.push(d);
    }

    Ok(CovarianceDerivatives {
        covariance: config.true_covariance(),
        derivatives,
        theta_count: m,
    })
}

/// Fisher information of `L` zero-mean circular Gaussian snapshots:
/// `FIM_{ij} = L·tr(C⁻¹·∂C_i·C⁻¹·∂C_j)`.
pub(crate) fn fisher_information(
    covariance: &HermitianMatrix,
    derivatives: &[ComplexMatrix],
    snapshots: usize,
) -> Result<DMatrix<f64>> {
    let c_inv = pd_inverse(covariance)?;
    let weighted: Vec<ComplexMatrix> = derivatives
        .iter()
        .map(|d| c_inv.as_matrix() * d)
        .collect();
    let p = derivatives.len();
    let l = snapshots as f64;
    let mut fim = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let value = l * (&weighted[i] * &weighted[j]).trace().re;
            fim[(i, j)] = value;
            fim[(j, i)] = value;
        }
    }
    Ok(fim)
}

/// Extracts `sqrt` of the leading `theta_count` diagonal entries of the
/// inverse Fisher information, failing when the matrix is singular.
pub(crate) fn theta_block_std(fim: &DMatrix<f64>, theta_count: usize) -> Result<Vec<f64>> {
    let eig = fim.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let min = eig.eigenvalues.iter().fold(f64::MAX, |a, &v| a.min(v));
    if max <= 0.0 || min <= 1e-12 * max {
        return Err(Error::UnidentifiableScenario);
    }
    let inv_diag = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v));
    let inv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    Ok((0..theta_count).map(|i| inv[(i, i)].sqrt()).collect())
}

/// Cramér–Rao lower bound on the angle estimates of the generative model
/// (stochastic sources, diagonal nonuniform noise): the square roots of the
/// angle block of the inverse Fisher information, in radians.
pub fn crlb(config: &ScenarioConfig) -> Result<CrlbResult> {
    let d = crlb_derivatives(config)?;
    let fim = fisher_information(&d.covariance, &d.derivatives, config.snapshot_count())?;
    let per_angle_std = theta_block_std(&fim, d.theta_count)?;
    Ok(CrlbResult { per_angle_std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::reference_scenario;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const DEG: f64 = std::f64::consts::PI / 180.0;

    #[test]
    fn projector_of_axis_loading() {
        let s = ComplexMatrix::from_column_slice(
            2,
            1,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        );
        let p = noise_projector(&s).unwrap();
        assert!(!p.rank_deficient());
        assert_eq!(p.rank(), 1);
        assert!(p.matrix().entry(0, 0).norm() < 1e-12);
        assert!((p.matrix().entry(1, 1).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_of_zero_loadings_is_flagged() {
        let p = noise_projector(&ComplexMatrix::zeros(4, 2)).unwrap();
        assert!(p.rank_deficient());
        assert_eq!(p.rank(), 2);
        // Still a valid rank-2 orthoprojector.
        let m = p.matrix().as_matrix();
        assert!((m * m - m).norm() < 1e-9);
        assert!((p.matrix().trace() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn projector_is_idempotent_and_annihilates_loadings() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let s = ComplexMatrix::from_fn(6, 2, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            });
            let p = noise_projector(&s).unwrap();
            assert!(!p.rank_deficient());
            let m = p.matrix().as_matrix();
            assert!((m * m - m).norm() < 1e-9);
            for col in s.column_iter() {
                let img = m * col;
                assert!(img.norm() <= 1e-8 * col.norm());
            }
            assert!((p.matrix().trace() - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn projector_complements_the_signal_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = ComplexMatrix::from_fn(5, 2, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let p = noise_projector(&s).unwrap();
        let gram = HermitianMatrix::from_dense(&(&s * s.adjoint()));
        let eig = hermitian_eig(&gram).unwrap();
        let major = eig.vectors.columns(0, 2);
        let signal = &major * major.adjoint();
        let sum = p.matrix().as_matrix() + signal;
        assert!((sum - ComplexMatrix::identity(5, 5)).norm() < 1e-9);
    }

    #[test]
    fn root_music_single_broadside_source() {
        let a = manifold(&[90.0 * DEG], 4).unwrap();
        let p = noise_projector(&a).unwrap();
        let angles = root_music(&p, 1).unwrap();
        assert_eq!(angles.len(), 1);
        assert!((angles[0] - 90.0 * DEG).abs() < 1e-9);
    }

    #[test]
    fn root_music_reference_pair_from_exact_subspace() {
        let a = manifold(&[60.0 * DEG, 120.0 * DEG], 6).unwrap();
        let p = noise_projector(&a).unwrap();
        let angles = root_music(&p, 2).unwrap();
        assert!((angles[0] - 60.0 * DEG).abs() < 1e-6);
        assert!((angles[1] - 120.0 * DEG).abs() < 1e-6);
    }

    #[test]
    fn root_music_roots_close_under_conjugate_reciprocal() {
        let a = manifold(&[70.0 * DEG, 100.0 * DEG], 6).unwrap();
        let p = noise_projector(&a).unwrap();
        let n = p.order();
        let mut coeffs = vec![Complex64::ZERO; 2 * n - 1];
        for row in 0..n {
            for col in 0..n {
                coeffs[col + (n - 1) - row] += p.matrix().entry(row, col);
            }
        }
        let roots = polynomial_roots(&coeffs).unwrap();
        for &z in &roots {
            let reciprocal = 1.0 / z.conj();
            let nearest = roots
                .iter()
                .map(|w| (reciprocal - w).norm())
                .fold(f64::MAX, f64::min);
            assert!(nearest < 1e-6, "unpaired root {z}");
        }
    }

    #[test]
    fn root_selection_reports_deficit_with_partial_results() {
        // Hand-built root list: one root near the circle, everything else far
        // outside, asking for two sources.
        let roots = vec![
            Complex64::from_polar(0.999_999_9, 1.0),
            Complex64::from_polar(1.8, 0.4),
            Complex64::from_polar(2.5, -0.9),
        ];
        match select_unit_circle_roots(&roots, 2) {
            Err(Error::RootDeficit {
                needed,
                found,
                partial,
            }) => {
                assert_eq!(needed, 2);
                assert_eq!(found, 1);
                assert_eq!(partial.len(), 1);
            }
            other => panic!("expected RootDeficit, got {other:?}"),
        }
    }

    #[test]
    fn root_selection_collapses_conjugate_reciprocal_pairs() {
        // A near-circle pair straddling the circle must collapse to the
        // inside member, leaving the deeper root as the second pick.
        let angle = 0.7;
        let roots = vec![
            Complex64::from_polar(1.0 - 1e-10, angle),
            Complex64::from_polar(1.0 + 1e-10, angle),
            Complex64::from_polar(0.6, -1.2),
            Complex64::from_polar(1.0 / 0.6, -1.2),
        ];
        let kept = select_unit_circle_roots(&roots, 2).unwrap();
        assert_eq!(kept.len(), 2);
        assert!((kept[0].arg() - angle).abs() < 1e-9);
        assert!(kept[0].norm() <= 1.0);
        assert!((kept[1].norm() - 0.6).abs() < 1e-9);
    }

    #[test]
    fn match_angles_identity_and_reversal() {
        assert_eq!(match_angles(&[1.0, 2.0], &[1.0, 2.0]), vec![0.0, 0.0]);
        assert_eq!(match_angles(&[2.0, 1.0], &[1.0, 2.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn match_angles_signed_errors_in_truth_order() {
        let errors = match_angles(&[2.05, 0.9], &[1.0, 2.0]);
        assert!((errors[0] + 0.1).abs() < 1e-12);
        assert!((errors[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn rmse_basics() {
        assert_eq!(rmse(&[vec![0.0, 0.0]]), vec![0.0, 0.0]);
        assert_eq!(rmse(&[vec![-0.3]]), vec![0.3]);
        let r = rmse(&[vec![0.2], vec![-0.2]]);
        assert!((r[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn noise_free_recovery_over_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let t1 = (10.0 + 160.0 * rng.random::<f64>()) * DEG;
            let mut t2 = (10.0 + 160.0 * rng.random::<f64>()) * DEG;
            while (t1 - t2).abs() < 10.0 * DEG {
                t2 = (10.0 + 160.0 * rng.random::<f64>()) * DEG;
            }
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = manifold(&[lo, hi], 6).unwrap();
            let p = noise_projector(&a).unwrap();
            let angles = root_music(&p, 2).unwrap();
            assert!((angles[0] - lo).abs() < 1e-6, "{lo} {hi}");
            assert!((angles[1] - hi).abs() < 1e-6, "{lo} {hi}");
        }
    }

    #[test]
    fn crlb_scales_as_inverse_sqrt_snapshots() {
        let cfg = reference_scenario(100, 0);
        let c1 = crlb(&cfg).unwrap();
        let c4 = crlb(&cfg.with_snapshot_count(400).unwrap()).unwrap();
        for (a, b) in c1.per_angle_std.iter().zip(&c4.per_angle_std) {
            assert!((a / b - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn crlb_derivatives_match_finite_differences() {
        let cfg = reference_scenario(100, 0);
        let d = crlb_derivatives(&cfg).unwrap();
        let (n, m) = (cfg.sensor_count(), cfg.source_count());
        assert_eq!(d.derivatives.len(), m + m * m + n);

        let rebuild = |thetas: &[f64], p: &HermitianMatrix, q: &[f64]| {
            let a = manifold(thetas, n).unwrap();
            let qd = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                n,
                q.iter().map(|&v| Complex64::new(v, 0.0)),
            ));
            a.clone() * p.as_matrix() * a.adjoint() + qd
        };

        let h = 1e-5;
        let mut checked = 0usize;
        for idx in 0..d.derivatives.len() {
            let perturb = |sign: f64| -> ComplexMatrix {
                let mut thetas = cfg.thetas().to_vec();
                let mut q = cfg.noise_vars().to_vec();
                let mut p = cfg.source_cov().clone();
                if idx < m {
                    thetas[idx] += sign * h;
                } else if idx < m + m * m {
                    let pi = idx - m;
                    if pi < m {
                        p = HermitianMatrix::from_fn_lower(m, |i, j| {
                            let mut v = p.entry(i, j);
                            if i == pi && j == pi {
                                v += Complex64::new(sign * h, 0.0);
                            }
                            v
                        });
                    } else {
                        // Off-diagonal (re, im) pairs in (r, c) lexicographic order.
                        let mut k = pi - m;
                        let (mut rr, mut cc, mut imag) = (0, 0, false);
                        'outer: for r in 0..m {
                            for c in (r + 1)..m {
                                if k < 2 {
                                    rr = r;
                                    cc = c;
                                    imag = k == 1;
                                    break 'outer;
                                }
                                k -= 2;
                            }
                        }
                        p = HermitianMatrix::from_fn_lower(m, |i, j| {
                            let mut v = p.entry(i, j);
                            if i == cc && j == rr {
                                // Lower-triangle entry is the conjugate side.
                                v += if imag {
                                    Complex64::new(0.0, -sign * h)
                                } else {
                                    Complex64::new(sign * h, 0.0)
                                };
                            }
                            v
                        });
                    }
                } else {
                    q[idx - m - m * m] += sign * h;
                }
                rebuild(&thetas, &p, &q)
            };
            let fd = (perturb(1.0) - perturb(-1.0)).unscale(2.0 * h);
            let analytic = &d.derivatives[idx];
            let scale = analytic.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let err = (&fd - analytic).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(
                err <= 1e-6 * scale.max(1.0),
                "derivative {idx}: err {err:.3e} vs scale {scale:.3e}"
            );
            checked += 1;
        }
        assert_eq!(checked, m + m * m + n);
    }

    #[test]
    fn crlb_rejects_duplicate_angles() {
        let cfg = ScenarioConfig::new(
            6,
            2,
            vec![60.0 * DEG, 60.0 * DEG],
            HermitianMatrix::from_real_diagonal(&[10.0, 10.0]),
            vec![1.0; 6],
            100,
            0,
        )
        .unwrap();
        assert!(matches!(crlb(&cfg), Err(Error::UnidentifiableScenario)));
    }

    #[test]
    fn crlb_invariant_under_source_cov_reparametrization() {
        // Rectangular vs polar charts for the off-diagonal of P give the same
        // angle block. Needs a nonzero off-diagonal; the polar chart is
        // singular at exactly zero.
        let p = HermitianMatrix::from_fn_lower(2, |i, j| {
            if i == j {
                Complex64::new(10.0, 0.0)
            } else {
                Complex64::new(1.0, -0.5) // entry (1, 0); (0, 1) mirrors
            }
        });
        let cfg = ScenarioConfig::new(
            6,
            2,
            vec![60.0 * DEG, 120.0 * DEG],
            p,
            vec![10.0, 2.0, 3.0, 2.0, 1.0, 3.0],
            100,
            0,
        )
        .unwrap();
        let rect = crlb(&cfg).unwrap();

        // Polar chart: replace the (re, im) derivative pair with (ρ, φ).
        let d = crlb_derivatives(&cfg).unwrap();
        let a = manifold(cfg.thetas(), 6).unwrap();
        let p01 = cfg.source_cov().entry(0, 1);
        let (rho, phi) = (p01.norm(), p01.arg());
        let cross = a.column(0) * a.column(1).adjoint();
        let e_phase = Complex64::from_polar(1.0, phi);
        let d_rho = &cross * e_phase + (&cross * e_phase).adjoint();
        let j_rho = Complex64::new(0.0, rho);
        let d_phi = &cross * (e_phase * j_rho) + (&cross * (e_phase * j_rho)).adjoint();
        let mut derivs = d.derivatives.clone();
        let m = cfg.source_count();
        derivs[m + m] = d_rho; // first off-diagonal slot (re) → ρ
        derivs[m + m + 1] = d_phi; // second slot (im) → φ
        let fim = fisher_information(&d.covariance, &derivs, cfg.snapshot_count()).unwrap();
        let polar = theta_block_std(&fim, m).unwrap();

        for (r, q) in rect.per_angle_std.iter().zip(&polar) {
            assert!((r - q).abs() <= 1e-8 * r);
        }
    }
}
