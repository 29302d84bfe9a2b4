//! Dense complex linear-algebra kernels shared by the solvers: Hermitian
//! eigendecomposition, positive-definite inversion, and polynomial root
//! finding via the companion matrix.
//!
//! All outputs are deterministic for identical inputs: eigenvalues are sorted
//! descending (ties broken by the index of each eigenvector's
//! largest-magnitude component), and every eigenvector is rescaled so its
//! largest-magnitude component is real and positive.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix, the working representation for loadings, bases and
/// general intermediates.
pub type ComplexMatrix = DMatrix<Complex64>;

/// Dense complex column vector.
pub type ComplexVector = DVector<Complex64>;

/// Relative eigenvalue cutoff below which a matrix is treated as singular.
const PD_TOLERANCE: f64 = 1e-12;

/// Square complex matrix that is Hermitian by construction: the storage is
/// filled so that `entry(i,j) == conj(entry(j,i))` holds exactly and diagonal
/// imaginary parts are zero. No mutable entry access is exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Builds from the Hermitian part `(m + mᴴ)/2` of a square matrix.
    ///
    /// The lower triangle of the result is computed once and mirrored, so the
    /// Hermitian storage invariant holds bit-exactly regardless of rounding.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian matrix must be square");
        let n = m.nrows();
        let mut data = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            data[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
            for j in 0..i {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                data[(i, j)] = avg;
                data[(j, i)] = avg.conj();
            }
        }
        Self { data }
    }

    /// Builds from a function over the lower triangle (`i >= j`); the upper
    /// triangle is mirrored and diagonal imaginary parts are dropped.
    pub fn from_fn_lower<F: FnMut(usize, usize) -> Complex64>(order: usize, mut f: F) -> Self {
        let mut data = DMatrix::<Complex64>::zeros(order, order);
        for i in 0..order {
            data[(i, i)] = Complex64::new(f(i, i).re, 0.0);
            for j in 0..i {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v.conj();
            }
        }
        Self { data }
    }

    pub fn identity(order: usize) -> Self {
        Self {
            data: DMatrix::identity(order, order),
        }
    }

    /// Real diagonal matrix.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self {
            data: DMatrix::from_diagonal(&DVector::from_iterator(
                diag.len(),
                diag.iter().map(|&d| Complex64::new(d, 0.0)),
            )),
        }
    }

    pub fn order(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    /// Real diagonal as a vector (imaginary parts are zero by construction).
    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.order()).map(|i| self.data[(i, i)].re).collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> f64 {
        (0..self.order()).map(|i| self.data[(i, i)].re).sum()
    }
}

/// Eigenvalues and eigenvectors of a Hermitian matrix.
///
/// `values` is sorted descending; column `k` of `vectors` is the unit-norm
/// eigenvector for `values[k]`, phase-fixed so its largest-magnitude
/// component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Index of the largest-modulus component; the lowest index wins ties.
fn anchor_index(v: &ComplexVector) -> usize {
    let mut best = 0;
    let mut best_mag = v[0].norm_sqr();
    for (i, z) in v.iter().enumerate().skip(1) {
        let mag = z.norm_sqr();
        if mag > best_mag {
            best = i;
            best_mag = mag;
        }
    }
    best
}

/// Hermitian eigendecomposition with deterministic ordering and phase.
///
/// Eigenvalues are returned descending. Exact ties are ordered by the index
/// of each eigenvector's largest-magnitude component, ascending, which makes
/// subspace selection reproducible for degenerate spectra.
pub fn hermitian_eig(h: &HermitianMatrix) -> Result<EigenPairs> {
    if !h.is_finite() {
        return Err(Error::InvalidInput(
            "eigendecomposition input has non-finite entries".into(),
        ));
    }
    let n = h.order();
    let eig = h.as_matrix().clone().symmetric_eigen();

    let mut columns: Vec<(f64, ComplexVector, usize)> = (0..n)
        .map(|k| {
            let mut v: ComplexVector = eig.eigenvectors.column(k).into_owned();
            let a = anchor_index(&v);
            let z = v[a];
            let mag = z.norm();
            if mag > 0.0 {
                let phase = z.conj() / mag;
                v *= phase;
                v[a] = Complex64::new(v[a].re.abs(), 0.0);
            }
            (eig.eigenvalues[k], v, a)
        })
        .collect();

    columns.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite eigenvalues")
            .then(a.2.cmp(&b.2))
    });

    let values: Vec<f64> = columns.iter().map(|c| c.0).collect();
    let vectors = ComplexMatrix::from_columns(
        &columns.iter().map(|c| c.1.clone()).collect::<Vec<_>>(),
    );
    Ok(EigenPairs { values, vectors })
}

/// Inverse of a positive-definite Hermitian matrix.
///
/// Fails with the offending smallest eigenvalue when the spectrum does not
/// clear `1e-12 · λ_max`.
pub fn pd_inverse(h: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(h)?;
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty spectrum");
    if max <= 0.0 || min <= PD_TOLERANCE * max {
        return Err(Error::NotPositiveDefinite { smallest: min });
    }
    let inv_diag = DMatrix::from_diagonal(&DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| Complex64::new(1.0 / l, 0.0)),
    ));
    let inv = &eig.vectors * inv_diag * eig.vectors.adjoint();
    Ok(HermitianMatrix::from_dense(&inv))
}

/// All `d` roots of `c₀ + c₁ z + … + c_d z^d`, computed as the eigenvalues of
/// the companion matrix of the monic polynomial. Roots are sorted by real
/// part, then imaginary part, for reproducible output.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.len() < 2 {
        return Err(Error::InvalidInput(
            "polynomial must have degree at least 1".into(),
        ));
    }
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidInput(
            "polynomial coefficients must be finite".into(),
        ));
    }
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    if lead.norm() == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }

    let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }

    let eigenvalues = companion
        .eigenvalues()
        .ok_or_else(|| Error::Internal("companion eigenvalue iteration failed".into()))?;

    let mut roots: Vec<Complex64> = eigenvalues.iter().copied().collect();
    roots.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .expect("finite roots")
            .then(a.im.partial_cmp(&b.im).expect("finite roots"))
    });
    Ok(roots)
}
