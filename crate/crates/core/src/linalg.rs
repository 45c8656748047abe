//! Dense complex linear-algebra helpers.
//!
//! Thin layer over `ndarray` plus Hermitian eigensolves delegated to
//! `nalgebra`. Everything here treats matrices as plain arrays; physical
//! invariants live in the calling modules.

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64 as C64;

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Matrix trace.
pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Tr(a . b) without forming the product: sum_ij a[i,j] b[j,i].
pub fn trace_of_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[[i, j]] * b[[j, i]];
        }
    }
    acc
}

/// Largest entrywise |a - b|.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest entrywise deviation from Hermiticity, max |m - m^dag|.
pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// In-place symmetrization m <- (m + m^dag) / 2.
pub fn hermitize_inplace(m: &mut Array2<C64>) {
    let n = m.nrows();
    for i in 0..n {
        m[[i, i]] = C64::new(m[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let avg = 0.5 * (m[[i, j]] + m[[j, i]].conj());
            m[[i, j]] = avg;
            m[[j, i]] = avg.conj();
        }
    }
}

fn to_nalgebra(m: &Array2<C64>) -> DMatrix<C64> {
    let n = m.nrows();
    DMatrix::from_fn(n, m.ncols(), |i, j| m[[i, j]])
}

/// Eigendecomposition of a Hermitian matrix: real eigenvalues plus a unitary
/// matrix whose columns are the corresponding eigenvectors.
pub fn hermitian_eigen(m: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(to_nalgebra(m));
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let vectors = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
    (values, vectors)
}

/// Eigenvalues only of a Hermitian matrix (no eigenvector accumulation).
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    to_nalgebra(m).symmetric_eigenvalues().iter().copied().collect()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &Array2<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Gershgorin lower bound on the smallest eigenvalue of a Hermitian matrix.
/// Cheap O(n^2) prefilter: the true smallest eigenvalue is never below this.
pub fn gershgorin_lower_bound(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut bound = f64::INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if j != i {
                radius += m[[i, j]].norm();
            }
        }
        bound = bound.min(m[[i, i]].re - radius);
    }
    bound
}

/// Spectral (operator 2-) norm via the largest eigenvalue of m^dag m.
pub fn spectral_norm(m: &Array2<C64>) -> f64 {
    let gram = dagger(m).dot(m);
    hermitian_eigenvalues(&gram)
        .into_iter()
        .fold(0.0f64, f64::max)
        .max(0.0)
        .sqrt()
}

/// Sum of absolute eigenvalues of a Hermitian matrix (trace norm).
pub fn trace_norm_hermitian(m: &Array2<C64>) -> f64 {
    hermitian_eigenvalues(m).into_iter().map(f64::abs).sum()
}
