//! Truncated single-mode Fock-space linear algebra.
//!
//! All operators act on the basis `|0>..|dim-1>` and are dense `dim x dim`
//! complex matrices. Displacement operators come in two constructions:
//!
//! - [`FockSpace::displacement`] exponentiates the truncated generator
//!   through a Hermitian eigendecomposition. The result is unitary to
//!   machine precision, which the post-selection probabilities downstream
//!   rely on.
//! - [`FockSpace::displacement_elements`] evaluates the matrix elements of
//!   the untruncated operator (Cahill & Glauber 1969) with a stable two-term
//!   recurrence. Columns near the cutoff lose norm to the discarded tail,
//!   which makes this form the right probe for truncation leakage and the
//!   cheap kernel for phase-space scans.
//!
//! The two constructions agree on the lower half of the basis whenever the
//! truncation is adequate; tests pin that agreement.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::linalg;
use crate::states::DensityMatrix;

/// Dense complex square matrix carrier for operators and raw states.
pub type ComplexMatrix = Array2<C64>;

/// Dimensionless complex coupling for a single displacement kick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coupling(pub C64);

impl Coupling {
    pub fn new(value: C64) -> Result<Self> {
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(SimError::NonFinite {
                context: "coupling constant".into(),
            });
        }
        Ok(Coupling(value))
    }

    pub fn real(g: f64) -> Result<Self> {
        Self::new(C64::new(g, 0.0))
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn magnitude(&self) -> f64 {
        self.0.norm()
    }

    /// Couplings above |g| = 1 are allowed but outside the regime the
    /// numerics are validated in.
    pub fn outside_validated_range(&self) -> bool {
        self.magnitude() > 1.0
    }
}

impl std::str::FromStr for Coupling {
    type Err = SimError;

    /// Parses `re` or `re,im`.
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(',');
        let re = parts
            .next()
            .and_then(|p| p.trim().parse::<f64>().ok())
            .ok_or_else(|| SimError::Domain(format!("cannot parse coupling from {s:?}")))?;
        let im = match parts.next() {
            Some(p) => p
                .trim()
                .parse::<f64>()
                .map_err(|_| SimError::Domain(format!("cannot parse coupling from {s:?}")))?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(SimError::Domain(format!(
                "coupling {s:?} has more than two components"
            )));
        }
        Coupling::new(C64::new(re, im))
    }
}

impl std::fmt::Display for Coupling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{},{}", self.0.re, self.0.im)
        }
    }
}

/// Truncated Fock space for one bosonic mode: basis `|0>..|dim-1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(SimError::DimensionTooSmall(dim));
        }
        Ok(FockSpace { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Annihilation operator: `<n-1|a|n> = sqrt(n)`.
    pub fn annihilation(&self) -> ComplexMatrix {
        let mut a = Array2::zeros((self.dim, self.dim));
        for n in 1..self.dim {
            a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
        }
        a
    }

    /// Creation operator, the conjugate transpose of [`Self::annihilation`].
    pub fn creation(&self) -> ComplexMatrix {
        linalg::dagger(&self.annihilation())
    }

    /// Number operator `a^dag a = diag(0, 1, ..., dim-1)`.
    pub fn number(&self) -> ComplexMatrix {
        let mut n_op = Array2::zeros((self.dim, self.dim));
        for n in 0..self.dim {
            n_op[[n, n]] = C64::new(n as f64, 0.0);
        }
        n_op
    }

    pub fn identity(&self) -> ComplexMatrix {
        Array2::eye(self.dim)
    }

    /// Photon-number parity `diag((-1)^n)`.
    pub fn parity(&self) -> ComplexMatrix {
        let mut p = Array2::zeros((self.dim, self.dim));
        for n in 0..self.dim {
            p[[n, n]] = C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0);
        }
        p
    }

    /// Displacement operator `exp(g a^dag - g* a)` on the truncated space.
    ///
    /// The anti-Hermitian generator is exponentiated through the
    /// eigendecomposition of the Hermitian matrix `i(g a^dag - g* a)`, so the
    /// result is unitary up to floating-point roundoff on the whole truncated
    /// space.
    pub fn displacement(&self, g: Coupling) -> ComplexMatrix {
        let dim = self.dim;
        let gv = g.value();
        if gv.norm() == 0.0 {
            return self.identity();
        }
        // H = i (g a^dag - g* a) is Hermitian tridiagonal with zero diagonal.
        let mut h = Array2::zeros((dim, dim));
        let i = C64::new(0.0, 1.0);
        for n in 0..dim - 1 {
            let s = ((n + 1) as f64).sqrt();
            h[[n + 1, n]] = i * gv * s;
            h[[n, n + 1]] = (i * gv * s).conj();
        }
        let (values, vectors) = linalg::hermitian_eigen(&h);
        // D = V e^{-i Lambda} V^dag.
        let mut scaled = vectors.clone();
        for (k, lambda) in values.iter().enumerate() {
            let phase = C64::from_polar(1.0, -lambda);
            scaled.column_mut(k).mapv_inplace(|z| z * phase);
        }
        scaled.dot(&linalg::dagger(&vectors))
    }

    /// Visits the rows of the untruncated displacement operator projected
    /// onto this space, one at a time.
    ///
    /// Row 0 is the coherent bra `<0|D(alpha)`; subsequent rows follow from
    /// `a D = D (a + alpha)`. The forward recurrence is accurate while the
    /// displaced peak sits well inside the basis (|alpha|^2 small against
    /// dim, the kick regime); for displacements comparable to the cutoff it
    /// amplifies roundoff and must not be used.
    /// Each callback receives the row index and a slice of length `dim`.
    pub fn displacement_rows<F>(&self, alpha: C64, mut visit: F)
    where
        F: FnMut(usize, &[C64]),
    {
        let dim = self.dim;
        let sqrt: Vec<f64> = (0..dim).map(|n| (n as f64).sqrt()).collect();
        let mut row = vec![C64::new(0.0, 0.0); dim];
        let mut next = vec![C64::new(0.0, 0.0); dim];

        let neg_conj = -alpha.conj();
        row[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 1..dim {
            row[n] = row[n - 1] * neg_conj / sqrt[n];
        }
        visit(0, &row);

        for m in 0..dim - 1 {
            let inv = 1.0 / ((m + 1) as f64).sqrt();
            next[0] = alpha * row[0] * inv;
            for n in 1..dim {
                next[n] = (sqrt[n] * row[n - 1] + alpha * row[n]) * inv;
            }
            std::mem::swap(&mut row, &mut next);
            visit(m + 1, &row);
        }
    }

    /// Matrix elements of the untruncated displacement operator `D(alpha)`
    /// restricted to this space. Not unitary: columns near the cutoff lose
    /// the population displaced past `dim`.
    pub fn displacement_elements(&self, alpha: C64) -> ComplexMatrix {
        let dim = self.dim;
        let mut d = Array2::zeros((dim, dim));
        self.displacement_rows(alpha, |m, row| {
            for n in 0..dim {
                d[[m, n]] = row[n];
            }
        });
        d
    }

    /// Worst unitarity deficit of the projected displacement over the lower
    /// half of the basis: `max_{n < dim/2} |1 - ||D(alpha)|n>||^2|`.
    ///
    /// Values above ~1e-8 signal that the truncation is starving the
    /// displacement for this coupling.
    pub fn displacement_truncation_deficit(&self, g: Coupling) -> f64 {
        let half = self.dim / 2;
        let mut column_norms = vec![0.0f64; half];
        self.displacement_rows(g.value(), |_, row| {
            for (acc, z) in column_norms.iter_mut().zip(row.iter()) {
                *acc += z.norm_sqr();
            }
        });
        column_norms
            .into_iter()
            .map(|norm_sqr| (1.0 - norm_sqr).abs())
            .fold(0.0, f64::max)
    }

    /// Recommended truncation for an initial thermal occupation and coupling
    /// magnitude: `max(32, ceil(8 (nbar+1)) + ceil(16 |g|^2) + 16)`.
    ///
    /// Thermal tails decay geometrically and each kick spreads population by
    /// O(|g|) quanta, so this leaves headroom for four interfering kicks.
    pub fn recommended_dim(nbar_initial: f64, g_magnitude: f64) -> usize {
        let thermal = (8.0 * (nbar_initial + 1.0)).ceil() as usize;
        let kick = (16.0 * g_magnitude * g_magnitude).ceil() as usize;
        (thermal + kick + 16).max(32)
    }
}

/// Expectation value `Tr(op . rho)`.
pub fn expectation(op: &ComplexMatrix, rho: &DensityMatrix) -> Result<C64> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(SimError::DimensionMismatch {
            left: op.nrows(),
            right: rho.dim(),
        });
    }
    Ok(linalg::trace_of_product(op, rho.entries()))
}
