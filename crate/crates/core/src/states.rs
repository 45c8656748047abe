//! Density matrices, thermal states, Wigner functions, and the
//! occupation/temperature conversion.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError, SimWarning};
use crate::fock::{ComplexMatrix, FockSpace};
use crate::linalg;

/// Reduced Planck constant, J s. Derived from the exact SI value of h.
pub const HBAR: f64 = 6.626_070_15e-34 / std::f64::consts::TAU;
/// Boltzmann constant, J/K. Exact SI value.
pub const BOLTZMANN: f64 = 1.380_649e-23;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = 1e-10;
const THERMAL_TAIL_LIMIT: f64 = 1e-6;

/// Mean thermal photon number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ThermalOccupation(f64);

impl ThermalOccupation {
    pub fn new(nbar: f64) -> Result<Self> {
        if !nbar.is_finite() {
            return Err(SimError::NonFinite {
                context: "thermal occupation".into(),
            });
        }
        if nbar < 0.0 {
            return Err(SimError::Domain(format!(
                "thermal occupation must be non-negative, got {nbar}"
            )));
        }
        Ok(ThermalOccupation(nbar))
    }

    pub fn nbar(&self) -> f64 {
        self.0
    }
}

/// Validated density matrix: Hermitian, unit trace, positive up to numerical
/// noise. `trace_deficit` records the population discarded by truncation when
/// the state was constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: ComplexMatrix,
    trace_deficit: f64,
}

impl DensityMatrix {
    /// Validates all invariants, including positivity through a Hermitian
    /// eigensolve. Use for states of external origin; internal channels that
    /// preserve positivity by construction use the cheaper crate-private
    /// constructor.
    pub fn new(entries: ComplexMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(SimError::DimensionMismatch {
                left: entries.nrows(),
                right: entries.ncols(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SimError::NonFinite {
                context: "density matrix entries".into(),
            });
        }
        let herm = linalg::hermiticity_deviation(&entries);
        if herm > HERMITICITY_TOL {
            return Err(SimError::NotHermitian { deviation: herm });
        }
        let trace = linalg::trace(&entries);
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(SimError::BadTrace { trace: trace.re });
        }
        let min_eig = linalg::min_eigenvalue(&entries);
        if min_eig < -POSITIVITY_TOL {
            return Err(SimError::Positivity {
                min_eigenvalue: min_eig,
            });
        }
        let mut entries = entries;
        linalg::hermitize_inplace(&mut entries);
        Ok(DensityMatrix {
            entries,
            trace_deficit: 0.0,
        })
    }

    /// Symmetrizes and renormalizes raw channel output. The caller guarantees
    /// positivity (e.g. the matrix is `K rho K^dag` for valid `rho`).
    pub(crate) fn from_raw_normalized(
        mut entries: ComplexMatrix,
        trace_deficit: f64,
    ) -> Result<Self> {
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SimError::NonFinite {
                context: "density matrix entries".into(),
            });
        }
        linalg::hermitize_inplace(&mut entries);
        let trace = linalg::trace(&entries).re;
        if trace <= 0.0 || !trace.is_finite() {
            return Err(SimError::BadTrace { trace });
        }
        entries.mapv_inplace(|z| z / trace);
        Ok(DensityMatrix {
            entries,
            trace_deficit,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    /// Mean photon number `Tr(a^dag a rho)`, real part. The imaginary part
    /// must vanish for a Hermitian state and is asserted below 1e-10.
    pub fn mean_photons(&self) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for n in 0..self.dim() {
            re += n as f64 * self.entries[[n, n]].re;
            im += n as f64 * self.entries[[n, n]].im;
        }
        assert!(
            im.abs() < 1e-10,
            "mean photon number has imaginary part {im:.3e}"
        );
        re
    }

    /// Population of the top `count` Fock levels.
    pub fn top_population(&self, count: usize) -> f64 {
        let dim = self.dim();
        (dim.saturating_sub(count)..dim)
            .map(|n| self.entries[[n, n]].re)
            .sum()
    }
}

/// Projector `|n><n|` as a density matrix.
pub fn fock_state(space: &FockSpace, n: usize) -> Result<DensityMatrix> {
    if n >= space.dim() {
        return Err(SimError::Domain(format!(
            "Fock index {n} outside basis of dim {}",
            space.dim()
        )));
    }
    let mut entries = Array2::zeros((space.dim(), space.dim()));
    entries[[n, n]] = C64::new(1.0, 0.0);
    DensityMatrix::new(entries)
}

/// Thermal state with geometric Fock weights `(1/(nbar+1)) (nbar/(nbar+1))^n`,
/// renormalized on the truncated basis. Fails if the discarded tail
/// `(nbar/(nbar+1))^dim` exceeds 1e-6.
pub fn thermal_state(space: &FockSpace, occupation: ThermalOccupation) -> Result<DensityMatrix> {
    let nbar = occupation.nbar();
    let dim = space.dim();
    let q = nbar / (nbar + 1.0);
    let deficit = q.powi(dim as i32);
    if deficit > THERMAL_TAIL_LIMIT {
        return Err(SimError::Truncation {
            deficit,
            limit: THERMAL_TAIL_LIMIT,
            dim,
            nbar,
        });
    }
    let norm = 1.0 / ((nbar + 1.0) * (1.0 - deficit));
    let mut entries = Array2::zeros((dim, dim));
    let mut weight = norm;
    for n in 0..dim {
        entries[[n, n]] = C64::new(weight, 0.0);
        weight *= q;
    }
    DensityMatrix::from_raw_normalized(entries, deficit)
}

/// Trace distance `(1/2) ||rho - sigma||_1`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(SimError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = a.entries() - b.entries();
    Ok(0.5 * linalg::trace_norm_hermitian(&diff))
}

/// Closed-form thermal Wigner function
/// `W(x, p) = exp(-(x^2 + p^2)/(2 nbar + 1)) / (pi (2 nbar + 1))`.
pub fn thermal_wigner_value(occupation: ThermalOccupation, x: f64, p: f64) -> f64 {
    let width = 2.0 * occupation.nbar() + 1.0;
    (-(x * x + p * p) / width).exp() / (std::f64::consts::PI * width)
}

/// Bose-Einstein occupation of a mode at `frequency_hz` in equilibrium at
/// `temperature_k`.
pub fn nbar_from_temperature(frequency_hz: f64, temperature_k: f64) -> Result<ThermalOccupation> {
    let valid = frequency_hz.is_finite()
        && frequency_hz > 0.0
        && temperature_k.is_finite()
        && temperature_k > 0.0;
    if !valid {
        return Err(SimError::Domain(format!(
            "frequency and temperature must be positive, got {frequency_hz} Hz, {temperature_k} K"
        )));
    }
    let ratio = HBAR * std::f64::consts::TAU * frequency_hz / (BOLTZMANN * temperature_k);
    ThermalOccupation::new(1.0 / ratio.exp_m1())
}

/// Temperature at which a mode at `frequency_hz` has mean occupation `nbar`:
/// `T = hbar omega / (k ln(1 + 1/nbar))`.
pub fn temperature_from_nbar(frequency_hz: f64, nbar: f64) -> Result<f64> {
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(SimError::Domain(format!(
            "frequency must be positive, got {frequency_hz} Hz"
        )));
    }
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(SimError::Domain(format!(
            "occupation must be positive, got {nbar}"
        )));
    }
    let omega = std::f64::consts::TAU * frequency_hz;
    Ok(HBAR * omega / (BOLTZMANN * (1.0 / nbar).ln_1p()))
}

/// Wigner function samples on a rectangular quadrature grid.
///
/// `values[[i, j]]` is `W(x_values[j], p_values[i])`; rows scan momentum.
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub x_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub values: Array2<f64>,
    /// Set when the grid reaches phase-space regions the truncated basis
    /// cannot represent.
    pub truncation: Option<SimWarning>,
}

impl WignerGrid {
    /// Default evaluation window: 121 x 121 points on [-6, 6]^2.
    pub fn default_axes() -> (Vec<f64>, Vec<f64>) {
        (linspace(-6.0, 6.0, 121), linspace(-6.0, 6.0, 121))
    }

    /// Discrete integral `sum W dx dp`. `None` if either axis has fewer than
    /// two points.
    pub fn integral(&self) -> Option<f64> {
        if self.x_values.len() < 2 || self.p_values.len() < 2 {
            return None;
        }
        let dx = self.x_values[1] - self.x_values[0];
        let dp = self.p_values[1] - self.p_values[0];
        Some(self.values.sum() * dx * dp)
    }

    /// CSV with header `x,p,w`, one row per point, scanning p then x.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,p,w")?;
        for (i, &p) in self.p_values.iter().enumerate() {
            for (j, &x) in self.x_values.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{}",
                    crate::io::format_g17(x),
                    crate::io::format_g17(p),
                    crate::io::format_g17(self.values[[i, j]])
                )?;
            }
        }
        Ok(())
    }
}

/// Uniformly spaced grid with both endpoints included.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let step = (max - min) / (count - 1) as f64;
    (0..count).map(|i| min + step * i as f64).collect()
}

fn validate_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(SimError::Domain(format!("{name} axis is empty")));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFinite {
            context: format!("{name} axis"),
        });
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::Domain(format!("{name} axis is not ascending")));
    }
    if axis.len() >= 3 {
        let step = axis[1] - axis[0];
        let uniform = axis
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
        if !uniform {
            return Err(SimError::Domain(format!("{name} axis is not uniform")));
        }
    }
    Ok(())
}

/// Chernoff bound on the upper tail `P(X >= k)` of a Poisson variable with
/// mean `lambda`. Loose but safe for the truncation heuristic.
fn poisson_tail_bound(lambda: f64, k: usize) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let k = k as f64;
    if k <= lambda {
        return 1.0;
    }
    (k - lambda - k * (k / lambda).ln()).exp()
}

/// Wigner function of `rho` through the displaced-parity form
/// `W(x, p) = Tr[rho D(alpha) Pi D^dag(alpha)] / pi` with
/// `alpha = (x + i p) / sqrt(2)`.
///
/// The parity conjugation identity `D(alpha) Pi D^dag(alpha) = D(2 alpha) Pi`
/// reduces each grid point to a weighted trace against one displacement,
/// whose columns stream out of the matrix-element recurrence. Grid points
/// are independent and evaluated in parallel.
pub fn wigner(rho: &DensityMatrix, x_values: &[f64], p_values: &[f64]) -> Result<WignerGrid> {
    validate_axis("x", x_values)?;
    validate_axis("p", p_values)?;
    let dim = rho.dim();
    let bands = WignerBands::new(rho);

    let rows: Vec<Vec<f64>> = p_values
        .par_iter()
        .map(|&p| {
            x_values
                .iter()
                .map(|&x| bands.evaluate(x, p))
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((p_values.len(), x_values.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            values[[i, j]] = w;
        }
    }

    // Parity expansion converges only while the doubled displacement stays
    // inside the basis; warn when the corner of the window escapes.
    let corner = x_values
        .iter()
        .chain(p_values.iter())
        .fold(0.0f64, |m, &v| m.max(v.abs()));
    let lambda = 4.0 * corner * corner; // |2 alpha|^2 at the window corner
    let tail = poisson_tail_bound(lambda, dim);
    let truncation = (tail > 1e-9).then(|| SimWarning::Truncation {
        context: format!(
            "Wigner window corner needs |2 alpha|^2 = {lambda:.1} photons against dim {dim}"
        ),
        magnitude: tail,
    });

    Ok(WignerGrid {
        x_values: x_values.to_vec(),
        p_values: p_values.to_vec(),
        values,
        truncation,
    })
}

/// Point-independent coefficients of the displaced-parity trace, organized
/// by diagonal band of `rho`.
///
/// Expanding `Tr[rho D(2 alpha) Pi]` in the Cahill-Glauber matrix elements of
/// `D(2 alpha)` and pairing the Hermitian bands of `rho` gives
///
/// ```text
/// W = (e^{-s/2} / pi) sum_L (2 - delta_{L0})
///         Re[ beta^L sum_n rho_{n,n+L} (-1)^n sqrt(n!/(n+L)!) L_n^{(L)}(s) ]
/// ```
///
/// with `beta = 2 alpha` and `s = |beta|^2`. The inner associated-Laguerre
/// series is summed with Clenshaw's downward recurrence, which stays stable
/// where termwise evaluation of the displacement elements would amplify
/// roundoff.
struct WignerBands {
    /// bands[L][n] = rho[n, n+L] (-1)^n sqrt(n!/(n+L)!)
    bands: Vec<Vec<C64>>,
}

impl WignerBands {
    fn new(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let entries = rho.entries();
        let mut bands = Vec::with_capacity(dim);
        let mut head = 1.0f64; // sqrt(0!/L!)
        for band in 0..dim {
            if band > 0 {
                head /= (band as f64).sqrt();
            }
            let mut ratio = head; // sqrt(n!/(n+L)!)
            let mut coeffs = Vec::with_capacity(dim - band);
            for n in 0..dim - band {
                if n > 0 {
                    ratio *= (n as f64 / (n + band) as f64).sqrt();
                }
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                coeffs.push(entries[[n, n + band]] * (sign * ratio));
            }
            bands.push(coeffs);
        }
        WignerBands { bands }
    }

    fn evaluate(&self, x: f64, p: f64) -> f64 {
        let beta = C64::new(x, p) * std::f64::consts::SQRT_2; // 2 alpha
        let s = beta.norm_sqr();
        let mut prefactor = C64::new((-0.5 * s).exp(), 0.0); // beta^L e^{-s/2}
        let mut total = 0.0;
        for (band, coeffs) in self.bands.iter().enumerate() {
            let sum = clenshaw_laguerre(coeffs, band as f64, s);
            let weight = if band == 0 { 1.0 } else { 2.0 };
            total += weight * (prefactor * sum).re;
            prefactor *= beta;
            if prefactor.norm_sqr() == 0.0 {
                break;
            }
        }
        total / std::f64::consts::PI
    }
}

/// Clenshaw evaluation of `sum_n c_n L_n^{(k)}(s)` via the three-term
/// recurrence `(n+1) L_{n+1} = (2n+k+1-s) L_n - (n+k) L_{n-1}`.
fn clenshaw_laguerre(coeffs: &[C64], k: f64, s: f64) -> C64 {
    let mut b1 = C64::new(0.0, 0.0);
    let mut b2 = C64::new(0.0, 0.0);
    for (n, &c) in coeffs.iter().enumerate().rev() {
        let n = n as f64;
        let a_n = (2.0 * n + k + 1.0 - s) / (n + 1.0);
        let b_next = -(n + 1.0 + k) / (n + 2.0);
        let b0 = c + a_n * b1 + b_next * b2;
        b2 = b1;
        b1 = b0;
    }
    b1
}
