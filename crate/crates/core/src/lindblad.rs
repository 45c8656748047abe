//! Fixed-step propagation under the single-mode thermal damping equation
//!
//! ```text
//! drho/dt = kappa (nbar+1) (2 a rho a^dag - a^dag a rho - rho a^dag a)
//!         + kappa  nbar    (2 a^dag rho a - a a^dag rho - rho a a^dag)
//! ```
//!
//! The mean photon number relaxes as `d<n>/dt = -2 kappa (<n> - nbar)`, so
//! all durations are naturally expressed in units of `1/kappa`.
//!
//! The ladder operators couple each entry of `rho` only to its diagonal
//! neighbours, so one right-hand-side evaluation is a fused O(dim^2) pass
//! instead of a chain of dense products. The per-entry coefficients are
//! exactly those of the truncated matrix products (the level above the cutoff
//! is absent), which keeps the generator traceless to machine precision.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError, SimWarning};
use crate::linalg;
use crate::states::DensityMatrix;

/// Thermal bath: dissipation rate and environment occupation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Cavity dissipation rate, units of inverse time.
    pub kappa: f64,
    /// Mean occupation of the environment.
    pub nbar: f64,
}

impl BathSpec {
    pub fn new(kappa: f64, nbar: f64) -> Result<Self> {
        let bath = BathSpec { kappa, nbar };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kappa.is_finite() || !self.nbar.is_finite() {
            return Err(SimError::NonFinite {
                context: "bath specification".into(),
            });
        }
        if self.kappa < 0.0 || self.nbar < 0.0 {
            return Err(SimError::Domain(format!(
                "bath parameters must be non-negative, got kappa={}, nbar={}",
                self.kappa, self.nbar
            )));
        }
        Ok(())
    }
}

/// Classical fourth-order fixed-step integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    /// Largest step in units of `kappa t`. Fixed steps keep runs
    /// bit-reproducible, which the sweep cache keys rely on.
    pub max_step: f64,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        IntegratorSpec { max_step: 1e-3 }
    }
}

impl IntegratorSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.max_step.is_finite() || self.max_step <= 0.0 || self.max_step > 0.01 {
            return Err(SimError::InvalidConfig(format!(
                "integrator max_step must lie in (0, 0.01] kappa-units, got {}",
                self.max_step
            )));
        }
        Ok(())
    }
}

/// Result of one propagation segment.
#[derive(Debug, Clone)]
pub struct Evolution {
    pub rho: DensityMatrix,
    /// Set when the top two Fock levels carry more than 1e-6 population.
    pub warning: Option<SimWarning>,
    /// |Tr rho - 1| accumulated before the final renormalization.
    pub trace_drift: f64,
}

/// Damping generator in `kappa t` units, evaluated into `out`.
fn rhs_into(rho: &Array2<C64>, nbar: f64, sqrt: &[f64], out: &mut Array2<C64>) {
    let dim = rho.nrows();
    let r = rho.as_slice().expect("standard layout");
    let o = out.as_slice_mut().expect("standard layout");
    let cu = 2.0 * (nbar + 1.0);
    let cd = 2.0 * nbar;
    for m in 0..dim {
        let a_up = if m + 1 < dim { cu * sqrt[m + 1] } else { 0.0 };
        let a_dn = cd * sqrt[m]; // zero at m = 0 via sqrt[0]
        let wm = if m + 1 < dim { (m + 1) as f64 } else { 0.0 };
        let base = m * dim;
        for n in 0..dim {
            let wn = if n + 1 < dim { (n + 1) as f64 } else { 0.0 };
            let decay = (nbar + 1.0) * ((m + n) as f64) + nbar * (wm + wn);
            let mut v = -decay * r[base + n];
            if m + 1 < dim && n + 1 < dim {
                v += a_up * sqrt[n + 1] * r[base + dim + n + 1];
            }
            if m > 0 && n > 0 {
                v += a_dn * sqrt[n] * r[base - dim + n - 1];
            }
            o[base + n] = v;
        }
    }
}

/// Propagates `rho` for `duration` under the bath, with classical
/// fourth-order fixed steps no larger than `integ.max_step` in `kappa t`.
/// The output is re-Hermitized, trace-renormalized, and checked for
/// positivity (error below -1e-6) and truncation pileup (warning when the
/// top two levels exceed 1e-6 population).
pub fn evolve(
    rho: &DensityMatrix,
    duration: f64,
    bath: &BathSpec,
    integ: &IntegratorSpec,
) -> Result<Evolution> {
    bath.validate()?;
    integ.validate()?;
    if !duration.is_finite() || duration < 0.0 {
        return Err(SimError::Domain(format!(
            "evolution duration must be finite and non-negative, got {duration}"
        )));
    }

    let total = bath.kappa * duration; // dimensionless kappa t
    if total == 0.0 {
        return Ok(Evolution {
            rho: rho.clone(),
            warning: None,
            trace_drift: 0.0,
        });
    }

    let dim = rho.dim();
    let steps = (total / integ.max_step).ceil() as usize;
    let h = total / steps as f64;
    let sqrt: Vec<f64> = (0..=dim).map(|n| (n as f64).sqrt()).collect();

    let mut y = rho.entries().clone();
    let mut deriv: Array2<C64> = Array2::zeros((dim, dim));
    let mut stage: Array2<C64> = Array2::zeros((dim, dim));
    let mut acc: Array2<C64> = Array2::zeros((dim, dim));

    for _ in 0..steps {
        // k1
        rhs_into(&y, bath.nbar, &sqrt, &mut deriv);
        acc.assign(&deriv);
        stage.assign(&y);
        stage.scaled_add(C64::new(0.5 * h, 0.0), &deriv);
        // k2
        rhs_into(&stage, bath.nbar, &sqrt, &mut deriv);
        acc.scaled_add(C64::new(2.0, 0.0), &deriv);
        stage.assign(&y);
        stage.scaled_add(C64::new(0.5 * h, 0.0), &deriv);
        // k3
        rhs_into(&stage, bath.nbar, &sqrt, &mut deriv);
        acc.scaled_add(C64::new(2.0, 0.0), &deriv);
        stage.assign(&y);
        stage.scaled_add(C64::new(h, 0.0), &deriv);
        // k4
        rhs_into(&stage, bath.nbar, &sqrt, &mut deriv);
        acc.scaled_add(C64::new(1.0, 0.0), &deriv);

        y.scaled_add(C64::new(h / 6.0, 0.0), &acc);
        linalg::hermitize_inplace(&mut y);
    }

    let trace_drift = (linalg::trace(&y).re - 1.0).abs();
    let out = DensityMatrix::from_raw_normalized(y, rho.trace_deficit())?;

    let gershgorin = linalg::gershgorin_lower_bound(out.entries());
    if gershgorin < -1e-6 {
        let min_eig = linalg::min_eigenvalue(out.entries());
        if min_eig < -1e-6 {
            return Err(SimError::Positivity {
                min_eigenvalue: min_eig,
            });
        }
    }

    let top = out.top_population(2);
    let warning = (top > 1e-6).then(|| SimWarning::Truncation {
        context: format!("top two Fock levels hold {top:.3e} population after drift"),
        magnitude: top,
    });

    Ok(Evolution {
        rho: out,
        warning,
        trace_drift,
    })
}
