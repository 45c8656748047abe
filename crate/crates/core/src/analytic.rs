//! Closed-form predictions for post-selected cooling of a thermal state.
//!
//! These expressions are exact or perturbative results derived by operator
//! algebra, independent of the dense numerical engine, and serve as its
//! cross-checks. The perturbative forms hold for `|g|^2 (2 nbar + 1) << 1`;
//! nothing here enforces that regime, since probing where the expansion
//! breaks is part of the point.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::fock::{ComplexMatrix, Coupling, FockSpace};

/// Exact single-kick post-selection probability on a thermal state:
/// `P(+) = (1 + exp(-|g|^2 (nbar + 1/2))) / 2`.
pub fn p_plus_exact(nbar: f64, g: Coupling) -> f64 {
    let g2 = g.magnitude().powi(2);
    0.5 * (1.0 + (-g2 * (nbar + 0.5)).exp())
}

/// Mean photon number after one four-kick block, to leading order:
/// `nbar (1 - 2 |g|^2 (nbar + 1))`.
pub fn nbar_one_round(nbar0: f64, g: Coupling) -> f64 {
    let g2 = g.magnitude().powi(2);
    nbar0 * (1.0 - 2.0 * g2 * (nbar0 + 1.0))
}

/// Probability of post-selecting all four electrons of one block, to leading
/// order: `1 - |g|^2 (2 nbar + 1)`.
pub fn prob_one_round(nbar0: f64, g: Coupling) -> f64 {
    let g2 = g.magnitude().powi(2);
    1.0 - g2 * (2.0 * nbar0 + 1.0)
}

/// Photon number after `k` blocks in the compounded (power) form,
/// `nbar (1 - 2 |g|^2 (nbar + 1))^k`, valid while the occupation has not
/// dropped appreciably (`k << |g|^{-2}`).
pub fn nbar_k_rounds(nbar0: f64, g: Coupling, k: usize) -> f64 {
    if k == 1 {
        return nbar_one_round(nbar0, g);
    }
    let g2 = g.magnitude().powi(2);
    nbar0 * (1.0 - 2.0 * g2 * (nbar0 + 1.0)).powi(k as i32)
}

/// Cumulative success probability after `k` blocks in the compounded form,
/// `(1 - |g|^2 (2 nbar + 1))^k`.
pub fn prob_k_rounds(nbar0: f64, g: Coupling, k: usize) -> f64 {
    if k == 1 {
        return prob_one_round(nbar0, g);
    }
    let g2 = g.magnitude().powi(2);
    (1.0 - g2 * (2.0 * nbar0 + 1.0)).powi(k as i32)
}

/// Linearization of [`nbar_k_rounds`]: `nbar (1 - 2 k |g|^2 (nbar + 1))`.
pub fn nbar_k_rounds_linearized(nbar0: f64, g: Coupling, k: usize) -> f64 {
    let g2 = g.magnitude().powi(2);
    nbar0 * (1.0 - 2.0 * k as f64 * g2 * (nbar0 + 1.0))
}

/// Linearization of [`prob_k_rounds`]: `1 - k |g|^2 (2 nbar + 1)`.
pub fn prob_k_rounds_linearized(nbar0: f64, g: Coupling, k: usize) -> f64 {
    let g2 = g.magnitude().powi(2);
    1.0 - k as f64 * g2 * (2.0 * nbar0 + 1.0)
}

/// True when the perturbative expansion parameter `|g|^2 (2 nbar + 1)` stays
/// below 0.5.
pub fn in_validity_regime(nbar0: f64, g: Coupling) -> bool {
    g.magnitude().powi(2) * (2.0 * nbar0 + 1.0) <= 0.5
}

/// Leading-order expansion of the four-kick Kraus product:
/// `1 - (|g|^2 / 2) (2 a^dag a + 1 - i)`, for comparison against the exact
/// operator product.
pub fn d_ocb_approx_matrix(space: &FockSpace, g: Coupling) -> ComplexMatrix {
    let g2 = g.magnitude().powi(2);
    let mut m = space.identity();
    for n in 0..space.dim() {
        m[[n, n]] -= 0.5 * g2 * C64::new(2.0 * n as f64 + 1.0, -1.0);
    }
    m
}

/// Which expansion produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderTag {
    OneRound,
    KRounds,
}

/// Paired occupation and probability prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativePrediction {
    pub nbar_pred: f64,
    pub prob_pred: f64,
    pub order_tag: OrderTag,
}

pub fn predict_one_round(nbar0: f64, g: Coupling) -> PerturbativePrediction {
    PerturbativePrediction {
        nbar_pred: nbar_one_round(nbar0, g),
        prob_pred: prob_one_round(nbar0, g),
        order_tag: OrderTag::OneRound,
    }
}

pub fn predict_k_rounds(nbar0: f64, g: Coupling, k: usize) -> PerturbativePrediction {
    PerturbativePrediction {
        nbar_pred: nbar_k_rounds(nbar0, g, k),
        prob_pred: prob_k_rounds(nbar0, g, k),
        order_tag: OrderTag::KRounds,
    }
}
