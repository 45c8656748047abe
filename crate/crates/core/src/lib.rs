//! Simulation library for cooling a thermal cavity mode with post-selected
//! conditional displacements.
//!
//! The protocol drives a single bosonic mode with a train of weak displacement
//! kicks, each conditioned on measuring an ancilla qubit in the `|+>` state.
//! Four kicks with couplings cycled through `g, ig, -g, -ig` form one
//! Oscillator Cooling Block (OCB). Between kicks the mode thermalizes toward
//! its bath under a Lindblad master equation. Post-selecting every ancilla
//! outcome trades success probability for a reduction of the mean photon
//! number.
//!
//! Module map:
//! - [`fock`]: truncated single-mode operators (ladder, number, displacement).
//! - [`states`]: density matrices, thermal states, Wigner functions,
//!   temperature conversions.
//! - [`lindblad`]: fixed-step propagation under the thermal damping equation.
//! - [`protocol`]: Kraus kicks, OCB sequencing, full cooling runs, stability
//!   detection.
//! - [`analytic`]: closed-form predictions used as independent cross-checks.
//! - [`sweep`]: parallel parameter scans over coupling strength and electron
//!   spacing.

pub mod analytic;
pub mod error;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod lindblad;
pub mod protocol;
pub mod states;
pub mod sweep;

pub use error::{SimError, SimWarning};
pub use fock::{ComplexMatrix, Coupling, FockSpace};
pub use lindblad::{BathSpec, Evolution, IntegratorSpec};
pub use protocol::{CoolingTrace, EventTag, ProtocolConfig, StableMetrics, TraceEvent};
pub use states::{DensityMatrix, ThermalOccupation, WignerGrid};
pub use sweep::{SliceAxis, SweepCell, SweepConfig, SweepResult};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
