//! The cooling protocol: post-selected displacement kicks, four-phase block
//! sequencing, interleaved thermalization, and stability detection.
//!
//! One electron kick applies the Kraus operator `D_+ = (1 + D(g)) / 2` to the
//! cavity and renormalizes, multiplying the running success probability by
//! `Tr(D_+ rho D_+^dag)`. Four kicks with couplings `g, ig, -g, -ig` close a
//! loop in phase space and form one Oscillator Cooling Block (OCB). With a
//! finite electron spacing the mode rethermalizes toward the bath between
//! kicks; a run settles into a sawtooth whose adjacent per-block maxima
//! eventually agree to within the stability tolerance.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Result, SimError, SimWarning};
use crate::fock::{ComplexMatrix, Coupling, FockSpace};
use crate::lindblad::{evolve, BathSpec, IntegratorSpec};
use crate::linalg;
use crate::states::{thermal_state, DensityMatrix, ThermalOccupation};

/// All physical and numerical parameters of one cooling run.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ProtocolConfig {
    /// Kick coupling, cycled through the four block phases.
    pub g: Coupling,
    /// Electron spacing in units of the dissipation time (`kappa * dt`).
    pub delta_t_kappa: f64,
    pub bath: BathSpec,
    /// Initial thermal occupation of the cavity.
    pub nbar_initial: f64,
    /// Hard cap on the number of blocks.
    pub max_ocb: usize,
    /// Relative tolerance for the adjacent-maxima stability criterion.
    pub stability_rel_tol: f64,
    /// Extra blocks to run after stability is detected.
    #[serde(default)]
    pub confirmation_ocb: usize,
    /// Put the drift segment before each kick instead of after it.
    #[serde(default)]
    pub drift_first: bool,
    /// Fock truncation.
    pub dim: usize,
    pub integrator: IntegratorSpec,
    /// Optional per-block coupling override; block `k` (1-based) uses entry
    /// `k-1`, clamped to the last entry.
    #[serde(default)]
    pub g_schedule: Option<Vec<Coupling>>,
}

impl ProtocolConfig {
    /// Baseline configuration: unit-rate bath, 1% stability tolerance,
    /// default integrator, no schedule.
    pub fn new(g: Coupling, delta_t_kappa: f64, nbar_bath: f64, nbar_initial: f64) -> Self {
        ProtocolConfig {
            g,
            delta_t_kappa,
            bath: BathSpec {
                kappa: 1.0,
                nbar: nbar_bath,
            },
            nbar_initial,
            max_ocb: 200,
            stability_rel_tol: 0.01,
            confirmation_ocb: 0,
            drift_first: false,
            dim: FockSpace::recommended_dim(nbar_initial.max(nbar_bath), g.magnitude()),
            integrator: IntegratorSpec::default(),
            g_schedule: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bath.validate()?;
        self.integrator.validate()?;
        if !self.delta_t_kappa.is_finite() || self.delta_t_kappa < 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "delta_t_kappa must be finite and non-negative, got {}",
                self.delta_t_kappa
            )));
        }
        if self.delta_t_kappa > 0.0 && self.bath.kappa == 0.0 {
            return Err(SimError::InvalidConfig(
                "delta_t_kappa > 0 requires kappa > 0 (a drift in kappa-units needs a rate)"
                    .into(),
            ));
        }
        if !self.nbar_initial.is_finite() || self.nbar_initial < 0.0 {
            return Err(SimError::InvalidConfig(format!(
                "nbar_initial must be finite and non-negative, got {}",
                self.nbar_initial
            )));
        }
        if self.max_ocb == 0 {
            return Err(SimError::InvalidConfig("max_ocb must be at least 1".into()));
        }
        if !(self.stability_rel_tol > 0.0 && self.stability_rel_tol < 1.0) {
            return Err(SimError::InvalidConfig(format!(
                "stability_rel_tol must lie in (0, 1), got {}",
                self.stability_rel_tol
            )));
        }
        if self.dim < 2 {
            return Err(SimError::DimensionTooSmall(self.dim));
        }
        if let Some(schedule) = &self.g_schedule {
            if schedule.is_empty() {
                return Err(SimError::InvalidConfig(
                    "g_schedule, when present, must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }

    fn coupling_for_ocb(&self, ocb_index: usize) -> Coupling {
        match &self.g_schedule {
            Some(schedule) => schedule[(ocb_index - 1).min(schedule.len() - 1)],
            None => self.g,
        }
    }
}

/// What a trace event records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventTag {
    Initial,
    PostKick,
    PostDrift,
}

impl EventTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventTag::Initial => "initial",
            EventTag::PostKick => "post_kick",
            EventTag::PostDrift => "post_drift",
        }
    }
}

/// One point of the time-ordered cooling record.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEvent {
    /// Time in units of `1/kappa`.
    pub time_kappa: f64,
    pub nbar: f64,
    /// Product of all per-electron post-selection probabilities so far.
    pub cumulative_prob: f64,
    pub tag: EventTag,
    /// Block phase 0-3 for kick events.
    pub kick_phase: Option<u8>,
    /// 1-based block index; `None` for the initial event.
    pub ocb: Option<usize>,
}

/// Full record of one cooling run.
#[derive(Debug, Clone, Serialize)]
pub struct CoolingTrace {
    pub config: ProtocolConfig,
    pub events: Vec<TraceEvent>,
    pub warnings: Vec<String>,
    /// State at the end of the run. Not serialized; see the state-file format
    /// for persistence.
    #[serde(skip)]
    pub final_state: Option<DensityMatrix>,
}

impl CoolingTrace {
    /// CSV with header `t_kappa,nbar,p_succ,tag,phase`; the phase column is
    /// empty for non-kick events.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t_kappa,nbar,p_succ,tag,phase")?;
        for e in &self.events {
            let phase = e.kick_phase.map(|p| p.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{}",
                crate::io::format_g17(e.time_kappa),
                crate::io::format_g17(e.nbar),
                crate::io::format_g17(e.cumulative_prob),
                e.tag.as_str(),
                phase
            )?;
        }
        Ok(())
    }

    /// JSON document embedding the full configuration for provenance.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serialization cannot fail")
    }

    /// Per-block maxima of the photon number: `(block index, max nbar,
    /// cumulative probability at the first event attaining the max)`.
    pub fn per_ocb_maxima(&self) -> Vec<(usize, f64, f64)> {
        let mut maxima: Vec<(usize, f64, f64)> = Vec::new();
        for e in &self.events {
            let Some(ocb) = e.ocb else { continue };
            match maxima.last_mut() {
                Some((idx, max, prob)) if *idx == ocb => {
                    if e.nbar > *max {
                        *max = e.nbar;
                        *prob = e.cumulative_prob;
                    }
                }
                _ => maxima.push((ocb, e.nbar, e.cumulative_prob)),
            }
        }
        maxima
    }
}

/// Stability summary of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableMetrics {
    pub nbar_final: f64,
    pub prob_final: f64,
    pub ocb_at_stability: usize,
    pub reached: bool,
}

/// Post-selection Kraus operator for the `|+>` outcome: `(1 + D(g)) / 2`.
pub fn kraus_plus(space: &FockSpace, g: Coupling) -> ComplexMatrix {
    let mut k = space.displacement(g);
    k.mapv_inplace(|z| 0.5 * z);
    for n in 0..space.dim() {
        k[[n, n]] += 0.5;
    }
    k
}

/// Kraus operator for the discarded `|->` outcome: `(1 - D(g)) / 2`.
pub fn kraus_minus(space: &FockSpace, g: Coupling) -> ComplexMatrix {
    let mut k = space.displacement(g);
    k.mapv_inplace(|z| -0.5 * z);
    for n in 0..space.dim() {
        k[[n, n]] += 0.5;
    }
    k
}

/// Applies a Kraus operator and renormalizes: returns the conditioned state
/// and the outcome probability `Tr(K rho K^dag)`.
pub fn apply_kraus(rho: &DensityMatrix, kraus: &ComplexMatrix) -> Result<(DensityMatrix, f64)> {
    if kraus.nrows() != rho.dim() || kraus.ncols() != rho.dim() {
        return Err(SimError::DimensionMismatch {
            left: kraus.nrows(),
            right: rho.dim(),
        });
    }
    let m = kraus.dot(rho.entries()).dot(&linalg::dagger(kraus));
    let tr = linalg::trace(&m);
    // The probability is bounded by 1 for a contraction; roundoff may poke
    // a few ulp above.
    let prob = tr.re.min(1.0);
    if prob < 1e-12 {
        return Err(SimError::DegenerateSelection { prob });
    }
    let out = DensityMatrix::from_raw_normalized(m, rho.trace_deficit())?;
    Ok((out, prob))
}

/// One post-selected kick at coupling `g`.
pub fn apply_postselected(rho: &DensityMatrix, g: Coupling) -> Result<(DensityMatrix, f64)> {
    let space = FockSpace::new(rho.dim())?;
    apply_kraus(rho, &kraus_plus(&space, g))
}

/// Kick couplings of one block in application order.
pub fn ocb_phases(g: Coupling) -> [Coupling; 4] {
    let i = C64::new(0.0, 1.0);
    let v = g.value();
    [
        Coupling(v),
        Coupling(i * v),
        Coupling(-v),
        Coupling(-i * v),
    ]
}

struct KrausSet {
    plus: [ComplexMatrix; 4],
    coupling: Coupling,
}

impl KrausSet {
    fn build(space: &FockSpace, g: Coupling) -> Self {
        let phases = ocb_phases(g);
        KrausSet {
            plus: phases.map(|p| kraus_plus(space, p)),
            coupling: g,
        }
    }
}

/// One full block: four post-selected kicks in phase order, no drift.
/// Returns the conditioned state and the product of the four kick
/// probabilities.
pub fn apply_ocb(rho: &DensityMatrix, g: Coupling) -> Result<(DensityMatrix, f64)> {
    let space = FockSpace::new(rho.dim())?;
    let set = KrausSet::build(&space, g);
    let mut state = rho.clone();
    let mut prob = 1.0;
    for kraus in &set.plus {
        let (next, p) = apply_kraus(&state, kraus)?;
        state = next;
        prob *= p;
    }
    Ok((state, prob))
}

/// Conditional displacement on the joint electron-cavity space, block
/// diagonal in the electron basis: identity on `|0>`, `D(g)` on `|1>`.
/// Verification-only construction; the protocol works with the reduced Kraus
/// operators.
pub fn joint_cd_matrix(space: &FockSpace, g: Coupling) -> ComplexMatrix {
    let dim = space.dim();
    let d = space.displacement(g);
    let mut joint = Array2::zeros((2 * dim, 2 * dim));
    for m in 0..dim {
        joint[[m, m]] = C64::new(1.0, 0.0);
        for n in 0..dim {
            joint[[dim + m, dim + n]] = d[[m, n]];
        }
    }
    joint
}

/// Runs the full cooling protocol from a thermal initial state.
///
/// Each block applies four kicks; every kick is instantaneous and, unless
/// `drift_first` is set, is followed by one drift segment of `delta_t_kappa`
/// (in `1/kappa` units) under the bath. The run stops at `max_ocb` blocks or
/// once adjacent per-block maxima agree within `stability_rel_tol`, plus the
/// configured number of confirmation blocks.
pub fn run_cooling(config: ProtocolConfig) -> Result<CoolingTrace> {
    config.validate()?;
    let space = FockSpace::new(config.dim)?;
    let mut rho = thermal_state(&space, ThermalOccupation::new(config.nbar_initial)?)?;

    let mut warnings: Vec<String> = Vec::new();
    if config.g.outside_validated_range() {
        warnings.push(
            SimWarning::CouplingOutsideValidatedRange {
                magnitude: config.g.magnitude(),
            }
            .to_string(),
        );
    }

    let mut events = Vec::new();
    events.push(TraceEvent {
        time_kappa: 0.0,
        nbar: rho.mean_photons(),
        cumulative_prob: 1.0,
        tag: EventTag::Initial,
        kick_phase: None,
        ocb: None,
    });

    let mut kraus = KrausSet::build(&space, config.coupling_for_ocb(1));
    check_kick_truncation(&space, kraus.coupling, &mut warnings);

    let mut time = 0.0f64;
    let mut cumulative = 1.0f64;
    let mut maxima: Vec<f64> = Vec::new();
    let mut stable_at: Option<usize> = None;
    let mut confirmations_left = 0usize;
    let mut drift_warned = false;

    for ocb_index in 1..=config.max_ocb {
        let wanted = config.coupling_for_ocb(ocb_index);
        if wanted != kraus.coupling {
            kraus = KrausSet::build(&space, wanted);
            check_kick_truncation(&space, wanted, &mut warnings);
        }

        let mut ocb_max = f64::NEG_INFINITY;
        for phase in 0..4u8 {
            if config.drift_first {
                drift(
                    &mut rho,
                    &mut time,
                    &config,
                    &mut warnings,
                    &mut drift_warned,
                )?;
                events.push(TraceEvent {
                    time_kappa: time,
                    nbar: rho.mean_photons(),
                    cumulative_prob: cumulative,
                    tag: EventTag::PostDrift,
                    kick_phase: None,
                    ocb: Some(ocb_index),
                });
                ocb_max = ocb_max.max(rho.mean_photons());
            }

            let (next, p) = apply_kraus(&rho, &kraus.plus[phase as usize])?;
            rho = next;
            cumulative *= p;
            events.push(TraceEvent {
                time_kappa: time,
                nbar: rho.mean_photons(),
                cumulative_prob: cumulative,
                tag: EventTag::PostKick,
                kick_phase: Some(phase),
                ocb: Some(ocb_index),
            });
            ocb_max = ocb_max.max(rho.mean_photons());

            if !config.drift_first {
                drift(
                    &mut rho,
                    &mut time,
                    &config,
                    &mut warnings,
                    &mut drift_warned,
                )?;
                events.push(TraceEvent {
                    time_kappa: time,
                    nbar: rho.mean_photons(),
                    cumulative_prob: cumulative,
                    tag: EventTag::PostDrift,
                    kick_phase: None,
                    ocb: Some(ocb_index),
                });
                ocb_max = ocb_max.max(rho.mean_photons());
            }
        }

        maxima.push(ocb_max);
        match stable_at {
            None => {
                let n = maxima.len();
                if n >= 2 && adjacent_maxima_stable(maxima[n - 2], maxima[n - 1], config.stability_rel_tol)
                {
                    stable_at = Some(ocb_index);
                    if config.confirmation_ocb == 0 {
                        break;
                    }
                    confirmations_left = config.confirmation_ocb;
                }
            }
            Some(_) => {
                confirmations_left -= 1;
                if confirmations_left == 0 {
                    break;
                }
            }
        }
    }

    Ok(CoolingTrace {
        config,
        events,
        warnings,
        final_state: Some(rho),
    })
}

fn adjacent_maxima_stable(previous: f64, current: f64, rel_tol: f64) -> bool {
    (current - previous).abs() <= rel_tol * previous
}

fn drift(
    rho: &mut DensityMatrix,
    time: &mut f64,
    config: &ProtocolConfig,
    warnings: &mut Vec<String>,
    drift_warned: &mut bool,
) -> Result<()> {
    if config.delta_t_kappa > 0.0 {
        let duration = config.delta_t_kappa / config.bath.kappa;
        let evolved = evolve(rho, duration, &config.bath, &config.integrator)?;
        *rho = evolved.rho;
        if let Some(w) = evolved.warning {
            if !*drift_warned {
                warnings.push(w.to_string());
                *drift_warned = true;
            }
        }
    }
    *time += config.delta_t_kappa;
    Ok(())
}

fn check_kick_truncation(space: &FockSpace, g: Coupling, warnings: &mut Vec<String>) {
    let deficit = space.displacement_truncation_deficit(g);
    if deficit > 1e-8 {
        warnings.push(
            SimWarning::Truncation {
                context: format!(
                    "displacement at |g| = {:.3} leaks past dim {}",
                    g.magnitude(),
                    space.dim()
                ),
                magnitude: deficit,
            }
            .to_string(),
        );
    }
}

/// Scans per-block maxima for the first adjacent pair within `rel_tol` and
/// reports the photon number and cumulative probability at that point.
pub fn stable_metrics(trace: &CoolingTrace, rel_tol: f64) -> StableMetrics {
    let maxima = trace.per_ocb_maxima();
    if maxima.is_empty() {
        let (nbar, prob) = trace
            .events
            .first()
            .map(|e| (e.nbar, e.cumulative_prob))
            .unwrap_or((f64::NAN, f64::NAN));
        return StableMetrics {
            nbar_final: nbar,
            prob_final: prob,
            ocb_at_stability: 0,
            reached: false,
        };
    }
    for w in maxima.windows(2) {
        let (_, prev_max, _) = w[0];
        let (idx, max, prob) = w[1];
        if adjacent_maxima_stable(prev_max, max, rel_tol) {
            return StableMetrics {
                nbar_final: max,
                prob_final: prob,
                ocb_at_stability: idx,
                reached: true,
            };
        }
    }
    let (idx, max, prob) = *maxima.last().unwrap();
    StableMetrics {
        nbar_final: max,
        prob_final: prob,
        ocb_at_stability: idx,
        reached: false,
    }
}
