//! Two-dimensional scans over coupling strength and electron spacing,
//! producing the cooling-ratio / success-probability heatmap data.
//!
//! Cells are independent cooling runs and are distributed over a bounded
//! worker pool; the collected grid is identical for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::fock::Coupling;
use crate::protocol::{run_cooling, stable_metrics, ProtocolConfig};
use crate::states::linspace;

/// Grid specification plus the base run configuration. `g` and
/// `delta_t_kappa` of `base` are overridden per cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub g_values: Vec<f64>,
    pub dt_values: Vec<f64>,
    pub base: ProtocolConfig,
    pub worker_count: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.g_values.is_empty() || self.dt_values.is_empty() {
            return Err(SimError::InvalidConfig("sweep grids must be non-empty".into()));
        }
        if self
            .g_values
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(SimError::InvalidConfig(
                "g grid must be finite and non-negative".into(),
            ));
        }
        if self.g_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidConfig("g grid must be ascending".into()));
        }
        if self
            .dt_values
            .iter()
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(SimError::InvalidConfig(
                "dt grid must be finite and non-negative".into(),
            ));
        }
        if self.dt_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::InvalidConfig("dt grid must be ascending".into()));
        }
        if self.worker_count == 0 {
            return Err(SimError::InvalidConfig("worker_count must be at least 1".into()));
        }
        if !(self.base.nbar_initial.is_finite() && self.base.nbar_initial > 0.0) {
            return Err(SimError::InvalidConfig(
                "sweep requires nbar_initial > 0 for a well-defined cooling ratio".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub g: f64,
    pub dt_kappa: f64,
    /// Final-to-initial photon-number ratio; NaN when the cell failed.
    pub cooling_ratio: f64,
    pub prob_final: f64,
    pub reached: bool,
    pub ocb_at_stability: usize,
    /// Failure description for cells that could not run.
    pub error: Option<String>,
}

/// Full sweep output: one record per grid cell, scanning `dt` then `g`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub cells: Vec<SweepCell>,
}

/// Default acceptance grid: 17 log-spaced couplings on [0.05, 1.0] by 13
/// linear spacings on [0.01, 0.4].
pub fn default_grid() -> (Vec<f64>, Vec<f64>) {
    (log_spaced(0.05, 1.0, 17), linspace(0.01, 0.4, 13))
}

/// Logarithmically spaced grid with both endpoints included.
pub fn log_spaced(min: f64, max: f64, count: usize) -> Vec<f64> {
    linspace(min.ln(), max.ln(), count)
        .into_iter()
        .map(f64::exp)
        .collect()
}

fn run_cell(base: &ProtocolConfig, g: f64, dt: f64) -> SweepCell {
    let mut config = base.clone();
    config.delta_t_kappa = dt;
    let outcome = Coupling::real(g).and_then(|coupling| {
        config.g = coupling;
        let trace = run_cooling(config.clone())?;
        Ok(stable_metrics(&trace, config.stability_rel_tol))
    });
    match outcome {
        Ok(metrics) => SweepCell {
            g,
            dt_kappa: dt,
            cooling_ratio: metrics.nbar_final / base.nbar_initial,
            prob_final: metrics.prob_final,
            reached: metrics.reached,
            ocb_at_stability: metrics.ocb_at_stability,
            error: None,
        },
        Err(err) => SweepCell {
            g,
            dt_kappa: dt,
            cooling_ratio: f64::NAN,
            prob_final: f64::NAN,
            reached: false,
            ocb_at_stability: 0,
            error: Some(err.to_string()),
        },
    }
}

/// Runs every `(g, dt)` cell of the grid. Cell failures are recorded in the
/// cell, never aborting the sweep; the result is independent of
/// `worker_count`.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let pairs: Vec<(f64, f64)> = config
        .dt_values
        .iter()
        .flat_map(|&dt| config.g_values.iter().map(move |&g| (g, dt)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count)
        .build()
        .map_err(|e| SimError::InvalidConfig(format!("worker pool: {e}")))?;
    let base = &config.base;
    let cells: Vec<SweepCell> =
        pool.install(|| pairs.par_iter().map(|&(g, dt)| run_cell(base, g, dt)).collect());

    Ok(SweepResult {
        config: config.clone(),
        cells,
    })
}

/// Axis selector for [`slice`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceAxis {
    G,
    DtKappa,
}

/// Extracts the row or column of the grid at the axis value, which must match
/// a grid point to within 1e-12.
pub fn slice(result: &SweepResult, axis: SliceAxis, value: f64) -> Result<Vec<SweepCell>> {
    let grid = match axis {
        SliceAxis::G => &result.config.g_values,
        SliceAxis::DtKappa => &result.config.dt_values,
    };
    let on_grid = grid.iter().any(|&v| (v - value).abs() <= 1e-12);
    if !on_grid {
        return Err(SimError::OffGrid {
            value,
            available: grid
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", "),
        });
    }
    let cells = result
        .cells
        .iter()
        .filter(|c| {
            let coord = match axis {
                SliceAxis::G => c.g,
                SliceAxis::DtKappa => c.dt_kappa,
            };
            (coord - value).abs() <= 1e-12
        })
        .cloned()
        .collect();
    Ok(cells)
}

impl SweepResult {
    /// CSV with header
    /// `g,dt_kappa,cooling_ratio,prob_final,reached,ocb_at_stability`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "g,dt_kappa,cooling_ratio,prob_final,reached,ocb_at_stability")?;
        for c in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                crate::io::format_g17(c.g),
                crate::io::format_g17(c.dt_kappa),
                crate::io::format_g17(c.cooling_ratio),
                crate::io::format_g17(c.prob_final),
                c.reached,
                c.ocb_at_stability
            )?;
        }
        Ok(())
    }

    /// Slice CSV shares the full-grid format.
    pub fn write_slice_csv<W: std::io::Write>(
        cells: &[SweepCell],
        mut out: W,
    ) -> std::io::Result<()> {
        writeln!(out, "g,dt_kappa,cooling_ratio,prob_final,reached,ocb_at_stability")?;
        for c in cells {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                crate::io::format_g17(c.g),
                crate::io::format_g17(c.dt_kappa),
                crate::io::format_g17(c.cooling_ratio),
                crate::io::format_g17(c.prob_final),
                c.reached,
                c.ocb_at_stability
            )?;
        }
        Ok(())
    }

    /// JSON document embedding the sweep configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep serialization cannot fail")
    }

    pub fn succeeded_fraction(&self) -> f64 {
        if self.cells.is_empty() {
            return 0.0;
        }
        let ok = self.cells.iter().filter(|c| c.error.is_none()).count();
        ok as f64 / self.cells.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::ProtocolConfig;

    fn small_base() -> ProtocolConfig {
        let mut base = ProtocolConfig::new(Coupling::real(0.1).unwrap(), 0.05, 1.0, 1.0);
        base.dim = 48;
        base.max_ocb = 40;
        base
    }

    #[test]
    fn degenerate_grid_equals_single_run() {
        let base = small_base();
        let sweep = SweepConfig {
            g_values: vec![0.1],
            dt_values: vec![0.05],
            base: base.clone(),
            worker_count: 1,
        };
        let result = run_sweep(&sweep).unwrap();
        assert_eq!(result.cells.len(), 1);

        let trace = run_cooling(base.clone()).unwrap();
        let metrics = stable_metrics(&trace, base.stability_rel_tol);
        let cell = &result.cells[0];
        assert_eq!(cell.cooling_ratio, metrics.nbar_final / base.nbar_initial);
        assert_eq!(cell.prob_final, metrics.prob_final);
        assert_eq!(cell.reached, metrics.reached);
    }

    #[test]
    fn result_is_independent_of_worker_count() {
        let base = small_base();
        let grid = |workers| SweepConfig {
            g_values: vec![0.05, 0.2],
            dt_values: vec![0.02, 0.1],
            base: base.clone(),
            worker_count: workers,
        };
        let serial = run_sweep(&grid(1)).unwrap();
        let parallel = run_sweep(&grid(3)).unwrap();
        assert_eq!(serial.cells.len(), parallel.cells.len());
        for (a, b) in serial.cells.iter().zip(parallel.cells.iter()) {
            assert_eq!(a.g, b.g);
            assert_eq!(a.dt_kappa, b.dt_kappa);
            assert_eq!(a.cooling_ratio.to_bits(), b.cooling_ratio.to_bits());
            assert_eq!(a.prob_final.to_bits(), b.prob_final.to_bits());
            assert_eq!(a.reached, b.reached);
            assert_eq!(a.ocb_at_stability, b.ocb_at_stability);
        }
    }

    #[test]
    fn zero_coupling_column_has_unit_probability() {
        let mut base = small_base();
        base.nbar_initial = 1.0;
        base.bath.nbar = 1.0;
        let sweep = SweepConfig {
            g_values: vec![0.0],
            dt_values: vec![0.05],
            base,
            worker_count: 1,
        };
        let result = run_sweep(&sweep).unwrap();
        let cell = &result.cells[0];
        assert!((cell.prob_final - 1.0).abs() < 1e-12);
        assert!((cell.cooling_ratio - 1.0).abs() < 1e-9);
        assert!(cell.reached);
    }

    #[test]
    fn cooling_ratio_rises_with_electron_spacing() {
        let base = small_base();
        let sweep = SweepConfig {
            g_values: vec![0.15],
            dt_values: vec![0.02, 0.1, 0.3],
            base,
            worker_count: 1,
        };
        let result = run_sweep(&sweep).unwrap();
        let ratios: Vec<f64> = result.cells.iter().map(|c| c.cooling_ratio).collect();
        assert!(
            ratios[1] >= ratios[0] * 0.99 && ratios[2] >= ratios[1] * 0.99,
            "ratios not increasing: {ratios:?}"
        );
    }

    #[test]
    fn failed_cells_are_flagged_not_fatal() {
        let mut base = small_base();
        base.nbar_initial = 5.0;
        base.dim = 16; // thermal tail far above the truncation budget
        let sweep = SweepConfig {
            g_values: vec![0.1, 0.2],
            dt_values: vec![0.05],
            base,
            worker_count: 1,
        };
        let result = run_sweep(&sweep).unwrap();
        assert_eq!(result.cells.len(), 2);
        for cell in &result.cells {
            assert!(cell.error.is_some());
            assert!(cell.cooling_ratio.is_nan());
            assert!(!cell.reached);
        }
        assert_eq!(result.succeeded_fraction(), 0.0);
    }

    #[test]
    fn slice_extracts_rows_and_columns() {
        let base = small_base();
        let sweep = SweepConfig {
            g_values: vec![0.05, 0.2],
            dt_values: vec![0.02, 0.1],
            base,
            worker_count: 2,
        };
        let result = run_sweep(&sweep).unwrap();

        let row = slice(&result, SliceAxis::DtKappa, 0.1).unwrap();
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|c| c.dt_kappa == 0.1));
        assert_eq!(row[0].g, 0.05);
        assert_eq!(row[1].g, 0.2);

        let col = slice(&result, SliceAxis::G, 0.2).unwrap();
        assert_eq!(col.len(), 2);
        assert_eq!(col[0].dt_kappa, 0.02);
        assert_eq!(col[1].dt_kappa, 0.1);

        let err = slice(&result, SliceAxis::G, 0.3).unwrap_err();
        assert!(err.to_string().contains("0.05"), "{err}");
    }

    #[test]
    fn default_grid_matches_advertised_shape() {
        let (gs, dts) = default_grid();
        assert_eq!(gs.len(), 17);
        assert_eq!(dts.len(), 13);
        assert!((gs[0] - 0.05).abs() < 1e-12);
        assert!((gs[16] - 1.0).abs() < 1e-12);
        assert!((dts[0] - 0.01).abs() < 1e-12);
        assert!((dts[12] - 0.4).abs() < 1e-12);
        // Log spacing: constant ratio.
        let r0 = gs[1] / gs[0];
        for w in gs.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-9);
        }
    }

    #[test]
    fn csv_layout() {
        let base = small_base();
        let sweep = SweepConfig {
            g_values: vec![0.1],
            dt_values: vec![0.05],
            base,
            worker_count: 1,
        };
        let result = run_sweep(&sweep).unwrap();
        let mut buf = Vec::new();
        result.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "g,dt_kappa,cooling_ratio,prob_final,reached,ocb_at_stability"
        );
        assert_eq!(lines.count(), 1);
    }
}
