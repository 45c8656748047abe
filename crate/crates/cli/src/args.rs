//! Argument definitions. Every run parameter is optional on the command line;
//! values resolve as flag, then config file, then default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ocbsim", version, about = "Post-selected cavity-cooling simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run one cooling protocol and write its trace
    Cool(CoolArgs),
    /// Scan a (g, kappa*dt) grid and write heatmap data
    Sweep(SweepArgs),
    /// Evaluate the Wigner function of a thermal or saved state
    Wigner(WignerArgs),
    /// Print a closed-form prediction as JSON
    Analytic(AnalyticArgs),
}

#[derive(Args)]
pub struct CoolArgs {
    /// Kick coupling, `re` or `re,im`
    #[arg(long)]
    pub g: Option<String>,
    /// Electron spacing in units of the dissipation time (kappa*dt)
    #[arg(long)]
    pub dt: Option<f64>,
    /// Bath occupation (default 1)
    #[arg(long = "kappa-nbar")]
    pub kappa_nbar: Option<f64>,
    /// Initial thermal occupation (default 1)
    #[arg(long)]
    pub nbar0: Option<f64>,
    /// Cavity dissipation rate (default 1; set 0 for a lossless run with --dt 0)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Cap on the number of cooling blocks (default 200)
    #[arg(long = "max-ocb")]
    pub max_ocb: Option<usize>,
    /// Fock truncation (default: recommended for nbar and |g|)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Relative tolerance of the adjacent-maxima stability criterion (default 0.01)
    #[arg(long = "stability-tol")]
    pub stability_tol: Option<f64>,
    /// Integrator step bound in kappa*t units (default 1e-3)
    #[arg(long = "max-step")]
    pub max_step: Option<f64>,
    /// Extra blocks to run after stability (default 0)
    #[arg(long)]
    pub confirm: Option<usize>,
    /// Drift before each kick instead of after it
    #[arg(long = "drift-first")]
    pub drift_first: bool,
    /// Output directory (default: $OCBSIM_OUT_DIR or .)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file (`key = value` lines); flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Comma-separated coupling grid (default: 17 log-spaced on [0.05, 1])
    #[arg(long = "g-values")]
    pub g_values: Option<String>,
    /// Comma-separated kappa*dt grid (default: 13 linear on [0.01, 0.4])
    #[arg(long = "dt-values")]
    pub dt_values: Option<String>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Bath occupation (default 1)
    #[arg(long = "kappa-nbar")]
    pub kappa_nbar: Option<f64>,
    /// Initial thermal occupation (default 1)
    #[arg(long)]
    pub nbar0: Option<f64>,
    /// Cavity dissipation rate (default 1)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Cap on blocks per cell (default 200)
    #[arg(long = "max-ocb")]
    pub max_ocb: Option<usize>,
    /// Fock truncation (default 128)
    #[arg(long)]
    pub dim: Option<usize>,
    /// Stability tolerance (default 0.01)
    #[arg(long = "stability-tol")]
    pub stability_tol: Option<f64>,
    /// Integrator step bound in kappa*t units (default 1e-3)
    #[arg(long = "max-step")]
    pub max_step: Option<f64>,
    /// Extra blocks after stability (default 0)
    #[arg(long)]
    pub confirm: Option<usize>,
    /// Drift before each kick instead of after it
    #[arg(long = "drift-first")]
    pub drift_first: bool,
    /// Additionally write the fixed-dt row nearest this grid value (repeatable)
    #[arg(long = "slice-dt")]
    pub slice_dt: Vec<f64>,
    /// Additionally write the fixed-g column at this grid value (repeatable)
    #[arg(long = "slice-g")]
    pub slice_g: Vec<f64>,
    /// Output directory (default: $OCBSIM_OUT_DIR or .)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file (`key = value` lines); flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct WignerArgs {
    /// Thermal occupation to evaluate
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Saved density-matrix file to evaluate instead of a thermal state
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Fock truncation for --nbar; must match the file for --state
    #[arg(long)]
    pub dim: Option<usize>,
    /// Half-width of the square evaluation window (default 6)
    #[arg(long)]
    pub range: Option<f64>,
    /// Points per axis (default 121)
    #[arg(long)]
    pub points: Option<usize>,
    /// Output directory (default: $OCBSIM_OUT_DIR or .)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Config file (`key = value` lines); flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct AnalyticArgs {
    /// One of: p-plus, nbar1, prob1, nbark, probk
    #[arg(long)]
    pub formula: String,
    /// Thermal occupation entering the formula
    #[arg(long)]
    pub nbar: f64,
    /// Coupling, `re` or `re,im`
    #[arg(long)]
    pub g: String,
    /// Block count for the k-round formulas
    #[arg(long)]
    pub k: Option<usize>,
}
