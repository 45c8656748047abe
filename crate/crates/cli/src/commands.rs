//! Command implementations: resolve flags against config files and defaults,
//! run the library, write plot-ready artifacts plus a manifest.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use ocbsim::fock::FockSpace;
use ocbsim::io::{read_density_matrix, write_density_matrix};
use ocbsim::protocol::{run_cooling, stable_metrics, ProtocolConfig};
use ocbsim::states::{linspace, thermal_state, wigner, ThermalOccupation};
use ocbsim::sweep::{default_grid, run_sweep, slice, SliceAxis, SweepConfig, SweepResult};
use ocbsim::{analytic, BathSpec, Coupling, IntegratorSpec};

use crate::args::{AnalyticArgs, Command, CoolArgs, SweepArgs, WignerArgs};
use crate::config_file::{self, resolve, ConfigMap};
use crate::manifest::RunManifest;
use crate::Failure;

const ENV_OUT_DIR: &str = "OCBSIM_OUT_DIR";

pub fn dispatch(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Cool(args) => cmd_cool(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Wigner(args) => cmd_wigner(args),
        Command::Analytic(args) => cmd_analytic(args),
    }
}

fn out_dir(flag: Option<PathBuf>) -> Result<PathBuf, Failure> {
    let dir = flag
        .or_else(|| std::env::var_os(ENV_OUT_DIR).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_config(path: &Option<PathBuf>, allowed: &[&str]) -> Result<ConfigMap, Failure> {
    let map = match path {
        Some(p) => config_file::load(p)?,
        None => ConfigMap::new(),
    };
    config_file::check_keys(&map, allowed)?;
    Ok(map)
}

fn parse_coupling(raw: &str) -> Result<Coupling, Failure> {
    raw.parse::<Coupling>()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_schedule(raw: &str) -> Result<Vec<Coupling>, Failure> {
    raw.split(';')
        .map(|part| parse_coupling(part.trim()))
        .collect()
}

fn parse_grid(raw: &str, what: &str) -> Result<Vec<f64>, Failure> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("bad {what} entry {part:?}")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// cool

const COOL_KEYS: &[&str] = &[
    "g",
    "dt",
    "kappa",
    "kappa-nbar",
    "nbar0",
    "max-ocb",
    "dim",
    "stability-tol",
    "max-step",
    "confirm",
    "drift-first",
    "g-schedule",
];

struct CoolSetup {
    config: ProtocolConfig,
}

fn resolve_cool(args: &CoolArgs, map: &ConfigMap) -> Result<CoolSetup, Failure> {
    let g_raw = resolve(args.g.clone(), map, "g")?
        .ok_or_else(|| Failure::Usage("--g is required (or `g` in the config file)".into()))?;
    let g = parse_coupling(&g_raw)?;
    let delta_t_kappa = resolve(args.dt, map, "dt")?
        .ok_or_else(|| Failure::Usage("--dt is required (or `dt` in the config file)".into()))?;
    let kappa = resolve(args.kappa, map, "kappa")?.unwrap_or(1.0);
    let nbar_bath = resolve(args.kappa_nbar, map, "kappa-nbar")?.unwrap_or(1.0);
    let nbar_initial = resolve(args.nbar0, map, "nbar0")?.unwrap_or(1.0);
    let max_ocb = resolve(args.max_ocb, map, "max-ocb")?.unwrap_or(200);
    let stability_rel_tol = resolve(args.stability_tol, map, "stability-tol")?.unwrap_or(0.01);
    let max_step = resolve(args.max_step, map, "max-step")?.unwrap_or(1e-3);
    let confirmation_ocb = resolve(args.confirm, map, "confirm")?.unwrap_or(0);
    let drift_first = if args.drift_first {
        true
    } else {
        resolve(None::<bool>, map, "drift-first")?.unwrap_or(false)
    };
    let dim = resolve(args.dim, map, "dim")?.unwrap_or_else(|| {
        FockSpace::recommended_dim(nbar_initial.max(nbar_bath), g.magnitude())
    });
    let g_schedule = match resolve(None::<String>, map, "g-schedule")? {
        Some(raw) => Some(parse_schedule(&raw)?),
        None => None,
    };

    Ok(CoolSetup {
        config: ProtocolConfig {
            g,
            delta_t_kappa,
            bath: BathSpec {
                kappa,
                nbar: nbar_bath,
            },
            nbar_initial,
            max_ocb,
            stability_rel_tol,
            confirmation_ocb,
            drift_first,
            dim,
            integrator: IntegratorSpec { max_step },
            g_schedule,
        },
    })
}

fn cool_conf_text(config: &ProtocolConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "g = {}", config.g);
    let _ = writeln!(s, "dt = {}", config.delta_t_kappa);
    let _ = writeln!(s, "kappa = {}", config.bath.kappa);
    let _ = writeln!(s, "kappa-nbar = {}", config.bath.nbar);
    let _ = writeln!(s, "nbar0 = {}", config.nbar_initial);
    let _ = writeln!(s, "max-ocb = {}", config.max_ocb);
    let _ = writeln!(s, "dim = {}", config.dim);
    let _ = writeln!(s, "stability-tol = {}", config.stability_rel_tol);
    let _ = writeln!(s, "max-step = {}", config.integrator.max_step);
    let _ = writeln!(s, "confirm = {}", config.confirmation_ocb);
    let _ = writeln!(s, "drift-first = {}", config.drift_first);
    if let Some(schedule) = &config.g_schedule {
        let joined: Vec<String> = schedule.iter().map(|g| g.to_string()).collect();
        let _ = writeln!(s, "g-schedule = {}", joined.join("; "));
    }
    s
}

fn cmd_cool(args: CoolArgs) -> Result<i32, Failure> {
    let started = Instant::now();
    let map = load_config(&args.config, COOL_KEYS)?;
    let setup = resolve_cool(&args, &map)?;
    let dir = out_dir(args.out)?;

    let config = setup.config;
    let trace = run_cooling(config.clone())?;
    let metrics = stable_metrics(&trace, config.stability_rel_tol);

    for w in &trace.warnings {
        eprintln!("warning: {w}");
    }

    trace.write_csv(BufWriter::new(File::create(dir.join("trace.csv"))?))?;
    std::fs::write(dir.join("trace.json"), trace.to_json())?;
    if let Some(state) = &trace.final_state {
        write_density_matrix(state, BufWriter::new(File::create(dir.join("final_state.dm"))?))?;
    }
    std::fs::write(dir.join("effective.conf"), cool_conf_text(&config))?;

    println!("nbar_f = {}", metrics.nbar_final);
    println!("P_f = {}", metrics.prob_final);
    println!(
        "stable_ocb = {} (reached = {})",
        metrics.ocb_at_stability, metrics.reached
    );

    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "cool",
        out_dir: dir.display().to_string(),
        artifacts: vec![
            "trace.csv".into(),
            "trace.json".into(),
            "final_state.dm".into(),
            "effective.conf".into(),
        ],
        effective_config: serde_json::to_value(&config)
            .map_err(|e| Failure::Run(format!("config serialization: {e}")))?,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&dir)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// sweep

const SWEEP_KEYS: &[&str] = &[
    "g-values",
    "dt-values",
    "workers",
    "kappa",
    "kappa-nbar",
    "nbar0",
    "max-ocb",
    "dim",
    "stability-tol",
    "max-step",
    "confirm",
    "drift-first",
];

fn resolve_sweep(args: &SweepArgs, map: &ConfigMap) -> Result<SweepConfig, Failure> {
    let (default_g, default_dt) = default_grid();
    let g_values = match resolve(args.g_values.clone(), map, "g-values")? {
        Some(raw) => parse_grid(&raw, "g grid")?,
        None => default_g,
    };
    let dt_values = match resolve(args.dt_values.clone(), map, "dt-values")? {
        Some(raw) => parse_grid(&raw, "dt grid")?,
        None => default_dt,
    };
    let worker_count = match resolve(args.workers, map, "workers")? {
        Some(w) => w,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };

    let nbar_bath = resolve(args.kappa_nbar, map, "kappa-nbar")?.unwrap_or(1.0);
    let nbar_initial = resolve(args.nbar0, map, "nbar0")?.unwrap_or(1.0);
    let kappa = resolve(args.kappa, map, "kappa")?.unwrap_or(1.0);
    let max_ocb = resolve(args.max_ocb, map, "max-ocb")?.unwrap_or(200);
    let dim = resolve(args.dim, map, "dim")?.unwrap_or(128);
    let stability_rel_tol = resolve(args.stability_tol, map, "stability-tol")?.unwrap_or(0.01);
    let max_step = resolve(args.max_step, map, "max-step")?.unwrap_or(1e-3);
    let confirmation_ocb = resolve(args.confirm, map, "confirm")?.unwrap_or(0);
    let drift_first = if args.drift_first {
        true
    } else {
        resolve(None::<bool>, map, "drift-first")?.unwrap_or(false)
    };

    let first_g = *g_values
        .first()
        .ok_or_else(|| Failure::Usage("g grid is empty".into()))?;
    let first_dt = *dt_values
        .first()
        .ok_or_else(|| Failure::Usage("dt grid is empty".into()))?;
    let base = ProtocolConfig {
        g: Coupling::real(first_g).map_err(|e| Failure::Usage(e.to_string()))?,
        delta_t_kappa: first_dt,
        bath: BathSpec {
            kappa,
            nbar: nbar_bath,
        },
        nbar_initial,
        max_ocb,
        stability_rel_tol,
        confirmation_ocb,
        drift_first,
        dim,
        integrator: IntegratorSpec { max_step },
        g_schedule: None,
    };
    Ok(SweepConfig {
        g_values,
        dt_values,
        base,
        worker_count,
    })
}

fn sweep_conf_text(config: &SweepConfig) -> String {
    let join = |values: &[f64]| {
        values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut s = String::new();
    let _ = writeln!(s, "g-values = {}", join(&config.g_values));
    let _ = writeln!(s, "dt-values = {}", join(&config.dt_values));
    let _ = writeln!(s, "workers = {}", config.worker_count);
    let _ = writeln!(s, "kappa = {}", config.base.bath.kappa);
    let _ = writeln!(s, "kappa-nbar = {}", config.base.bath.nbar);
    let _ = writeln!(s, "nbar0 = {}", config.base.nbar_initial);
    let _ = writeln!(s, "max-ocb = {}", config.base.max_ocb);
    let _ = writeln!(s, "dim = {}", config.base.dim);
    let _ = writeln!(s, "stability-tol = {}", config.base.stability_rel_tol);
    let _ = writeln!(s, "max-step = {}", config.base.integrator.max_step);
    let _ = writeln!(s, "confirm = {}", config.base.confirmation_ocb);
    let _ = writeln!(s, "drift-first = {}", config.base.drift_first);
    s
}

fn slice_file_name(prefix: &str, value: f64) -> String {
    format!("slice_{prefix}_{value}.csv")
}

fn cmd_sweep(args: SweepArgs) -> Result<i32, Failure> {
    let started = Instant::now();
    let map = load_config(&args.config, SWEEP_KEYS)?;
    let config = resolve_sweep(&args, &map)?;
    let dir = out_dir(args.out)?;

    // Validate slice requests against the grid before paying for the sweep.
    for v in &args.slice_dt {
        if !config.dt_values.iter().any(|g| (g - v).abs() <= 1e-12) {
            return Err(Failure::Usage(format!(
                "--slice-dt {v} not on the grid; available: {}",
                config
                    .dt_values
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    for v in &args.slice_g {
        if !config.g_values.iter().any(|g| (g - v).abs() <= 1e-12) {
            return Err(Failure::Usage(format!(
                "--slice-g {v} not on the grid; available: {}",
                config
                    .g_values
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }

    let result = run_sweep(&config)?;

    result.write_csv(BufWriter::new(File::create(dir.join("heatmap.csv"))?))?;
    std::fs::write(dir.join("heatmap.json"), result.to_json())?;
    std::fs::write(dir.join("effective.conf"), sweep_conf_text(&config))?;

    let mut artifacts = vec![
        "heatmap.csv".to_string(),
        "heatmap.json".to_string(),
        "effective.conf".to_string(),
    ];
    for v in &args.slice_dt {
        let cells = slice(&result, SliceAxis::DtKappa, *v)?;
        let name = slice_file_name("dt", *v);
        SweepResult::write_slice_csv(&cells, BufWriter::new(File::create(dir.join(&name))?))?;
        artifacts.push(name);
    }
    for v in &args.slice_g {
        let cells = slice(&result, SliceAxis::G, *v)?;
        let name = slice_file_name("g", *v);
        SweepResult::write_slice_csv(&cells, BufWriter::new(File::create(dir.join(&name))?))?;
        artifacts.push(name);
    }

    let total = result.cells.len();
    let failed: Vec<&ocbsim::SweepCell> =
        result.cells.iter().filter(|c| c.error.is_some()).collect();
    println!("cells = {total}, failed = {}", failed.len());
    for cell in &failed {
        eprintln!(
            "cell (g = {}, dt = {}) failed: {}",
            cell.g,
            cell.dt_kappa,
            cell.error.as_deref().unwrap_or("unknown")
        );
    }

    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "sweep",
        out_dir: dir.display().to_string(),
        artifacts,
        effective_config: serde_json::to_value(&config)
            .map_err(|e| Failure::Run(format!("config serialization: {e}")))?,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&dir)?;

    Ok(if result.succeeded_fraction() >= 0.9 { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// wigner

const WIGNER_KEYS: &[&str] = &["nbar", "state", "dim", "range", "points"];

fn cmd_wigner(args: WignerArgs) -> Result<i32, Failure> {
    let started = Instant::now();
    let map = load_config(&args.config, WIGNER_KEYS)?;
    let nbar = resolve(args.nbar, &map, "nbar")?;
    let state_path = match args.state.clone() {
        Some(p) => Some(p),
        None => resolve(None::<String>, &map, "state")?.map(PathBuf::from),
    };
    let dim = resolve(args.dim, &map, "dim")?;
    let range = resolve(args.range, &map, "range")?.unwrap_or(6.0);
    let points = resolve(args.points, &map, "points")?.unwrap_or(121);
    let dir = out_dir(args.out)?;

    if !(range.is_finite() && range > 0.0) || points == 0 {
        return Err(Failure::Usage(
            "--range must be positive and --points at least 1".into(),
        ));
    }

    let (rho, source) = match (nbar, &state_path) {
        (Some(_), Some(_)) => {
            return Err(Failure::Usage("--nbar and --state are mutually exclusive".into()))
        }
        (None, None) => {
            return Err(Failure::Usage("one of --nbar or --state is required".into()))
        }
        (Some(n), None) => {
            let dim = dim.unwrap_or(128);
            let space = FockSpace::new(dim)?;
            let rho = thermal_state(&space, ThermalOccupation::new(n)?)?;
            (rho, format!("thermal nbar = {n}"))
        }
        (None, Some(path)) => {
            let file = File::open(path).map_err(|e| {
                Failure::Usage(format!("cannot open state file {}: {e}", path.display()))
            })?;
            let rho = read_density_matrix(BufReader::new(file))?;
            if let Some(d) = dim {
                if d != rho.dim() {
                    return Err(Failure::Usage(format!(
                        "--dim {d} incompatible with state file dim {}",
                        rho.dim()
                    )));
                }
            }
            (rho, format!("state file {}", path.display()))
        }
    };

    let axes = linspace(-range, range, points);
    let grid = wigner(&rho, &axes, &axes)?;
    if let Some(w) = &grid.truncation {
        eprintln!("warning: {w}");
    }

    let mut csv = BufWriter::new(File::create(dir.join("wigner.csv"))?);
    grid.write_csv(&mut csv)?;
    csv.flush()?;

    let peak = grid.values.iter().cloned().fold(f64::MIN, f64::max);
    println!("source = {source}");
    println!("peak = {peak}");
    if let Some(integral) = grid.integral() {
        println!("integral = {integral}");
    }

    let mut conf = String::new();
    match (nbar, &state_path) {
        (Some(n), _) => {
            let _ = writeln!(conf, "nbar = {n}");
        }
        (_, Some(p)) => {
            let _ = writeln!(conf, "state = {}", p.display());
        }
        _ => unreachable!(),
    }
    let _ = writeln!(conf, "dim = {}", rho.dim());
    let _ = writeln!(conf, "range = {range}");
    let _ = writeln!(conf, "points = {points}");
    std::fs::write(dir.join("effective.conf"), conf)?;

    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        command: "wigner",
        out_dir: dir.display().to_string(),
        artifacts: vec!["wigner.csv".into(), "effective.conf".into()],
        effective_config: serde_json::json!({
            "source": source,
            "dim": rho.dim(),
            "range": range,
            "points": points,
        }),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    }
    .write(&dir)?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// analytic

fn cmd_analytic(args: AnalyticArgs) -> Result<i32, Failure> {
    let g = parse_coupling(&args.g)?;
    let nbar = args.nbar;
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Failure::Usage(format!(
            "--nbar must be non-negative, got {nbar}"
        )));
    }
    let needs_k = || {
        args.k
            .ok_or_else(|| Failure::Usage(format!("--k is required for {}", args.formula)))
    };
    let value = match args.formula.as_str() {
        "p-plus" => analytic::p_plus_exact(nbar, g),
        "nbar1" => analytic::nbar_one_round(nbar, g),
        "prob1" => analytic::prob_one_round(nbar, g),
        "nbark" => analytic::nbar_k_rounds(nbar, g, needs_k()?),
        "probk" => analytic::prob_k_rounds(nbar, g, needs_k()?),
        other => {
            return Err(Failure::Usage(format!(
                "unknown formula {other:?}; expected p-plus, nbar1, prob1, nbark or probk"
            )))
        }
    };

    let mut inputs = serde_json::Map::new();
    inputs.insert("nbar".into(), serde_json::json!(nbar));
    inputs.insert(
        "g".into(),
        serde_json::to_value(g).map_err(|e| Failure::Run(e.to_string()))?,
    );
    if let Some(k) = args.k {
        inputs.insert("k".into(), serde_json::json!(k));
    }
    let doc = serde_json::json!({
        "formula": args.formula,
        "inputs": inputs,
        "value": value,
    });
    println!("{doc}");
    Ok(0)
}
