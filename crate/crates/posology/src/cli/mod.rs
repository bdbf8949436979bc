//! Command-line front end.
//!
//! Five subcommands cover the pipelines: `simulate` (trajectory CSV),
//! `bfra` / `bcra` (response curve CSV plus a one-line hormetic summary),
//! `sweep` (value-space CSV, optional heatmap), and `regulate` (the
//! regulation loop over a persistent behavior database).
//!
//! Parameter flags mirror the model constants in kebab-case (`--k-apk`,
//! `--ec50-b`, `--ii`, `--addl`, `--t-sim`). A `--config` file of
//! `key=value` lines (with `#` comments) fills in any flag not given on the
//! command line; explicit flags always win. Relative output paths resolve
//! under `POSOLOGY_OUT_DIR` when that variable is set.
//!
//! Exit codes: 0 success, 1 runtime failure (integration, I/O), 2 usage
//! (invalid flags, malformed config or candidate files).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    bcra, bfra, summarize, AnalysisKind, BcraSettings, BfraSettings, HormeticSummary, ResponseCurve,
};
use crate::error::Error;
use crate::params::{DoseSchedule, ModelParams, ParamField, SimConfig};
use crate::plot;
use crate::regulator::{
    load_db, run_cycle, save_db, CandidateAction, Database, EscalationAnswer, EscalationHandler,
    NoEscalation, PolicyEscalation, RegulatorConfig, RegulatorState,
};
use crate::sim::{simulate, Compartment};
use crate::value_space::{
    flag_unsafe, sweep, AnalysisSettings, AxisSpec, SweepSpec, ValueSpaceMap,
};

/// Environment variable naming the default directory for relative output
/// paths.
pub const ENV_OUT_DIR: &str = "POSOLOGY_OUT_DIR";

/// Parses `args` and runs the selected subcommand, returning the process
/// exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => usage_with_flag(e),
            Error::UnsupportedParams(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "posology",
    version,
    about = "Opponent-process simulation and hormetic analysis of repeatable behaviors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the six-compartment model under a dose schedule.
    Simulate(SimulateArgs),
    /// Behavioral frequency response analysis: total utility vs frequency.
    Bfra(BfraArgs),
    /// Behavioral count response analysis: total utility vs dose count.
    Bcra(BcraArgs),
    /// Sweep a pairwise parameter grid and map the behavioral value space.
    Sweep(SweepArgs),
    /// Run regulation cycles over a persistent behavior database.
    Regulate(RegulateArgs),
}

#[derive(Args, Default, Clone)]
struct CommonFlags {
    /// Config file of key=value lines merged under the flags (flags win).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    // Model constants (Table-style kebab-case names).
    #[arg(
        long,
        value_name = "RATE",
        help = "Dose compartment clearance rate [1/min]"
    )]
    k_dose: Option<f64>,
    #[arg(
        long,
        value_name = "RATE",
        help = "a-process PK clearance rate [1/min]"
    )]
    k_apk: Option<f64>,
    #[arg(
        long,
        value_name = "RATE",
        help = "b-process PK clearance rate [1/min]"
    )]
    k_bpk: Option<f64>,
    #[arg(
        long,
        value_name = "RATE",
        help = "a-process PD clearance rate [1/min]"
    )]
    k_apd: Option<f64>,
    #[arg(
        long,
        value_name = "RATE",
        help = "b-process PD clearance rate [1/min]"
    )]
    k_bpd: Option<f64>,
    #[arg(
        long,
        value_name = "RATE",
        help = "Hedonic compartment clearance rate [1/min]"
    )]
    k_h: Option<f64>,
    #[arg(
        long,
        value_name = "EFFECT",
        help = "a-process baseline effect [hedons/min]"
    )]
    e0_a: Option<f64>,
    #[arg(
        long,
        value_name = "EFFECT",
        help = "a-process maximal effect [hedons/min]"
    )]
    emax_a: Option<f64>,
    #[arg(
        long,
        value_name = "CONC",
        help = "a-process half-maximal concentration"
    )]
    ec50_a: Option<f64>,
    #[arg(long, value_name = "COEF", help = "a-process sigmoidicity")]
    gamma_a: Option<f64>,
    #[arg(
        long,
        value_name = "EFFECT",
        help = "b-process baseline effect [hedons/min]"
    )]
    e0_b: Option<f64>,
    #[arg(
        long,
        value_name = "EFFECT",
        help = "b-process maximal effect [hedons/min]"
    )]
    emax_b: Option<f64>,
    #[arg(
        long,
        value_name = "CONC",
        help = "b-process half-maximal concentration"
    )]
    ec50_b: Option<f64>,
    #[arg(long, value_name = "COEF", help = "b-process sigmoidicity")]
    gamma_b: Option<f64>,
    #[arg(
        long,
        value_name = "MIN",
        help = "Infusion duration per dose [min] (default 1)"
    )]
    infusion_duration: Option<f64>,

    // Simulation grid.
    #[arg(
        long,
        value_name = "MIN",
        help = "Simulation horizon [min] (default 4000)"
    )]
    t_sim: Option<f64>,
    #[arg(
        long,
        value_name = "MIN",
        help = "Output sampling interval [min] (default 1)"
    )]
    dt_out: Option<f64>,
    #[arg(
        long,
        value_name = "TOL",
        help = "Absolute integrator tolerance (default 1e-8)"
    )]
    abs_tol: Option<f64>,
    #[arg(
        long,
        value_name = "TOL",
        help = "Relative integrator tolerance (default 1e-6)"
    )]
    rel_tol: Option<f64>,
}

impl CommonFlags {
    fn merged(&self, config: &ConfigMap) -> Result<(ModelParams, SimConfig), Failure> {
        let mut params = ModelParams::default();
        let overrides: [(ParamField, &Option<f64>); 15] = [
            (ParamField::KDose, &self.k_dose),
            (ParamField::KApk, &self.k_apk),
            (ParamField::KBpk, &self.k_bpk),
            (ParamField::KApd, &self.k_apd),
            (ParamField::KBpd, &self.k_bpd),
            (ParamField::KH, &self.k_h),
            (ParamField::E0A, &self.e0_a),
            (ParamField::EmaxA, &self.emax_a),
            (ParamField::Ec50A, &self.ec50_a),
            (ParamField::GammaA, &self.gamma_a),
            (ParamField::E0B, &self.e0_b),
            (ParamField::EmaxB, &self.emax_b),
            (ParamField::Ec50B, &self.ec50_b),
            (ParamField::GammaB, &self.gamma_b),
            (ParamField::InfusionDuration, &self.infusion_duration),
        ];
        for (field, flag) in overrides {
            if let Some(v) = config.merge_f64(field.name(), *flag)? {
                params.set(field, v);
            }
        }
        params.validate().map_err(usage_with_flag)?;

        let mut sim = SimConfig::default();
        if let Some(v) = config.merge_f64("t_sim", self.t_sim)? {
            sim.t_sim = v;
        }
        if let Some(v) = config.merge_f64("dt_out", self.dt_out)? {
            sim.dt_out = v;
        }
        if let Some(v) = config.merge_f64("abs_tol", self.abs_tol)? {
            sim.abs_tol = v;
        }
        if let Some(v) = config.merge_f64("rel_tol", self.rel_tol)? {
            sim.rel_tol = v;
        }
        sim.validate().map_err(usage_with_flag)?;
        Ok((params, sim))
    }
}

/// Points an invalid-value message at the flag spelling of the offending
/// field.
fn usage_with_flag(e: Error) -> Failure {
    let msg = e.to_string();
    for field in ParamField::ALL {
        if msg.contains(field.name()) {
            let flag = format!("--{}", field.name().replace('_', "-"));
            return Failure::Usage(format!("invalid value for {flag}: {msg}"));
        }
    }
    for key in ["t_sim", "dt_out", "abs_tol", "rel_tol", "first_dose_time", "potency"] {
        if msg.contains(key) {
            let flag = format!("--{}", key.replace('_', "-"));
            return Failure::Usage(format!("invalid value for {flag}: {msg}"));
        }
    }
    for (field, flag) in [
        ("interdose_interval", "--ii"),
        ("uncertainty_factor", "--uncertainty-factor"),
        ("ood_threshold", "--ood-threshold"),
        ("freq_step", "--freq-step"),
        ("freq_max", "--freq-max"),
        ("count_max", "--count-max"),
    ] {
        if msg.contains(field) {
            return Failure::Usage(format!("invalid value for {flag}: {msg}"));
        }
    }
    Failure::Usage(msg)
}

#[derive(Args, Clone)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Dose strength per behavior instance (default 1).
    #[arg(long)]
    potency: Option<f64>,
    /// Time of the first dose [min] (default 0).
    #[arg(long)]
    first_dose_time: Option<f64>,
    /// Interdose interval [min] (default: single dose).
    #[arg(long)]
    ii: Option<f64>,
    /// Additional doses after the first (default: fill the horizon when
    /// --ii is given, else 0).
    #[arg(long)]
    addl: Option<u64>,
    /// Run with no doses at all.
    #[arg(long, default_value_t = false)]
    no_doses: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional SVG plot of the trajectory.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BfraArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Dose strength per behavior instance (default 1).
    #[arg(long)]
    potency: Option<f64>,
    /// Frequency grid step [1/min] (default 0.0002).
    #[arg(long)]
    freq_step: Option<f64>,
    /// Frequency grid maximum [1/min] (default 0.01).
    #[arg(long)]
    freq_max: Option<f64>,
    /// Finite burst: additional doses per grid point (default: fill the
    /// horizon).
    #[arg(long)]
    addl: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional SVG plot of the response curve.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct BcraArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Dose strength per behavior instance (default 1).
    #[arg(long)]
    potency: Option<f64>,
    /// Interdose interval within the burst [min] (default 50).
    #[arg(long)]
    ii: Option<f64>,
    /// Largest dose count on the grid (default 30).
    #[arg(long)]
    count_max: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional SVG plot of the response curve.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// First swept parameter (x axis), e.g. k_h.
    #[arg(long, value_name = "FIELD")]
    param_x: String,
    #[arg(long)]
    x_min: f64,
    #[arg(long)]
    x_max: f64,
    /// Grid cells along x (default 20).
    #[arg(long)]
    x_cells: Option<usize>,
    /// Second swept parameter (y axis), e.g. ec50_b.
    #[arg(long, value_name = "FIELD")]
    param_y: String,
    #[arg(long)]
    y_min: f64,
    #[arg(long)]
    y_max: f64,
    /// Grid cells along y (default 20).
    #[arg(long)]
    y_cells: Option<usize>,
    /// Analysis to run per cell: bfra or bcra (default bfra).
    #[arg(long)]
    analysis: Option<String>,
    #[arg(long)]
    potency: Option<f64>,
    #[arg(long)]
    freq_step: Option<f64>,
    #[arg(long)]
    freq_max: Option<f64>,
    #[arg(long)]
    ii: Option<f64>,
    #[arg(long)]
    count_max: Option<u64>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Optional SVG heatmap of normalized apex utility.
    #[arg(long, value_name = "FILE")]
    heatmap: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RegulateArgs {
    #[command(flatten)]
    common: CommonFlags,
    /// Behavior database file (created if missing).
    #[arg(long, value_name = "FILE")]
    db: PathBuf,
    /// Candidate actions, one per line: `name [key=value ...]`.
    #[arg(long, value_name = "FILE")]
    candidates: PathBuf,
    /// Number of regulation cycles to run (default 1).
    #[arg(long)]
    cycles: Option<u64>,
    /// Decision log path, appended to (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    log: Option<PathBuf>,
    /// Answer escalations interactively on stdin.
    #[arg(long, default_value_t = false)]
    interactive: bool,
    /// Escalation policy file: `name key=value ...` lines supplying
    /// parameters for out-of-distribution candidates.
    #[arg(long, value_name = "FILE")]
    escalation_policy: Option<PathBuf>,
    /// Similarity distance beyond which candidates escalate (default 0.5).
    #[arg(long)]
    ood_threshold: Option<f64>,
    /// Multiplier in (0,1] applied to the hormetic limit when enforcing
    /// the execution ceiling (default 1).
    #[arg(long)]
    uncertainty_factor: Option<f64>,
    #[arg(long)]
    freq_step: Option<f64>,
    #[arg(long)]
    freq_max: Option<f64>,
    #[arg(long)]
    ii: Option<f64>,
    #[arg(long)]
    count_max: Option<u64>,
}

fn dispatch(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bfra(a) => cmd_bfra(a),
        Command::Bcra(a) => cmd_bcra(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Regulate(a) => cmd_regulate(a),
    }
}

// ---------------------------------------------------------------------------
// Config file handling
// ---------------------------------------------------------------------------

#[derive(Default)]
struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(ConfigMap::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("--config {}: {e}", path.display())))?;
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::Usage(format!(
                    "--config {}: line {} is not key=value: {raw:?}",
                    path.display(),
                    i + 1
                )));
            };
            map.insert(normalize_key(key), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    fn merge_f64(&self, key: &str, flag: Option<f64>) -> Result<Option<f64>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config key {key}: not a number: {raw:?}"))),
            None => Ok(None),
        }
    }

    fn merge_u64(&self, key: &str, flag: Option<u64>) -> Result<Option<u64>, Failure> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse::<u64>()
                .map(Some)
                .map_err(|_| Failure::Usage(format!("config key {key}: not a count: {raw:?}"))),
            None => Ok(None),
        }
    }
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn resolve_out(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(ENV_OUT_DIR) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}

fn write_text(path: Option<&Path>, content: &str) -> CmdResult {
    match path {
        Some(p) => {
            let p = resolve_out(p);
            if let Some(parent) = p.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            fs::write(&p, content)?;
            Ok(())
        }
        None => {
            io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn fmt_summary(s: &HormeticSummary) -> String {
    let mut line = format!(
        "shape={} apex_x={} apex_tu={} mu_initial={}",
        s.shape, s.apex_x, s.apex_tu, s.mu_initial
    );
    if let Some(n) = s.noael_x {
        line.push_str(&format!(" noael_x={n}"));
    }
    line
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let config = ConfigMap::load(args.common.config.as_deref())?;
    let (params, sim_config) = args.common.merged(&config)?;

    let potency = config.merge_f64("potency", args.potency)?.unwrap_or(1.0);
    let first = config
        .merge_f64("first_dose_time", args.first_dose_time)?
        .unwrap_or(0.0);
    let ii = config.merge_f64("ii", args.ii)?;
    let addl = config.merge_u64("addl", args.addl)?;

    let schedule = if args.no_doses {
        DoseSchedule::none()
    } else {
        let interval = ii.unwrap_or(sim_config.t_sim);
        let additional = addl.unwrap_or_else(|| {
            if ii.is_some() {
                ((sim_config.t_sim - first).max(0.0) / interval) as u64
            } else {
                0
            }
        });
        DoseSchedule {
            potency,
            first_dose_time: first,
            interdose_interval: interval,
            additional_doses: additional,
        }
    };
    schedule.validate().map_err(usage_with_flag)?;

    let traj = simulate(&params, &schedule, &sim_config).map_err(Failure::from)?;

    let mut csv = String::from("time,Dose,apk,bpk,apd,bpd,H\n");
    for (k, t) in traj.time().iter().enumerate() {
        let row = Compartment::ALL
            .iter()
            .map(|&c| traj.series(c)[k].to_string())
            .collect::<Vec<_>>()
            .join(",");
        csv.push_str(&format!("{t},{row}\n"));
    }
    write_text(args.out.as_deref(), &csv)?;

    if let Some(plot_path) = &args.plot {
        let series: Vec<plot::Series<'_>> = Compartment::ALL
            .iter()
            .map(|&c| plot::Series {
                label: c.name(),
                x: traj.time(),
                y: traj.series(c),
            })
            .collect();
        let svg = plot::line_chart(
            "Opponent-process trajectory",
            "time [min]",
            "level",
            &series,
        );
        write_text(Some(plot_path), &svg)?;
    }
    Ok(())
}

fn curve_csv(curve: &ResponseCurve) -> String {
    let mut csv = String::new();
    match (curve.kind, &curve.h_steady_state) {
        (AnalysisKind::Bfra, Some(ana)) => {
            csv.push_str("frequency,tu_simulated,h_steady_state,tu_steady_state\n");
            for ((x, tu), h) in curve.x_values.iter().zip(&curve.tu_simulated).zip(ana) {
                let scaled = h * curve.config.t_sim;
                csv.push_str(&format!("{x},{tu},{h},{scaled}\n"));
            }
        }
        (AnalysisKind::Bfra, None) => {
            csv.push_str("frequency,tu_simulated\n");
            for (x, tu) in curve.x_values.iter().zip(&curve.tu_simulated) {
                csv.push_str(&format!("{x},{tu}\n"));
            }
        }
        (AnalysisKind::Bcra, _) => {
            csv.push_str("count,tu_simulated\n");
            for (x, tu) in curve.x_values.iter().zip(&curve.tu_simulated) {
                csv.push_str(&format!("{x},{tu}\n"));
            }
        }
    }
    csv
}

fn plot_curve(curve: &ResponseCurve, path: &Path) -> CmdResult {
    let scaled: Vec<f64>;
    let mut series = vec![plot::Series {
        label: "simulated TU",
        x: &curve.x_values,
        y: &curve.tu_simulated,
    }];
    if let Some(ana) = &curve.h_steady_state {
        scaled = ana.iter().map(|h| h * curve.config.t_sim).collect();
        series.push(plot::Series {
            label: "steady state × t_sim",
            x: &curve.x_values,
            y: &scaled,
        });
    }
    let (title, xlab) = match curve.kind {
        AnalysisKind::Bfra => ("Frequency response", "frequency [1/min]"),
        AnalysisKind::Bcra => ("Count response", "dose count"),
    };
    let svg = plot::line_chart(title, xlab, "total utility [hedons]", &series);
    write_text(Some(path), &svg)
}

fn cmd_bfra(args: BfraArgs) -> CmdResult {
    let config = ConfigMap::load(args.common.config.as_deref())?;
    let (params, sim_config) = args.common.merged(&config)?;

    let settings = BfraSettings {
        potency: config.merge_f64("potency", args.potency)?.unwrap_or(1.0),
        freq_step: config
            .merge_f64("freq_step", args.freq_step)?
            .unwrap_or(0.0002),
        freq_max: config.merge_f64("freq_max", args.freq_max)?.unwrap_or(0.01),
        burst_addl: config.merge_u64("addl", args.addl)?,
    };

    if params.k_apd != 1.0 || params.k_bpd != 1.0 {
        eprintln!(
            "warning: analytic steady-state column omitted (requires k_apd = k_bpd = 1; \
             got k_apd={}, k_bpd={})",
            params.k_apd, params.k_bpd
        );
    }

    let curve = bfra(&params, &settings, &sim_config).map_err(Failure::from)?;
    let summary = summarize(&curve).map_err(Failure::from)?;

    write_text(args.out.as_deref(), &curve_csv(&curve))?;
    println!("{}", fmt_summary(&summary));

    if let Some(p) = &args.plot {
        plot_curve(&curve, p)?;
    }
    Ok(())
}

fn cmd_bcra(args: BcraArgs) -> CmdResult {
    let config = ConfigMap::load(args.common.config.as_deref())?;
    let (params, sim_config) = args.common.merged(&config)?;

    let settings = BcraSettings {
        potency: config.merge_f64("potency", args.potency)?.unwrap_or(1.0),
        interdose_interval: config.merge_f64("ii", args.ii)?.unwrap_or(50.0),
        count_max: config.merge_u64("count_max", args.count_max)?.unwrap_or(30),
    };

    let curve = bcra(&params, &settings, &sim_config).map_err(Failure::from)?;
    let summary = summarize(&curve).map_err(Failure::from)?;

    write_text(args.out.as_deref(), &curve_csv(&curve))?;
    println!("{}", fmt_summary(&summary));

    if let Some(p) = &args.plot {
        plot_curve(&curve, p)?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let config = ConfigMap::load(args.common.config.as_deref())?;
    let (params, sim_config) = args.common.merged(&config)?;

    let param_x: ParamField = args
        .param_x
        .parse()
        .map_err(|e: Error| Failure::Usage(format!("--param-x: {e}")))?;
    let param_y: ParamField = args
        .param_y
        .parse()
        .map_err(|e: Error| Failure::Usage(format!("--param-y: {e}")))?;

    let potency = config.merge_f64("potency", args.potency)?.unwrap_or(1.0);
    let analysis_name = args.analysis.unwrap_or_else(|| "bfra".to_string());
    let kind: AnalysisKind = analysis_name
        .parse()
        .map_err(|e: Error| Failure::Usage(format!("--analysis: {e}")))?;
    let analysis = match kind {
        AnalysisKind::Bfra => AnalysisSettings::Bfra(BfraSettings {
            potency,
            freq_step: config
                .merge_f64("freq_step", args.freq_step)?
                .unwrap_or(0.0005),
            freq_max: config.merge_f64("freq_max", args.freq_max)?.unwrap_or(0.05),
            burst_addl: None,
        }),
        AnalysisKind::Bcra => AnalysisSettings::Bcra(BcraSettings {
            potency,
            interdose_interval: config.merge_f64("ii", args.ii)?.unwrap_or(50.0),
            count_max: config.merge_u64("count_max", args.count_max)?.unwrap_or(30),
        }),
    };

    let spec = SweepSpec {
        x: AxisSpec {
            field: param_x,
            min: args.x_min,
            max: args.x_max,
            cells: args.x_cells.unwrap_or(20),
        },
        y: AxisSpec {
            field: param_y,
            min: args.y_min,
            max: args.y_max,
            cells: args.y_cells.unwrap_or(20),
        },
        base: params,
        analysis,
        config: sim_config,
    };

    let map = sweep(&spec).map_err(Failure::from)?;

    let mut csv = Vec::new();
    map.write_csv(&mut csv, true).map_err(Failure::from)?;
    write_text(
        args.out.as_deref(),
        std::str::from_utf8(&csv).expect("csv is utf-8"),
    )?;

    let unsafe_count = flag_unsafe(&map).len();
    eprintln!(
        "swept {} cells, {} non-hormetic",
        map.cells.len(),
        unsafe_count
    );

    if let Some(p) = &args.heatmap {
        write_text(Some(p), &heatmap_svg(&map))?;
    }
    Ok(())
}

fn heatmap_svg(map: &ValueSpaceMap) -> String {
    plot::heatmap(
        "Behavioral value space (normalized apex utility)",
        map.spec.x.field.name(),
        map.spec.y.field.name(),
        &map.x_values(),
        &map.y_values(),
        &map.normalized,
    )
}

// ---------------------------------------------------------------------------
// regulate
// ---------------------------------------------------------------------------

fn cmd_regulate(args: RegulateArgs) -> CmdResult {
    let config = ConfigMap::load(args.common.config.as_deref())?;
    let (_params, sim_config) = args.common.merged(&config)?;

    let reg_config = RegulatorConfig {
        sim: sim_config,
        freq_step: config
            .merge_f64("freq_step", args.freq_step)?
            .unwrap_or(0.0005),
        freq_max: config.merge_f64("freq_max", args.freq_max)?.unwrap_or(0.05),
        interdose_interval: config.merge_f64("ii", args.ii)?.unwrap_or(50.0),
        count_max: config.merge_u64("count_max", args.count_max)?.unwrap_or(30),
        ood_threshold: config
            .merge_f64("ood_threshold", args.ood_threshold)?
            .unwrap_or(0.5),
        uncertainty_factor: config
            .merge_f64("uncertainty_factor", args.uncertainty_factor)?
            .unwrap_or(1.0),
    };
    reg_config.validate().map_err(usage_with_flag)?;

    let db_path = resolve_out(&args.db);
    let db = if db_path.exists() {
        load_db(&db_path).map_err(Failure::from)?
    } else {
        Database::new()
    };

    let candidates = parse_candidate_file(&args.candidates)?;
    let cycles = args.cycles.unwrap_or(1);

    let mut policy_handler;
    let mut interactive_handler;
    let mut no_handler = NoEscalation;
    let handler: &mut dyn EscalationHandler = if args.interactive {
        interactive_handler = InteractiveEscalation;
        &mut interactive_handler
    } else if let Some(policy_path) = &args.escalation_policy {
        policy_handler = parse_policy_file(policy_path)?;
        &mut policy_handler
    } else {
        &mut no_handler
    };

    let mut state = RegulatorState::new(db);
    let mut log_text = String::new();
    for _ in 0..cycles {
        let log = run_cycle(&mut state, &candidates, handler, &reg_config);
        log_text.push_str(&log.to_string());
        save_db(&state.db, &db_path).map_err(Failure::from)?;
    }

    match &args.log {
        Some(path) => {
            let path = resolve_out(path);
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            let mut file = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)?;
            file.write_all(log_text.as_bytes())?;
        }
        None => {
            io::stdout().write_all(log_text.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses `name [key=value ...]` lines. Recognized keys: `potency`,
/// `analysis` (bfra|bcra), `tentative` (true|false), and any model
/// parameter name; parameter keys overlay the defaults.
fn parse_candidate_line(
    line: &str,
    line_no: usize,
    file: &Path,
) -> Result<CandidateAction, Failure> {
    let mut tokens = line.split_whitespace();
    let name = tokens.next().expect("caller skips empty lines");
    if name.contains('=') {
        return Err(Failure::Usage(format!(
            "{}: line {line_no}: first token must be the candidate name, got {name:?}",
            file.display()
        )));
    }
    let mut cand = CandidateAction::named(name);
    let mut params = ModelParams::default();
    let mut has_params = false;
    for token in tokens {
        let Some((key, value)) = token.split_once('=') else {
            return Err(Failure::Usage(format!(
                "{}: line {line_no}: expected key=value, got {token:?}",
                file.display()
            )));
        };
        let key = normalize_key(key);
        let bad_value = |what: &str| {
            Failure::Usage(format!(
                "{}: line {line_no}: {key} expects {what}, got {value:?}",
                file.display()
            ))
        };
        match key.as_str() {
            "potency" => cand.potency = value.parse().map_err(|_| bad_value("a number"))?,
            "analysis" => cand.kind = value.parse().map_err(|_| bad_value("bfra or bcra"))?,
            "tentative" => {
                cand.tentative = value.parse().map_err(|_| bad_value("true or false"))?
            }
            _ => match key.parse::<ParamField>() {
                Ok(field) => {
                    let v: f64 = value.parse().map_err(|_| bad_value("a number"))?;
                    params.set(field, v);
                    has_params = true;
                }
                Err(_) => {
                    return Err(Failure::Usage(format!(
                        "{}: line {line_no}: unknown key {key:?}",
                        file.display()
                    )))
                }
            },
        }
    }
    if has_params {
        cand.params = Some(params);
    }
    Ok(cand)
}

fn parse_candidate_file(path: &Path) -> Result<Vec<CandidateAction>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Runtime(format!("--candidates {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_candidate_line(line, i + 1, path)?);
    }
    Ok(out)
}

fn parse_policy_file(path: &Path) -> Result<PolicyEscalation, Failure> {
    let candidates = parse_candidate_file(path).map_err(|f| match f {
        Failure::Usage(m) => Failure::Usage(m.replace("--candidates", "--escalation-policy")),
        other => other,
    })?;
    let mut policy = PolicyEscalation::default();
    for c in candidates {
        let Some(params) = c.params else {
            return Err(Failure::Usage(format!(
                "--escalation-policy {}: entry {:?} must carry parameter values",
                path.display(),
                c.name
            )));
        };
        policy.answers.insert(
            c.name,
            EscalationAnswer {
                params,
                potency: c.potency,
            },
        );
    }
    Ok(policy)
}

/// Escalation via terminal prompt: one `key=value ...` line per request,
/// empty line to skip.
struct InteractiveEscalation;

impl EscalationHandler for InteractiveEscalation {
    fn provide(&mut self, candidate: &CandidateAction) -> Option<EscalationAnswer> {
        eprint!(
            "escalation for {:?}: enter `key=value ...` parameter overrides (empty to skip): ",
            candidate.name
        );
        let _ = io::stderr().flush();
        let mut line = String::new();
        if io::stdin().lock().read_line(&mut line).is_err() {
            return None;
        }
        let line = line.trim();
        if line.is_empty() {
            return None;
        }
        let mut params = ModelParams::default();
        let mut potency = candidate.potency;
        for token in line.split_whitespace() {
            let (key, value) = token.split_once('=')?;
            let key = normalize_key(key);
            if key == "potency" {
                potency = value.parse().ok()?;
            } else {
                let field: ParamField = key.parse().ok()?;
                params.set(field, value.parse().ok()?);
            }
        }
        Some(EscalationAnswer { params, potency })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_map_parses_comments_and_normalizes_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg");
        fs::write(&path, "# comment\nec50-b = 12.4\nt_sim=2000 # trailing\n").unwrap();
        let cfg = ConfigMap::load(Some(&path)).unwrap();
        assert_eq!(cfg.merge_f64("ec50_b", None).unwrap(), Some(12.4));
        assert_eq!(cfg.merge_f64("t_sim", None).unwrap(), Some(2000.0));
        // Flags win.
        assert_eq!(cfg.merge_f64("ec50_b", Some(9.0)).unwrap(), Some(9.0));
    }

    #[test]
    fn candidate_lines_parse_params_and_modes() {
        let path = PathBuf::from("test.txt");
        let c = parse_candidate_line("clips ec50_b=12.4 potency=2", 1, &path).unwrap();
        assert_eq!(c.name, "clips");
        assert_eq!(c.potency, 2.0);
        assert!(!c.tentative);
        assert_eq!(c.params.unwrap().ec50_b, 12.4);

        let c = parse_candidate_line("probe tentative=true ec50_b=9.5 analysis=bcra", 2, &path)
            .unwrap();
        assert!(c.tentative);
        assert_eq!(c.kind, AnalysisKind::Bcra);

        let c = parse_candidate_line("bare", 3, &path).unwrap();
        assert!(c.params.is_none());

        assert!(parse_candidate_line("clips bogus=1", 4, &path).is_err());
        assert!(parse_candidate_line("a=b rest", 5, &path).is_err());
    }

    #[test]
    fn unknown_subcommand_or_flag_exits_2() {
        assert_eq!(run_from(["posology", "simulate", "--bogus-flag"]), 2);
        assert_eq!(run_from(["posology", "frobnicate"]), 2);
    }

    #[test]
    fn help_exits_0() {
        assert_eq!(run_from(["posology", "--help"]), 0);
    }
}
