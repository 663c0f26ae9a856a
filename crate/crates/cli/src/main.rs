use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lzx_core::ame::evolve_ame;
use lzx_core::coherent::{evolve_schrodinger, p_lz};
use lzx_core::config::{Experiment, ExperimentConfig, Method};
use lzx_core::device::{OperatingPoint, SweepSchedule};
use lzx_core::evolution::{write_trajectory, EvolveOptions, Outcome};
use lzx_core::gapfit::{fit_exponential_adaptive, DecaySeries, GapFitResult};
use lzx_core::harness::{emit_csv, emit_errors, run_experiment};
use lzx_core::noise::{
    mrt_params_fdt, psd_ame, psd_ohmic, psd_one_over_f, reorganization_energy_integral, NoiseModel,
};
use lzx_core::plot::{emit_plot, PlotAxis};
use lzx_core::ptre::{evolve_ptre, polaron_psd, PtreVariant};
use lzx_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

/// Landau-Zener sweeps of a flux qubit coupled to 1/f and ohmic flux noise.
#[derive(Parser)]
#[command(name = "lzx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form LZ probability for one sweep.
    Coherent(SweepArgs),
    /// Propagate one sweep and optionally write its trajectory.
    Evolve(EvolveArgs),
    /// MRT linewidth and reorganization energy.
    MrtParams(MrtArgs),
    /// Tabulate a noise spectrum.
    Psd(PsdArgs),
    /// Fit an excitation-probability series and convert it to a gap.
    FitGap(FitArgs),
    /// Run a full experiment from a config file.
    Sweep(SweepCmd),
}

#[derive(Args)]
struct SweepArgs {
    /// Minimum gap Δ/h in GHz.
    #[arg(long = "delta-ghz")]
    delta: f64,
    /// Persistent current in μA.
    #[arg(long = "ip-ua")]
    i_p: f64,
    /// Sweep duration in ns.
    #[arg(long = "t-lz-ns")]
    t_lz: f64,
    /// Symmetric flux span in Φ0 (ignored when both endpoints are given).
    #[arg(long = "span-phi0", default_value_t = 0.01)]
    span: f64,
    #[arg(long = "phi-init-phi0", requires = "phi_final", allow_hyphen_values = true)]
    phi_init: Option<f64>,
    #[arg(long = "phi-final-phi0", requires = "phi_init")]
    phi_final: Option<f64>,
}

impl SweepArgs {
    fn schedule(&self) -> lzx_core::Result<SweepSchedule> {
        let point = OperatingPoint::new(0.0, self.delta, self.i_p)?;
        match (self.phi_init, self.phi_final) {
            (Some(a), Some(b)) => SweepSchedule::new(point, a, b, self.t_lz),
            _ => SweepSchedule::symmetric(point, self.span, self.t_lz),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EvolveMethod {
    Schrodinger,
    Ame,
    Ptre,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[arg(long, value_enum, default_value = "ame")]
    method: EvolveMethod,
    /// Config file supplying the noise model and solver settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "w-scale", default_value_t = 1.0)]
    w_scale: f64,
    #[arg(long = "t-scale", default_value_t = 1.0)]
    t_scale: f64,
    /// Trajectory sampling interval in ns; written to OUT/trajectory.csv.
    #[arg(long = "stride-ns", requires = "out")]
    stride: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MrtArgs {
    /// Persistent currents in μA.
    #[arg(long = "ip-ua", num_args = 1.., default_values_t = [0.104, 0.129])]
    i_p: Vec<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PsdKind {
    Ame,
    OneOverF,
    Ohmic,
    Polaron,
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long, value_enum, default_value = "ame")]
    kind: PsdKind,
    /// Lower frequency in GHz; negative values tabulate the absorption side.
    #[arg(long = "f-min-ghz", default_value_t = -5.0, allow_hyphen_values = true)]
    f_min: f64,
    #[arg(long = "f-max-ghz", default_value_t = 5.0)]
    f_max: f64,
    #[arg(long, default_value_t = 201)]
    count: usize,
    /// Persistent current in μA (polaron spectrum only).
    #[arg(long = "ip-ua", default_value_t = 0.129)]
    i_p: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "w-scale", default_value_t = 1.0)]
    w_scale: f64,
    #[arg(long = "t-scale", default_value_t = 1.0)]
    t_scale: f64,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns t_lz_ns,p_e.
    #[arg(long)]
    input: PathBuf,
    #[arg(long = "ip-ua")]
    i_p: f64,
    #[arg(long = "span-phi0", default_value_t = 0.01)]
    span: f64,
}

#[derive(Args)]
struct SweepCmd {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Restrict to these methods; overrides `methods`.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Worker threads; overrides output.parallel.
    #[arg(long)]
    parallel: Option<usize>,
    /// PTRE W scale factors; override ptre.w_scale.
    #[arg(long = "w-scale", value_delimiter = ',')]
    w_scale: Vec<f64>,
    /// PTRE temperature scale factors; override ptre.t_scale.
    #[arg(long = "t-scale", value_delimiter = ',')]
    t_scale: Vec<f64>,
}

fn load_config(path: Option<&Path>) -> lzx_core::Result<(NoiseModel, EvolveOptions)> {
    match path {
        None => Ok((NoiseModel::nominal(), EvolveOptions::default())),
        Some(p) => {
            let mut cfg = ExperimentConfig::from_path(p)?;
            if cfg.methods.is_empty() {
                cfg.methods.push(Method::Coherent);
            }
            let exp = cfg.resolve()?;
            Ok((exp.noise, exp.evolve))
        }
    }
}

fn stdout_csv(header: &[&str], rows: &[Vec<String>]) -> lzx_core::Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", header.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    Ok(())
}

fn cmd_coherent(a: &SweepArgs) -> lzx_core::Result<()> {
    let s = a.schedule()?;
    let p = p_lz(a.delta, s.sweep_velocity())?;
    stdout_csv(
        &["t_lz_ns", "tau", "velocity_GHz_per_ns", "p_lz", "p_g"],
        &[vec![
            a.t_lz.to_string(),
            s.dimensionless_time().to_string(),
            s.sweep_velocity().to_string(),
            p.to_string(),
            (1.0 - p).to_string(),
        ]],
    )
}

fn cmd_evolve(a: &EvolveArgs) -> lzx_core::Result<()> {
    let s = a.sweep.schedule()?;
    let (noise, mut opts) = load_config(a.config.as_deref())?;
    opts.trajectory_stride = a.stride;
    let (tag, outcome): (String, Outcome) = match a.method {
        EvolveMethod::Schrodinger => ("schrodinger".into(), evolve_schrodinger(&s, &opts)?),
        EvolveMethod::Ame => ("ame".into(), evolve_ame(&s, &noise, &opts)?),
        EvolveMethod::Ptre => {
            let v = PtreVariant { w_scale: a.w_scale, t_scale: a.t_scale };
            let (mrt, scaled) = v.apply(&noise, a.sweep.i_p)?;
            (v.tag(), evolve_ptre(&s, &mrt, &scaled, &opts)?)
        }
    };
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("trajectory.csv");
        write_trajectory(&outcome.trajectory, std::fs::File::create(&path)?)?;
        log::info!("wrote {}", path.display());
    }
    stdout_csv(
        &["method", "t_lz_ns", "tau", "p_g", "p_e", "solver_steps", "max_trace_error"],
        &[vec![
            tag,
            a.sweep.t_lz.to_string(),
            s.dimensionless_time().to_string(),
            outcome.p_g.to_string(),
            outcome.p_e.to_string(),
            outcome.steps().to_string(),
            outcome.max_trace_error.to_string(),
        ]],
    )
}

fn cmd_mrt(a: &MrtArgs) -> lzx_core::Result<()> {
    let (noise, _) = load_config(a.config.as_deref())?;
    let mut rows = Vec::new();
    for &i_p in &a.i_p {
        let fdt = mrt_params_fdt(&noise, i_p)?;
        let integral = reorganization_energy_integral(&noise, i_p)?;
        rows.push(vec![
            i_p.to_string(),
            fdt.w.to_string(),
            fdt.epsilon_p.to_string(),
            integral.to_string(),
            ((integral - fdt.epsilon_p) / fdt.epsilon_p).to_string(),
        ]);
    }
    stdout_csv(&["ip_uA", "W_GHz", "epsilon_p_fdt_GHz", "epsilon_p_integral_GHz", "relative_deviation"], &rows)
}

fn cmd_psd(a: &PsdArgs) -> lzx_core::Result<()> {
    if a.count < 2 || !(a.f_max > a.f_min) {
        return Err(Error::Config("psd: need --count >= 2 and --f-max-ghz > --f-min-ghz".into()));
    }
    let (noise, _) = load_config(a.config.as_deref())?;
    let v = PtreVariant { w_scale: a.w_scale, t_scale: a.t_scale };
    let (mrt, scaled) = v.apply(&noise, a.i_p)?;
    let mut rows = Vec::with_capacity(a.count);
    for k in 0..a.count {
        let f = a.f_min + (a.f_max - a.f_min) * k as f64 / (a.count - 1) as f64;
        let omega = 2.0 * std::f64::consts::PI * f;
        let value = match a.kind {
            PsdKind::Ame => psd_ame(&noise, omega),
            PsdKind::OneOverF => {
                if omega == 0.0 {
                    continue;
                }
                psd_one_over_f(&noise, omega)?
            }
            PsdKind::Ohmic => psd_ohmic(&noise, omega),
            PsdKind::Polaron => polaron_psd(&mrt, &scaled, a.i_p, omega)?,
        };
        rows.push(vec![f.to_string(), omega.to_string(), value.to_string()]);
    }
    stdout_csv(&["f_GHz", "omega_rad_per_ns", "psd"], &rows)
}

fn cmd_fit(a: &FitArgs) -> lzx_core::Result<()> {
    let series = DecaySeries::from_path(&a.input)?;
    let fit = fit_exponential_adaptive(&series)?;
    GapFitResult::new(&fit, a.i_p, a.span)?.write_to(std::io::stdout().lock())
}

fn cmd_sweep(a: &SweepCmd) -> Result<(), (u8, String)> {
    let config_err = |e: Error| (EXIT_CONFIG, e.to_string());
    let mut cfg = ExperimentConfig::from_path(&a.config).map_err(config_err)?;
    if !a.method.is_empty() {
        cfg.methods = a.method.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>().map_err(config_err)?;
    }
    if !a.w_scale.is_empty() {
        cfg.ptre.w_scale = a.w_scale.clone();
    }
    if !a.t_scale.is_empty() {
        cfg.ptre.t_scale = a.t_scale.clone();
    }
    if let Some(n) = a.parallel {
        cfg.output.parallel = n;
    }
    if let Some(out) = &a.out {
        cfg.output.dir = out.clone();
    }
    let exp: Experiment = cfg.resolve().map_err(config_err)?;
    let io_err = |e: Error| (1, e.to_string());

    let report = run_experiment(&exp).map_err(io_err)?;
    std::fs::create_dir_all(&exp.output_dir).map_err(|e| (1, e.to_string()))?;
    if !report.errors.is_empty() {
        let path = exp.output_dir.join("errors.csv");
        emit_errors(&report.errors, &path).map_err(io_err)?;
        log::warn!("{} run(s) failed; see {}", report.errors.len(), path.display());
    }
    if report.records.is_empty() {
        return Err((EXIT_NUMERIC, format!("all {} runs failed", report.errors.len())));
    }
    emit_csv(&report.records, &exp.output_dir.join("runs.csv")).map_err(io_err)?;
    emit_plot(&report.records, &exp.output_dir.join("pg_vs_tlz.svg"), PlotAxis::TLz).map_err(io_err)?;
    emit_plot(&report.records, &exp.output_dir.join("pg_vs_tau.svg"), PlotAxis::Tau).map_err(io_err)?;
    println!(
        "{} records, {} errors -> {}",
        report.records.len(),
        report.errors.len(),
        exp.output_dir.display()
    );
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Invalid(_) | Error::Domain(_) | Error::Range(_) => EXIT_CONFIG,
        Error::Numeric(_) | Error::InsufficientData(_) => EXIT_NUMERIC,
        Error::Io(_) | Error::Csv(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LZX_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Coherent(a) => cmd_coherent(a),
        Command::Evolve(a) => cmd_evolve(a),
        Command::MrtParams(a) => cmd_mrt(a),
        Command::Psd(a) => cmd_psd(a),
        Command::FitGap(a) => cmd_fit(a),
        Command::Sweep(a) => {
            return match cmd_sweep(a) {
                Ok(()) => ExitCode::SUCCESS,
                Err((code, msg)) => {
                    eprintln!("lzx: {msg}");
                    ExitCode::from(code)
                }
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lzx: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
