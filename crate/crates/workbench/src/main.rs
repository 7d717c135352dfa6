use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twistbethe::config::{parse_etas, parse_sizes, Experiment, ExperimentConfig, FitSpec};
use twistbethe::run::run;
use twistbethe::verify::{verify, Level, VerifyOptions};
use twistbethe::WorkbenchError;
use twistbethe_core::model::Boundary;
use twistbethe_core::scaling::FitKind;

/// Bethe-ansatz and exact-diagonalization workbench for the twisted and
/// periodic XXZ chain.
#[derive(Parser)]
#[command(name = "twistbethe", version)]
struct Cli {
    /// JSON experiment configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the configuration file.
    Run(SweepArgs),
    /// Low-lying spectrum by exact diagonalization.
    EdSpectrum(SweepArgs),
    /// Reduced homogeneous Bethe equations, ground state.
    SolveHom(SweepArgs),
    /// Inhomogeneous T-Q solution, ground state.
    SolveInhom(SweepArgs),
    /// Inhomogeneous energy term E_hom - E_ED.
    EinhScan(SweepArgs),
    /// Twisted minus periodic ground energy.
    BoundaryEnergyScan(SweepArgs),
    /// Lowest hole excitation above the ground state.
    GapScan(SweepArgs),
    /// Inhomogeneous terms of the momentum and second charge.
    ChargeScan(SweepArgs),
    /// Thermodynamic-limit series.
    Thermo(SweepArgs),
    /// Finite-size fit of one column of a results CSV.
    Fit(FitArgs),
    /// Cross-check solvers, ED and series.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Anisotropy, one value or a comma list.
    #[arg(long)]
    eta: Option<String>,
    /// Chain lengths: `8,10`, `8..18` or `8..18:2`.
    #[arg(long)]
    n: Option<String>,
    /// `anti` or `per`.
    #[arg(long)]
    boundary: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute cached points.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    kind: Option<FitKind>,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output column to fit; defaults to the first one.
    #[arg(long)]
    column: Option<String>,
    /// Fit only `even` or `odd` chain lengths.
    #[arg(long)]
    parity: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "fast")]
    level: Level,
    /// Shift of the bulk energy density, to check the suite catches it.
    #[arg(long, hide = true, default_value_t = 0.0)]
    perturb_e0: f64,
}

fn base_config(path: Option<&PathBuf>, experiment: Option<Experiment>) -> Result<ExperimentConfig, WorkbenchError> {
    match (path, experiment) {
        (Some(p), exp) => {
            let mut cfg = ExperimentConfig::load(p)?;
            if let Some(e) = exp {
                cfg.experiment = e;
            }
            Ok(cfg)
        }
        (None, Some(e)) => Ok(ExperimentConfig::new(e, Vec::new(), Vec::new(), Boundary::Antiperiodic)),
        (None, None) => Err(WorkbenchError::Config("`run` needs --config".into())),
    }
}

fn sweep_config(path: Option<&PathBuf>, experiment: Option<Experiment>, a: SweepArgs) -> Result<ExperimentConfig, WorkbenchError> {
    let mut cfg = base_config(path, experiment)?;
    if let Some(eta) = a.eta {
        cfg.eta = twistbethe::config::EtaSpec::Many(parse_etas(&eta)?);
    }
    if let Some(n) = a.n {
        cfg.n_list = parse_sizes(&n)?;
    }
    if let Some(b) = a.boundary {
        cfg.boundary = b.parse().map_err(|e| WorkbenchError::Config(format!("{e}")))?;
    }
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    cfg.force |= a.force;
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn fit_config(path: Option<&PathBuf>, a: FitArgs) -> Result<ExperimentConfig, WorkbenchError> {
    let mut cfg = base_config(path, Some(Experiment::Fit))?;
    let spec = match (cfg.fit.take(), a.kind, a.input) {
        (Some(mut s), kind, input) => {
            s.kind = kind.unwrap_or(s.kind);
            s.input = input.unwrap_or(s.input);
            s
        }
        (None, Some(kind), Some(input)) => FitSpec {
            kind,
            input,
            column: None,
            parity: None,
        },
        _ => return Err(WorkbenchError::Config("fit needs --kind and --input".into())),
    };
    let parity = a.parity.map(|p| p.parse()).transpose()?;
    cfg.fit = Some(FitSpec {
        column: a.column.or(spec.column.clone()),
        parity: parity.or(spec.parity),
        ..spec
    });
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    Ok(cfg)
}

fn run_sweep(cfg: ExperimentConfig) -> Result<ExitCode, WorkbenchError> {
    let outcome = run(&cfg)?;
    for r in outcome.records.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "point eta={} N={:?} failed: {}",
            r.eta,
            r.n,
            r.error.as_deref().unwrap_or("unknown error")
        );
    }
    let written: Vec<String> = [&outcome.files.csv, &outcome.files.json, &outcome.files.svg]
        .into_iter()
        .flatten()
        .map(|p| p.display().to_string())
        .collect();
    println!(
        "{}: {} points ({} cached, {} failed); wrote {}",
        cfg.experiment,
        outcome.records.len(),
        outcome.cached,
        outcome.failures,
        written.join(", ")
    );
    Ok(if outcome.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode, WorkbenchError> {
    let path = cli.config.as_ref();
    let sweep = |e: Option<Experiment>, a: SweepArgs| run_sweep(sweep_config(path, e, a)?);
    match cli.command {
        Command::Run(a) => sweep(None, a),
        Command::EdSpectrum(a) => sweep(Some(Experiment::EdSpectrum), a),
        Command::SolveHom(a) => sweep(Some(Experiment::SolveHom), a),
        Command::SolveInhom(a) => sweep(Some(Experiment::SolveInhom), a),
        Command::EinhScan(a) => sweep(Some(Experiment::EinhScan), a),
        Command::BoundaryEnergyScan(a) => sweep(Some(Experiment::BoundaryEnergyScan), a),
        Command::GapScan(a) => sweep(Some(Experiment::GapScan), a),
        Command::ChargeScan(a) => sweep(Some(Experiment::ChargeScan), a),
        Command::Thermo(a) => sweep(Some(Experiment::Thermo), a),
        Command::Fit(a) => run_sweep(fit_config(path, a)?),
        Command::Verify(a) => {
            let report = verify(
                a.level,
                &VerifyOptions {
                    e0_perturbation: a.perturb_e0,
                },
            );
            for c in &report.checks {
                println!("{c}");
            }
            let failed = report.failures().count();
            println!(
                "verify {:?}: {} checks, {failed} failed",
                report.level,
                report.checks.len()
            );
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("twistbethe: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
