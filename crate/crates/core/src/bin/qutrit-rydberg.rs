use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use qutrit_core::optimize::{
    optimize_two_stage, uniform_init, Chain, ObjectiveSpec, OptimizationReport, Stage1Config, Stage2Config,
};
use qutrit_core::scenario::{
    export_csv, noise_csv, run_decoherence_sweep, run_noise_study, run_scenario, sweep_csv, write_json, Grid, LabUnits,
    ScenarioConfig, ScenarioName,
};
use qutrit_core::{DecoherenceSpec, Error, PulseParameterSet};

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_WARNING: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "qutrit-rydberg", version, about = "Qutrit Bell/GHZ state preparation with Rydberg atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named scenario and write CSV/JSON output.
    Run(RunArgs),
    /// Two-stage pulse optimization on an effective chain.
    Optimize(OptimizeArgs),
    /// Final fidelity over a grid of emission and dephasing rates.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChainArg {
    Bell,
    Ghz,
}

impl From<ChainArg> for Chain {
    fn from(c: ChainArg) -> Self {
        match c {
            ChainArg::Bell => Chain::Bell,
            ChainArg::Ghz => Chain::Ghz,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Interaction strength in units of 1/T.
    #[arg(long = "V")]
    interaction: Option<f64>,
    /// Bridge modulation frequency (GHZ only).
    #[arg(long)]
    omega: Option<f64>,
    /// Spontaneous emission rate.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Dephasing rate.
    #[arg(long = "Gamma-deph", default_value_t = 0.0)]
    dephasing: f64,
    /// Total pulse time.
    #[arg(long = "T", default_value_t = 1.0)]
    total_time: f64,
    /// RK4 steps over [0, T].
    #[arg(long = "T-steps")]
    steps: Option<usize>,
    /// Output sample intervals.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// JSON file with pulse parameters (list of {A, sigma, theta}).
    #[arg(long)]
    pulses: Option<PathBuf>,
    /// Use T = 10 µs, γ = 2 kHz, Γ = 1 kHz, V = 20 MHz (GHZ: ω = 20 MHz, V = 20ω).
    #[arg(long)]
    realistic: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit with status 3 on convergence or physicality warnings.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    scenario: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Relative amplitude-noise bound R.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the step-halving convergence check.
    #[arg(long)]
    no_convergence_check: bool,
    #[arg(long = "gamma-grid", default_value = "0:0.02:5")]
    gamma_grid: String,
    #[arg(long = "Gamma-grid", default_value = "0:0.02:5")]
    dephasing_grid: String,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[arg(value_enum)]
    chain: ChainArg,
    #[arg(long, default_value_t = 1.0)]
    init_amplitude: f64,
    #[arg(long, default_value_t = 0.25)]
    init_sigma: f64,
    /// Start from a pulse file instead of a uniform guess.
    #[arg(long)]
    pulses: Option<PathBuf>,
    #[arg(long = "T-steps")]
    steps: Option<usize>,
    #[arg(long, default_value_t = 400)]
    stage1_max_iter: usize,
    #[arg(long, default_value_t = 1e-4)]
    stage1_fd_step: f64,
    #[arg(long, default_value_t = 1e-4)]
    stage1_threshold: f64,
    #[arg(long, default_value_t = 64)]
    stage2_population: usize,
    #[arg(long, default_value_t = 200)]
    stage2_generations: usize,
    #[arg(long, default_value_t = 0.7)]
    stage2_crossover: f64,
    #[arg(long, default_value_t = 0.15)]
    stage2_mutation_rate: f64,
    #[arg(long, default_value_t = 0.2)]
    stage2_mutation_scale: f64,
    #[arg(long, default_value_t = 1e-3)]
    stage2_threshold: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Exit with status 3 if the final objective misses the threshold.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(value_enum)]
    chain: ChainArg,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "gamma-grid", default_value = "0:0.02:5")]
    gamma_grid: String,
    #[arg(long = "Gamma-grid", default_value = "0:0.02:5")]
    dephasing_grid: String,
}

/// Outcome of a command: warnings promote to exit status 3 under `--strict`.
struct Outcome {
    warnings: Vec<String>,
    strict: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                warn!("{w}");
            }
            if outcome.strict && !outcome.warnings.is_empty() {
                ExitCode::from(EXIT_WARNING)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_)
                | Error::InvalidNoise(_)
                | Error::InvalidLabel { .. }
                | Error::InvalidLevel(_)
                | Error::AtomOutOfRange { .. }
                | Error::TimeOutOfDomain { .. }
                | Error::Json(_) => ExitCode::from(EXIT_CONFIG),
                _ => ExitCode::from(EXIT_FAILURE),
            }
        }
    }
}

fn read_pulses(path: &Path, total_time: f64) -> qutrit_core::Result<PulseParameterSet> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read pulse file {}: {e}", path.display())))?;
    PulseParameterSet::from_json(&text, total_time)
}

fn prepare_out(dir: &Path) -> qutrit_core::Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn build_config(scenario: ScenarioName, m: &ModelArgs) -> qutrit_core::Result<ScenarioConfig> {
    let mut config = ScenarioConfig::new(scenario);
    if m.realistic {
        let units = if scenario.is_bell() { LabUnits::bell() } else { LabUnits::ghz() };
        config = config.with_lab_units(units);
    } else {
        config.decoherence = DecoherenceSpec::new(m.gamma, m.dephasing);
    }
    if m.interaction.is_some() {
        config.interaction = m.interaction;
    }
    if m.omega.is_some() {
        if scenario.is_bell() {
            return Err(Error::Config("--omega only applies to GHZ scenarios".into()));
        }
        config.omega = m.omega;
    }
    config.total_time = m.total_time;
    config.steps = m.steps;
    config.samples = m.samples;
    if let Some(path) = &m.pulses {
        config.pulses = Some(read_pulses(path, m.total_time)?);
    }
    Ok(config)
}

fn cmd_run(args: RunArgs) -> qutrit_core::Result<Outcome> {
    let scenario: ScenarioName = args.scenario.parse()?;
    let m = &args.model;
    prepare_out(&m.out)?;
    let strict = m.strict;
    match scenario {
        ScenarioName::OptimizeBell | ScenarioName::OptimizeGhz => {
            let chain = if scenario.is_bell() { Chain::Bell } else { Chain::Ghz };
            let stage2 = Stage2Config {
                seed: args.seed,
                ..Stage2Config::default()
            };
            let init = uniform_init(chain, 1.0, 0.25);
            let report = optimize(chain, m.steps, &Stage1Config::default(), &stage2, &init, &m.out)?;
            Ok(Outcome {
                warnings: optimization_warnings(&report),
                strict,
            })
        }
        ScenarioName::NoiseBell | ScenarioName::NoiseGhz => {
            let mut config = build_config(scenario, m)?;
            config.noise_amplitude = args.noise;
            config.runs = args.runs;
            config.seed = args.seed;
            let study = run_noise_study(&config, args.noise, args.runs, args.seed)?;
            info!(
                "{scenario}: R = {}, {} runs, mean {:.6}, std {:.3e} (noiseless {:.6})",
                args.noise, args.runs, study.mean, study.std_dev, study.noiseless
            );
            write_json(&study, &m.out.join("noise.json"))?;
            fs::write(m.out.join("noise.csv"), noise_csv(&study))?;
            Ok(Outcome {
                warnings: Vec::new(),
                strict,
            })
        }
        ScenarioName::DecoherenceSweepBell | ScenarioName::DecoherenceSweepGhz => {
            let config = build_config(scenario, m)?;
            sweep(&config, &args.gamma_grid, &args.dephasing_grid, &m.out)
                .map(|_| Outcome { warnings: Vec::new(), strict })
        }
        _ => {
            let mut config = build_config(scenario, m)?;
            config.check_convergence = !args.no_convergence_check;
            let output = run_scenario(&config)?;
            let s = &output.summary;
            info!(
                "{scenario}: F_phase = {:.6}, F_raw = {:.6}, populations = {:?} ({:.1} s)",
                s.final_fidelity_phase, s.final_fidelity_raw, s.final_populations, s.runtime_seconds
            );
            export_csv(&output.records, &m.out.join(format!("{scenario}.csv")))?;
            write_json(&output.summary, &m.out.join(format!("{scenario}.json")))?;
            Ok(Outcome {
                warnings: s.warnings.clone(),
                strict,
            })
        }
    }
}

fn sweep(config: &ScenarioConfig, gamma_grid: &str, dephasing_grid: &str, out: &Path) -> qutrit_core::Result<()> {
    let gammas = gamma_grid.parse::<Grid>()?.values();
    let dephasings = dephasing_grid.parse::<Grid>()?.values();
    let result = run_decoherence_sweep(config, &gammas, &dephasings)?;
    info!(
        "{}: {}x{} grid in {:.1} s",
        result.scenario,
        gammas.len(),
        dephasings.len(),
        result.runtime_seconds
    );
    write_json(&result, &out.join("sweep.json"))?;
    fs::write(out.join("sweep.csv"), sweep_csv(&result))?;
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> qutrit_core::Result<Outcome> {
    let scenario = match args.chain {
        ChainArg::Bell => ScenarioName::DecoherenceSweepBell,
        ChainArg::Ghz => ScenarioName::DecoherenceSweepGhz,
    };
    prepare_out(&args.model.out)?;
    let config = build_config(scenario, &args.model)?;
    sweep(&config, &args.gamma_grid, &args.dephasing_grid, &args.model.out)?;
    Ok(Outcome {
        warnings: Vec::new(),
        strict: args.model.strict,
    })
}

fn optimize(
    chain: Chain,
    steps: Option<usize>,
    stage1: &Stage1Config,
    stage2: &Stage2Config,
    init: &PulseParameterSet,
    out: &Path,
) -> qutrit_core::Result<OptimizationReport> {
    let mut spec = ObjectiveSpec::new(chain);
    if let Some(s) = steps {
        spec.steps = s;
    }
    let report = optimize_two_stage(&spec, stage1, stage2, init)?;
    info!(
        "stage 1: {} iterations, surrogate {:.3e} ({:?}); stage 2: objective {:.3e} ({:?})",
        report.stage1.iterations, report.stage1.objective, report.stage1.status, report.stage2.objective,
        report.stage2.status
    );
    write_json(&report, &out.join("optimization.json"))?;
    let mut pulses = report.stage2.params.channels_json()?;
    pulses.push('\n');
    fs::write(out.join("pulses.json"), pulses)?;
    Ok(report)
}

fn optimization_warnings(report: &OptimizationReport) -> Vec<String> {
    if report.converged {
        Vec::new()
    } else {
        vec![format!(
            "final objective {:.3e} above threshold {:e}",
            report.objective, report.stage2_config.threshold
        )]
    }
}

fn cmd_optimize(args: OptimizeArgs) -> qutrit_core::Result<Outcome> {
    let chain: Chain = args.chain.into();
    prepare_out(&args.out)?;
    let init = match &args.pulses {
        Some(path) => read_pulses(path, 1.0)?,
        None => uniform_init(chain, args.init_amplitude, args.init_sigma),
    };
    let stage1 = Stage1Config {
        max_iterations: args.stage1_max_iter,
        fd_step: args.stage1_fd_step,
        threshold: args.stage1_threshold,
        ..Stage1Config::default()
    };
    let stage2 = Stage2Config {
        population: args.stage2_population,
        generations: args.stage2_generations,
        crossover_rate: args.stage2_crossover,
        mutation_rate: args.stage2_mutation_rate,
        mutation_scale: args.stage2_mutation_scale,
        threshold: args.stage2_threshold,
        seed: args.seed,
        ..Stage2Config::default()
    };
    let report = optimize(chain, args.steps, &stage1, &stage2, &init, &args.out)?;
    Ok(Outcome {
        warnings: optimization_warnings(&report),
        strict: args.strict,
    })
}
