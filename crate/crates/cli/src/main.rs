//! The `gist-nuts` command line: run chains, reproduce the benchmark
//! experiments at configurable scale, and run the verification suites.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! failures (including failed verification suites).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use gist_nuts_cli::output;
use gist_nuts_cli::run::{self, ScalingConfig};
use gist_nuts_cli::verify;
use gist_nuts_core::{BuiltinModel, Mode, Model, SamplerConfig};

#[derive(Parser)]
#[command(
    name = "gist-nuts",
    version,
    about = "No-U-turn sampling with locally adaptive step size"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run chains and write draws (CSV) plus a run summary (JSON).
    Sample(SampleArgs),
    /// Step-size scaling study on standard normal targets of growing
    /// dimension; writes per-dimension rows (CSV) and fitted slopes (JSON).
    Scaling(ScalingArgs),
    /// Run the reversibility and oracle verification suites; prints a JSON
    /// report.
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct SampleArgs {
    /// Target model: "std_normal" or "funnel".
    #[arg(long)]
    model: Option<String>,
    /// Dimension; for the funnel this counts the x variables, making the
    /// total dimension dim + 1.
    #[arg(long)]
    dim: Option<usize>,
    /// Kernel: "fixed" or "adaptive".
    #[arg(long)]
    mode: Option<String>,
    /// Coarse step size.
    #[arg(long = "h")]
    step_size: Option<f64>,
    /// Fine-step refinement factor (fixed mode), at least 1.
    #[arg(long = "R")]
    refinement: Option<u32>,
    /// Orbit doubling cap; orbits hold at most 2^M states.
    #[arg(long = "M")]
    max_doublings: Option<u32>,
    /// Step-reduction acceptance threshold in (0, 1) (adaptive mode).
    #[arg(long = "a-min")]
    accept_threshold: Option<f64>,
    /// Draws per chain.
    #[arg(long)]
    draws: Option<usize>,
    /// Number of independent chains.
    #[arg(long)]
    chains: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for draws.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; values present in it override flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment preset filling defaults: "funnel-fixed" (h=1/4, M=10,
    /// 250k draws) or "funnel-adaptive" (h=1/2, M=10, a_min=0.7, 250k
    /// draws).
    #[arg(long)]
    preset: Option<String>,
}

/// JSON config file schema; any present field overrides the corresponding
/// flag.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    dim: Option<usize>,
    mode: Option<String>,
    h: Option<f64>,
    #[serde(rename = "R")]
    refinement: Option<u32>,
    #[serde(rename = "M")]
    max_doublings: Option<u32>,
    a_min: Option<f64>,
    draws: Option<usize>,
    chains: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ScalingArgs {
    /// Comma-separated list of dimensions, e.g. 64,256,1024,4096.
    #[arg(long, value_delimiter = ',', default_value = "64,256,1024,4096")]
    dims: Vec<usize>,
    /// Chains per dimension and regime.
    #[arg(long, default_value_t = 200)]
    chains: u64,
    #[arg(long = "h", default_value_t = 0.5)]
    step_size: f64,
    #[arg(long = "M", default_value_t = 10)]
    max_doublings: u32,
    #[arg(long = "a-min", default_value_t = 0.7)]
    accept_threshold: f64,
    /// Transitions entering the step-size measurement.
    #[arg(long, default_value_t = 3)]
    transitions: usize,
    /// Transitions run before measuring. The default 0 measures from the
    /// initialization; 50 reproduces the burned-in preset.
    #[arg(long, default_value_t = 0)]
    measure_after: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for scaling.csv and scaling_summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Also write the JSON report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Scaling(args) => cmd_scaling(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

/// Fully resolved sampling configuration.
struct ResolvedSample {
    model_name: String,
    dim: usize,
    mode: String,
    step_size: f64,
    refinement: u32,
    max_doublings: u32,
    accept_threshold: f64,
    draws: usize,
    chains: u64,
    seed: u64,
    out: PathBuf,
}

fn resolve_sample(args: &SampleArgs) -> Result<ResolvedSample, CliError> {
    // Precedence: built-in defaults < preset < flags < config file.
    let mut model = args.model.clone();
    let mut dim = args.dim;
    let mut mode = args.mode.clone();
    let mut step_size = args.step_size;
    let mut refinement = args.refinement;
    let mut max_doublings = args.max_doublings;
    let mut accept_threshold = args.accept_threshold;
    let mut draws = args.draws;
    let mut chains = args.chains;
    let mut seed = args.seed;
    let mut out = args.out.clone();

    if let Some(preset) = &args.preset {
        let (p_mode, p_h, p_a_min) = match preset.as_str() {
            "funnel-fixed" => ("fixed", 0.25, None),
            "funnel-adaptive" => ("adaptive", 0.5, Some(0.7)),
            other => {
                return Err(CliError::Config(format!(
                    "unknown preset '{other}' (expected 'funnel-fixed' or 'funnel-adaptive')"
                )))
            }
        };
        model.get_or_insert_with(|| "funnel".to_string());
        dim.get_or_insert(10);
        mode.get_or_insert_with(|| p_mode.to_string());
        step_size.get_or_insert(p_h);
        max_doublings.get_or_insert(10);
        draws.get_or_insert(250_000);
        if let Some(a_min) = p_a_min {
            accept_threshold.get_or_insert(a_min);
        }
    }

    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let file: FileConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))?;
        model = file.model.or(model);
        dim = file.dim.or(dim);
        mode = file.mode.or(mode);
        step_size = file.h.or(step_size);
        refinement = file.refinement.or(refinement);
        max_doublings = file.max_doublings.or(max_doublings);
        accept_threshold = file.a_min.or(accept_threshold);
        draws = file.draws.or(draws);
        chains = file.chains.or(chains);
        seed = file.seed.or(seed);
        out = file.out.or(out);
    }

    let model_name = model.ok_or_else(|| CliError::Config("--model is required".into()))?;
    let dim = dim.ok_or_else(|| CliError::Config("--dim is required".into()))?;
    let mode = mode.ok_or_else(|| CliError::Config("--mode is required".into()))?;
    let step_size =
        step_size.ok_or_else(|| CliError::Config("--h (step size) is required".into()))?;
    let max_doublings =
        max_doublings.ok_or_else(|| CliError::Config("--M (max doublings) is required".into()))?;
    let draws = draws.ok_or_else(|| CliError::Config("--draws is required".into()))?;

    if step_size <= 0.0 {
        return Err(CliError::Config("step size must be positive".into()));
    }
    match mode.as_str() {
        "fixed" => {
            if refinement.is_some_and(|r| r < 1) {
                return Err(CliError::Config("fixed mode needs --R >= 1".into()));
            }
        }
        "adaptive" => {
            let a_min = accept_threshold
                .ok_or_else(|| CliError::Config("adaptive mode needs --a-min".into()))?;
            if !(0.0 < a_min && a_min < 1.0) {
                return Err(CliError::Config("--a-min must lie in (0, 1)".into()));
            }
            if max_doublings > 11 {
                return Err(CliError::Config(
                    "adaptive mode supports --M up to 11 (integrator step cap)".into(),
                ));
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown mode '{other}' (expected 'fixed' or 'adaptive')"
            )))
        }
    }

    Ok(ResolvedSample {
        model_name,
        dim,
        mode,
        step_size,
        refinement: refinement.unwrap_or(1),
        max_doublings,
        accept_threshold: accept_threshold.unwrap_or(0.7),
        draws,
        chains: chains.unwrap_or(1),
        seed: seed.unwrap_or(1),
        out: out.unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn cmd_sample(args: SampleArgs) -> Result<(), CliError> {
    let resolved = resolve_sample(&args)?;
    let model =
        BuiltinModel::from_name(&resolved.model_name, resolved.dim).map_err(CliError::Config)?;
    let config = SamplerConfig {
        step_size: resolved.step_size,
        max_doublings: resolved.max_doublings,
        mode: match resolved.mode.as_str() {
            "fixed" => Mode::Fixed {
                refinement: resolved.refinement,
            },
            _ => Mode::Adaptive {
                accept_threshold: resolved.accept_threshold,
                max_halvings: 10,
            },
        },
    };
    let initial = vec![0.0; model.dim()];

    let start = Instant::now();
    let runs = run::run_chains(
        &model,
        &config,
        &initial,
        resolved.draws,
        resolved.chains,
        resolved.seed,
    );
    let wall = start.elapsed().as_secs_f64();

    let summary = run::summarize(
        &resolved.model_name,
        resolved.dim,
        &config,
        &runs,
        resolved.draws,
        resolved.chains,
        resolved.seed,
        wall,
    );

    std::fs::create_dir_all(&resolved.out)
        .map_err(|e| CliError::Runtime(format!("cannot create output dir: {e}")))?;
    let draws_path = resolved.out.join("draws.csv");
    let summary_path = resolved.out.join("summary.json");
    output::write_draws_csv(&draws_path, &model.coordinate_names(), &runs)
        .map_err(|e| CliError::Runtime(format!("writing draws: {e}")))?;
    output::write_json(&summary_path, &summary)
        .map_err(|e| CliError::Runtime(format!("writing summary: {e}")))?;

    println!(
        "wrote {} and {} ({} draws x {} chains, acceptance {:.3}, {:.1}s)",
        draws_path.display(),
        summary_path.display(),
        resolved.draws,
        resolved.chains,
        summary.acceptance_rate,
        wall
    );
    Ok(())
}

fn cmd_scaling(args: ScalingArgs) -> Result<(), CliError> {
    if args.dims.is_empty() {
        return Err(CliError::Config("--dims must not be empty".into()));
    }
    let cfg = ScalingConfig {
        step_size: args.step_size,
        max_doublings: args.max_doublings,
        accept_threshold: args.accept_threshold,
        max_halvings: 10,
        chains: args.chains,
        measured_transitions: args.transitions,
        warmup_transitions: args.measure_after,
    };
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("out"));
    let outcome = run::scaling_experiment(&args.dims, &cfg, args.seed);

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output dir: {e}")))?;
    output::write_scaling_csv(&out_dir.join("scaling.csv"), &outcome)
        .map_err(|e| CliError::Runtime(format!("writing scaling rows: {e}")))?;
    output::write_json(&out_dir.join("scaling_summary.json"), &outcome)
        .map_err(|e| CliError::Runtime(format!("writing scaling summary: {e}")))?;

    for row in &outcome.rows {
        println!(
            "d={:<6} {:<11} mean fine step {:.6}",
            row.dim, row.regime, row.mean_fine_step
        );
    }
    match (outcome.slope_mode, outcome.slope_stationary) {
        (Some(m), Some(s)) => println!("log-log slopes: mode {m:.3}, stationary {s:.3}"),
        _ => println!("slope fit skipped (need at least two dimensions)"),
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let report = verify::standard_verification(args.seed);
    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))?;
    println!("{text}");
    if let Some(path) = &args.out {
        write_report(path, &text)?;
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(CliError::Runtime("verification suites failed".into()))
    }
}

fn write_report(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("cannot create report dir: {e}")))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("writing report: {e}")))
}
