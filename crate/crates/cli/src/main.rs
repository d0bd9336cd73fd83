//! `distsampler`: probabilities, truncation thresholds, and samples for
//! boson sampling with partially distinguishable photons.
//!
//! Exit codes: 0 success, 2 invalid input, 3 runtime or numerical failure,
//! 4 cost-guard refusal.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use distsampler_core::error::Error as CoreError;
use distsampler_core::fock;
use distsampler_core::linalg::{extract_submatrix, haar_unitary, ComplexMatrix, OutcomePattern};
use distsampler_core::probability::{
    coefficient_scan_guarded, ensemble_error_scan, exact_probability_guarded, required_order,
    threshold_indistinguishability, truncated_probability_guarded, CostGuard,
};
use distsampler_core::sampler::{mh_sample_guarded, ChainConfig, Proposal};
use distsampler_core::DistinguishabilityModel;

const MAX_STEPS_ENV: &str = "DISTSAMPLER_MAX_STEPS";

#[derive(Parser)]
#[command(
    name = "distsampler",
    version,
    about = "Boson sampling with partially distinguishable photons: exact and truncated \
             probabilities, error thresholds, and MCMC sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Haar-random unitary and write it as JSON.
    GenUnitary(GenUnitaryArgs),
    /// Exact or truncated probability of one detection outcome.
    Prob(ProbArgs),
    /// Required truncation order and efficiency criteria for a target error.
    Threshold(ThresholdArgs),
    /// Ensemble truncation-error scan over Haar-random unitaries (CSV).
    Figure2(Figure2Args),
    /// Ensemble scan of polynomial-coefficient magnitudes (CSV).
    Figure3(Figure3Args),
    /// Metropolis-Hastings samples from the truncated distribution (JSONL).
    Sample(SampleArgs),
    /// First-principles Fock-space check of one outcome probability.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct GenUnitaryArgs {
    /// Interferometer mode count.
    #[arg(long = "N")]
    n_modes: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path for the matrix JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProbMode {
    Exact,
    Truncated,
}

#[derive(Args)]
struct ProbArgs {
    /// Path to the interferometer JSON (as written by gen-unitary).
    #[arg(long)]
    unitary: PathBuf,
    /// Input modes, comma separated (e.g. 0,1,2).
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<usize>,
    /// Output modes, comma separated.
    #[arg(long, value_delimiter = ',')]
    outputs: Vec<usize>,
    /// Uniform pairwise indistinguishability.
    #[arg(long, conflicts_with = "s_matrix")]
    x: Option<f64>,
    /// Path to a general overlap-matrix JSON {"n":..,"re":[..],"im":[..]}.
    #[arg(long = "s-matrix")]
    s_matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "exact")]
    mode: ProbMode,
    /// Truncation order (truncated mode only; defaults to the photon count).
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    x: f64,
    #[arg(long)]
    epsilon: f64,
    /// Photon count.
    #[arg(long)]
    n: usize,
    /// Optional mode count, to report the baseline probability n!/N^n.
    #[arg(long = "N")]
    n_modes: Option<usize>,
}

#[derive(Args)]
struct Figure2Args {
    /// Photon count.
    #[arg(long, default_value_t = 5)]
    n: usize,
    /// Mode count.
    #[arg(long = "N", default_value_t = 100)]
    n_modes: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Indistinguishability grid, comma separated.
    #[arg(
        long = "x-grid",
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,0.95"
    )]
    x_grid: Vec<f64>,
    /// Truncation orders, comma separated.
    #[arg(long = "k-list", value_delimiter = ',', default_value = "1,2,3,4")]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; a JSON mirror is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Figure3Args {
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long = "N", default_value_t = 100)]
    n_modes: usize,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; a JSON mirror is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ProposalArg {
    SingleModeSwap,
    UniformPattern,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    unitary: PathBuf,
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<usize>,
    #[arg(long)]
    x: f64,
    /// Truncation order of the target distribution.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "burn-in", default_value_t = 1000)]
    burn_in: usize,
    #[arg(long = "thin", default_value_t = 10)]
    thinning: usize,
    #[arg(long, value_enum, default_value = "single-mode-swap")]
    proposal: ProposalArg,
    /// Output JSONL path; the chain summary goes to stdout.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    unitary: PathBuf,
    /// Input modes (photon i enters inputs[i]).
    #[arg(long, value_delimiter = ',')]
    inputs: Vec<usize>,
    /// Output modes; repeats are allowed (collision outcomes).
    #[arg(long, value_delimiter = ',')]
    outputs: Vec<usize>,
    #[arg(long, conflicts_with = "s_matrix")]
    x: Option<f64>,
    #[arg(long = "s-matrix")]
    s_matrix: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Core(CoreError),
    Io(std::io::Error),
    BadFile(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::BadFile(m) => write!(f, "invalid input file: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn exit_code(err: &CliError) -> i32 {
    match err {
        CliError::Core(e) => match e {
            CoreError::InvalidDimension(_)
            | CoreError::InvalidPattern(_)
            | CoreError::InvalidInput(_)
            | CoreError::Overflow(_) => 2,
            CoreError::CostGuard(_) => 4,
            CoreError::NumericalInconsistency(_) | CoreError::ChainStuck(_) => 3,
        },
        CliError::Io(_) => 3,
        CliError::BadFile(_) => 2,
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

fn cost_guard() -> CostGuard {
    let mut guard = CostGuard::default();
    if let Ok(raw) = std::env::var(MAX_STEPS_ENV) {
        match raw.parse::<u64>() {
            Ok(v) => guard.max_permanents = v,
            Err(_) => log::warn!("ignoring unparseable {MAX_STEPS_ENV}={raw}"),
        }
    }
    guard
}

#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    version: &'static str,
    timestamp_unix: u64,
}

fn manifest(command: &'static str, parameters: serde_json::Value, seed: Option<u64>) -> RunManifest {
    RunManifest {
        command,
        parameters,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    }
}

/// Data files stay byte-identical under a fixed seed; the manifest (which
/// carries a timestamp) accompanies them as `<out>.manifest.json`.
fn write_with_manifest(out: &Path, data: &str, manifest: &RunManifest) -> Result<(), CliError> {
    fs::write(out, data)?;
    let sidecar = sidecar_path(out);
    fs::write(&sidecar, serde_json::to_string_pretty(manifest).expect("manifest is serializable"))?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn json_mirror_path(out: &Path) -> PathBuf {
    if out.extension().map(|e| e == "json").unwrap_or(false) {
        let mut name = out.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".mirror.json");
        out.with_file_name(name)
    } else {
        out.with_extension("json")
    }
}

fn load_unitary(path: &Path) -> Result<ComplexMatrix, CliError> {
    let raw = fs::read_to_string(path)?;
    serde_json::from_str(&raw).map_err(|e| CliError::BadFile(format!("{}: {e}", path.display())))
}

fn load_model(x: Option<f64>, s_matrix: Option<&Path>) -> Result<DistinguishabilityModel, CliError> {
    match (x, s_matrix) {
        (Some(x), None) => Ok(DistinguishabilityModel::uniform(x)?),
        (None, Some(path)) => {
            let raw = fs::read_to_string(path)?;
            let model = DistinguishabilityModel::general_from_json(&raw)?;
            let report = model.validate();
            if !report.is_pass() {
                let what: Vec<String> = report
                    .violations
                    .iter()
                    .map(|v| format!("{} (residual {:.3e})", v.constraint, v.residual))
                    .collect();
                return Err(CoreError::InvalidInput(format!(
                    "overlap matrix is unphysical: {}",
                    what.join("; ")
                ))
                .into());
            }
            Ok(model)
        }
        _ => Err(CoreError::InvalidInput("exactly one of --x and --s-matrix is required".into())
            .into()),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("output is serializable"));
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenUnitary(args) => {
            let u = haar_unitary(args.n_modes, args.seed)?;
            let data = serde_json::to_string(&u).expect("matrix is serializable");
            let man = manifest(
                "gen-unitary",
                json!({"N": args.n_modes, "out": args.out}),
                Some(args.seed),
            );
            write_with_manifest(&args.out, &data, &man)?;
            print_json(&json!({
                "out": args.out,
                "N": args.n_modes,
                "seed": args.seed,
                "unitarity_residual": u.unitarity_residual(),
            }));
            Ok(())
        }
        Command::Prob(args) => {
            let u = load_unitary(&args.unitary)?;
            let pattern = OutcomePattern::new(u.rows(), args.inputs.clone(), args.outputs.clone())?;
            let m = extract_submatrix(&u, &pattern)?;
            let guard = cost_guard();
            match args.mode {
                ProbMode::Exact => {
                    let model = load_model(args.x, args.s_matrix.as_deref())?;
                    let p = exact_probability_guarded(&m, &model, &guard)?;
                    print_json(&json!({"p": p, "mode": "exact"}));
                }
                ProbMode::Truncated => {
                    if args.s_matrix.is_some() {
                        return Err(CoreError::InvalidInput(
                            "truncation supports only the uniform model; use --x".into(),
                        )
                        .into());
                    }
                    let x = args.x.ok_or_else(|| {
                        CoreError::InvalidInput("truncated mode requires --x".into())
                    })?;
                    let k = args.k.unwrap_or_else(|| pattern.photons());
                    let result = truncated_probability_guarded(&m, x, k, &guard)?;
                    print_json(&json!({
                        "p": result.p_k,
                        "mode": "truncated",
                        "k": result.k,
                        "contributions": result.contributions,
                        "permanents_evaluated": result.permanents_evaluated,
                    }));
                }
            }
            Ok(())
        }
        Command::Threshold(args) => {
            let mut budget = required_order(args.x, args.epsilon, args.n)?;
            if let Some(n_modes) = args.n_modes {
                budget = budget.with_baseline(n_modes);
            }
            // the indistinguishability boundary for the largest order that
            // still beats a direct evaluation (k = n - 1)
            let boundary_x = threshold_indistinguishability(args.n - 1, args.epsilon)?;
            print_json(&json!({
                "budget": budget,
                "criteria": {
                    "solid_truncation_below_n": budget.feasible,
                    "dashed_single_term": budget.first_term_feasible,
                    "dash_dotted_step_budget": budget.within_permanent_budget,
                },
                "boundary_x_at_k_n_minus_1": boundary_x,
            }));
            Ok(())
        }
        Command::Figure2(args) => {
            let table = ensemble_error_scan(
                args.n,
                args.n_modes,
                &args.x_grid,
                &args.k_list,
                args.trials,
                args.seed,
            )?;
            let man = manifest(
                "figure2",
                json!({
                    "n": args.n, "N": args.n_modes, "trials": args.trials,
                    "x_grid": args.x_grid, "k_list": args.k_list, "out": args.out,
                }),
                Some(args.seed),
            );
            write_with_manifest(&args.out, &table.to_csv(), &man)?;
            let mirror = json!({"manifest": man, "scan": table});
            fs::write(
                json_mirror_path(&args.out),
                serde_json::to_string_pretty(&mirror).expect("scan is serializable"),
            )?;
            print_json(&json!({
                "out": args.out,
                "json_mirror": json_mirror_path(&args.out),
                "rows": table.rows.len(),
                "p0": table.p0,
            }));
            Ok(())
        }
        Command::Figure3(args) => {
            let guard = cost_guard();
            let scan =
                coefficient_scan_guarded(args.n, args.n_modes, args.trials, args.seed, &guard)?;
            let man = manifest(
                "figure3",
                json!({
                    "n": args.n, "N": args.n_modes, "trials": args.trials, "out": args.out,
                }),
                Some(args.seed),
            );
            write_with_manifest(&args.out, &scan.to_csv(), &man)?;
            let mirror = json!({"manifest": man, "scan": scan});
            fs::write(
                json_mirror_path(&args.out),
                serde_json::to_string_pretty(&mirror).expect("scan is serializable"),
            )?;
            print_json(&json!({
                "out": args.out,
                "json_mirror": json_mirror_path(&args.out),
                "rows": scan.rows.len(),
            }));
            Ok(())
        }
        Command::Sample(args) => {
            let u = load_unitary(&args.unitary)?;
            let cfg = ChainConfig {
                burn_in: args.burn_in,
                thinning: args.thinning,
                proposal: match args.proposal {
                    ProposalArg::SingleModeSwap => Proposal::SingleModeSwap,
                    ProposalArg::UniformPattern => Proposal::UniformPattern,
                },
                ..ChainConfig::new(args.seed)
            };
            let guard = cost_guard();
            let run =
                mh_sample_guarded(&u, &args.inputs, args.x, args.k, args.count, &cfg, &guard)?;
            let mut lines = String::new();
            for sample in &run.samples {
                lines.push_str(
                    &serde_json::to_string(&json!({"outputs": sample.output_modes()}))
                        .expect("sample is serializable"),
                );
                lines.push('\n');
            }
            let man = manifest(
                "sample",
                json!({
                    "unitary": args.unitary, "inputs": args.inputs, "x": args.x,
                    "k": args.k, "count": args.count, "burn_in": args.burn_in,
                    "thin": args.thinning, "out": args.out,
                }),
                Some(args.seed),
            );
            write_with_manifest(&args.out, &lines, &man)?;
            print_json(&json!({
                "out": args.out,
                "samples": run.samples.len(),
                "acceptance_rate": run.stats.acceptance_rate(),
                "accepted": run.stats.accepted,
                "proposed": run.stats.proposed,
                "target_evaluations": run.stats.target_evaluations,
            }));
            Ok(())
        }
        Command::Oracle(args) => {
            let u = load_unitary(&args.unitary)?;
            let n = args.inputs.len();
            let state = match (&args.x, &args.s_matrix) {
                (Some(x), None) => fock::prepare_input(n, *x)?,
                (None, Some(path)) => {
                    let raw = fs::read_to_string(path)?;
                    let model = DistinguishabilityModel::general_from_json(&raw)?;
                    match model {
                        DistinguishabilityModel::General { overlaps } => {
                            fock::prepare_input_general(&overlaps)?
                        }
                        _ => unreachable!("general_from_json builds a general model"),
                    }
                }
                _ => {
                    return Err(CoreError::InvalidInput(
                        "exactly one of --x and --s-matrix is required".into(),
                    )
                    .into())
                }
            };
            let state = state.with_input_modes(&args.inputs)?;
            let p_oracle = fock::evolve_and_project(&state, &u, &args.outputs)?;

            // compare against the exact engine when the outcome is
            // collision-free
            let mut sorted = args.outputs.clone();
            sorted.sort_unstable();
            let collision_free = sorted.windows(2).all(|w| w[0] < w[1]);
            let p_exact = if collision_free {
                let pattern = OutcomePattern::new(u.rows(), args.inputs.clone(), sorted)?;
                let m = extract_submatrix(&u, &pattern)?;
                let model = load_model(args.x, args.s_matrix.as_deref())?;
                Some(exact_probability_guarded(&m, &model, &cost_guard())?)
            } else {
                None
            };
            print_json(&json!({
                "p_oracle": p_oracle,
                "p_exact": p_exact,
                "abs_diff": p_exact.map(|p| (p - p_oracle).abs()),
            }));
            Ok(())
        }
    }
}
