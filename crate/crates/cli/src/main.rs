//! Command-line frontend for the cone sampler.
//!
//! Subcommands: `refgen` (reference identities), `perturb` (cone-sampled
//! dataset), `noise-perturb` (additive-noise baseline dataset), `eval`
//! (metric report), `simulate` (reference set plus bound sweep in one go)
//! and `hist` (score histogram export).
//!
//! Exit codes: 0 success, 2 usage, 3 malformed input, 4 infeasible
//! configuration, 5 internal failure. Failures print a single
//! `error: <class>: <message>` line on stderr.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cone_sampler::{
    evaluate, generate_dataset, generate_reference_set, noise_perturb, run_lb_sweep,
    score_histogram, stream_for, Error as CoreError, GenerationConfig, HistogramSpec, IdentitySet,
    ImpostorPairing, LabeledEmbeddingSet, PairingPolicy, ReportConfig, StreamDomain,
};

const THREADS_ENV: &str = "CONE_SAMPLER_THREADS";

#[derive(Parser)]
#[command(
    name = "cone-sampler",
    version,
    about = "Cosine-bounded perturbation of unit embeddings: dataset generation and separability evaluation",
    after_help = "Set CONE_SAMPLER_THREADS to cap worker threads (default: all cores)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate reference identity embeddings on the unit sphere
    Refgen(RefgenArgs),
    /// Sample a labeled dataset inside per-identity cones around references
    Perturb(PerturbArgs),
    /// Sample a labeled dataset with the additive Gaussian noise baseline
    NoisePerturb(NoisePerturbArgs),
    /// Compute the verification metric report for a labeled dataset
    Eval(EvalArgs),
    /// Generate references and sweep the cone bound, reporting per bound
    Simulate(SimulateArgs),
    /// Export the genuine/impostor score histogram as CSV
    Hist(HistArgs),
}

#[derive(Args)]
struct RefgenArgs {
    /// Number of identities
    #[arg(long, default_value_t = 100)]
    ids: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 512)]
    dim: usize,
    /// Maximum allowed pairwise cosine between references
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    max_cos: f64,
    /// Base seed
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Output embedding file (npy)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PerturbArgs {
    /// Reference embedding file (npy)
    #[arg(long)]
    refs: PathBuf,
    /// Cosine lower bound of the perturbation cone
    #[arg(long, default_value_t = 0.6)]
    lb: f64,
    /// Samples per identity
    #[arg(long, default_value_t = 50)]
    k: u32,
    /// Base seed
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Cosine bound of the observation stage (1 = none)
    #[arg(long, default_value_t = 1.0)]
    obs_cone: f64,
    /// Output embedding file (npy)
    #[arg(long)]
    out: PathBuf,
    /// Output label sidecar
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct NoisePerturbArgs {
    /// Reference embedding file (npy)
    #[arg(long)]
    refs: PathBuf,
    /// Standard deviation of the additive Gaussian noise
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Samples per identity
    #[arg(long, default_value_t = 50)]
    k: u32,
    /// Base seed
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Output embedding file (npy)
    #[arg(long)]
    out: PathBuf,
    /// Output label sidecar
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Embedding file to evaluate (npy)
    #[arg(long)]
    data: PathBuf,
    /// Label sidecar
    #[arg(long)]
    labels: PathBuf,
    /// Attribute CSV aligned with the data rows
    #[arg(long)]
    attributes: Option<PathBuf>,
    /// Report output path (stdout when omitted)
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write the score histogram CSV here
    #[arg(long)]
    hist: Option<PathBuf>,
    /// Cosine threshold of the intra-class consistency metric
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    threshold: f64,
    /// Seed of the impostor pair subsampling
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Impostor pairs per genuine pair
    #[arg(long, default_value_t = 10)]
    impostor_mult: u32,
    /// Histogram and attribute binning: bin count
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Histogram and attribute binning: value range
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [-1.0, 1.0], allow_negative_numbers = true)]
    range: Vec<f64>,
    /// Record the cone bound the data was generated with
    #[arg(long)]
    lb: Option<f64>,
    /// Record the samples-per-identity the data was generated with
    #[arg(long)]
    k: Option<u32>,
    /// Record the guidance weight the data was generated with
    #[arg(long)]
    omega: Option<f64>,
    /// Record the observation cone the data was generated with
    #[arg(long)]
    obs_cone: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of identities
    #[arg(long, default_value_t = 100)]
    ids: usize,
    /// Embedding dimension
    #[arg(long, default_value_t = 512)]
    dim: usize,
    /// Maximum allowed pairwise cosine between references
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    max_cos: f64,
    /// Samples per identity
    #[arg(long, default_value_t = 50)]
    k: u32,
    /// Base seed
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Cosine bound of the observation stage (1 = none)
    #[arg(long, default_value_t = 0.95)]
    obs_cone: f64,
    /// Cone bounds to sweep (repeatable or comma-separated)
    #[arg(
        long,
        value_delimiter = ',',
        default_values_t = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4]
    )]
    lb: Vec<f64>,
    /// Sweep report output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HistArgs {
    /// Embedding file (npy)
    #[arg(long)]
    data: PathBuf,
    /// Label sidecar
    #[arg(long)]
    labels: PathBuf,
    /// Bin count
    #[arg(long, default_value_t = 100)]
    bins: usize,
    /// Score range covered by the bins
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [-1.0, 1.0], allow_negative_numbers = true)]
    range: Vec<f64>,
    /// Seed of the impostor pair subsampling
    #[arg(long, default_value_t = 1337)]
    seed: u64,
    /// Impostor pairs per genuine pair
    #[arg(long, default_value_t = 10)]
    impostor_mult: u32,
    /// Histogram CSV output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A classified failure: exit code plus the machine-parsable class printed
/// on stderr.
struct Failure {
    class: &'static str,
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: String) -> Self {
        Failure {
            class: "input-format",
            code: 3,
            message,
        }
    }

    fn infeasible(message: String) -> Self {
        Failure {
            class: "infeasible-config",
            code: 4,
            message,
        }
    }

    fn internal(message: String) -> Self {
        Failure {
            class: "internal",
            code: 5,
            message,
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Errors from loading user-supplied files are input problems regardless
/// of variant (a missing file and a malformed one get the same class).
fn from_read(path: &Path, err: CoreError) -> Failure {
    match err {
        CoreError::Io(e) => Failure::input(format!("{}: {e}", path.display())),
        other => Failure::input(other.to_string()),
    }
}

/// Errors from computation are split by whether the configuration asked
/// for something impossible or the library itself failed.
fn from_compute(err: CoreError) -> Failure {
    match err {
        CoreError::InfeasibleReferenceSet { .. }
        | CoreError::InvalidConfig(_)
        | CoreError::BoundOutOfRange { .. }
        | CoreError::DimensionTooSmall { .. }
        | CoreError::DimensionMismatch { .. }
        | CoreError::PairSamplingStalled(_)
        | CoreError::EmptyScores { .. }
        | CoreError::NoEligibleClass { .. }
        | CoreError::ZeroVariance
        | CoreError::AttributeCountMismatch { .. } => Failure::infeasible(err.to_string()),
        other => Failure::internal(other.to_string()),
    }
}

fn from_write(path: &Path, err: CoreError) -> Failure {
    Failure::internal(format!("writing {}: {err}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(message) = configure_threads() {
        eprintln!("error: usage: {message}");
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}: {}", f.class, f.message);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or(format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Refgen(args) => refgen(args),
        Command::Perturb(args) => perturb(args),
        Command::NoisePerturb(args) => noise_perturb_cmd(args),
        Command::Eval(args) => eval(args),
        Command::Simulate(args) => simulate(args),
        Command::Hist(args) => hist(args),
    }
}

fn load_references(path: &Path) -> CliResult<IdentitySet> {
    let (data, _rows, dim) =
        cone_sampler::io::read_matrix_npy(path).map_err(|e| from_read(path, e))?;
    IdentitySet::from_rows(dim, data).map_err(|e| from_read(path, e))
}

fn load_dataset(data: &Path, labels: &Path) -> CliResult<LabeledEmbeddingSet> {
    cone_sampler::io::load_labeled_set(data, labels).map_err(|e| {
        match e {
            CoreError::Io(inner) => Failure::input(format!(
                "{} / {}: {inner}",
                data.display(),
                labels.display()
            )),
            other => Failure::input(other.to_string()),
        }
    })
}

fn save_dataset(set: &LabeledEmbeddingSet, out: &Path, labels: &Path) -> CliResult<()> {
    cone_sampler::io::save_labeled_set(set, out, labels).map_err(|e| from_write(out, e))
}

/// Writes to the given path, or to stdout when no path was supplied.
fn emit(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| Failure::internal(format!("writing {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::internal(format!("writing stdout: {e}"))),
    }
}

fn pairing_policy(seed: u64, impostor_mult: u32) -> PairingPolicy {
    PairingPolicy {
        impostor: ImpostorPairing::SampledMultiplier {
            factor: impostor_mult,
        },
        seed,
        ..PairingPolicy::default()
    }
}

fn binning(bins: usize, range: &[f64]) -> CliResult<HistogramSpec> {
    HistogramSpec::new(bins, range[0], range[1]).map_err(from_compute)
}

fn refgen(args: RefgenArgs) -> CliResult<()> {
    let set = generate_reference_set(args.ids, args.dim, args.max_cos, args.seed)
        .map_err(from_compute)?;
    let mut flat = Vec::with_capacity(set.len() * set.dim());
    for i in 0..set.len() {
        flat.extend_from_slice(set.row(i));
    }
    cone_sampler::io::write_matrix_npy(&args.out, &flat, set.len(), set.dim())
        .map_err(|e| from_write(&args.out, e))
}

fn perturb(args: PerturbArgs) -> CliResult<()> {
    let refs = load_references(&args.refs)?;
    let cfg = GenerationConfig {
        lower_bound: args.lb,
        samples_per_identity: args.k,
        base_seed: args.seed,
        dim: refs.dim(),
        observation_cone: args.obs_cone,
    };
    let dataset = generate_dataset(&refs, &cfg).map_err(from_compute)?;
    save_dataset(&dataset, &args.out, &args.labels)
}

fn noise_perturb_cmd(args: NoisePerturbArgs) -> CliResult<()> {
    if args.k == 0 {
        return Err(Failure::infeasible("--k must be at least 1".into()));
    }
    let refs = load_references(&args.refs)?;
    let dim = refs.dim();
    let k = args.k as usize;
    let mut embeddings = Vec::with_capacity(refs.len() * k * dim);
    let mut labels = Vec::with_capacity(refs.len() * k);
    for i in 0..refs.len() {
        let base = refs.unit_vector(i);
        let mut rng = stream_for(args.seed, StreamDomain::Identity, i as u64);
        for _ in 0..k {
            let sample = noise_perturb(&base, args.sigma, &mut rng).map_err(from_compute)?;
            embeddings.extend_from_slice(&sample);
            labels.push(i as u32);
        }
    }
    let dataset = LabeledEmbeddingSet::new(dim, embeddings, labels).map_err(from_compute)?;
    save_dataset(&dataset, &args.out, &args.labels)
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let set = load_dataset(&args.data, &args.labels)?;
    let table = match &args.attributes {
        Some(path) => {
            Some(cone_sampler::io::read_attribute_table(path).map_err(|e| from_read(path, e))?)
        }
        None => None,
    };
    let spec = binning(args.bins, &args.range)?;
    let policy = pairing_policy(args.seed, args.impostor_mult);
    let evaluation = evaluate(
        &set,
        &policy,
        args.threshold,
        table.as_ref().map(|t| (t, &spec)),
    )
    .map_err(from_compute)?;

    let config = ReportConfig {
        lower_bound: args.lb,
        samples_per_identity: args.k,
        seed: Some(args.seed),
        omega: args.omega,
        dim: set.dim(),
        observation_cone: args.obs_cone,
        consistency_threshold: args.threshold,
        pairing: (&policy).into(),
    };
    let report = cone_sampler::assemble(config, &evaluation);
    let json = report.to_json_pretty().map_err(from_compute)?;
    emit(args.report.as_deref(), &json)?;

    if let Some(hist_path) = &args.hist {
        let hist = score_histogram(&evaluation.scores, &spec);
        cone_sampler::io::write_histogram_csv(hist_path, &hist)
            .map_err(|e| from_write(hist_path, e))?;
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let set = generate_reference_set(args.ids, args.dim, args.max_cos, args.seed)
        .map_err(from_compute)?;
    let cfg = GenerationConfig {
        lower_bound: args.lb[0],
        samples_per_identity: args.k,
        base_seed: args.seed,
        dim: args.dim,
        observation_cone: args.obs_cone,
    };
    let sweep = run_lb_sweep(&set, &cfg, &args.lb).map_err(from_compute)?;
    let json = sweep.to_json_pretty().map_err(from_compute)?;
    emit(args.out.as_deref(), &json)
}

fn hist(args: HistArgs) -> CliResult<()> {
    let set = load_dataset(&args.data, &args.labels)?;
    let policy = pairing_policy(args.seed, args.impostor_mult);
    let scores = cone_sampler::build_score_set(&set, &policy).map_err(from_compute)?;
    let spec = binning(args.bins, &args.range)?;
    let histogram = score_histogram(&scores, &spec);
    match &args.out {
        Some(path) => cone_sampler::io::write_histogram_csv(path, &histogram)
            .map_err(|e| from_write(path, e)),
        None => {
            let mut text = String::from("bin_lo,bin_hi,genuine_count,impostor_count\n");
            for i in 0..histogram.genuine.len() {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    histogram.edges[i],
                    histogram.edges[i + 1],
                    histogram.genuine[i],
                    histogram.impostor[i]
                ));
            }
            emit(None, &text)
        }
    }
}
