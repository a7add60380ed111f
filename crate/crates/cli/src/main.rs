use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use massart_core::cutting_planes::{run_cutting_planes, CpParams};
use massart_core::experiment::{emit_csv, run_experiment, ExperimentConfig, MarginalSpec, NoiseSpec};
use massart_core::io::{read_dataset, read_model, save_dataset, write_json, write_model, ModelFile};
use massart_core::jl::{JlProjection, ProjectedSource};
use massart_core::losses::structural_lemma_gap;
use massart_core::rng::{stream_rng, Stream};
use massart_core::sgd::{run_sgd, SgdParams, DEFAULT_STEP_CONSTANT};
use massart_core::source::{DatasetStream, InstanceStream, SampleSource};
use massart_core::synth::{generate_dataset, random_direction, Dataset, MassartInstance};
use massart_core::{empirical_error, potential_trajectory, Error};
use rand::Rng;

/// Learners for margin halfspaces under Massart label noise.
#[derive(Parser)]
#[command(name = "massart", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    Gen(GenArgs),
    /// Train a learner and write a model file.
    Train {
        #[command(subcommand)]
        learner: TrainCommand,
    },
    /// Print the error of a model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run an experiment config and write one CSV row per trial.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// White-box diagnostics on a dataset that records its w*.
    Diag {
        #[command(subcommand)]
        check: DiagCommand,
    },
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// constant, boundary:WIDTH or hash.
    #[arg(long, default_value = "constant")]
    noise: NoiseSpec,
    /// uniform or two-cluster:SPREAD.
    #[arg(long, default_value = "uniform")]
    marginal: MarginalSpec,
    /// Seed for w*; defaults to --seed.
    #[arg(long)]
    instance_seed: Option<u64>,
}

impl InstanceArgs {
    fn build(&self, seed: u64) -> anyhow::Result<MassartInstance> {
        let missing = |flag| anyhow!("--{flag} is required to define an instance");
        let dim = self.dim.ok_or_else(|| missing("dim"))?;
        let gamma = self.gamma.ok_or_else(|| missing("gamma"))?;
        let eta = self.eta.ok_or_else(|| missing("eta"))?;
        let seed = self.instance_seed.unwrap_or(seed);
        let instance = MassartInstance::random(dim, gamma, eta, self.noise.model(eta, seed), seed)?;
        Ok(instance.with_marginal(self.marginal.0)?)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SourceArgs {
    /// Train on the examples of a dataset file, in order.
    #[arg(long, conflicts_with = "online")]
    data: Option<PathBuf>,
    /// Draw examples from a fresh synthetic instance instead.
    #[arg(long)]
    online: bool,
    #[command(flatten)]
    instance: InstanceArgs,
}

#[derive(Args)]
struct CommonTrainArgs {
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum TrainCommand {
    /// Online projected SGD with holdout selection.
    Sgd {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonTrainArgs,
        /// Step-size constant.
        #[arg(long, default_value_t = DEFAULT_STEP_CONSTANT)]
        c: f64,
        /// Iterations; by default sized from the parameters, or to fit a dataset.
        #[arg(long)]
        iterations: Option<usize>,
        /// Holdout size for selecting among iterates.
        #[arg(long)]
        selection_size: Option<usize>,
        /// Record every K-th iterate in a `.history.json` sidecar.
        #[arg(long)]
        history: Option<usize>,
    },
    /// Ellipsoid cutting planes with a gradient-averaging oracle.
    Cp {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        common: CommonTrainArgs,
        /// Project examples to K dimensions first; the learner then uses margin γ/2.
        #[arg(long)]
        jl_dim: Option<usize>,
        #[arg(long)]
        oracle_samples: Option<usize>,
        #[arg(long)]
        check_samples: Option<usize>,
        #[arg(long)]
        max_calls: Option<usize>,
        /// Write per-cut diagnostics to this JSON file.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DiagCommand {
    /// Minimum structural-lemma gap over random w in the unit ball.
    Structural {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

const INVALID_ARGS: u8 = 2;
const BAD_DATA: u8 = 3;
const LEARNER_FAILED: u8 = 4;

trait ExitWith<T> {
    fn exit_with(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitWith<T> for Result<T, E> {
    fn exit_with(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen(args) => gen(args),
        Command::Train { learner } => match learner {
            TrainCommand::Sgd {
                source,
                common,
                c,
                iterations,
                selection_size,
                history,
            } => train_sgd(source, common, c, iterations, selection_size, history),
            TrainCommand::Cp {
                source,
                common,
                jl_dim,
                oracle_samples,
                check_samples,
                max_calls,
                diagnostics,
            } => train_cp(source, common, jl_dim, [oracle_samples, check_samples, max_calls], diagnostics),
        },
        Command::Eval { model, data } => eval(&model, &data),
        Command::Bench { config, out, jobs } => bench(&config, &out, jobs),
        Command::Diag {
            check: DiagCommand::Structural { data, trials, seed },
        } => diag_structural(&data, trials, seed),
    }
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let instance = args.instance.build(args.seed).exit_with(INVALID_ARGS)?;
    let dataset = generate_dataset(&instance, args.n, args.seed).exit_with(INVALID_ARGS)?;
    save_dataset(&args.out, &dataset)
        .with_context(|| format!("writing {}", args.out.display()))
        .exit_with(INVALID_ARGS)?;
    eprintln!("wrote {} examples to {}", args.n, args.out.display());
    Ok(())
}

/// Training data plus the margin and noise bound the learner should assume.
struct Training {
    dataset: Option<Dataset>,
    instance: Option<MassartInstance>,
    dim: usize,
    gamma: f64,
    eta: f64,
}

impl Training {
    fn load(args: &SourceArgs, seed: u64) -> Result<Self, Failure> {
        match (&args.data, args.online) {
            (Some(path), false) => {
                let file = read_dataset(path).exit_with(BAD_DATA)?;
                Ok(Training {
                    dim: file.header.dim,
                    gamma: args.instance.gamma.unwrap_or(file.header.gamma),
                    eta: args.instance.eta.unwrap_or(file.header.eta),
                    instance: None,
                    dataset: Some(file.dataset),
                })
            }
            (None, true) => {
                let instance = args.instance.build(seed).exit_with(INVALID_ARGS)?;
                Ok(Training {
                    dim: instance.dim(),
                    gamma: instance.gamma(),
                    eta: instance.eta(),
                    instance: Some(instance),
                    dataset: None,
                })
            }
            _ => Err(anyhow!("pass exactly one of --data FILE or --online")).exit_with(INVALID_ARGS),
        }
    }

    fn source(&self, seed: u64) -> Box<dyn SampleSource + '_> {
        match (&self.dataset, &self.instance) {
            (Some(d), _) => Box::new(DatasetStream::new(d)),
            (None, Some(i)) => Box::new(InstanceStream::new(i.clone(), seed)),
            (None, None) => unreachable!("one source is always loaded"),
        }
    }

    fn describe(&self) -> serde_json::Value {
        match &self.instance {
            Some(i) => serde_json::to_value(i).unwrap_or_default(),
            None => serde_json::Value::Null,
        }
    }
}

fn learner_error(e: Error) -> Failure {
    let code = match e {
        Error::InvalidParameter { .. } | Error::Config(_) => INVALID_ARGS,
        _ => LEARNER_FAILED,
    };
    Failure { code, error: e.into() }
}

fn train_sgd(
    source_args: SourceArgs,
    common: CommonTrainArgs,
    c: f64,
    iterations: Option<usize>,
    selection_size: Option<usize>,
    history: Option<usize>,
) -> Result<(), Failure> {
    let training = Training::load(&source_args, common.seed)?;
    let mut builder = SgdParams::builder(common.eps, common.delta, training.eta, training.gamma)
        .step_constant(c)
        .seed(common.seed)
        .history_stride(history.unwrap_or(usize::MAX));
    if let Some(d) = &training.dataset {
        if iterations.is_none() && selection_size.is_none() {
            builder = builder.total_draws(d.len());
        }
    }
    if let Some(t) = iterations {
        builder = builder.iterations(t);
    }
    if let Some(n) = selection_size {
        builder = builder.selection_size(n);
    }
    let params = builder.build().map_err(learner_error)?;
    let out = run_sgd(&mut *training.source(common.seed), &params).map_err(learner_error)?;

    let model = ModelFile::new(
        &out.w_hat,
        serde_json::json!({ "learner": params, "instance": training.describe() }),
        out.draws_used,
    )
    .with_method("sgd");
    write_model(&common.out, &model).exit_with(INVALID_ARGS)?;
    if history.is_some() {
        let mut path = common.out.clone().into_os_string();
        path.push(".history.json");
        let potential = training
            .instance
            .as_ref()
            .or_else(|| training.dataset.as_ref().and_then(Dataset::instance))
            .map(|i| potential_trajectory(&out.iterates, i.w_star()));
        let sidecar = serde_json::json!({
            "indices": out.iterates.indices(),
            "iterates": out.iterates.iter().map(|(_, w)| w.to_vec()).collect::<Vec<_>>(),
            "potential": potential,
        });
        write_json(Path::new(&path), &sidecar).exit_with(INVALID_ARGS)?;
    }
    eprintln!(
        "selected iterate {} of {} (holdout error {:.6}), {} draws",
        out.selected_index,
        params.iterations(),
        out.selection_errors[out.selected_index],
        out.draws_used
    );
    Ok(())
}

fn train_cp(
    source_args: SourceArgs,
    common: CommonTrainArgs,
    jl_dim: Option<usize>,
    [oracle_samples, check_samples, max_calls]: [Option<usize>; 3],
    diagnostics: Option<PathBuf>,
) -> Result<(), Failure> {
    let training = Training::load(&source_args, common.seed)?;
    let (dim, gamma) = match jl_dim {
        Some(k) => (k, training.gamma / 2.0),
        None => (training.dim, training.gamma),
    };
    let mut builder = CpParams::builder(dim, common.eps, common.delta, training.eta, gamma).seed(common.seed);
    if let Some(n) = oracle_samples {
        builder = builder.oracle_samples(n);
    }
    if let Some(n) = check_samples {
        builder = builder.check_samples(n);
    }
    if let Some(n) = max_calls {
        builder = builder.max_calls(n);
    }
    let params = builder.build().map_err(learner_error)?;

    let source = training.source(common.seed);
    let (w, out) = match jl_dim {
        Some(k) => {
            let projection = JlProjection::gaussian(training.dim, k, common.seed).map_err(learner_error)?;
            let mut projected = ProjectedSource::new(source, projection).map_err(learner_error)?;
            let out = run_cutting_planes(&mut projected, &params).map_err(learner_error)?;
            let w = projected
                .projection()
                .lift_weights(&out.output.w_hat)
                .map_err(learner_error)?;
            (w, out)
        }
        None => {
            let mut source = source;
            let out = run_cutting_planes(&mut *source, &params).map_err(learner_error)?;
            (out.output.w_hat.clone(), out)
        }
    };

    let model = ModelFile::new(
        &w,
        serde_json::json!({ "learner": params, "jl_dim": jl_dim, "instance": training.describe() }),
        out.output.draws_used,
    )
    .with_method("cutting-planes");
    write_model(&common.out, &model).exit_with(INVALID_ARGS)?;
    if let Some(path) = diagnostics {
        write_json(&path, &out.diagnostics).exit_with(INVALID_ARGS)?;
    }
    eprintln!(
        "{} after {} oracle calls, {} draws",
        if out.diagnostics.converged {
            "accepted a candidate"
        } else {
            "call budget exhausted"
        },
        out.diagnostics.oracle_calls,
        out.output.draws_used
    );
    Ok(())
}

fn eval(model: &Path, data: &Path) -> Result<(), Failure> {
    let model = read_model(model).exit_with(BAD_DATA)?;
    let file = read_dataset(data).exit_with(BAD_DATA)?;
    if model.dim != file.header.dim {
        return Err(anyhow!(
            "model has dimension {}, data has dimension {}",
            model.dim,
            file.header.dim
        ))
        .exit_with(BAD_DATA);
    }
    let err = empirical_error(&model.w, &file.dataset).exit_with(BAD_DATA)?;
    println!("{err}");
    Ok(())
}

fn bench(config: &Path, out: &Path, jobs: usize) -> Result<(), Failure> {
    let config = ExperimentConfig::load(config).exit_with(INVALID_ARGS)?;
    let rows = run_experiment(&config, jobs).map_err(learner_error)?;
    emit_csv(&rows, out).exit_with(INVALID_ARGS)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    let succeeded = rows.iter().filter(|r| r.success).count();
    eprintln!(
        "{} rows to {} ({succeeded} within eta + epsilon, {failed} failed)",
        rows.len(),
        out.display()
    );
    Ok(())
}

fn diag_structural(data: &Path, trials: usize, seed: u64) -> Result<(), Failure> {
    let file = read_dataset(data).exit_with(BAD_DATA)?;
    let instance = file
        .dataset
        .instance()
        .ok_or_else(|| anyhow!("{} does not record w_star", data.display()))
        .exit_with(BAD_DATA)?;
    if trials == 0 {
        return Err(anyhow!("--trials must be positive")).exit_with(INVALID_ARGS);
    }
    let floor = instance.gamma() / 2.0;
    let mut rng = stream_rng(seed, Stream::Aux);
    let mut min_gap = f64::INFINITY;
    for _ in 0..trials {
        let dir = random_direction(instance.dim(), &mut rng);
        let radius = rng.random::<f64>().powf(1.0 / instance.dim() as f64);
        let w: Vec<f64> = dir.iter().map(|c| radius * c).collect();
        let gap = structural_lemma_gap(&w, &file.dataset, instance.eta(), floor).map_err(learner_error)?;
        min_gap = min_gap.min(gap);
    }
    println!("{min_gap}");
    Ok(())
}
