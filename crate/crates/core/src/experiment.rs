//! Experiment orchestration: TOML configs, seeded trials and CSV results.
//!
//! Trial `t` of sweep point `s` uses the seed `derive_seed(master_seed, [s, t])`.
//! That seed draws `w*` (instance stream), the training examples (train
//! stream) and the `eval_n` test examples (eval stream), so any row can be
//! re-run on its own.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutting_planes::{run_cutting_planes, CpParams};
use crate::error::{Error, Result};
use crate::jl::{JlProjection, ProjectedSource};
use crate::perceptron::{max_passes, run_perceptron};
use crate::rng::{derive_seed, Stream};
use crate::sgd::{run_sgd, SgdParams, DEFAULT_STEP_CONSTANT};
use crate::source::InstanceStream;
use crate::synth::{generate_dataset, Marginal, MassartInstance, NoiseModel};
use crate::vector::{dot, Label};

pub const DEFAULT_EVAL_N: usize = 100_000;

/// Noise family; the rate bound comes from the instance `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NoiseSpec {
    Constant,
    Boundary { width: f64 },
    Hash,
}

impl NoiseSpec {
    /// Concrete model at bound `eta`; the hash salt is the trial seed.
    pub fn model(&self, eta: f64, seed: u64) -> NoiseModel {
        match *self {
            NoiseSpec::Constant => NoiseModel::ConstantRate { rate: eta },
            NoiseSpec::Boundary { width } => NoiseModel::BoundaryConcentrated { rate: eta, width },
            NoiseSpec::Hash => NoiseModel::HashField { rate_bound: eta, salt: seed },
        }
    }
}

impl FromStr for NoiseSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "constant" => Ok(NoiseSpec::Constant),
            None if s == "hash" => Ok(NoiseSpec::Hash),
            Some(("boundary", w)) => {
                let width: f64 = w
                    .parse()
                    .map_err(|_| Error::Config(format!("bad boundary width `{w}`")))?;
                if !(width > 0.0 && width.is_finite()) {
                    return Err(Error::Config(format!("boundary width must be positive, got {w}")));
                }
                Ok(NoiseSpec::Boundary { width })
            }
            _ => Err(Error::Config(format!(
                "unknown noise `{s}`, expected constant, boundary:WIDTH or hash"
            ))),
        }
    }
}

impl fmt::Display for NoiseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSpec::Constant => f.write_str("constant"),
            NoiseSpec::Boundary { width } => write!(f, "boundary:{width}"),
            NoiseSpec::Hash => f.write_str("hash"),
        }
    }
}

impl TryFrom<String> for NoiseSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NoiseSpec> for String {
    fn from(n: NoiseSpec) -> String {
        n.to_string()
    }
}

/// Point marginal: `uniform` or `two-cluster:SPREAD`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MarginalSpec(pub Marginal);

impl FromStr for MarginalSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "uniform" => Ok(MarginalSpec(Marginal::Uniform)),
            Some(("two-cluster", v)) => v
                .parse()
                .map(|spread| MarginalSpec(Marginal::TwoCluster { spread }))
                .map_err(|_| Error::Config(format!("bad cluster spread `{v}`"))),
            _ => Err(Error::Config(format!(
                "unknown marginal `{s}`, expected uniform or two-cluster:SPREAD"
            ))),
        }
    }
}

impl fmt::Display for MarginalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Marginal::Uniform => f.write_str("uniform"),
            Marginal::TwoCluster { spread } => write!(f, "two-cluster:{spread}"),
        }
    }
}

impl TryFrom<String> for MarginalSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MarginalSpec> for String {
    fn from(m: MarginalSpec) -> String {
        m.to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub dim: usize,
    pub gamma: f64,
    pub eta: f64,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub marginal: MarginalSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Sgd,
    CuttingPlanes,
    Perceptron,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Sgd => "sgd",
            LearnerKind::CuttingPlanes => "cutting-planes",
            LearnerKind::Perceptron => "perceptron",
        }
    }
}

fn default_accuracy() -> f64 {
    0.1
}

/// Learner and its parameters. Unset sizes take the learners' defaults.
/// `epsilon` also sets the success threshold `η + ε` for every learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default = "default_accuracy")]
    pub epsilon: f64,
    #[serde(default = "default_accuracy")]
    pub delta: f64,
    /// SGD step constant.
    #[serde(default)]
    pub c: Option<f64>,
    /// SGD iterations.
    #[serde(default, rename = "T")]
    pub iterations: Option<usize>,
    /// SGD tournament holdout size.
    #[serde(default, rename = "N")]
    pub selection_size: Option<usize>,
    /// Total draws (SGD) or training-set size (perceptron).
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub oracle_samples: Option<usize>,
    #[serde(default)]
    pub check_samples: Option<usize>,
    #[serde(default)]
    pub max_calls: Option<usize>,
    /// Random projection dimension for cutting planes.
    #[serde(default)]
    pub jl_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub epsilon: Option<Vec<f64>>,
    #[serde(default, rename = "T")]
    pub iterations: Option<Vec<usize>>,
    #[serde(default)]
    pub n: Option<Vec<usize>>,
    #[serde(default)]
    pub gamma: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSpec,
    pub learner: LearnerSpec,
    pub trials: usize,
    #[serde(default = "default_eval_n")]
    pub eval_n: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_eval_n() -> usize {
    DEFAULT_EVAL_N
}

/// One fully resolved sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub instance: InstanceSpec,
    pub learner: LearnerSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if self.eval_n == 0 {
            return bad("eval_n must be positive".into());
        }
        if self.instance.dim == 0 {
            return bad("instance.dim must be positive".into());
        }
        if let Some(s) = &self.sweep {
            let lens = [
                ("epsilon", s.epsilon.as_ref().map(Vec::len)),
                ("T", s.iterations.as_ref().map(Vec::len)),
                ("n", s.n.as_ref().map(Vec::len)),
                ("gamma", s.gamma.as_ref().map(Vec::len)),
            ];
            for (axis, len) in lens {
                if len == Some(0) {
                    return bad(format!("sweep axis `{axis}` is empty"));
                }
            }
            let kind = self.learner.kind;
            if s.iterations.is_some() && kind != LearnerKind::Sgd {
                return bad("sweep axis `T` applies to sgd only".into());
            }
            if s.n.is_some() && kind == LearnerKind::CuttingPlanes {
                return bad("sweep axis `n` does not apply to cutting-planes".into());
            }
            if s.n.is_some() && s.iterations.is_some() {
                return bad("sweep axes `n` and `T` both fix the sgd budget; choose one".into());
            }
        }
        if self.learner.kind == LearnerKind::Perceptron
            && self.learner.n.is_none()
            && self.sweep.as_ref().and_then(|s| s.n.as_ref()).is_none()
        {
            return bad("perceptron needs a training size `n`".into());
        }
        for point in self.sweep_points() {
            check_point(&point).map_err(|e| Error::Config(format!("sweep point {}: {e}", point.index)))?;
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes, nested in the order
    /// epsilon, T, n, gamma (gamma fastest).
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let sweep = self.sweep.clone().unwrap_or_default();
        let eps: Vec<Option<f64>> = axis(sweep.epsilon);
        let ts: Vec<Option<usize>> = axis(sweep.iterations);
        let ns: Vec<Option<usize>> = axis(sweep.n);
        let gammas: Vec<Option<f64>> = axis(sweep.gamma);
        let mut points = Vec::new();
        for e in &eps {
            for t in &ts {
                for n in &ns {
                    for g in &gammas {
                        let mut instance = self.instance.clone();
                        let mut learner = self.learner.clone();
                        if let Some(e) = e {
                            learner.epsilon = *e;
                        }
                        if let Some(t) = t {
                            learner.iterations = Some(*t);
                        }
                        if let Some(n) = n {
                            learner.n = Some(*n);
                        }
                        if let Some(g) = g {
                            instance.gamma = *g;
                        }
                        points.push(SweepPoint {
                            index: points.len(),
                            instance,
                            learner,
                        });
                    }
                }
            }
        }
        points
    }
}

fn axis<T: Copy>(values: Option<Vec<T>>) -> Vec<Option<T>> {
    match values {
        Some(v) => v.into_iter().map(Some).collect(),
        None => vec![None],
    }
}

fn check_point(point: &SweepPoint) -> Result<()> {
    let inst = &point.instance;
    let model = inst.noise.model(inst.eta, 0);
    MassartInstance::new(crate::vector::UnitVector::basis(inst.dim, 0), inst.gamma, inst.eta, model)?
        .with_marginal(inst.marginal.0)?;
    match point.learner.kind {
        LearnerKind::Sgd => {
            sgd_params(point)?;
        }
        LearnerKind::CuttingPlanes => {
            cp_params(point)?;
        }
        LearnerKind::Perceptron => {
            let l = &point.learner;
            if !(l.epsilon > 0.0 && l.epsilon < 1.0) {
                return Err(Error::param("epsilon", l.epsilon, "must lie in (0, 1)"));
            }
            if l.n == Some(0) {
                return Err(Error::param("n", 0.0, "must be positive"));
            }
        }
    }
    Ok(())
}

/// SGD parameters of a sweep point; a total-draw budget `n` is split by
/// [`SgdParamsBuilder::total_draws`](crate::sgd::SgdParamsBuilder::total_draws).
pub fn sgd_params(point: &SweepPoint) -> Result<SgdParams> {
    let l = &point.learner;
    let gamma = point.instance.gamma;
    let eta = point.instance.eta;
    let c = l.c.unwrap_or(DEFAULT_STEP_CONSTANT);
    let mut builder = SgdParams::builder(l.epsilon, l.delta, eta, gamma).step_constant(c);
    if let Some(n) = l.n {
        if n < 2 {
            return Err(Error::param("n", n as f64, "sgd needs at least 2 draws"));
        }
        builder = builder.total_draws(n);
    } else {
        if let Some(t) = l.iterations {
            builder = builder.iterations(t);
        }
        if let Some(n) = l.selection_size {
            builder = builder.selection_size(n);
        }
    }
    let params = builder.build()?;
    // Keep only the endpoints of the trajectory; experiments never read it.
    SgdParams::builder(l.epsilon, l.delta, eta, gamma)
        .step_constant(c)
        .iterations(params.iterations())
        .selection_size(params.selection_size())
        .history_stride(params.iterations().max(1))
        .build()
}

/// Cutting-plane parameters of a sweep point, in the projected space when
/// `jl_dim` is set (margin halved there).
pub fn cp_params(point: &SweepPoint) -> Result<CpParams> {
    let l = &point.learner;
    let (dim, gamma) = match l.jl_dim {
        Some(0) => return Err(Error::param("jl_dim", 0.0, "must be positive")),
        Some(k) => (k, point.instance.gamma / 2.0),
        None => (point.instance.dim, point.instance.gamma),
    };
    let mut b = CpParams::builder(dim, l.epsilon, l.delta, point.instance.eta, gamma);
    if let Some(n) = l.oracle_samples {
        b = b.oracle_samples(n);
    }
    if let Some(n) = l.check_samples {
        b = b.check_samples(n);
    }
    if let Some(n) = l.max_calls {
        b = b.max_calls(n);
    }
    b.build()
}

/// One trial's outcome. Learner-specific columns are empty when they do not
/// apply; `error` is set when the trial failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_index: usize,
    pub trial: usize,
    pub seed: u64,
    pub learner: String,
    pub dim: usize,
    pub gamma: f64,
    pub eta: f64,
    pub noise: String,
    pub marginal: String,
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub iterations: Option<usize>,
    pub selection_size: Option<usize>,
    pub n: Option<usize>,
    pub oracle_samples: Option<usize>,
    pub check_samples: Option<usize>,
    pub max_calls: Option<usize>,
    pub oracle_calls: Option<usize>,
    pub jl_dim: Option<usize>,
    pub draws_used: Option<usize>,
    pub eval_n: usize,
    pub total_draws: Option<usize>,
    pub test_error: Option<f64>,
    pub success: bool,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

/// CSV column order.
pub const CSV_HEADER: [&str; 27] = [
    "sweep_index",
    "trial",
    "seed",
    "learner",
    "dim",
    "gamma",
    "eta",
    "noise",
    "marginal",
    "epsilon",
    "delta",
    "c",
    "iterations",
    "selection_size",
    "n",
    "oracle_samples",
    "check_samples",
    "max_calls",
    "oracle_calls",
    "jl_dim",
    "draws_used",
    "eval_n",
    "total_draws",
    "test_error",
    "success",
    "wall_time_ms",
    "error",
];

pub fn trial_seed(master_seed: u64, sweep_index: usize, trial: usize) -> u64 {
    derive_seed(master_seed, &[sweep_index as u64, trial as u64])
}

/// Error of `w` on `n` fresh examples from the eval stream of `seed`.
/// Equals `empirical_error` on `generate_from_stream(instance, n, seed, Eval)`.
pub fn test_error(instance: &MassartInstance, w: &[f64], n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("eval_n", 0.0, "must be positive"));
    }
    let mut rng = crate::rng::stream_rng(seed, Stream::Eval);
    let mistakes = (0..n)
        .filter(|_| {
            let e = instance.sample_example(&mut rng);
            Label::of(dot(w, &e.x)) != e.y
        })
        .count();
    Ok(mistakes as f64 / n as f64)
}

struct TrialResult {
    w: Vec<f64>,
    draws_used: usize,
    oracle_calls: Option<usize>,
}

fn run_learner(point: &SweepPoint, instance: &MassartInstance, seed: u64) -> Result<TrialResult> {
    let l = &point.learner;
    match l.kind {
        LearnerKind::Sgd => {
            let params = sgd_params(point)?;
            let out = run_sgd(&mut InstanceStream::new(instance.clone(), seed), &params)?;
            Ok(TrialResult {
                w: out.w_hat.into_inner(),
                draws_used: out.draws_used,
                oracle_calls: None,
            })
        }
        LearnerKind::CuttingPlanes => {
            let params = cp_params(point)?;
            let stream = InstanceStream::new(instance.clone(), seed);
            let (w, out) = match l.jl_dim {
                Some(k) => {
                    let projection = JlProjection::gaussian(instance.dim(), k, seed)?;
                    let mut source = ProjectedSource::new(stream, projection)?;
                    let out = run_cutting_planes(&mut source, &params)?;
                    (source.projection().lift_weights(&out.output.w_hat)?, out)
                }
                None => {
                    let mut source = stream;
                    let out = run_cutting_planes(&mut source, &params)?;
                    (out.output.w_hat.clone(), out)
                }
            };
            Ok(TrialResult {
                w: w.into_inner(),
                draws_used: out.output.draws_used,
                oracle_calls: Some(out.diagnostics.oracle_calls),
            })
        }
        LearnerKind::Perceptron => {
            let n = l.n.ok_or(Error::Config("perceptron needs a training size `n`".into()))?;
            let data = generate_dataset(instance, n, seed)?;
            let out = run_perceptron(&data, max_passes(instance.gamma()))?;
            Ok(TrialResult {
                w: out.w.into_inner(),
                draws_used: n,
                oracle_calls: None,
            })
        }
    }
}

pub fn run_trial(config: &ExperimentConfig, point: &SweepPoint, trial: usize) -> ResultRow {
    let seed = trial_seed(config.master_seed, point.index, trial);
    let inst = &point.instance;
    let l = &point.learner;
    let mut row = ResultRow {
        sweep_index: point.index,
        trial,
        seed,
        learner: l.kind.name().to_string(),
        dim: inst.dim,
        gamma: inst.gamma,
        eta: inst.eta,
        noise: inst.noise.to_string(),
        marginal: inst.marginal.to_string(),
        epsilon: l.epsilon,
        delta: None,
        c: None,
        iterations: None,
        selection_size: None,
        n: l.n,
        oracle_samples: None,
        check_samples: None,
        max_calls: None,
        oracle_calls: None,
        jl_dim: None,
        draws_used: None,
        eval_n: config.eval_n,
        total_draws: None,
        test_error: None,
        success: false,
        wall_time_ms: 0,
        error: None,
    };
    match l.kind {
        LearnerKind::Sgd => {
            if let Ok(p) = sgd_params(point) {
                row.delta = Some(p.delta());
                row.c = Some(p.step_constant());
                row.iterations = Some(p.iterations());
                row.selection_size = Some(p.selection_size());
            }
        }
        LearnerKind::CuttingPlanes => {
            if let Ok(p) = cp_params(point) {
                row.delta = Some(p.delta());
                row.oracle_samples = Some(p.oracle_samples());
                row.check_samples = Some(p.check_samples());
                row.max_calls = Some(p.max_calls());
                row.jl_dim = l.jl_dim;
            }
        }
        LearnerKind::Perceptron => {}
    }

    let start = Instant::now();
    let outcome = MassartInstance::random(inst.dim, inst.gamma, inst.eta, inst.noise.model(inst.eta, seed), seed)
        .and_then(|i| i.with_marginal(inst.marginal.0))
        .and_then(|instance| {
            let result = run_learner(point, &instance, seed)?;
            let err = test_error(&instance, &result.w, config.eval_n, seed)?;
            Ok((result, err))
        });
    row.wall_time_ms = start.elapsed().as_millis() as u64;
    match outcome {
        Ok((result, err)) => {
            row.draws_used = Some(result.draws_used);
            row.total_draws = Some(result.draws_used + config.eval_n);
            row.oracle_calls = result.oracle_calls;
            row.test_error = Some(err);
            row.success = err <= inst.eta + l.epsilon;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs every (sweep point, trial) pair on `jobs` threads (0 = all cores).
/// Rows come back in (sweep, trial) order.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let points = config.sweep_points();
    let tasks: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..config.trials).map(move |t| (p, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, t)| run_trial(config, &points[p], t))
            .collect()
    }))
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, std::io::BufWriter::new(file)).map_err(|e| csv_error(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::ReaderBuilder::new()
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != CSV_HEADER {
        return Err(Error::format(path, 1, "unexpected header"));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, line, format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
trials = 2
eval_n = 2000
master_seed = 7

[instance]
dim = 5
gamma = 0.2
eta = 0.0
noise = "constant"

[learner]
kind = "perceptron"
epsilon = 0.1
n = 300

[sweep]
gamma = [0.2, 0.3]
"#;

    #[test]
    fn config_parses_and_expands() {
        let c = ExperimentConfig::from_toml(CONFIG).unwrap();
        let points = c.sweep_points();
        assert_eq!(points.len(), 2);
        assert_eq!(points[1].instance.gamma, 0.3);
        let again = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn noise_spec_round_trips() {
        for s in ["constant", "hash", "boundary:0.25"] {
            assert_eq!(s.parse::<NoiseSpec>().unwrap().to_string(), s);
        }
        assert!("boundary:-1".parse::<NoiseSpec>().is_err());
        assert!("gaussian".parse::<NoiseSpec>().is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let cases = [
            CONFIG.replace("trials = 2", "trials = 0"),
            CONFIG.replace("gamma = [0.2, 0.3]", "gamma = []"),
            CONFIG.replace("eta = 0.0", "eta = 0.6"),
            CONFIG.replace("n = 300", ""),
            CONFIG.replace("kind = \"perceptron\"", "kind = \"cutting-planes\"").replace("gamma = [0.2, 0.3]", "n = [10]"),
            CONFIG.replace("master_seed = 7", "master_seed = 7\nbogus = 1"),
        ];
        for text in cases {
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn perceptron_trial_on_noiseless_data() {
        let c = ExperimentConfig::from_toml(&CONFIG.replace("trials = 2", "trials = 1")).unwrap();
        let rows = run_experiment(&c, 1).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(r.error.is_none());
            assert!(r.test_error.unwrap() <= 0.1);
            assert_eq!(r.total_draws, Some(300 + 2000));
        }
    }

    #[test]
    fn n_budget_split() {
        let mut c = ExperimentConfig::from_toml(CONFIG).unwrap();
        c.learner.kind = LearnerKind::Sgd;
        c.instance.eta = 0.2;
        c.instance.gamma = 0.1;
        let mut point = c.sweep_points()[0].clone();
        point.instance.gamma = 0.1;
        point.learner.n = Some(1000);
        let p = sgd_params(&point).unwrap();
        assert_eq!((p.iterations(), p.selection_size()), (900, 100));
        point.learner.n = Some(100_000);
        let p = sgd_params(&point).unwrap();
        assert_eq!(p.iterations() + p.selection_size(), 100_000);
        assert_eq!(p.selection_size(), 2016);
    }

    #[test]
    fn csv_round_trip_and_empty_header() {
        let c = ExperimentConfig::from_toml(CONFIG).unwrap();
        let mut rows = run_experiment(&c, 1).unwrap();
        rows[0].error = Some("quoted, \"text\"\nline".into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        emit_csv(&rows, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        emit_csv(&[], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), CSV_HEADER.join(",") + "\n");
    }
}
