//! Cutting-plane learner: the averaged clipped gradient at `w` serves as a
//! separation oracle for the ball of radius `γ/2` about `w*` whenever the
//! error of `w` exceeds `η + ε`; the ellipsoid method localizes that ball.
//!
//! Each round evaluates the candidate `w = Proj_ball(center)` on a fresh
//! holdout and stops when its error is at most `η + 3ε/4`. Otherwise it
//! spends one oracle call (fresh samples, never reused) and cuts. Centers that
//! leave the unit ball are first pulled back with sample-free domain cuts
//! along the center direction, so oracle cuts are always central at `w`.

use serde::Serialize;

use crate::ellipsoid::{central_cut_volume_ratio, Ellipsoid};
use crate::error::{Error, Result};
use crate::hypothesis::{argmin_first, error_on, IterateHistory, LearnerOutput};
use crate::losses::GradientParams;
use crate::sgd::{check_common, default_selection_size};
use crate::source::{draw_many, SampleSource};
use crate::synth::LabeledExample;
use crate::vector::{dot, norm, project_to_ball, UnitVector};

/// Constant in `N_oracle = K' log(1/(γδ)) / (ε² γ²)`.
pub const ORACLE_CONSTANT: f64 = 64.0;
/// Constant in `max_calls = ⌈8 d log(4d/γ)⌉`.
pub const CALL_BUDGET_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpParams {
    dim: usize,
    epsilon: f64,
    delta: f64,
    eta: f64,
    gamma: f64,
    oracle_samples: usize,
    check_samples: usize,
    max_calls: usize,
    seed: u64,
}

pub fn default_oracle_samples(epsilon: f64, delta: f64, gamma: f64) -> usize {
    (ORACLE_CONSTANT * (1.0 / (gamma * delta)).ln() / (epsilon * epsilon * gamma * gamma)).ceil() as usize
}

pub fn default_max_calls(dim: usize, gamma: f64) -> usize {
    let d = dim as f64;
    (CALL_BUDGET_CONSTANT * d * (4.0 * d / gamma).ln()).ceil() as usize
}

impl CpParams {
    pub fn builder(dim: usize, epsilon: f64, delta: f64, eta: f64, gamma: f64) -> CpParamsBuilder {
        CpParamsBuilder {
            dim,
            epsilon,
            delta,
            eta,
            gamma,
            oracle_samples: None,
            check_samples: None,
            max_calls: None,
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Fresh samples per oracle call.
    pub fn oracle_samples(&self) -> usize {
        self.oracle_samples
    }

    /// Fresh samples per termination check.
    pub fn check_samples(&self) -> usize {
        self.check_samples
    }

    pub fn max_calls(&self) -> usize {
        self.max_calls
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Holdout error at or below which a candidate is accepted: `η + ε - ε/4`.
    pub fn acceptance_threshold(&self) -> f64 {
        self.eta + 0.75 * self.epsilon
    }

    pub fn gradient_params(&self) -> GradientParams {
        GradientParams::for_learner(self.eta, self.gamma).expect("validated at construction")
    }

    /// Worst-case number of examples a run draws.
    pub fn sample_budget(&self) -> usize {
        (self.max_calls + 1) * self.check_samples + self.max_calls * self.oracle_samples
    }
}

#[derive(Debug, Clone)]
pub struct CpParamsBuilder {
    dim: usize,
    epsilon: f64,
    delta: f64,
    eta: f64,
    gamma: f64,
    oracle_samples: Option<usize>,
    check_samples: Option<usize>,
    max_calls: Option<usize>,
    seed: u64,
}

impl CpParamsBuilder {
    pub fn oracle_samples(mut self, n: usize) -> Self {
        self.oracle_samples = Some(n);
        self
    }

    pub fn check_samples(mut self, n: usize) -> Self {
        self.check_samples = Some(n);
        self
    }

    pub fn max_calls(mut self, n: usize) -> Self {
        self.max_calls = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn build(self) -> Result<CpParams> {
        check_common(self.epsilon, self.delta, self.eta, self.gamma)?;
        if self.dim == 0 {
            return Err(Error::param("dim", 0.0, "must be positive"));
        }
        let max_calls = self
            .max_calls
            .unwrap_or_else(|| default_max_calls(self.dim, self.gamma));
        let oracle_samples = self
            .oracle_samples
            .unwrap_or_else(|| default_oracle_samples(self.epsilon, self.delta, self.gamma));
        let check_samples = self
            .check_samples
            .unwrap_or_else(|| default_selection_size(self.epsilon, self.delta, self.eta, max_calls));
        for (name, v) in [
            ("max_calls", max_calls),
            ("oracle_samples", oracle_samples),
            ("check_samples", check_samples),
        ] {
            if v == 0 {
                return Err(Error::param(name, 0.0, "must be positive"));
            }
        }
        Ok(CpParams {
            dim: self.dim,
            epsilon: self.epsilon,
            delta: self.delta,
            eta: self.eta,
            gamma: self.gamma,
            oracle_samples,
            check_samples,
            max_calls,
            seed: self.seed,
        })
    }
}

/// Block size of the streaming gradient average.
const MEAN_BLOCK: usize = 1024;

/// Running mean of vectors: fixed-size blocks summed directly, block sums
/// combined pairwise through a binary-counter stack.
struct StreamingMean {
    block: Vec<f64>,
    in_block: usize,
    stack: Vec<(usize, Vec<f64>)>,
    count: usize,
}

impl StreamingMean {
    fn new(dim: usize) -> Self {
        StreamingMean {
            block: vec![0.0; dim],
            in_block: 0,
            stack: Vec::new(),
            count: 0,
        }
    }

    fn add_scaled(&mut self, c: f64, x: &[f64]) {
        self.block.iter_mut().zip(x).for_each(|(b, xi)| *b += c * xi);
        self.in_block += 1;
        self.count += 1;
        if self.in_block == MEAN_BLOCK {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let dim = self.block.len();
        let mut sum = std::mem::replace(&mut self.block, vec![0.0; dim]);
        let mut level = 0;
        self.in_block = 0;
        while let Some((l, _)) = self.stack.last() {
            if *l != level {
                break;
            }
            let (_, prev) = self.stack.pop().expect("non-empty");
            sum.iter_mut().zip(&prev).for_each(|(s, p)| *s += p);
            level += 1;
        }
        self.stack.push((level, sum));
    }

    fn finish(mut self) -> Vec<f64> {
        if self.in_block > 0 {
            self.flush();
        }
        let dim = self.block.len();
        let mut total = vec![0.0; dim];
        while let Some((_, s)) = self.stack.pop() {
            total.iter_mut().zip(&s).for_each(|(t, v)| *t += v);
        }
        let n = self.count.max(1) as f64;
        total.iter_mut().for_each(|t| *t /= n);
        total
    }
}

/// Averaged gradient `Ĝ(w, w)` over `samples` (leakage `η`, floor `γ/2`).
///
/// Requires at least `params.oracle_samples()` examples.
pub fn separation_oracle(w: &[f64], samples: &[LabeledExample], params: &CpParams) -> Result<Vec<f64>> {
    if samples.len() < params.oracle_samples {
        return Err(Error::InsufficientSamples {
            needed: params.oracle_samples - samples.len(),
        });
    }
    let grad = params.gradient_params();
    let mut mean = StreamingMean::new(w.len());
    for e in samples {
        let wx = dot(w, &e.x);
        mean.add_scaled(grad.gradient_coefficient(wx, wx, e.y), &e.x);
    }
    Ok(mean.finish())
}

/// [`separation_oracle`] on `params.oracle_samples()` examples drawn directly
/// from `source`, without materializing them. Gives the same result as
/// collecting those examples first.
pub fn separation_oracle_streamed<S: SampleSource + ?Sized>(w: &[f64], source: &mut S, params: &CpParams) -> Result<Vec<f64>> {
    let grad = params.gradient_params();
    let mut mean = StreamingMean::new(w.len());
    for k in 0..params.oracle_samples {
        let e = source.draw().ok_or(Error::InsufficientSamples {
            needed: params.oracle_samples - k,
        })?;
        let wx = dot(w, &e.x);
        mean.add_scaled(grad.gradient_coefficient(wx, wx, e.y), &e.x);
    }
    Ok(mean.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CutKind {
    /// Cut from a separation-oracle call at the current candidate.
    Oracle,
    /// Sample-free cut pulling a center outside the unit ball back inside.
    Domain,
}

/// One ellipsoid update.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutRecord {
    pub kind: CutKind,
    /// Oracle calls made so far, including this one.
    pub oracle_calls: usize,
    /// Holdout error of the candidate that triggered the cut (oracle cuts only).
    pub candidate_error: Option<f64>,
    pub direction_norm: f64,
    pub log_det_before: f64,
    pub log_det_after: f64,
    /// `sqrt(det S' / det S)`.
    pub volume_ratio: f64,
    pub expected_volume_ratio: f64,
    /// Whether `w*` lies in the kept halfspace (white-box sources only).
    pub keeps_w_star: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpDiagnostics {
    pub cuts: Vec<CutRecord>,
    pub oracle_calls: usize,
    /// Restarts from the unit ball after a numerical breakdown.
    pub restarts: Vec<String>,
    /// Whether a candidate passed the holdout test.
    pub converged: bool,
    /// Index into `cuts` of the first cut that discarded `w*`.
    pub first_cut_excluding_w_star: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CpOutput {
    pub output: LearnerOutput,
    pub diagnostics: CpDiagnostics,
}

/// Cap on consecutive domain cuts before a candidate must be evaluated.
const MAX_DOMAIN_CUTS: usize = 10_000;

pub fn run_cutting_planes<S: SampleSource + ?Sized>(source: &mut S, params: &CpParams) -> Result<CpOutput> {
    let dim = params.dim;
    if source.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: source.dim(),
        });
    }
    let w_star = source.instance().map(|i| i.w_star().to_vec());
    let mut ellipsoid = Ellipsoid::ball(dim, 1.0);
    let mut log_det = 0.0;
    let mut history = IterateHistory::new(dim);
    let mut errors = Vec::new();
    let mut draws = 0usize;
    let mut diag = CpDiagnostics {
        cuts: Vec::new(),
        oracle_calls: 0,
        restarts: Vec::new(),
        converged: false,
        first_cut_excluding_w_star: None,
    };

    loop {
        let mut domain_cuts = 0;
        while norm(ellipsoid.center()) > 1.0 && domain_cuts < MAX_DOMAIN_CUTS {
            let g = ellipsoid.center().to_vec();
            let keeps = w_star.as_ref().map(|ws| dot(&g, ws) <= dot(&g, &g));
            apply_cut(&mut ellipsoid, &mut log_det, &g, CutKind::Domain, None, keeps, &mut diag);
            domain_cuts += 1;
        }

        let w = project_to_ball(ellipsoid.center())?.into_inner();
        let holdout = draw_many(source, params.check_samples, params.check_samples)?;
        draws += holdout.len();
        let err = error_on(&w, &holdout)?;
        history.push(errors.len(), &w);
        errors.push(err);
        if err <= params.acceptance_threshold() {
            diag.converged = true;
            break;
        }
        if diag.oracle_calls == params.max_calls {
            break;
        }

        let g = separation_oracle_streamed(&w, source, params)?;
        draws += params.oracle_samples;
        diag.oracle_calls += 1;
        if g.iter().all(|c| *c == 0.0) {
            // Zero averaged gradient gives no cut; draw a new oracle sample next round.
            continue;
        }
        let keeps = w_star.as_ref().map(|ws| dot(&g, ws) <= dot(&g, &w));
        apply_cut(&mut ellipsoid, &mut log_det, &g, CutKind::Oracle, Some(err), keeps, &mut diag);
    }

    let selected_index = if diag.converged {
        errors.len() - 1
    } else {
        argmin_first(&errors)
    };
    let w_hat = UnitVector::new_unchecked(history.get(selected_index).to_vec());
    Ok(CpOutput {
        output: LearnerOutput {
            w_hat,
            selected_index,
            iterates: history,
            selection_errors: errors,
            draws_used: draws,
        },
        diagnostics: diag,
    })
}

fn apply_cut(
    ellipsoid: &mut Ellipsoid,
    log_det: &mut f64,
    g: &[f64],
    kind: CutKind,
    candidate_error: Option<f64>,
    keeps_w_star: Option<bool>,
    diag: &mut CpDiagnostics,
) {
    let dim = ellipsoid.dim();
    let next = ellipsoid.cut(g).and_then(|e| e.log_det().map(|ld| (e, ld)));
    match next {
        Ok((next, next_log_det)) => {
            let index = diag.cuts.len();
            if keeps_w_star == Some(false) && diag.first_cut_excluding_w_star.is_none() {
                diag.first_cut_excluding_w_star = Some(index);
            }
            diag.cuts.push(CutRecord {
                kind,
                oracle_calls: diag.oracle_calls,
                candidate_error,
                direction_norm: norm(g),
                log_det_before: *log_det,
                log_det_after: next_log_det,
                volume_ratio: (0.5 * (next_log_det - *log_det)).exp(),
                expected_volume_ratio: central_cut_volume_ratio(dim),
                keeps_w_star,
            });
            *ellipsoid = next;
            *log_det = next_log_det;
        }
        Err(e) => {
            diag.restarts.push(format!("after {} cuts: {e}", diag.cuts.len()));
            *ellipsoid = Ellipsoid::ball(dim, 1.0);
            *log_det = 0.0;
        }
    }
}
