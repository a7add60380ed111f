//! Online projected SGD on the clipped LeakyReLU loss with a constant step
//! size, followed by a holdout tournament over all iterates.
//!
//! Each round draws one fresh example `(x, y)` and updates
//!
//! ```text
//! w ← Proj_ball(w - s · g(w, w, x, y)),   s = c γ² ε,
//! ```
//!
//! where `g` is [`massart_gradient`](crate::losses::massart_gradient) with
//! leakage `η` and clipping floor `γ/2`. After `T` rounds the learner draws
//! `N` fresh examples and returns the iterate with the fewest holdout mistakes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypothesis::{argmin_first, candidate_errors, IterateHistory, LearnerOutput};
use crate::losses::GradientParams;
use crate::source::{draw_many, SampleSource};
use crate::synth::LabeledExample;
use crate::vector::{dot, project_in_place, UnitVector};

/// Largest step constant for which the per-step decrease argument holds
/// (`s <= γ² ε / 8`).
pub const MAX_STEP_CONSTANT: f64 = 1.0 / 8.0;
pub const DEFAULT_STEP_CONSTANT: f64 = 1.0 / 16.0;
/// Constant in the holdout size `K log((T+1)/δ) / (ε (1 - 2η))`.
pub const SELECTION_CONSTANT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SgdParams {
    epsilon: f64,
    delta: f64,
    eta: f64,
    gamma: f64,
    c: f64,
    iterations: usize,
    selection_size: usize,
    seed: u64,
    history_stride: usize,
}

impl SgdParams {
    /// Builder with `c = 1/16` and `T`, `N` derived from the other parameters.
    pub fn builder(epsilon: f64, delta: f64, eta: f64, gamma: f64) -> SgdParamsBuilder {
        SgdParamsBuilder {
            epsilon,
            delta,
            eta,
            gamma,
            c: DEFAULT_STEP_CONSTANT,
            iterations: None,
            selection_size: None,
            seed: 0,
            history_stride: 1,
        }
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

    pub fn step_constant(&self) -> f64 {
        self.c
    }

    /// Number of SGD rounds `T`.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Holdout size `N` of the final tournament.
    pub fn selection_size(&self) -> usize {
        self.selection_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn history_stride(&self) -> usize {
        self.history_stride
    }

    /// `c γ² ε`.
    pub fn step_size(&self) -> f64 {
        self.c * self.gamma * self.gamma * self.epsilon
    }

    pub fn gradient_params(&self) -> GradientParams {
        GradientParams::for_learner(self.eta, self.gamma).expect("validated at construction")
    }

    /// Total examples a run consumes, `T + N`.
    pub fn sample_budget(&self) -> usize {
        self.iterations + self.selection_size
    }
}

/// `⌈log(1/δ) / (c ε² γ²)⌉`.
pub fn default_iterations(epsilon: f64, delta: f64, gamma: f64, c: f64) -> usize {
    ((1.0 / delta).ln() / (c * epsilon * epsilon * gamma * gamma)).ceil() as usize
}

/// `⌈K log((T+1)/δ) / (ε (1 - 2η))⌉` with `K = 8`.
pub fn default_selection_size(epsilon: f64, delta: f64, eta: f64, iterations: usize) -> usize {
    let n = SELECTION_CONSTANT * ((iterations as f64 + 1.0) / delta).ln() / (epsilon * (1.0 - 2.0 * eta));
    (n.ceil() as usize).max(1)
}

#[derive(Debug, Clone)]
pub struct SgdParamsBuilder {
    epsilon: f64,
    delta: f64,
    eta: f64,
    gamma: f64,
    c: f64,
    iterations: Option<usize>,
    selection_size: Option<usize>,
    seed: u64,
    history_stride: usize,
}

impl SgdParamsBuilder {
    /// Fits the run into `n` total draws: `N = min(N_default, ⌈n/10⌉)`
    /// holdout examples and `T = n - N` steps, `N_default` being the holdout
    /// size at the default `T`. Uses the step constant set so far.
    pub fn total_draws(mut self, n: usize) -> Self {
        let t_default = default_iterations(self.epsilon, self.delta, self.gamma, self.c);
        let selection = default_selection_size(self.epsilon, self.delta, self.eta, t_default).min(n.div_ceil(10));
        self.selection_size = Some(selection);
        self.iterations = Some(n.saturating_sub(selection));
        self
    }

    pub fn step_constant(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn iterations(mut self, t: usize) -> Self {
        self.iterations = Some(t);
        self
    }

    pub fn selection_size(mut self, n: usize) -> Self {
        self.selection_size = Some(n);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn history_stride(mut self, k: usize) -> Self {
        self.history_stride = k;
        self
    }

    pub fn build(self) -> Result<SgdParams> {
        check_common(self.epsilon, self.delta, self.eta, self.gamma)?;
        if !(self.c > 0.0 && self.c <= MAX_STEP_CONSTANT) {
            return Err(Error::param("c", self.c, "step constant must lie in (0, 1/8]"));
        }
        if self.history_stride == 0 {
            return Err(Error::param("history_stride", 0.0, "must be positive"));
        }
        let iterations = self
            .iterations
            .unwrap_or_else(|| default_iterations(self.epsilon, self.delta, self.gamma, self.c));
        let selection_size = self
            .selection_size
            .unwrap_or_else(|| default_selection_size(self.epsilon, self.delta, self.eta, iterations));
        if selection_size == 0 {
            return Err(Error::param("selection_size", 0.0, "must be positive"));
        }
        Ok(SgdParams {
            epsilon: self.epsilon,
            delta: self.delta,
            eta: self.eta,
            gamma: self.gamma,
            c: self.c,
            iterations,
            selection_size,
            seed: self.seed,
            history_stride: self.history_stride,
        })
    }
}

pub(crate) fn check_common(epsilon: f64, delta: f64, eta: f64, gamma: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", epsilon, "must lie in (0, 1)"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", delta, "must lie in (0, 1)"));
    }
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::param("eta", eta, "must lie in [0, 1/2)"));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param("gamma", gamma, "must lie in (0, 1)"));
    }
    Ok(())
}

/// One projected update with `v = w`.
pub fn sgd_step(w: &[f64], example: &LabeledExample, params: &SgdParams) -> UnitVector {
    let mut next = w.to_vec();
    step_in_place(&mut next, example, &params.gradient_params(), params.step_size());
    UnitVector::new_unchecked(next)
}

#[inline]
fn step_in_place(w: &mut [f64], example: &LabeledExample, grad: &GradientParams, step: f64) {
    let wx = dot(w, &example.x);
    let coef = step * grad.gradient_coefficient(wx, wx, example.y);
    w.iter_mut().zip(example.x.iter()).for_each(|(wi, xi)| *wi -= coef * xi);
    project_in_place(w);
}

/// Runs `T` SGD rounds from `e₁`, then selects among the `T + 1` iterates
/// `w⁰, …, w^T` on `N` fresh holdout examples.
pub fn run_sgd<S: SampleSource + ?Sized>(source: &mut S, params: &SgdParams) -> Result<LearnerOutput> {
    let dim = source.dim();
    if dim == 0 {
        return Err(Error::param("dim", 0.0, "sample source has dimension zero"));
    }
    let t_max = params.iterations;
    let budget = params.sample_budget();
    if let Some(left) = source.remaining() {
        if left < budget {
            return Err(Error::InsufficientSamples { needed: budget - left });
        }
    }

    let grad = params.gradient_params();
    let step = params.step_size();
    let mut candidates = Vec::with_capacity((t_max + 1) * dim);
    let mut w = UnitVector::basis(dim, 0).into_inner();
    candidates.extend_from_slice(&w);
    for t in 0..t_max {
        let example = source.draw().ok_or(Error::InsufficientSamples {
            needed: budget - t,
        })?;
        if example.x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: example.x.dim(),
            });
        }
        step_in_place(&mut w, &example, &grad, step);
        candidates.extend_from_slice(&w);
    }

    let holdout = draw_many(source, params.selection_size, params.selection_size)?;
    let selection_errors = candidate_errors(&candidates, dim, &holdout)?;
    let selected_index = argmin_first(&selection_errors);
    let w_hat = UnitVector::new_unchecked(candidates[selected_index * dim..(selected_index + 1) * dim].to_vec());
    let iterates = IterateHistory::strided(dim, candidates, params.history_stride, selected_index);
    Ok(LearnerOutput {
        w_hat,
        selected_index,
        iterates,
        selection_errors,
        draws_used: budget,
    })
}
