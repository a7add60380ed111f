//! LeakyReLU surrogate losses, the clipped reweighting, and the explicit
//! stochastic gradient together with its split into a drift term (computed
//! from the conditional mean label) and a zero-mean noise term.

use crate::error::{Error, Result};
use crate::synth::{Dataset, LabeledExample, MassartInstance};
use crate::vector::{clip, dot, pairwise_mean, pairwise_mean_vec, Label};

/// Leakage `λ` and clipping floor of the reweighted loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientParams {
    leakage: f64,
    floor: f64,
}

impl GradientParams {
    pub fn new(leakage: f64, floor: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&leakage) {
            return Err(Error::param("leakage", leakage, "must lie in [0, 1/2)"));
        }
        if !(floor > 0.0) || !floor.is_finite() {
            return Err(Error::param("floor", floor, "must be positive"));
        }
        Ok(GradientParams { leakage, floor })
    }

    /// Parameters used by the learners: `λ = η`, floor `γ/2`.
    pub fn for_learner(eta: f64, gamma: f64) -> Result<Self> {
        Self::new(eta, gamma / 2.0)
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Scalar `c` with `g(w, v, x, y) = c · x`, from `w·x` and `v·x`.
    #[inline]
    pub fn gradient_coefficient(&self, wx: f64, vx: f64, y: Label) -> f64 {
        ((1.0 - 2.0 * self.leakage) * Label::of(wx).value() - y.value()) * clip(vx, self.floor)
    }
}

/// `(1-λ)t` for `t >= 0`, `λt` otherwise.
#[inline]
pub fn leaky_relu(leakage: f64, t: f64) -> f64 {
    if t >= 0.0 {
        (1.0 - leakage) * t
    } else {
        leakage * t
    }
}

/// `LeakyReLU_λ(-y (w·x))`.
pub fn point_loss(leakage: f64, w: &[f64], x: &[f64], y: Label) -> f64 {
    leaky_relu(leakage, -y.value() * dot(w, x))
}

/// Point loss reweighted by `1 / max(|v·x|, floor)`.
pub fn clipped_point_loss(params: &GradientParams, w: &[f64], v: &[f64], x: &[f64], y: Label) -> f64 {
    point_loss(params.leakage, w, x, y) * clip(dot(v, x), params.floor)
}

/// `((1 - 2λ) sign(w·x) - y) / max(|v·x|, floor) · x`.
///
/// Away from `w·x = 0` this is exactly twice the gradient in `w` of
/// [`clipped_point_loss`]; the factor only rescales the step size.
pub fn massart_gradient(params: &GradientParams, w: &[f64], v: &[f64], x: &[f64], y: Label) -> Vec<f64> {
    let c = params.gradient_coefficient(dot(w, x), dot(v, x), y);
    x.iter().map(|xi| c * xi).collect()
}

/// Average of the clipped loss over a sample.
pub fn mean_clipped_loss(params: &GradientParams, w: &[f64], v: &[f64], examples: &[LabeledExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Empty("examples"));
    }
    Ok(pairwise_mean(examples.len(), |i| {
        let e = &examples[i];
        clipped_point_loss(params, w, v, &e.x, e.y)
    }))
}

/// Average of [`massart_gradient`] over a sample.
pub fn mean_gradient(params: &GradientParams, w: &[f64], v: &[f64], examples: &[LabeledExample]) -> Result<Vec<f64>> {
    if examples.is_empty() {
        return Err(Error::Empty("examples"));
    }
    Ok(pairwise_mean_vec(examples.len(), w.len(), |i, acc| {
        let e = &examples[i];
        let c = params.gradient_coefficient(dot(w, &e.x), dot(v, &e.x), e.y);
        acc.iter_mut().zip(e.x.iter()).for_each(|(a, xi)| *a += c * xi);
    }))
}

/// Drift part of the gradient at `v = w` and the data needed to form the
/// noise part for any realized label.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSplit {
    /// `((1-2λ) sign(w·x) - E[y|x]) W(w·x) x`.
    pub drift: Vec<f64>,
    /// `E[y|x] = (1 - 2η(x)) sign(w*·x)`.
    pub mean_label: f64,
    /// `1 / max(|w·x|, floor)`.
    pub weight: f64,
}

impl GradientSplit {
    /// `(E[y|x] - y) W(w·x) x`; zero in conditional expectation.
    pub fn noise_component(&self, x: &[f64], y: Label) -> Vec<f64> {
        let c = (self.mean_label - y.value()) * self.weight;
        x.iter().map(|xi| c * xi).collect()
    }
}

/// Splits `g(w, w, x, y)` into drift and noise parts using the instance's
/// noise oracle.
pub fn decompose_gradient(params: &GradientParams, w: &[f64], x: &[f64], instance: &MassartInstance) -> GradientSplit {
    let wx = dot(w, x);
    let mean_label = instance.mean_label(x);
    let weight = clip(wx, params.floor);
    let c = ((1.0 - 2.0 * params.leakage) * Label::of(wx).value() - mean_label) * weight;
    GradientSplit {
        drift: x.iter().map(|xi| c * xi).collect(),
        mean_label,
        weight,
    }
}

/// Probability that `sign(w·x)` disagrees with a label drawn at `x`:
/// `η(x)` when `w` agrees with `w*` on `x`, `1 - η(x)` otherwise.
pub fn conditional_error(w: &[f64], x: &[f64], instance: &MassartInstance) -> f64 {
    let eta_x = instance.noise_rate_at(x);
    if Label::of(dot(w, x)) == instance.clean_label(x) {
        eta_x
    } else {
        1.0 - eta_x
    }
}

/// Which side of the clipping threshold a point falls on, relative to `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `|w·x| >= floor`: the reweighting is exactly `1/|w·x|`.
    Far,
    /// `|w·x| < floor`: the reweighting is clipped.
    Near,
}

/// Per-point slack `g¹(w, x)·(w - w*) - 2(err(w, x) - η)`, tagged by region.
pub fn structural_point_gap(w: &[f64], x: &[f64], instance: &MassartInstance, eta: f64, floor: f64) -> (Region, f64) {
    let params = GradientParams { leakage: eta, floor };
    let split = decompose_gradient(&params, w, x, instance);
    let drift_along = dot(&split.drift, w) - dot(&split.drift, instance.w_star());
    let gap = drift_along - 2.0 * (conditional_error(w, x, instance) - eta);
    let region = if dot(w, x).abs() >= floor {
        Region::Far
    } else {
        Region::Near
    };
    (region, gap)
}

/// `G¹(w)·(w - w*) - 2(err(w) - η)` averaged over the sample, with both
/// averages taken against the dataset's own instance.
pub fn structural_lemma_gap(w: &[f64], dataset: &Dataset, eta: f64, floor: f64) -> Result<f64> {
    let instance = dataset
        .instance()
        .ok_or(Error::MissingInstance("structural_lemma_gap"))?;
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let params = GradientParams::new(eta, floor)?;
    let ex = dataset.examples();
    let drift = pairwise_mean_vec(ex.len(), w.len(), |i, acc| {
        let split = decompose_gradient(&params, w, &ex[i].x, instance);
        acc.iter_mut().zip(&split.drift).for_each(|(a, g)| *a += g);
    });
    let err = pairwise_mean(ex.len(), |i| conditional_error(w, &ex[i].x, instance));
    let shift: Vec<f64> = w.iter().zip(instance.w_star().iter()).map(|(a, b)| a - b).collect();
    Ok(dot(&drift, &shift) - 2.0 * (err - eta))
}
