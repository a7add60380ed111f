//! Synthetic distributions over the sphere that satisfy a margin condition
//! with respect to a ground-truth halfspace and carry bounded (Massart)
//! label noise.
//!
//! Every generated instance exposes its pointwise noise rate through
//! [`MassartInstance::noise_rate_at`], so tests can evaluate quantities that
//! need the conditional label distribution (conditional errors, the drift
//! part of the gradient) exactly.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::rng::{splitmix64, stream_rng, Stream};
use crate::vector::{dot, norm, Label, UnitVector, NORM_TOLERANCE};

/// Pointwise flip probability `η(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Random classification noise: `η(x) = rate`.
    #[serde(rename = "constant")]
    ConstantRate { rate: f64 },
    /// `η(x) = rate` inside the band `|w*·x| < width`, zero outside.
    #[serde(rename = "boundary")]
    BoundaryConcentrated { rate: f64, width: f64 },
    /// `η(x) = rate_bound · u(x)` where `u(x) ∈ [0, 1)` is a salted hash of the
    /// coordinates of `x`.
    #[serde(rename = "hash")]
    HashField { rate_bound: f64, salt: u64 },
}

impl NoiseModel {
    /// Largest value `η(x)` can take.
    pub fn max_rate(&self) -> f64 {
        match *self {
            NoiseModel::ConstantRate { rate } => rate,
            NoiseModel::BoundaryConcentrated { rate, .. } => rate,
            NoiseModel::HashField { rate_bound, .. } => rate_bound,
        }
    }

    /// `η(x)`; `margin` is `w*·x`.
    pub fn rate(&self, x: &[f64], margin: f64) -> f64 {
        match *self {
            NoiseModel::ConstantRate { rate } => rate,
            NoiseModel::BoundaryConcentrated { rate, width } => {
                if margin.abs() < width {
                    rate
                } else {
                    0.0
                }
            }
            NoiseModel::HashField { rate_bound, salt } => rate_bound * hash_unit(x, salt),
        }
    }

    fn validate(&self, gamma: f64, eta: f64) -> Result<()> {
        let rate = self.max_rate();
        if !(0.0..=eta).contains(&rate) {
            return Err(Error::param("noise rate", rate, "must lie in [0, eta]"));
        }
        if let NoiseModel::BoundaryConcentrated { width, .. } = *self {
            if !(width > gamma) || !width.is_finite() {
                return Err(Error::param("width", width, "must exceed the margin"));
            }
        }
        Ok(())
    }
}

/// Uniform value in `[0, 1)` determined by the bit patterns of `x` and `salt`.
fn hash_unit(x: &[f64], salt: u64) -> f64 {
    let h = x
        .iter()
        .fold(splitmix64(salt), |h, c| splitmix64(h ^ c.to_bits()));
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Marginal distribution of the points.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Marginal {
    /// Uniform on the sphere conditioned on `|w*·x| >= γ`.
    #[default]
    Uniform,
    /// Mass concentrated just outside the margin: `|w*·x| = min(γ + spread·|Z|, 1)`
    /// with `Z` standard normal, a uniform random sign, and a uniform direction
    /// in the orthogonal complement of `w*`.
    TwoCluster { spread: f64 },
}

/// Ground truth of a Massart-noise, γ-margin halfspace problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassartInstance {
    w_star: UnitVector,
    gamma: f64,
    eta: f64,
    noise: NoiseModel,
    marginal: Marginal,
    /// `P(|t| >= γ)` for the coordinate `t = w*·x` of a uniform point.
    #[serde(skip)]
    accept_prob: f64,
}

/// Switch to inverse-CDF sampling of the margin coordinate below this
/// rejection acceptance rate.
const MIN_REJECTION_ACCEPTANCE: f64 = 0.2;

impl MassartInstance {
    pub fn new(w_star: UnitVector, gamma: f64, eta: f64, noise: NoiseModel) -> Result<Self> {
        if (norm(&w_star) - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NormViolation {
                norm: norm(&w_star),
                constraint: "unit sphere",
            });
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param("gamma", gamma, "must lie in (0, 1)"));
        }
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::param("eta", eta, "must lie in [0, 1/2)"));
        }
        noise.validate(gamma, eta)?;
        let d = w_star.dim();
        let accept_prob = if d < 2 {
            1.0
        } else {
            beta_reg((d as f64 - 1.0) / 2.0, 0.5, 1.0 - gamma * gamma)
        };
        Ok(MassartInstance {
            w_star,
            gamma,
            eta,
            noise,
            marginal: Marginal::Uniform,
            accept_prob,
        })
    }

    /// Instance whose ground-truth direction is uniform on the sphere, drawn
    /// from the [`Stream::Instance`] stream of `seed`.
    pub fn random(dim: usize, gamma: f64, eta: f64, noise: NoiseModel, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim", 0.0, "must be positive"));
        }
        let mut rng = stream_rng(seed, Stream::Instance);
        let w_star = random_direction(dim, &mut rng);
        Self::new(w_star, gamma, eta, noise)
    }

    pub fn with_marginal(mut self, marginal: Marginal) -> Result<Self> {
        if let Marginal::TwoCluster { spread } = marginal {
            if !(spread >= 0.0) || !spread.is_finite() {
                return Err(Error::param("spread", spread, "must be non-negative"));
            }
        }
        self.marginal = marginal;
        Ok(self)
    }

    pub fn w_star(&self) -> &UnitVector {
        &self.w_star
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn marginal(&self) -> Marginal {
        self.marginal
    }

    pub fn dim(&self) -> usize {
        self.w_star.dim()
    }

    /// The exact `η(x)` used when labeling `x`.
    pub fn noise_rate_at(&self, x: &[f64]) -> f64 {
        self.noise.rate(x, dot(&self.w_star, x))
    }

    /// Noise-free label `sign(w*·x)`.
    pub fn clean_label(&self, x: &[f64]) -> Label {
        Label::of(dot(&self.w_star, x))
    }

    /// `E[y | x] = (1 - 2η(x)) sign(w*·x)`.
    pub fn mean_label(&self, x: &[f64]) -> f64 {
        (1.0 - 2.0 * self.noise_rate_at(x)) * self.clean_label(x).value()
    }

    /// Draws `x` from the marginal; the result satisfies `|w*·x| >= γ`.
    pub fn sample_margin_point<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let d = self.dim();
        if d == 1 {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            return UnitVector::new_unchecked(vec![s * self.w_star[0]]);
        }
        match self.marginal {
            Marginal::Uniform if self.accept_prob >= MIN_REJECTION_ACCEPTANCE => loop {
                let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                let n = norm(&z);
                if n == 0.0 {
                    continue;
                }
                if dot(&self.w_star, &z).abs() >= self.gamma * n {
                    let x: Vec<f64> = z.into_iter().map(|c| c / n).collect();
                    // Rounding in the normalization can shave the margin by an ulp.
                    if dot(&self.w_star, &x).abs() >= self.gamma {
                        return UnitVector::new_unchecked(x);
                    }
                }
            },
            Marginal::Uniform => {
                let tangent_sq = self.sample_tangent_sq(rng);
                self.assemble(rng, tangent_sq)
            }
            Marginal::TwoCluster { spread } => {
                let z: f64 = rng.sample(StandardNormal);
                let t = (self.gamma + spread * z.abs()).min(1.0);
                self.assemble(rng, (1.0 - t) * (1.0 + t))
            }
        }
    }

    /// Draws `s = 1 - t²` for the margin coordinate `t` of a uniform point,
    /// conditioned on `|t| >= γ`. `s` follows Beta((d-1)/2, 1/2) truncated to
    /// `[0, 1 - γ²]`; invert its CDF by bisection.
    fn sample_tangent_sq<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = (self.dim() as f64 - 1.0) / 2.0;
        let upper = (1.0 - self.gamma) * (1.0 + self.gamma);
        let target = rng.random::<f64>() * self.accept_prob;
        let (mut lo, mut hi) = (0.0f64, upper);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if beta_reg(a, 0.5, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Builds `x = ±t·w* + sqrt(s)·u` with `u` uniform on the unit sphere of
    /// the orthogonal complement and `t = sqrt(1 - s)`.
    fn assemble<R: Rng + ?Sized>(&self, rng: &mut R, tangent_sq: f64) -> UnitVector {
        let d = self.dim();
        let t = (1.0 - tangent_sq).sqrt().max(self.gamma);
        let t = if rng.random::<bool>() { t } else { -t };
        let r = tangent_sq.max(0.0).sqrt();
        let u = loop {
            let mut z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let along = dot(&z, &self.w_star);
            z.iter_mut()
                .zip(self.w_star.iter())
                .for_each(|(c, w)| *c -= along * w);
            let n = norm(&z);
            if n > 1e-12 {
                break z.into_iter().map(|c| c / n).collect::<Vec<_>>();
            }
        };
        let x: Vec<f64> = self
            .w_star
            .iter()
            .zip(&u)
            .map(|(w, c)| t * w + r * c)
            .collect();
        let n = norm(&x);
        let mut x: Vec<f64> = x.into_iter().map(|c| c / n).collect();
        // Keep the margin exact after renormalization.
        let m = dot(&self.w_star, &x);
        if m.abs() < self.gamma {
            let fix = (self.gamma.copysign(m) - m) * 1.0000000001;
            x.iter_mut()
                .zip(self.w_star.iter())
                .for_each(|(c, w)| *c += fix * w);
            let n = norm(&x);
            x.iter_mut().for_each(|c| *c /= n);
        }
        UnitVector::new_unchecked(x)
    }

    /// `sign(w*·x)`, flipped with probability `η(x)`.
    pub fn noisy_label<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Label {
        let clean = self.clean_label(x);
        let eta_x = self.noise_rate_at(x);
        // Always consume one uniform so the stream layout is model-independent.
        let u: f64 = rng.random();
        if u < eta_x {
            clean.flipped()
        } else {
            clean
        }
    }

    pub fn sample_example<R: Rng + ?Sized>(&self, rng: &mut R) -> LabeledExample {
        let x = self.sample_margin_point(rng);
        let y = self.noisy_label(&x, rng);
        LabeledExample { x, y }
    }
}

/// Uniform direction on the sphere in `dim` dimensions.
pub fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitVector {
    loop {
        let z: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(v) = UnitVector::normalized(z) {
            return v;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: UnitVector,
    pub y: Label,
}

/// A finite sample, optionally carrying the instance that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
    instance: Option<MassartInstance>,
}

impl Dataset {
    /// Checks dimensions, unit norms, and the margin when `instance` is given.
    pub fn new(examples: Vec<LabeledExample>, instance: Option<MassartInstance>) -> Result<Self> {
        let dim = match (&instance, examples.first()) {
            (Some(inst), _) => inst.dim(),
            (None, Some(e)) => e.x.dim(),
            (None, None) => 0,
        };
        for e in &examples {
            if e.x.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.x.dim(),
                });
            }
            let n = norm(&e.x);
            if (n - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::NormViolation {
                    norm: n,
                    constraint: "unit sphere",
                });
            }
            if let Some(inst) = &instance {
                let m = dot(inst.w_star(), &e.x).abs();
                if m < inst.gamma() - NORM_TOLERANCE {
                    return Err(Error::param("margin", m, "point violates the instance margin"));
                }
            }
        }
        Ok(Dataset { examples, instance })
    }

    pub(crate) fn from_parts_unchecked(
        examples: Vec<LabeledExample>,
        instance: Option<MassartInstance>,
    ) -> Self {
        Dataset { examples, instance }
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn instance(&self) -> Option<&MassartInstance> {
        self.instance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Dimension of the points; zero for an empty dataset without instance.
    pub fn dim(&self) -> usize {
        match (&self.instance, self.examples.first()) {
            (Some(i), _) => i.dim(),
            (None, Some(e)) => e.x.dim(),
            (None, None) => 0,
        }
    }

    /// Mean of `η(x)` over the sample (the empirical `opt`).
    pub fn mean_noise_rate(&self) -> Result<f64> {
        let inst = self
            .instance
            .as_ref()
            .ok_or(Error::MissingInstance("mean_noise_rate"))?;
        if self.examples.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(crate::vector::pairwise_mean(self.len(), |i| {
            inst.noise_rate_at(&self.examples[i].x)
        }))
    }

    pub fn into_examples(self) -> Vec<LabeledExample> {
        self.examples
    }
}

/// `n` i.i.d. examples from `instance`, drawn from the [`Stream::Train`]
/// stream of `seed`.
pub fn generate_dataset(instance: &MassartInstance, n: usize, seed: u64) -> Result<Dataset> {
    generate_from_stream(instance, n, seed, Stream::Train)
}

/// Like [`generate_dataset`] but on an explicit stream.
pub fn generate_from_stream(
    instance: &MassartInstance,
    n: usize,
    seed: u64,
    stream: Stream,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::param("n", 0.0, "must be at least 1"));
    }
    let mut rng = stream_rng(seed, stream);
    let examples = (0..n).map(|_| instance.sample_example(&mut rng)).collect();
    Ok(Dataset::from_parts_unchecked(examples, Some(instance.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn e(dim: usize, i: usize) -> UnitVector {
        UnitVector::basis(dim, i)
    }

    #[test]
    fn rejects_invalid_instances() {
        let noise = NoiseModel::ConstantRate { rate: 0.1 };
        assert!(MassartInstance::new(e(3, 0), 1.0, 0.2, noise.clone()).is_err());
        assert!(MassartInstance::new(e(3, 0), 0.1, 0.5, noise.clone()).is_err());
        assert!(MassartInstance::new(e(3, 0), 0.1, 0.05, noise.clone()).is_err());
        let wide = NoiseModel::BoundaryConcentrated { rate: 0.1, width: 0.05 };
        assert!(MassartInstance::new(e(3, 0), 0.1, 0.2, wide).is_err());
        let bad_w = UnitVector::in_ball(vec![0.5, 0.0]).unwrap();
        assert!(MassartInstance::new(bad_w, 0.1, 0.2, noise).is_err());
    }

    #[test]
    fn near_degenerate_margin_hugs_the_normal() {
        let inst = MassartInstance::new(
            e(2, 0),
            0.999_999,
            0.0,
            NoiseModel::ConstantRate { rate: 0.0 },
        )
        .unwrap();
        let mut rng = stream_rng(3, Stream::Aux);
        for _ in 0..1000 {
            let x = inst.sample_margin_point(&mut rng);
            assert!((norm(&x) - 1.0).abs() < 1e-12);
            assert!(x[0].abs() >= 0.999_999);
            assert!(x[1].abs() < 2e-3);
        }
    }

    #[test]
    fn every_point_respects_norm_and_margin() {
        for (d, gamma, marginal) in [
            (2, 0.5, Marginal::Uniform),
            (5, 0.9, Marginal::Uniform),
            (20, 0.1, Marginal::Uniform),
            (10, 0.2, Marginal::TwoCluster { spread: 0.01 }),
        ] {
            let inst = MassartInstance::random(d, gamma, 0.2, NoiseModel::ConstantRate { rate: 0.2 }, 9)
                .unwrap()
                .with_marginal(marginal)
                .unwrap();
            let mut rng = stream_rng(1, Stream::Aux);
            for _ in 0..2000 {
                let x = inst.sample_margin_point(&mut rng);
                assert!((norm(&x) - 1.0).abs() < 1e-9);
                assert!(dot(inst.w_star(), &x).abs() >= gamma);
            }
        }
    }

    #[test]
    fn noise_rate_examples() {
        let inst = MassartInstance::new(e(2, 0), 0.1, 0.3, NoiseModel::ConstantRate { rate: 0.25 })
            .unwrap();
        assert_eq!(inst.noise_rate_at(&[0.6, 0.8]), 0.25);

        let band = NoiseModel::BoundaryConcentrated { rate: 0.3, width: 0.2 };
        let inst = MassartInstance::new(e(2, 0), 0.1, 0.3, band).unwrap();
        let inside = [0.15, (1.0f64 - 0.15 * 0.15).sqrt()];
        assert_eq!(inst.noise_rate_at(&inside), 0.3);
        assert_eq!(inst.noise_rate_at(&[0.6, 0.8]), 0.0);

        let hashed = NoiseModel::HashField { rate_bound: 0.3, salt: 17 };
        let inst = MassartInstance::new(e(2, 0), 0.1, 0.3, hashed).unwrap();
        let a = inst.noise_rate_at(&[0.6, 0.8]);
        assert_eq!(a, inst.noise_rate_at(&[0.6, 0.8]));
        assert!((0.0..=0.3).contains(&a));
        assert_ne!(a, inst.noise_rate_at(&[0.8, 0.6]));
    }

    #[test]
    fn labels_outside_the_band_are_clean() {
        let band = NoiseModel::BoundaryConcentrated { rate: 0.3, width: 0.2 };
        let inst = MassartInstance::new(e(2, 0), 0.1, 0.3, band).unwrap();
        let mut rng = stream_rng(5, Stream::Aux);
        for _ in 0..1000 {
            assert_eq!(inst.noisy_label(&[0.6, 0.8], &mut rng), Label::Pos);
            assert_eq!(inst.noisy_label(&[-0.6, 0.8], &mut rng), Label::Neg);
        }
    }

    #[test]
    fn noiseless_labels_match_ground_truth() {
        let inst = MassartInstance::random(6, 0.1, 0.0, NoiseModel::ConstantRate { rate: 0.0 }, 2)
            .unwrap();
        let ds = generate_dataset(&inst, 500, 4).unwrap();
        assert!(ds
            .examples()
            .iter()
            .all(|ex| ex.y == inst.clean_label(&ex.x)));
    }

    #[test]
    fn generation_is_deterministic_and_rejects_empty() {
        let inst = MassartInstance::random(4, 0.2, 0.2, NoiseModel::HashField { rate_bound: 0.2, salt: 1 }, 3)
            .unwrap();
        let a = generate_dataset(&inst, 3, 11).unwrap();
        let b = generate_dataset(&inst, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(generate_dataset(&inst, 0, 11).is_err());
    }

    #[test]
    fn empirical_opt_is_bounded_by_eta() {
        for noise in [
            NoiseModel::ConstantRate { rate: 0.2 },
            NoiseModel::BoundaryConcentrated { rate: 0.2, width: 0.3 },
            NoiseModel::HashField { rate_bound: 0.2, salt: 8 },
        ] {
            let inst = MassartInstance::random(8, 0.1, 0.2, noise, 5).unwrap();
            let ds = generate_dataset(&inst, 2000, 6).unwrap();
            assert!(ds.mean_noise_rate().unwrap() <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn dataset_rejects_margin_violations() {
        let inst = MassartInstance::new(e(2, 0), 0.5, 0.0, NoiseModel::ConstantRate { rate: 0.0 })
            .unwrap();
        let x = UnitVector::on_sphere(vec![0.1, (1.0f64 - 0.01).sqrt()]).unwrap();
        let ex = LabeledExample { x, y: Label::Pos };
        assert!(Dataset::new(vec![ex.clone()], Some(inst)).is_err());
        assert!(Dataset::new(vec![ex], None).is_ok());
    }
}
