//! Mistake-driven Perceptron, used as a comparison baseline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::synth::Dataset;
use crate::vector::{dot, norm, UnitVector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerceptronOutput {
    pub w: UnitVector,
    pub updates: usize,
    pub passes: usize,
    /// Whether the last pass made no mistakes.
    pub converged: bool,
}

pub const DEFAULT_MAX_PASSES: usize = 1000;

/// Pass cap `⌈4/γ²⌉ + 1` for a margin `γ`.
pub fn max_passes(gamma: f64) -> usize {
    (4.0 / (gamma * gamma)).ceil() as usize + 1
}

/// Cycles over the data from `w = 0`, adding `y x` whenever `y (w·x) ≤ 0`,
/// until a clean pass or `max_passes(γ)` passes, `γ` being the margin of
/// the dataset's instance. Datasets without an instance stop after
/// [`DEFAULT_MAX_PASSES`].
pub fn perceptron_baseline(dataset: &Dataset) -> Result<UnitVector> {
    Ok(run_perceptron(dataset, pass_cap(dataset))?.w)
}

fn pass_cap(dataset: &Dataset) -> usize {
    match dataset.instance() {
        Some(inst) => max_passes(inst.gamma()),
        None => DEFAULT_MAX_PASSES,
    }
}

pub fn run_perceptron(dataset: &Dataset, max_passes: usize) -> Result<PerceptronOutput> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut w = vec![0.0; dataset.dim()];
    let mut updates = 0;
    let mut passes = 0;
    let mut converged = false;
    while passes < max_passes && !converged {
        passes += 1;
        converged = true;
        for e in dataset.examples() {
            let y = e.y.value();
            if y * dot(&w, &e.x) <= 0.0 {
                w.iter_mut().zip(e.x.iter()).for_each(|(wi, xi)| *wi += y * xi);
                updates += 1;
                converged = false;
            }
        }
    }
    let w = if norm(&w) > 0.0 {
        UnitVector::normalized(w)?
    } else {
        UnitVector::zeros(dataset.dim())
    };
    Ok(PerceptronOutput {
        w,
        updates,
        passes,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::empirical_error;
    use crate::synth::{generate_dataset, LabeledExample, MassartInstance, NoiseModel};
    use crate::vector::Label;

    #[test]
    fn single_point_gives_its_direction() {
        let x = UnitVector::on_sphere(vec![0.6, 0.8]).unwrap();
        let ds = Dataset::new(vec![LabeledExample { x: x.clone(), y: Label::Pos }], None).unwrap();
        let w = perceptron_baseline(&ds).unwrap();
        assert_eq!(w.as_slice(), x.as_slice());
    }

    #[test]
    fn separable_data_is_fit_within_the_mistake_bound() {
        let gamma = 0.2;
        let inst = MassartInstance::random(8, gamma, 0.0, NoiseModel::ConstantRate { rate: 0.0 }, 4).unwrap();
        let ds = generate_dataset(&inst, 2000, 5).unwrap();
        let out = run_perceptron(&ds, max_passes(gamma)).unwrap();
        assert!(out.converged);
        assert!(out.updates as f64 <= (2.0 / gamma).powi(2).ceil());
        assert_eq!(empirical_error(&out.w, &ds).unwrap(), 0.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let ds = Dataset::from_parts_unchecked(Vec::new(), None);
        assert!(run_perceptron(&ds, 3).is_err());
    }
}
