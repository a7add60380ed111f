//! Holdout evaluation of candidate halfspaces and the common learner output.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::synth::{Dataset, LabeledExample};
use crate::vector::{distance_sq, dot, Label, UnitVector};

/// Fraction of examples with `sign(w·x) != y`.
pub fn empirical_error(w: &[f64], dataset: &Dataset) -> Result<f64> {
    error_on(w, dataset.examples())
}

pub(crate) fn error_on(w: &[f64], examples: &[LabeledExample]) -> Result<f64> {
    if examples.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mistakes = examples
        .iter()
        .filter(|e| Label::of(dot(w, &e.x)) != e.y)
        .count();
    Ok(mistakes as f64 / examples.len() as f64)
}

/// Index and value of the candidate with the smallest empirical error on
/// `holdout`; ties go to the lowest index.
pub fn select_hypothesis<C: AsRef<[f64]>>(candidates: &[C], holdout: &Dataset) -> Result<(usize, UnitVector)> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate list"));
    }
    let dim = holdout.dim();
    let mut flat = Vec::with_capacity(candidates.len() * dim);
    for c in candidates {
        let c = c.as_ref();
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        flat.extend_from_slice(c);
    }
    let errors = candidate_errors(&flat, dim, holdout.examples())?;
    let best = argmin_first(&errors);
    Ok((best, UnitVector::in_ball(candidates[best].as_ref().to_vec())?))
}

pub(crate) fn argmin_first(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

const CANDIDATE_BLOCK: usize = 256;

/// Holdout error of every candidate in a flat row-major `(k, dim)` buffer.
///
/// Holdout coordinates are stored column-wise so the inner loop is a
/// vectorizable axpy; the summation order over coordinates matches [`dot`],
/// so results agree bit for bit with [`empirical_error`].
pub(crate) fn candidate_errors(flat: &[f64], dim: usize, holdout: &[LabeledExample]) -> Result<Vec<f64>> {
    if holdout.is_empty() {
        return Err(Error::Empty("holdout"));
    }
    let n = holdout.len();
    let mut columns = vec![0.0; dim * n];
    for (i, e) in holdout.iter().enumerate() {
        for (j, &xj) in e.x.iter().enumerate() {
            columns[j * n + i] = xj;
        }
    }
    let positive: Vec<bool> = holdout.iter().map(|e| e.y == Label::Pos).collect();

    let errors = flat
        .par_chunks(dim * CANDIDATE_BLOCK)
        .flat_map_iter(|block| {
            let mut acc = vec![0.0; n];
            block
                .chunks_exact(dim)
                .map(|w| {
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    for (j, &wj) in w.iter().enumerate() {
                        let col = &columns[j * n..(j + 1) * n];
                        acc.iter_mut().zip(col).for_each(|(a, x)| *a += wj * x);
                    }
                    let mistakes = acc
                        .iter()
                        .zip(&positive)
                        .filter(|(m, pos)| (**m >= 0.0) != **pos)
                        .count();
                    mistakes as f64 / n as f64
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(errors)
}

/// Iterates recorded during a run, stored contiguously.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterateHistory {
    dim: usize,
    indices: Vec<usize>,
    coords: Vec<f64>,
}

impl IterateHistory {
    pub(crate) fn new(dim: usize) -> Self {
        IterateHistory {
            dim,
            indices: Vec::new(),
            coords: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, index: usize, w: &[f64]) {
        debug_assert_eq!(w.len(), self.dim);
        self.indices.push(index);
        self.coords.extend_from_slice(w);
    }

    /// Keeps every `stride`-th row of a flat buffer plus row `keep`.
    pub(crate) fn strided(dim: usize, flat: Vec<f64>, stride: usize, keep: usize) -> Self {
        if stride <= 1 {
            let rows = flat.len() / dim;
            return IterateHistory {
                dim,
                indices: (0..rows).collect(),
                coords: flat,
            };
        }
        let mut h = IterateHistory::new(dim);
        for (i, row) in flat.chunks_exact(dim).enumerate() {
            if i % stride == 0 || i == keep {
                h.push(i, row);
            }
        }
        h
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Run-level indices of the recorded iterates.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn get(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// `(run index, iterate)` pairs in recording order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.coords.chunks_exact(self.dim.max(1)))
    }

    /// Recorded iterate with run index `index`, if kept.
    pub fn find(&self, index: usize) -> Option<&[f64]> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|k| self.get(k))
    }
}

/// Result of a learner run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerOutput {
    pub w_hat: UnitVector,
    /// Run index of `w_hat` among all candidates.
    pub selected_index: usize,
    pub iterates: IterateHistory,
    /// Holdout error of each candidate, indexed like the candidates.
    pub selection_errors: Vec<f64>,
    pub draws_used: usize,
}

/// `‖w_t - w*‖²` for each recorded iterate.
pub fn potential_trajectory(iterates: &IterateHistory, w_star: &[f64]) -> Vec<f64> {
    iterates.iter().map(|(_, w)| distance_sq(w, w_star)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_dataset, MassartInstance, NoiseModel};

    fn ex(x: Vec<f64>, y: Label) -> LabeledExample {
        LabeledExample {
            x: UnitVector::on_sphere(x).unwrap(),
            y,
        }
    }

    #[test]
    fn error_extremes() {
        let ds = Dataset::new(
            vec![ex(vec![1.0, 0.0], Label::Pos), ex(vec![-0.6, 0.8], Label::Neg)],
            None,
        )
        .unwrap();
        assert_eq!(empirical_error(&[1.0, 0.0], &ds).unwrap(), 0.0);
        assert_eq!(empirical_error(&[-1.0, 0.0], &ds).unwrap(), 1.0);
        let empty = Dataset::new(vec![], None).unwrap();
        assert!(empirical_error(&[1.0, 0.0], &empty).is_err());
    }

    #[test]
    fn selection_rules() {
        let inst = MassartInstance::random(3, 0.2, 0.0, NoiseModel::ConstantRate { rate: 0.0 }, 1).unwrap();
        let ds = generate_dataset(&inst, 200, 2).unwrap();
        let w = inst.w_star().to_vec();
        let neg: Vec<f64> = w.iter().map(|c| -c).collect();

        let (i, v) = select_hypothesis(&[neg.clone()], &ds).unwrap();
        assert_eq!((i, v.as_slice()), (0, neg.as_slice()));

        let (i, _) = select_hypothesis(&[neg.clone(), w.clone()], &ds).unwrap();
        assert_eq!(i, 1);

        let (i, _) = select_hypothesis(&[w.clone(), w.clone(), neg], &ds).unwrap();
        assert_eq!(i, 0);

        let none: Vec<Vec<f64>> = vec![];
        assert!(select_hypothesis(&none, &ds).is_err());
    }

    #[test]
    fn batched_errors_match_direct_evaluation() {
        let inst = MassartInstance::random(7, 0.05, 0.3, NoiseModel::ConstantRate { rate: 0.3 }, 4).unwrap();
        let ds = generate_dataset(&inst, 300, 5).unwrap();
        let cands = generate_dataset(&inst, 600, 6).unwrap();
        let flat: Vec<f64> = cands.examples().iter().flat_map(|e| e.x.to_vec()).collect();
        let batched = candidate_errors(&flat, 7, ds.examples()).unwrap();
        for (e, b) in cands.examples().iter().zip(&batched) {
            assert_eq!(empirical_error(&e.x, &ds).unwrap(), *b);
        }
    }

    #[test]
    fn potential_examples() {
        let mut h = IterateHistory::new(2);
        h.push(0, &[1.0, 0.0]);
        h.push(1, &[0.0, 1.0]);
        assert_eq!(potential_trajectory(&h, &[0.0, 1.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn strided_history_keeps_selected_row() {
        let flat: Vec<f64> = (0..10).flat_map(|i| [i as f64, 0.0]).collect();
        let h = IterateHistory::strided(2, flat, 4, 7);
        assert_eq!(h.indices(), &[0, 4, 7, 8]);
        assert_eq!(h.find(7), Some(&[7.0, 0.0][..]));
        assert_eq!(h.find(5), None);
    }
}
