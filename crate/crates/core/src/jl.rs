//! Random Gaussian projection to a lower dimension, with renormalization back
//! onto the unit sphere.

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::source::SampleSource;
use crate::synth::{Dataset, LabeledExample, MassartInstance};
use crate::vector::{dot, norm, sign, Label, UnitVector};

/// `⌈16 ln(4n²/δ) / γ²⌉`: enough dimensions to keep all pairwise inner
/// products of `n` points within `γ/4` with probability `1 - δ`.
pub fn jl_target_dim(n: usize, gamma: f64, delta: f64) -> usize {
    let n = n as f64;
    (16.0 * (4.0 * n * n / delta).ln() / (gamma * gamma)).ceil() as usize
}

/// Linear map `A` (`target_dim × source_dim`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct JlProjection {
    source_dim: usize,
    target_dim: usize,
    matrix: Vec<f64>,
}

impl JlProjection {
    /// Entries i.i.d. `N(0, 1/target_dim)`, drawn from the projection stream.
    pub fn gaussian(source_dim: usize, target_dim: usize, seed: u64) -> Result<Self> {
        if source_dim == 0 || target_dim == 0 {
            return Err(Error::param("target_dim", target_dim as f64, "dimensions must be positive"));
        }
        let mut rng = stream_rng(seed, Stream::Projection);
        let scale = 1.0 / (target_dim as f64).sqrt();
        let matrix = (0..source_dim * target_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Ok(JlProjection {
            source_dim,
            target_dim,
            matrix,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = 1.0;
        }
        JlProjection {
            source_dim: dim,
            target_dim: dim,
            matrix,
        }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.target_dim
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .chunks_exact(self.source_dim)
            .map(|row| dot(row, x))
            .collect()
    }

    /// `Ax / ‖Ax‖`.
    pub fn project_point(&self, x: &[f64]) -> Result<UnitVector> {
        if x.len() != self.source_dim {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim,
                found: x.len(),
            });
        }
        UnitVector::normalized(self.apply(x))
            .map_err(|_| Error::NumericalBreakdown("point projected to zero".into()))
    }

    /// Weight vector in the source space classifying like `w` on projected
    /// points: `Aᵀw`, normalized.
    pub fn lift_weights(&self, w: &[f64]) -> Result<UnitVector> {
        if w.len() != self.target_dim {
            return Err(Error::DimensionMismatch {
                expected: self.target_dim,
                found: w.len(),
            });
        }
        let mut lifted = vec![0.0; self.source_dim];
        for (row, wi) in self.matrix.chunks_exact(self.source_dim).zip(w) {
            lifted.iter_mut().zip(row).for_each(|(l, a)| *l += wi * a);
        }
        if norm(&lifted) == 0.0 {
            return Ok(UnitVector::zeros(self.source_dim));
        }
        UnitVector::normalized(lifted)
    }

    /// `sign(w · (Ax/‖Ax‖))`.
    pub fn predict(&self, w: &[f64], x: &[f64]) -> Result<Label> {
        sign(dot(w, &self.project_point(x)?))
    }

    pub fn project_example(&self, e: &LabeledExample) -> Result<LabeledExample> {
        Ok(LabeledExample {
            x: self.project_point(&e.x)?,
            y: e.y,
        })
    }
}

/// Projects every point of `dataset`; labels are unchanged. The result has
/// no generating instance since the margin is only approximately preserved.
pub fn jl_project(dataset: &Dataset, target_dim: usize, seed: u64) -> Result<(Dataset, JlProjection)> {
    let projection = JlProjection::gaussian(dataset.dim(), target_dim, seed)?;
    let projected = project_dataset(dataset, &projection)?;
    Ok((projected, projection))
}

pub fn project_dataset(dataset: &Dataset, projection: &JlProjection) -> Result<Dataset> {
    let examples = dataset
        .examples()
        .iter()
        .map(|e| projection.project_example(e))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples, None)
}

/// Applies a projection to every example drawn from `inner`.
pub struct ProjectedSource<S> {
    inner: S,
    projection: JlProjection,
}

impl<S: SampleSource> ProjectedSource<S> {
    pub fn new(inner: S, projection: JlProjection) -> Result<Self> {
        if inner.dim() != projection.source_dim {
            return Err(Error::DimensionMismatch {
                expected: projection.source_dim,
                found: inner.dim(),
            });
        }
        Ok(ProjectedSource { inner, projection })
    }

    pub fn projection(&self) -> &JlProjection {
        &self.projection
    }

    pub fn into_parts(self) -> (S, JlProjection) {
        (self.inner, self.projection)
    }
}

impl<S: SampleSource> SampleSource for ProjectedSource<S> {
    fn draw(&mut self) -> Option<LabeledExample> {
        // A Gaussian image of a unit vector is zero with probability zero;
        // such a draw is skipped.
        loop {
            let e = self.inner.draw()?;
            if let Ok(p) = self.projection.project_example(&e) {
                return Some(p);
            }
        }
    }

    fn dim(&self) -> usize {
        self.projection.target_dim
    }

    fn instance(&self) -> Option<&MassartInstance> {
        None
    }

    fn remaining(&self) -> Option<usize> {
        self.inner.remaining()
    }
}
