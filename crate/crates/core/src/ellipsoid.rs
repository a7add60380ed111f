//! Central-cut ellipsoid method.
//!
//! An ellipsoid is `{u : (u - c)ᵀ S⁻¹ (u - c) <= 1}` for a center `c` and a
//! symmetric positive-definite shape matrix `S`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    /// Checks symmetry (within `1e-9`) and positive definiteness.
    pub fn new(center: Vec<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let d = center.len();
        if shape.nrows() != d || shape.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: shape.nrows(),
            });
        }
        if center.iter().chain(shape.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ellipsoid"));
        }
        if (&shape - shape.transpose()).amax() > 1e-9 {
            return Err(Error::NumericalBreakdown("shape matrix is not symmetric".into()));
        }
        let e = Ellipsoid {
            center: DVector::from_vec(center),
            shape,
        };
        e.log_det()?;
        Ok(e)
    }

    /// Ball of radius `radius` about the origin.
    pub fn ball(dim: usize, radius: f64) -> Self {
        Ellipsoid {
            center: DVector::zeros(dim),
            shape: DMatrix::identity(dim, dim) * (radius * radius),
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        self.center.as_slice()
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `log det S` from the Cholesky factor; fails when `S` is not positive definite.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self
            .shape
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("shape matrix lost positive definiteness".into()))?;
        let l = chol.l_dirty();
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let p = l[(i, i)];
            if !(p > 0.0) {
                return Err(Error::NumericalBreakdown("non-positive Cholesky pivot".into()));
            }
            acc += p.ln();
        }
        Ok(2.0 * acc)
    }

    pub fn contains(&self, u: &[f64]) -> Result<bool> {
        let diff = DVector::from_column_slice(u) - &self.center;
        let solved = self
            .shape
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("shape matrix lost positive definiteness".into()))?
            .solve(&diff);
        Ok(diff.dot(&solved) <= 1.0 + 1e-12)
    }

    /// Minimum-volume ellipsoid containing `self ∩ {u : g·(u - c) <= 0}`.
    pub fn cut(&self, g: &[f64]) -> Result<Ellipsoid> {
        let d = self.dim();
        if g.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: g.len(),
            });
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cut direction"));
        }
        if g.iter().all(|v| *v == 0.0) {
            return Err(Error::NumericalBreakdown("zero cut direction".into()));
        }
        let g = DVector::from_column_slice(g);
        let sg = &self.shape * &g;
        let quad = g.dot(&sg);
        if !(quad > 0.0) {
            return Err(Error::NumericalBreakdown(format!("gᵀSg = {quad} is not positive")));
        }
        // b = S g̃ with g̃ = g / sqrt(gᵀSg)
        let b = sg / quad.sqrt();
        let df = d as f64;
        let center = &self.center - &b * (1.0 / (df + 1.0));
        let shape = if d == 1 {
            // The half-interval [c - r, c]: radius halves.
            &self.shape * 0.25
        } else {
            let mut s = &self.shape - (&b * b.transpose()) * (2.0 / (df + 1.0));
            s *= df * df / (df * df - 1.0);
            (&s + s.transpose()) * 0.5
        };
        Ok(Ellipsoid { center, shape })
    }
}

/// `vol(E') / vol(E)` of a central cut in `d` dimensions:
/// `(d²/(d²-1))^{(d-1)/2} · d/(d+1)`.
pub fn central_cut_volume_ratio(d: usize) -> f64 {
    if d == 1 {
        return 0.5;
    }
    let df = d as f64;
    (df * df / (df * df - 1.0)).powf((df - 1.0) / 2.0) * df / (df + 1.0)
}
