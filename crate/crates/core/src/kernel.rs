//! Kernels and Gram matrices.
//!
//! The bias coordinate of the hyperplanes is realized through the augmented
//! kernel `K(x, z) + 1`, which for the linear kernel is exactly the dot product
//! of `(x, 1)` and `(z, 1)`.

use nalgebra::{DMatrix, DMatrixView, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
}

/// Kernel choice plus its parameter: RBF width or polynomial degree
/// (ignored for the linear kernel).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub delta: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            kind: KernelKind::Linear,
            delta: 1.0,
        }
    }

    pub fn rbf(width: f64) -> Result<Self> {
        let spec = KernelSpec {
            kind: KernelKind::Rbf,
            delta: width,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32) -> Result<Self> {
        let spec = KernelSpec {
            kind: KernelKind::Polynomial,
            delta: degree as f64,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel parameter must be positive, got {}",
                self.delta
            )));
        }
        if self.kind == KernelKind::Polynomial && self.delta.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "polynomial degree must be an integer, got {}",
                self.delta
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.kind == KernelKind::Linear
    }

    fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(x, z),
            KernelKind::Rbf => {
                let dist2: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-dist2 / (self.delta * self.delta)).exp()
            }
            KernelKind::Polynomial => (dot(x, z) + 1.0).powi(self.delta as i32),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            KernelKind::Linear => write!(f, "linear"),
            KernelKind::Rbf => write!(f, "rbf({})", self.delta),
            KernelKind::Polynomial => write!(f, "poly({})", self.delta),
        }
    }
}

fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    if x.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel input"));
    }
    Ok(spec.eval_unchecked(x, z))
}

fn sample_rows(m: &DMatrixView<'_, f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// `K(X, Z)` with rows of `x` and `z` as samples.
pub fn gram<'a>(
    spec: &KernelSpec,
    x: impl Into<DMatrixView<'a, f64>>,
    z: impl Into<DMatrixView<'a, f64>>,
) -> Result<DMatrix<f64>> {
    let (x, z) = (x.into(), z.into());
    if x.ncols() != z.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            found: z.ncols(),
        });
    }
    let xs = sample_rows(&x);
    let zs = sample_rows(&z);
    let mut out = DMatrix::zeros(xs.len(), zs.len());
    for (i, xi) in xs.iter().enumerate() {
        for (j, zj) in zs.iter().enumerate() {
            out[(i, j)] = spec.eval_unchecked(xi, zj);
        }
    }
    Ok(out)
}

/// `K(X, Z) + 1` entrywise.
pub fn augmented_gram<'a>(
    spec: &KernelSpec,
    x: impl Into<DMatrixView<'a, f64>>,
    z: impl Into<DMatrixView<'a, f64>>,
) -> Result<DMatrix<f64>> {
    let mut k = gram(spec, x, z)?;
    k.add_scalar_mut(1.0);
    Ok(k)
}

/// Augmented kernel values of one probe point against every row of `z`.
pub fn augmented_row(spec: &KernelSpec, x: &[f64], z: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        z.nrows(),
        (0..z.nrows()).map(|j| {
            let zj: Vec<f64> = z.row(j).iter().copied().collect();
            spec.eval_unchecked(x, &zj) + 1.0
        }),
    )
}
