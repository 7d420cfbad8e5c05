//! Per-point vector values `f: X -> R^q`, stored row-major.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("value dimension must be at least 1")]
    ZeroDim,
    #[error("row {row} has {got} components, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("{len} values cannot be split into rows of {dim}")]
    BadLength { len: usize, dim: usize },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorField {
    dim: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self, FieldError> {
        if dim == 0 {
            return Err(FieldError::ZeroDim);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(FieldError::BadLength { len: data.len(), dim });
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite(k / dim));
        }
        Ok(VectorField { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, FieldError> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(FieldError::Ragged { row, got: r.len(), expected: dim });
            }
            data.extend_from_slice(r);
        }
        VectorField::new(dim, data)
    }

    pub fn scalar(values: &[f64]) -> Result<Self, FieldError> {
        VectorField::new(1, values.to_vec())
    }

    /// Zero rows of the given dimension.
    pub fn zeros(len: usize, dim: usize) -> Self {
        VectorField { dim: dim.max(1), data: vec![0.0; len * dim.max(1)] }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.row(i)[k]).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Component of `u` orthogonal to the unit vector `w`.
pub fn transverse(u: &[f64], w: &[f64]) -> Vec<f64> {
    let s = dot(u, w);
    u.iter().zip(w).map(|(x, y)| x - s * y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_roundtrip() {
        let f = VectorField::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.row(1), &[3.0, 4.0]);
        assert_eq!(f.component(0), vec![1.0, 3.0]);
        assert!(VectorField::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(VectorField::new(2, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn transverse_part() {
        let t = transverse(&[1.0, 2.0], &[0.0, 1.0]);
        assert_eq!(t, vec![1.0, 0.0]);
        assert_eq!(transverse(&[-3.0], &[1.0]), vec![0.0]);
    }
}
