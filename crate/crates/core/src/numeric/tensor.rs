//! Dense row-major `f64` tensors.
//!
//! Only the handful of operations the model needs are provided: matrix-vector
//! products (plain and transposed), rank-one accumulation and a few
//! elementwise helpers. Everything works on plain slices so the encoders can
//! run their inner loops without allocating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.contains(&0) {
            return Err(Error::Dimension {
                op: "tensor",
                left: shape,
                right: vec![data.len()],
            });
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Dimension {
                op: "tensor",
                left: shape,
                right: vec![data.len()],
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension {
                op: "from_rows",
                left: vec![rows.len(), cols],
                right: vec![bad.len()],
            });
        }
        Tensor::new(vec![rows.len(), cols], rows.concat())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    /// Number of columns when viewed as a matrix (1 for vectors).
    pub fn cols(&self) -> usize {
        self.shape[1..].iter().product()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        self.check_same_shape("add_assign", other)?;
        axpy(1.0, &other.data, &mut self.data);
        Ok(())
    }

    pub fn check_same_shape(&self, op: &'static str, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Dimension {
                op,
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }
}

/// `W·x` for a matrix `W` of shape `[r, c]` and a vector of length `c`.
pub fn matvec(w: &Tensor, x: &Tensor) -> Result<Tensor> {
    if w.shape.len() != 2 || x.len() != w.shape[1] {
        return Err(Error::Dimension {
            op: "matvec",
            left: w.shape.clone(),
            right: x.shape.clone(),
        });
    }
    let mut out = vec![0.0; w.shape[0]];
    matvec_acc(w, &x.data, &mut out);
    Ok(Tensor::from_vec(out))
}

/// `out += W·x`, unchecked beyond debug assertions.
pub(crate) fn matvec_acc(w: &Tensor, x: &[f64], out: &mut [f64]) {
    let c = w.cols();
    debug_assert_eq!(x.len(), c);
    debug_assert_eq!(out.len(), w.rows());
    for (o, row) in out.iter_mut().zip(w.data.chunks_exact(c)) {
        *o += dot(row, x);
    }
}

/// `out += Wᵀ·y`.
pub(crate) fn matvec_t_acc(w: &Tensor, y: &[f64], out: &mut [f64]) {
    let c = w.cols();
    debug_assert_eq!(y.len(), w.rows());
    debug_assert_eq!(out.len(), c);
    for (&yi, row) in y.iter().zip(w.data.chunks_exact(c)) {
        if yi != 0.0 {
            axpy(yi, row, out);
        }
    }
}

/// `G += y ⊗ x` for `G` of shape `[len(y), len(x)]`.
pub(crate) fn outer_acc(g: &mut Tensor, y: &[f64], x: &[f64]) {
    let c = g.cols();
    debug_assert_eq!(c, x.len());
    debug_assert_eq!(g.rows(), y.len());
    for (&yi, row) in y.iter().zip(g.data.chunks_exact_mut(c)) {
        if yi != 0.0 {
            axpy(yi, x, row);
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_identity() {
        let w = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let y = matvec(&w, &Tensor::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0]);
    }

    #[test]
    fn matvec_zero_matrix() {
        let w = Tensor::zeros(&[3, 2]);
        let y = matvec(&w, &Tensor::from_vec(vec![-1.5, 8.0])).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_example() {
        let w = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let y = matvec(&w, &Tensor::from_vec(vec![1.0, 1.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_shape_mismatch_names_both_shapes() {
        let w = Tensor::zeros(&[2, 3]);
        let err = matvec(&w, &Tensor::from_vec(vec![1.0, 2.0])).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[2, 3]") && msg.contains("[2]"), "{msg}");
    }

    #[test]
    fn transposed_and_outer_agree_with_definition() {
        let w = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let mut out = vec![0.0; 3];
        matvec_t_acc(&w, &[1.0, -1.0], &mut out);
        assert_eq!(out, vec![-3.0, -3.0, -3.0]);

        let mut g = Tensor::zeros(&[2, 3]);
        outer_acc(&mut g, &[2.0, 1.0], &[1.0, 0.0, -1.0]);
        assert_eq!(g.data(), &[2.0, 0.0, -2.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn rejects_inconsistent_data_length() {
        assert!(Tensor::new(vec![2, 2], vec![1.0; 3]).is_err());
        assert!(Tensor::new(vec![], vec![]).is_err());
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
    }
}
