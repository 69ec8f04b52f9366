use std::fmt;
use std::sync::Arc;

/// Which of `(t, x, y)` a field actually reads. Informational; every field
/// is evaluated through the same `(t, x, y)` signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Arity {
    Y,
    TY,
    XY,
    TXY,
}

pub type FieldFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// A pure vector- or matrix-valued field `(t, x, y) -> R^{rows x cols}`,
/// stored row-major.
#[derive(Clone)]
pub struct VectorField {
    arity: Arity,
    rows: usize,
    cols: usize,
    f: Arc<FieldFn>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("arity", &self.arity)
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

impl VectorField {
    pub fn vector<F>(arity: Arity, dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::matrix(arity, dim, 1, f)
    }

    pub fn matrix<F>(arity: Arity, rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            arity,
            rows,
            cols,
            f: Arc::new(f),
        }
    }

    /// Field of `y` only.
    pub fn of_y<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::vector(Arity::Y, dim, move |_, _, y, out| f(y, out))
    }

    /// Field of `(t, y)`.
    pub fn of_ty<F>(dim: usize, f: F) -> Self
    where
        F: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::vector(Arity::TY, dim, move |t, _, y, out| f(t, y, out))
    }

    pub fn zero(arity: Arity, rows: usize, cols: usize) -> Self {
        Self::matrix(arity, rows, cols, |_, _, _, out| out.fill(0.0))
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn eval_into(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.f)(t, x, y, out)
    }

    pub fn eval(&self, t: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(t, x, y, &mut out);
        out
    }

    /// Column `k` of a matrix field as a vector field in its own right.
    pub fn column(&self, k: usize) -> VectorField {
        assert!(k < self.cols, "column {k} out of range");
        let inner = self.clone();
        let rows = self.rows;
        let cols = self.cols;
        VectorField::vector(self.arity, rows, move |t, x, y, out| {
            let mut full = vec![0.0; rows * cols];
            inner.eval_into(t, x, y, &mut full);
            for i in 0..rows {
                out[i] = full[i * cols + k];
            }
        })
    }
}
