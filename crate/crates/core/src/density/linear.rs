use num_rational::BigRational;

use super::{greedy_independent, LogDensityOracle, QueryCounter};
use crate::error::{invalid_param, Error, Result};
use crate::linalg::{max_abs, rank_f64, rank_rational};
use crate::subset::SubsetState;

#[derive(Clone, Debug)]
enum Entries {
    /// Row-major floats plus the largest magnitude, which scales the pivot test.
    Float { values: Vec<f64>, scale: f64 },
    Rational(Vec<BigRational>),
}

/// Uniform density over k-sets of linearly independent columns of an
/// `r x n` matrix (a truncated linear matroid).
///
/// Floating matrices decide independence with a relative pivot threshold of
/// `1e-10`; rational matrices decide it exactly.
#[derive(Clone, Debug)]
pub struct LinearMatroidDensity {
    rows: usize,
    cols: usize,
    k: usize,
    entries: Entries,
    counter: QueryCounter,
}

impl LinearMatroidDensity {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>, k: usize) -> Result<Self> {
        Self::check_shape(rows, cols, values.len(), k)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid_param("matrix entries must be finite"));
        }
        let scale = max_abs(&values);
        Ok(LinearMatroidDensity {
            rows,
            cols,
            k,
            entries: Entries::Float { values, scale },
            counter: QueryCounter::default(),
        })
    }

    pub fn rational(rows: usize, cols: usize, values: Vec<BigRational>, k: usize) -> Result<Self> {
        Self::check_shape(rows, cols, values.len(), k)?;
        Ok(LinearMatroidDensity {
            rows,
            cols,
            k,
            entries: Entries::Rational(values),
            counter: QueryCounter::default(),
        })
    }

    fn check_shape(rows: usize, cols: usize, len: usize, k: usize) -> Result<()> {
        if len != rows * cols {
            return Err(invalid_param(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {len}",
                rows * cols
            )));
        }
        if k > rows || k > cols {
            return Err(invalid_param(format!(
                "k = {k} exceeds the matrix dimensions {rows}x{cols}"
            )));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.entries, Entries::Rational(_))
    }

    /// Whether the given columns are linearly independent.
    pub fn independent(&self, columns: &[usize]) -> bool {
        let m = columns.len();
        match &self.entries {
            Entries::Float { values, scale } => {
                let mut sub = Vec::with_capacity(self.rows * m);
                for r in 0..self.rows {
                    sub.extend(columns.iter().map(|&c| values[r * self.cols + c]));
                }
                rank_f64(&mut sub, self.rows, m, *scale) == m
            }
            Entries::Rational(values) => {
                let mut sub = Vec::with_capacity(self.rows * m);
                for r in 0..self.rows {
                    sub.extend(columns.iter().map(|&c| values[r * self.cols + c].clone()));
                }
                rank_rational(&mut sub, self.rows, m) == m
            }
        }
    }
}

impl LogDensityOracle for LinearMatroidDensity {
    fn ground_size(&self) -> usize {
        self.cols
    }

    fn degree(&self) -> usize {
        self.k
    }

    fn eval(&self, elements: &[usize]) -> f64 {
        if self.independent(elements) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        greedy_independent(self.cols, self.k, |s| self.independent(s)).ok_or_else(|| {
            Error::EmptySupport(format!("matrix has rank below k = {}", self.k))
        })
    }
}
