use super::{LogDensityOracle, QueryCounter};
use crate::error::{invalid_param, Result};
use crate::subset::SubsetState;

/// The uniform matroid `U(n, k)`: every k-subset has density one.
#[derive(Clone, Debug)]
pub struct UniformDensity {
    n: usize,
    k: usize,
    counter: QueryCounter,
}

impl UniformDensity {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k > n {
            return Err(invalid_param(format!("k = {k} exceeds n = {n}")));
        }
        Ok(UniformDensity {
            n,
            k,
            counter: QueryCounter::default(),
        })
    }
}

impl LogDensityOracle for UniformDensity {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.k
    }

    fn eval(&self, _elements: &[usize]) -> f64 {
        0.0
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        Ok(SubsetState::from_sorted((0..self.k).collect()))
    }
}
