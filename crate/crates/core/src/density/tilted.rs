use super::{LogDensityOracle, QueryCounter};
use crate::error::Result;
use crate::subset::{sorted_intersection_size, SubsetState};

/// `mu_lambda(S) = lambda^{|S ∩ U|} mu(S)`, the tilt toward an anchor set `U`.
///
/// Each query forwards one query to the base density.
#[derive(Clone, Debug)]
pub struct TiltedDensity<O> {
    base: O,
    anchor: SubsetState,
    log_lambda: f64,
    counter: QueryCounter,
}

impl<O: LogDensityOracle> TiltedDensity<O> {
    pub fn new(base: O, anchor: SubsetState, log_lambda: f64) -> Self {
        TiltedDensity {
            base,
            anchor,
            log_lambda,
            counter: QueryCounter::default(),
        }
    }

    pub fn anchor(&self) -> &SubsetState {
        &self.anchor
    }

    pub fn log_lambda(&self) -> f64 {
        self.log_lambda
    }

    pub fn base(&self) -> &O {
        &self.base
    }
}

impl<O: LogDensityOracle> LogDensityOracle for TiltedDensity<O> {
    fn ground_size(&self) -> usize {
        self.base.ground_size()
    }

    fn degree(&self) -> usize {
        self.base.degree()
    }

    #[inline]
    fn eval(&self, elements: &[usize]) -> f64 {
        let base = self.base.query(elements);
        if base == f64::NEG_INFINITY {
            return base;
        }
        let overlap = sorted_intersection_size(elements, self.anchor.elements());
        overlap as f64 * self.log_lambda + base
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        self.base.support_point()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DppDensity, UniformDensity};
    use crate::subset::for_each_subset;

    #[test]
    fn tilt_is_integer_multiple_of_log_lambda() {
        let base = DppDensity::diagonal(&[1.0, 2.0, 3.0, 5.0, 8.0], 2).unwrap();
        let u = SubsetState::from_sorted(vec![1, 3]);
        let log_lambda = 37.25f64;
        let tilted = TiltedDensity::new(&base, u.clone(), log_lambda);
        for_each_subset(5, 2, |s| {
            let overlap = u.intersection_size(s) as f64;
            let diff = tilted.eval(s) - base.eval(s);
            assert!((diff - overlap * log_lambda).abs() <= 1e-12 * log_lambda);
        });
    }

    #[test]
    fn queries_forward_to_base() {
        let base = UniformDensity::new(4, 2).unwrap();
        let t = TiltedDensity::new(&base, SubsetState::from_sorted(vec![0, 1]), 2.0);
        assert_eq!(t.query(&[0, 1]), 4.0);
        assert_eq!(t.query(&[0, 2]), 2.0);
        assert_eq!(t.queries(), 2);
        assert_eq!(base.queries(), 2);
    }
}
