//! Densities over k-subsets, queried in natural-log space.
//!
//! Every algorithm in the crate sees a distribution only through
//! [`LogDensityOracle`]: the ground-set size `n`, the homogeneity degree `k`,
//! and `ln mu(S)` for a sorted k-subset `S` (`-inf` encodes `mu(S) = 0`).
//! Each oracle owns a [`QueryCounter`] that increments once per evaluation.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::subset::{binomial, for_each_subset, SubsetState};

mod dpp;
mod explicit;
mod forest;
pub mod io;
mod linear;
mod tilted;
mod uniform;

pub use dpp::DppDensity;
pub use explicit::ExplicitDensity;
pub use forest::{ForestDensity, Graph, UnionFind};
pub use linear::LinearMatroidDensity;
pub use tilted::TiltedDensity;
pub use uniform::UniformDensity;

/// Monotone count of density evaluations.
#[derive(Debug, Default)]
pub struct QueryCounter(AtomicU64);

impl QueryCounter {
    #[inline]
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

impl Clone for QueryCounter {
    fn clone(&self) -> Self {
        QueryCounter(AtomicU64::new(self.get()))
    }
}

/// Query access to a density `mu` over k-subsets of `{0, .., n-1}`.
pub trait LogDensityOracle: Send + Sync {
    /// Ground-set size `n`.
    fn ground_size(&self) -> usize;

    /// Homogeneity degree `k`.
    fn degree(&self) -> usize;

    /// `ln mu(S)` for a strictly increasing k-subset. Neither validates nor
    /// counts; use [`query`](Self::query) or [`log_density`](Self::log_density).
    fn eval(&self, elements: &[usize]) -> f64;

    fn counter(&self) -> &QueryCounter;

    /// Some `S` with `mu(S) > 0`.
    fn support_point(&self) -> Result<SubsetState>;

    /// Counted evaluation on a subset the caller guarantees is valid.
    #[inline]
    fn query(&self, elements: &[usize]) -> f64 {
        self.counter().bump();
        self.eval(elements)
    }

    /// Validated, counted evaluation.
    fn log_density(&self, s: &SubsetState) -> Result<f64> {
        s.check(self.ground_size(), self.degree())?;
        Ok(self.query(s.elements()))
    }

    /// Counted evaluation on the image of an index selection, which may
    /// repeat ground elements. `mu` is multiaffine, so an image with a repeat
    /// has density zero; it is still charged as one query. Sorts `items`.
    #[inline]
    fn query_image(&self, items: &mut [usize]) -> f64 {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            self.counter().bump();
            return f64::NEG_INFINITY;
        }
        self.query(items)
    }

    fn queries(&self) -> u64 {
        self.counter().get()
    }
}

/// Scans all k-subsets in colex order for a support point. Used as the
/// fallback when family-specific constructions fail.
pub fn support_point_by_search<O: LogDensityOracle + ?Sized>(
    oracle: &O,
    cap: u128,
) -> Result<SubsetState> {
    let (n, k) = (oracle.ground_size(), oracle.degree());
    let total = binomial(n, k);
    if total > cap {
        return Err(Error::CapExceeded {
            required: total,
            cap,
        });
    }
    let mut found = None;
    for_each_subset(n, k, |s| {
        if found.is_none() && oracle.query(s) > f64::NEG_INFINITY {
            found = Some(s.to_vec());
        }
    });
    found
        .map(SubsetState::from_sorted)
        .ok_or_else(|| Error::EmptySupport(format!("no k-subset of {n} elements has positive density")))
}

/// Greedy basis construction for matroid-like families: scan elements in
/// order and keep each one whose addition stays independent.
pub(crate) fn greedy_independent(
    n: usize,
    k: usize,
    mut independent: impl FnMut(&[usize]) -> bool,
) -> Option<SubsetState> {
    let mut chosen = Vec::with_capacity(k);
    for e in 0..n {
        if chosen.len() == k {
            break;
        }
        chosen.push(e);
        if !independent(&chosen) {
            chosen.pop();
        }
    }
    (chosen.len() == k).then(|| SubsetState::from_sorted(chosen))
}

impl<O: LogDensityOracle + ?Sized> LogDensityOracle for &O {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, elements: &[usize]) -> f64 {
        (**self).eval(elements)
    }
    fn counter(&self) -> &QueryCounter {
        (**self).counter()
    }
    fn support_point(&self) -> Result<SubsetState> {
        (**self).support_point()
    }
}

impl<O: LogDensityOracle + ?Sized> LogDensityOracle for Box<O> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn eval(&self, elements: &[usize]) -> f64 {
        (**self).eval(elements)
    }
    fn counter(&self) -> &QueryCounter {
        (**self).counter()
    }
    fn support_point(&self) -> Result<SubsetState> {
        (**self).support_point()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn query_image_counts_collisions() {
        let u = UniformDensity::new(5, 2).unwrap();
        let mut items = [3, 3];
        assert_eq!(u.query_image(&mut items), f64::NEG_INFINITY);
        let mut items = [4, 1];
        assert_eq!(u.query_image(&mut items), 0.0);
        assert_eq!(u.queries(), 2);
    }

    #[test]
    fn log_density_rejects_malformed_input() {
        let u = UniformDensity::new(5, 2).unwrap();
        assert!(matches!(
            u.log_density(&SubsetState::from_sorted(vec![1])),
            Err(Error::InvalidSubset(_))
        ));
        assert!(u.log_density(&SubsetState::from_sorted(vec![1, 7])).is_err());
        assert_eq!(u.queries(), 0);
    }

    #[test]
    fn search_fallback_finds_support() {
        let d = ExplicitDensity::new(4, 2, vec![(vec![2, 3], 1.0)]).unwrap();
        assert_eq!(
            support_point_by_search(&d, 100).unwrap().elements(),
            &[2, 3]
        );
        assert!(matches!(
            support_point_by_search(&d, 3),
            Err(Error::CapExceeded { required: 6, cap: 3 })
        ));
    }
}
