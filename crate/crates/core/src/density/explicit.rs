use std::collections::HashMap;

use super::{LogDensityOracle, QueryCounter};
use crate::error::{invalid_param, Error, Result};
use crate::subset::{binomial, BinomialTable, SubsetState};

/// Dense storage is used while `C(n, k)` stays below this many slots.
const DENSE_LIMIT: u128 = 1 << 20;

#[derive(Clone, Debug)]
enum Storage {
    Dense {
        ranks: BinomialTable,
        log_weights: Vec<f64>,
    },
    Sparse(HashMap<Vec<usize>, f64>),
}

/// A density given by an explicit table of nonnegative weights. Subsets not in
/// the table have weight zero.
///
/// Log-concavity of the generating polynomial is a trusted precondition for
/// user tables; the sampling guarantees only hold when it is true.
#[derive(Clone, Debug)]
pub struct ExplicitDensity {
    n: usize,
    k: usize,
    storage: Storage,
    counter: QueryCounter,
}

impl ExplicitDensity {
    /// Builds from `(subset, weight)` pairs. Weights must be nonnegative and
    /// finite, at least one positive, and each subset may appear once.
    pub fn new(n: usize, k: usize, entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut log_entries = Vec::with_capacity(entries.len());
        for (s, w) in entries {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid_param(format!("weight {w} is not a finite nonnegative number")));
            }
            log_entries.push((s, w.ln()));
        }
        Self::from_log_weights(n, k, log_entries)
    }

    /// Builds from `(subset, ln weight)` pairs; `-inf` is allowed.
    pub fn from_log_weights(n: usize, k: usize, entries: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if k > n {
            return Err(invalid_param(format!("k = {k} exceeds n = {n}")));
        }
        let mut storage = if binomial(n, k) <= DENSE_LIMIT {
            Storage::Dense {
                ranks: BinomialTable::new(n, k),
                log_weights: vec![f64::NEG_INFINITY; binomial(n, k) as usize],
            }
        } else {
            Storage::Sparse(HashMap::new())
        };
        let mut any_positive = false;
        let mut seen = std::collections::HashSet::new();
        for (elements, lw) in entries {
            if lw.is_nan() || lw == f64::INFINITY {
                return Err(invalid_param("log weight must be finite or -inf"));
            }
            let s = SubsetState::new(n, elements)?;
            s.check(n, k)?;
            if !seen.insert(s.clone()) {
                return Err(Error::InvalidSubset(format!("subset {s} listed twice")));
            }
            any_positive |= lw > f64::NEG_INFINITY;
            match &mut storage {
                Storage::Dense { ranks, log_weights } => log_weights[ranks.rank(s.elements())] = lw,
                Storage::Sparse(map) => {
                    map.insert(s.into_vec(), lw);
                }
            }
        }
        if !any_positive {
            return Err(Error::EmptySupport("explicit table has no positive weight".into()));
        }
        Ok(ExplicitDensity {
            n,
            k,
            storage,
            counter: QueryCounter::default(),
        })
    }

    /// The positive-weight entries as `(subset, ln weight)`, sorted by subset.
    pub fn log_entries(&self) -> Vec<(SubsetState, f64)> {
        let mut out: Vec<(SubsetState, f64)> = match &self.storage {
            Storage::Dense { ranks, log_weights } => {
                let mut buf = Vec::new();
                log_weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > f64::NEG_INFINITY)
                    .map(|(r, &w)| {
                        ranks.unrank_into(r, self.k, &mut buf);
                        (SubsetState::from_sorted(buf.clone()), w)
                    })
                    .collect()
            }
            Storage::Sparse(map) => map
                .iter()
                .filter(|(_, &w)| w > f64::NEG_INFINITY)
                .map(|(s, &w)| (SubsetState::from_sorted(s.clone()), w))
                .collect(),
        };
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }
}

impl LogDensityOracle for ExplicitDensity {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.k
    }

    #[inline]
    fn eval(&self, elements: &[usize]) -> f64 {
        match &self.storage {
            Storage::Dense { ranks, log_weights } => log_weights[ranks.rank(elements)],
            Storage::Sparse(map) => map.get(elements).copied().unwrap_or(f64::NEG_INFINITY),
        }
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        self.log_entries()
            .into_iter()
            .next()
            .map(|(s, _)| s)
            .ok_or_else(|| Error::EmptySupport("explicit table has no positive weight".into()))
    }
}
