//! Brute-force ground truth over all `C(n, k)` subsets.
//!
//! [`ExactTable`] enumerates a density once and holds its normalized
//! probabilities, partition function, and marginals. [`DistTable`] is a dense
//! distribution over the l-subsets of `[n]` for any level `l`, with the down
//! operator and the KL / TV distances needed by the verifiers in [`verify`].
//! Both index subsets by colex rank.

use rand::Rng;

use crate::density::LogDensityOracle;
use crate::error::{invalid_param, Error, Result};
use crate::logspace::log_sum_exp;
use crate::subset::{binomial, for_each_subset, BinomialTable, SubsetState};

mod subdivide;
pub mod verify;

pub use subdivide::{subdivide, subdivide_table, Subdivision};

/// Default ceiling on `C(n, k)` for enumeration.
pub const DEFAULT_CAP: u128 = 2_000_000;

fn check_cap(n: usize, k: usize, cap: u128) -> Result<usize> {
    let total = binomial(n, k);
    if total > cap {
        return Err(Error::CapExceeded {
            required: total,
            cap,
        });
    }
    Ok(total as usize)
}

/// A normalized distribution over the l-subsets of `[n]`.
#[derive(Clone, Debug)]
pub struct DistTable {
    n: usize,
    level: usize,
    ranks: BinomialTable,
    probs: Vec<f64>,
}

impl DistTable {
    /// Normalizes nonnegative weights indexed by colex rank.
    pub fn from_weights(n: usize, level: usize, weights: Vec<f64>) -> Result<Self> {
        let expected = check_cap(n, level, 1 << 26)?;
        if weights.len() != expected {
            return Err(invalid_param(format!(
                "expected {expected} weights for level {level}, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid_param("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport("all weights are zero".into()));
        }
        let probs = weights.into_iter().map(|w| w / total).collect();
        Ok(DistTable {
            n,
            level,
            ranks: BinomialTable::new(n, level),
            probs,
        })
    }

    pub fn point_mass(n: usize, at: &SubsetState) -> Result<Self> {
        at.check(n, at.len())?;
        Self::uniform_over(n, at.len(), std::slice::from_ref(at))
    }

    /// Uniform over the listed subsets (all of size `level`).
    pub fn uniform_over(n: usize, level: usize, subsets: &[SubsetState]) -> Result<Self> {
        let mut w = vec![0.0; check_cap(n, level, DEFAULT_CAP)?];
        let ranks = BinomialTable::new(n, level);
        for s in subsets {
            s.check(n, level)?;
            w[ranks.rank(s.elements())] = 1.0;
        }
        Self::from_weights(n, level, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Probabilities in colex order.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, elements: &[usize]) -> f64 {
        self.probs[self.ranks.rank(elements)]
    }

    pub fn rank(&self, elements: &[usize]) -> usize {
        self.ranks.rank(elements)
    }

    pub fn subset_at(&self, rank: usize) -> SubsetState {
        let mut buf = Vec::with_capacity(self.level);
        self.ranks.unrank_into(rank, self.level, &mut buf);
        SubsetState::from_sorted(buf)
    }

    /// `(nu D_{l -> m})(T) = sum_{S ⊇ T} nu(S) / C(l, m)`.
    pub fn down(&self, m: usize) -> Result<DistTable> {
        if m >= self.level {
            return Err(invalid_param(format!(
                "down operator needs m < l, got m = {m}, l = {}",
                self.level
            )));
        }
        let target = BinomialTable::new(self.n, m);
        let mut out = vec![0.0; check_cap(self.n, m, u128::MAX)?];
        let share = 1.0 / binomial(self.level, m) as f64;
        let mut s = Vec::with_capacity(self.level);
        let mut t = Vec::with_capacity(m);
        for (r, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            self.ranks.unrank_into(r, self.level, &mut s);
            for_each_subset(self.level, m, |positions| {
                t.clear();
                t.extend(positions.iter().map(|&i| s[i]));
                out[target.rank(&t)] += p * share;
            });
        }
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|v| *v /= total);
        Ok(DistTable {
            n: self.n,
            level: m,
            ranks: target,
            probs: out,
        })
    }

    fn check_compatible(&self, other: &DistTable) -> Result<()> {
        if self.n != other.n || self.level != other.level {
            return Err(invalid_param(format!(
                "distributions live on different levels: ({}, {}) vs ({}, {})",
                self.n, self.level, other.n, other.level
            )));
        }
        Ok(())
    }

    /// `D(self || other) = sum self * ln(self / other)`; `+inf` when `self`
    /// puts mass outside the support of `other`.
    pub fn kl_divergence(&self, other: &DistTable) -> Result<f64> {
        self.check_compatible(other)?;
        let mut d = 0.0;
        for (&a, &b) in self.probs.iter().zip(&other.probs) {
            if a == 0.0 {
                continue;
            }
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            d += a * (a / b).ln();
        }
        Ok(d.max(0.0))
    }

    pub fn tv_distance(&self, other: &DistTable) -> Result<f64> {
        self.check_compatible(other)?;
        let sum: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok((0.5 * sum).min(1.0))
    }
}

/// Exact enumeration of a density: probabilities, `ln Z`, and marginals.
#[derive(Clone, Debug)]
pub struct ExactTable {
    dist: DistTable,
    log_partition: f64,
    marginals: Vec<f64>,
    cdf: Vec<f64>,
}

impl ExactTable {
    pub fn enumerate<O: LogDensityOracle + ?Sized>(oracle: &O) -> Result<Self> {
        Self::enumerate_with_cap(oracle, DEFAULT_CAP)
    }

    pub fn enumerate_with_cap<O: LogDensityOracle + ?Sized>(oracle: &O, cap: u128) -> Result<Self> {
        let (n, k) = (oracle.ground_size(), oracle.degree());
        let total = check_cap(n, k, cap)?;
        let mut log_w = Vec::with_capacity(total);
        for_each_subset(n, k, |s| log_w.push(oracle.query(s)));
        Self::from_log_weights(n, k, log_w)
    }

    /// Builds from unnormalized log weights indexed by colex rank.
    pub fn from_log_weights(n: usize, k: usize, log_w: Vec<f64>) -> Result<Self> {
        let log_partition = log_sum_exp(&log_w);
        if log_partition == f64::NEG_INFINITY {
            return Err(Error::EmptySupport("every subset has zero density".into()));
        }
        let probs: Vec<f64> = log_w.iter().map(|&w| (w - log_partition).exp()).collect();
        let ranks = BinomialTable::new(n, k);
        let mut marginals = vec![0.0; n];
        let mut buf = Vec::with_capacity(k);
        for (r, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                ranks.unrank_into(r, k, &mut buf);
                for &i in &buf {
                    marginals[i] += p;
                }
            }
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(ExactTable {
            dist: DistTable {
                n,
                level: k,
                ranks,
                probs,
            },
            log_partition,
            marginals,
            cdf,
        })
    }

    pub fn n(&self) -> usize {
        self.dist.n
    }

    pub fn k(&self) -> usize {
        self.dist.level
    }

    pub fn probs(&self) -> &[f64] {
        &self.dist.probs
    }

    pub fn prob_of(&self, elements: &[usize]) -> f64 {
        self.dist.prob_of(elements)
    }

    /// `ln Z` with `Z = sum_S mu(S)`.
    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn partition(&self) -> f64 {
        self.log_partition.exp()
    }

    /// `q_i = Pr[i in S]`.
    pub fn marginals(&self) -> &[f64] {
        &self.marginals
    }

    /// The table as a level-k [`DistTable`].
    pub fn dist(&self) -> &DistTable {
        &self.dist
    }

    pub fn subset_at(&self, rank: usize) -> SubsetState {
        self.dist.subset_at(rank)
    }

    /// Visits every positive-probability subset in colex order.
    pub fn for_each_support(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut buf = Vec::with_capacity(self.k());
        for (r, &p) in self.dist.probs.iter().enumerate() {
            if p > 0.0 {
                self.dist.ranks.unrank_into(r, self.k(), &mut buf);
                f(&buf, p);
            }
        }
    }

    /// Inverse-CDF draw of a subset rank.
    pub fn sample_rank<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("nonempty table");
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // Skip zero-probability slots that share a cdf value with their successor.
        let mut idx = idx.min(self.cdf.len() - 1);
        while self.dist.probs[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        idx
    }

    /// Exact sample from the table.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SubsetState {
        self.subset_at(self.sample_rank(rng))
    }

    /// TV distance between the empirical distribution of `samples` and the table.
    pub fn empirical_tv<'a>(&self, samples: impl IntoIterator<Item = &'a SubsetState>) -> f64 {
        let mut counts = vec![0u64; self.dist.probs.len()];
        let mut total = 0u64;
        for s in samples {
            counts[self.dist.rank(s.elements())] += 1;
            total += 1;
        }
        self.tv_from_counts(&counts, total)
    }

    /// TV distance between a histogram over colex ranks and the table.
    pub fn tv_from_counts(&self, counts: &[u64], total: u64) -> f64 {
        let total = total.max(1) as f64;
        0.5 * counts
            .iter()
            .zip(&self.dist.probs)
            .map(|(&c, &p)| (c as f64 / total - p).abs())
            .sum::<f64>()
    }
}
