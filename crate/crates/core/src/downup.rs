//! The down-up walk: drop a uniform element, then re-add one with
//! probability proportional to the density of the completed set.

use rand::Rng;

use crate::density::LogDensityOracle;
use crate::error::{invalid_param, Error, Result};
use crate::logspace::sample_log_categorical_with;
use crate::subset::{binomial, for_each_subset, BinomialTable, SubsetState};

/// Constant `c` in the default step count `ceil(c k ln(k / eps))`.
pub const STEP_CONSTANT: f64 = 4.0;

/// Largest state space for [`transition_matrix`].
pub const MAX_KERNEL_STATES: u128 = 10_000;

/// `ceil(c k ln(k / eps))`, at least one step.
pub fn default_steps(k: usize, epsilon: f64) -> usize {
    steps_with_constant(k, epsilon, STEP_CONSTANT)
}

pub fn steps_with_constant(k: usize, epsilon: f64, constant: f64) -> usize {
    let k = k.max(1) as f64;
    ((constant * k * (k / epsilon).ln()).ceil() as usize).max(1)
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 0.5) {
        return Err(invalid_param(format!("epsilon must lie in (0, 1/2], got {epsilon}")));
    }
    Ok(())
}

/// A down-up chain over the support of `oracle`.
///
/// Each step makes exactly `n - k + 1` oracle queries.
#[derive(Debug)]
pub struct DownUpChain<O> {
    oracle: O,
    current: Vec<usize>,
    steps_taken: u64,
    removed: Vec<usize>,
    candidate: Vec<usize>,
    log_weights: Vec<f64>,
    scratch: Vec<f64>,
}

impl<O: LogDensityOracle> DownUpChain<O> {
    /// Starts at `start`, which must have positive density (one query).
    pub fn new(oracle: O, start: SubsetState) -> Result<Self> {
        let lw = oracle.log_density(&start)?;
        if lw == f64::NEG_INFINITY {
            return Err(Error::NotInSupport);
        }
        Ok(Self::new_unchecked(oracle, start.into_vec()))
    }

    /// Starts at a sorted state the caller knows to be in the support.
    pub(crate) fn new_unchecked(oracle: O, start: Vec<usize>) -> Self {
        let (n, k) = (oracle.ground_size(), oracle.degree());
        DownUpChain {
            oracle,
            current: start,
            steps_taken: 0,
            removed: Vec::with_capacity(k),
            candidate: Vec::with_capacity(k),
            log_weights: Vec::with_capacity(n + 1 - k.min(n)),
            scratch: Vec::with_capacity(n + 1 - k.min(n)),
        }
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }

    pub fn current(&self) -> &[usize] {
        &self.current
    }

    pub fn state(&self) -> SubsetState {
        SubsetState::from_sorted(self.current.clone())
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn into_state(self) -> SubsetState {
        SubsetState::from_sorted(self.current)
    }

    /// One down-up transition.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&[usize]> {
        let k = self.current.len();
        let n = self.oracle.ground_size();
        if k == 0 {
            self.steps_taken += 1;
            return Ok(&self.current);
        }
        let drop = rng.random_range(0..k);
        self.removed.clear();
        self.removed
            .extend(self.current.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &e)| e));

        // Candidates f not in the removed set, in increasing order; `slot` is
        // the insertion position of f into `removed`.
        self.log_weights.clear();
        let mut slot = 0;
        for f in 0..n {
            if slot < self.removed.len() && self.removed[slot] == f {
                slot += 1;
                continue;
            }
            self.candidate.clear();
            self.candidate.extend_from_slice(&self.removed[..slot]);
            self.candidate.push(f);
            self.candidate.extend_from_slice(&self.removed[slot..]);
            self.log_weights.push(self.oracle.query(&self.candidate));
        }
        let pick = sample_log_categorical_with(&self.log_weights, rng, &mut self.scratch)
            .ok_or_else(|| Error::Invariant("every completion of the dropped set has zero density".into()))?;

        // Map the candidate index back to its element.
        let mut f = pick;
        for &r in &self.removed {
            if r <= f {
                f += 1;
            } else {
                break;
            }
        }
        let pos = self.removed.partition_point(|&r| r < f);
        self.current.clear();
        self.current.extend_from_slice(&self.removed[..pos]);
        self.current.push(f);
        self.current.extend_from_slice(&self.removed[pos..]);
        self.steps_taken += 1;
        Ok(&self.current)
    }

    pub fn run<R: Rng + ?Sized>(&mut self, steps: usize, rng: &mut R) -> Result<&[usize]> {
        for _ in 0..steps {
            self.step(rng)?;
        }
        Ok(&self.current)
    }
}

/// Runs the walk from `start` for `step_override` steps, or
/// [`default_steps`]`(k, epsilon)` when none is given.
pub fn sample<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    start: &SubsetState,
    epsilon: f64,
    rng: &mut R,
    step_override: Option<usize>,
) -> Result<SubsetState> {
    check_epsilon(epsilon)?;
    let steps = step_override.unwrap_or_else(|| default_steps(oracle.degree(), epsilon));
    let mut chain = DownUpChain::new(oracle, start.clone())?;
    chain.run(steps, rng)?;
    Ok(chain.into_state())
}

/// The down-up kernel as sparse rows indexed by colex rank.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    n: usize,
    k: usize,
    ranks: BinomialTable,
    rows: Vec<Vec<(usize, f64)>>,
}

impl TransitionMatrix {
    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// Nonzero entries `(column, probability)` of row `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map_or(0.0, |pos| self.rows[i][pos].1)
    }

    pub fn rank(&self, elements: &[usize]) -> usize {
        self.ranks.rank(elements)
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// Row vector times the kernel, `v P`.
    pub fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for (i, row) in self.rows.iter().enumerate() {
            if v[i] != 0.0 {
                for &(j, p) in row {
                    out[j] += v[i] * p;
                }
            }
        }
        out
    }
}

/// Builds the exact down-up kernel. States of zero density keep their
/// self-loop mass for drops that admit no completion.
pub fn transition_matrix<O: LogDensityOracle + ?Sized>(oracle: &O) -> Result<TransitionMatrix> {
    let (n, k) = (oracle.ground_size(), oracle.degree());
    let states = binomial(n, k);
    if states > MAX_KERNEL_STATES {
        return Err(Error::CapExceeded {
            required: states,
            cap: MAX_KERNEL_STATES,
        });
    }
    let ranks = BinomialTable::new(n, k);
    let mut log_w = Vec::with_capacity(states as usize);
    for_each_subset(n, k, |s| log_w.push(oracle.query(s)));
    let mut rows = Vec::with_capacity(states as usize);
    let mut removed = Vec::with_capacity(k);
    let mut cand = Vec::with_capacity(k);
    let mut targets: Vec<(usize, f64)> = Vec::new();
    for_each_subset(n, k, |s| {
        let self_rank = ranks.rank(s);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for drop in 0..k {
            removed.clear();
            removed.extend(s.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &e)| e));
            targets.clear();
            for f in (0..n).filter(|f| !removed.contains(f)) {
                cand.clear();
                cand.extend_from_slice(&removed);
                cand.push(f);
                cand.sort_unstable();
                let r = ranks.rank(&cand);
                targets.push((r, log_w[r]));
            }
            let max = targets.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                row.push((self_rank, 1.0 / k as f64));
                continue;
            }
            let total: f64 = targets.iter().map(|t| (t.1 - max).exp()).sum();
            for &(r, w) in &targets {
                let p = (w - max).exp() / total / k as f64;
                if p > 0.0 {
                    row.push((r, p));
                }
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (c, p) in row {
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += p,
                _ => merged.push((c, p)),
            }
        }
        rows.push(merged);
    });
    if k == 0 {
        rows = vec![vec![(0, 1.0)]];
    }
    Ok(TransitionMatrix { n, k, ranks, rows })
}
