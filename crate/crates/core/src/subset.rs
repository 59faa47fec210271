//! Sorted k-subsets of a ground set `{0, .., n-1}` and the combinatorial
//! number system used to index them densely.
//!
//! Dense tables in this crate order subsets colexicographically: the rank of
//! `s_0 < s_1 < .. < s_{k-1}` is `sum_j C(s_j, j + 1)`.

use std::fmt;

use crate::error::{Error, Result};

/// A strictly increasing sequence of ground-set indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetState(Vec<usize>);

impl SubsetState {
    /// Builds a subset from arbitrary-order elements, rejecting duplicates and
    /// indices outside `[0, n)`.
    pub fn new(n: usize, mut elements: Vec<usize>) -> Result<Self> {
        elements.sort_unstable();
        if let Some(w) = elements.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidSubset(format!("duplicate element {}", w[0])));
        }
        if let Some(&last) = elements.last() {
            if last >= n {
                return Err(Error::InvalidSubset(format!(
                    "element {last} outside ground set of size {n}"
                )));
            }
        }
        Ok(SubsetState(elements))
    }

    /// Wraps an already strictly increasing vector.
    pub fn from_sorted(elements: Vec<usize>) -> Self {
        debug_assert!(elements.windows(2).all(|w| w[0] < w[1]));
        SubsetState(elements)
    }

    pub fn elements(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// `|self ∩ other|` for a sorted `other`.
    pub fn intersection_size(&self, other: &[usize]) -> usize {
        sorted_intersection_size(&self.0, other)
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    /// Checks the subset against a ground set of size `n` and degree `k`.
    pub fn check(&self, n: usize, k: usize) -> Result<()> {
        if self.0.len() != k {
            return Err(Error::InvalidSubset(format!(
                "expected {k} elements, got {}",
                self.0.len()
            )));
        }
        match self.0.last() {
            Some(&last) if last >= n => Err(Error::InvalidSubset(format!(
                "element {last} outside ground set of size {n}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SubsetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (pos, e) in self.0.iter().enumerate() {
            if pos > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub(crate) fn sorted_intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// Exact binomial coefficient, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// `ln C(n, k)` computed as a sum of logs, safe for any `n`.
pub fn log_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// Pascal table `C(a, b)` for `a <= n`, `b <= k`, used for colex ranking.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    n: usize,
    k: usize,
    table: Vec<u64>,
}

impl BinomialTable {
    pub fn new(n: usize, k: usize) -> Self {
        let width = k + 1;
        let mut table = vec![0u64; (n + 1) * width];
        for a in 0..=n {
            table[a * width] = 1;
            for b in 1..=k.min(a) {
                let above = table[(a - 1) * width + b];
                let diag = table[(a - 1) * width + b - 1];
                table[a * width + b] = above.saturating_add(diag);
            }
        }
        BinomialTable { n, k, table }
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u64 {
        if b > self.k || a > self.n {
            return binomial(a, b).min(u64::MAX as u128) as u64;
        }
        self.table[a * (self.k + 1) + b]
    }

    /// Colex rank of a strictly increasing slice.
    #[inline]
    pub fn rank(&self, elements: &[usize]) -> usize {
        elements
            .iter()
            .enumerate()
            .map(|(j, &s)| self.get(s, j + 1) as usize)
            .sum()
    }

    /// Inverse of [`rank`](Self::rank) for subsets of size `len`.
    pub fn unrank_into(&self, mut rank: usize, len: usize, out: &mut Vec<usize>) {
        out.clear();
        out.resize(len, 0);
        let mut upper = self.n;
        for j in (0..len).rev() {
            // Largest c < upper with C(c, j + 1) <= rank.
            let mut c = upper - 1;
            while self.get(c, j + 1) as usize > rank {
                c -= 1;
            }
            out[j] = c;
            rank -= self.get(c, j + 1) as usize;
            upper = c;
        }
    }
}

/// Advances `s` to its colex successor among k-subsets of `[0, n)`. Returns
/// `false` (leaving `s` unspecified) once the last subset has been passed.
pub fn next_colex(s: &mut [usize], n: usize) -> bool {
    let k = s.len();
    if k == 0 {
        return false;
    }
    for j in 0..k {
        let limit = if j + 1 < k { s[j + 1] } else { n };
        if s[j] + 1 < limit {
            s[j] += 1;
            for (i, v) in s.iter_mut().enumerate().take(j) {
                *v = i;
            }
            return true;
        }
    }
    false
}

/// Calls `f` on every k-subset of `[0, n)` in colex order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut s: Vec<usize> = (0..k).collect();
    loop {
        f(&s);
        if !next_colex(&mut s, n) {
            break;
        }
    }
}
