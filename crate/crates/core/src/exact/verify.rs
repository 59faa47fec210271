//! Exhaustive checks of the negative-dependence inequalities satisfied by
//! densities with log-concave generating polynomials.
//!
//! Every verifier compares a left side against a right side and records the
//! relative excess `(lhs - rhs) / max(|rhs|, 1e-12)`. Violations are reported,
//! not thrown. All probabilities refer to the normalized distribution.

use super::{DistTable, ExactTable};
use crate::error::{invalid_param, Result};
use crate::subset::{binomial, for_each_subset, BinomialTable};

/// Default relative slack for declaring an inequality violated.
pub const TOLERANCE: f64 = 1e-9;

/// Absolute floor on the denominator of the relative excess.
pub const ABS_FLOOR: f64 = 1e-12;

/// Largest ground set for [`verify_subset_bound_all`].
pub const MAX_ALL_SUBSETS_N: usize = 22;

/// Largest number of index sets for [`weighted_sides`].
const MAX_INDEX_SETS: u128 = 4_000_000;

/// `(lhs - rhs) / max(|rhs|, ABS_FLOOR)`.
pub fn relative_excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / rhs.abs().max(ABS_FLOOR)
}

/// Aggregate outcome of one or more inequality checks `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityReport {
    pub checks: u64,
    /// Checks whose relative excess is above [`TOLERANCE`].
    pub violations: u64,
    /// Largest relative excess seen; negative when every check has slack.
    pub worst_excess: f64,
    /// Sides and witness of the check with the largest excess.
    pub worst_lhs: f64,
    pub worst_rhs: f64,
    pub worst_case: Vec<usize>,
}

impl Default for InequalityReport {
    fn default() -> Self {
        InequalityReport {
            checks: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
            worst_lhs: 0.0,
            worst_rhs: 0.0,
            worst_case: Vec::new(),
        }
    }
}

impl InequalityReport {
    pub fn record(&mut self, lhs: f64, rhs: f64, case: impl FnOnce() -> Vec<usize>) {
        let excess = relative_excess(lhs, rhs);
        self.checks += 1;
        if excess > TOLERANCE || excess.is_nan() {
            self.violations += 1;
        }
        if excess > self.worst_excess || excess.is_nan() {
            self.worst_excess = excess;
            self.worst_lhs = lhs;
            self.worst_rhs = rhs;
            self.worst_case = case();
        }
    }

    /// Folds another report into this one.
    pub fn merge(&mut self, other: &InequalityReport) {
        self.checks += other.checks;
        self.violations += other.violations;
        if other.worst_excess > self.worst_excess || other.worst_excess.is_nan() {
            self.worst_excess = other.worst_excess;
            self.worst_lhs = other.worst_lhs;
            self.worst_rhs = other.worst_rhs;
            self.worst_case = other.worst_case.clone();
        }
    }

    /// Largest relative excess clamped at zero.
    pub fn max_violation(&self) -> f64 {
        if self.checks == 0 {
            0.0
        } else {
            self.worst_excess.max(0.0)
        }
    }

    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// `alpha(k, l) = C(k, l) (l / k)^l`.
pub fn alpha(k: usize, l: usize) -> f64 {
    if l == 0 {
        return 1.0;
    }
    binomial(k, l) as f64 * (l as f64 / k as f64).powi(l as i32)
}

/// `mu(T) <= prod_{i in T} q_i` for every `T` in the support.
pub fn verify_point_negcorr(table: &ExactTable) -> InequalityReport {
    let q = table.marginals();
    let mut report = InequalityReport::default();
    table.for_each_support(|s, p| {
        let rhs: f64 = s.iter().map(|&i| q[i]).product();
        report.record(p, rhs, || s.to_vec());
    });
    report
}

#[derive(Clone, Debug)]
pub struct AlphaReport {
    pub report: InequalityReport,
    pub alpha: f64,
    /// `alpha(k, 2) <= 2`; vacuously true for other `l`.
    pub alpha_le_two: bool,
    /// `alpha(k, l) <= e^l`.
    pub alpha_le_exp: bool,
}

/// `Pr[T ⊆ S] <= alpha(k, l) prod_{i in T} q_i` for every `T` of size `l`.
pub fn verify_alpha_bound(table: &ExactTable, l: usize) -> Result<AlphaReport> {
    let (n, k) = (table.n(), table.k());
    if l == 0 || l > k {
        return Err(invalid_param(format!("need 1 <= l <= k, got l = {l}, k = {k}")));
    }
    let ranks = BinomialTable::new(n, l);
    let mut contain = vec![0.0; binomial(n, l) as usize];
    let mut t = Vec::with_capacity(l);
    table.for_each_support(|s, p| {
        for_each_subset(k, l, |pos| {
            t.clear();
            t.extend(pos.iter().map(|&i| s[i]));
            contain[ranks.rank(&t)] += p;
        });
    });
    let a = alpha(k, l);
    let q = table.marginals();
    let mut report = InequalityReport::default();
    let mut r = 0;
    for_each_subset(n, l, |t| {
        let rhs = a * t.iter().map(|&i| q[i]).product::<f64>();
        report.record(contain[r], rhs, || t.to_vec());
        r += 1;
    });
    Ok(AlphaReport {
        report,
        alpha: a,
        alpha_le_two: l != 2 || a <= 2.0,
        alpha_le_exp: a <= (l as f64).exp(),
    })
}

fn subset_rhs(q: &[f64], t: &[usize], k: usize) -> f64 {
    (t.iter().map(|&i| q[i]).sum::<f64>() / k as f64).powi(k as i32)
}

/// `Pr[S ⊆ T] <= (sum_{i in T} q_i / k)^k` for one set `T`.
pub fn verify_subset_bound(table: &ExactTable, t: &[usize]) -> Result<InequalityReport> {
    let n = table.n();
    let mut inside = vec![false; n];
    for &i in t {
        if i >= n {
            return Err(invalid_param(format!("element {i} outside the ground set")));
        }
        inside[i] = true;
    }
    let mut lhs = 0.0;
    table.for_each_support(|s, p| {
        if s.iter().all(|&i| inside[i]) {
            lhs += p;
        }
    });
    let mut elems: Vec<usize> = (0..n).filter(|&i| inside[i]).collect();
    elems.dedup();
    let mut report = InequalityReport::default();
    report.record(lhs, subset_rhs(table.marginals(), &elems, table.k()), || elems.clone());
    Ok(report)
}

/// [`verify_subset_bound`] for all `2^n` sets at once, by a subset-sum
/// transform over bitmasks.
pub fn verify_subset_bound_all(table: &ExactTable) -> Result<InequalityReport> {
    let (n, k) = (table.n(), table.k());
    if n > MAX_ALL_SUBSETS_N {
        return Err(invalid_param(format!(
            "all-subsets check supports n <= {MAX_ALL_SUBSETS_N}, got {n}"
        )));
    }
    let size = 1usize << n;
    let mut mass = vec![0.0f64; size];
    table.for_each_support(|s, p| {
        let mask = s.iter().fold(0usize, |m, &i| m | (1 << i));
        mass[mask] += p;
    });
    for bit in 0..n {
        for mask in 0..size {
            if mask & (1 << bit) != 0 {
                mass[mask] += mass[mask ^ (1 << bit)];
            }
        }
    }
    let q = table.marginals();
    let mut qsum = vec![0.0f64; size];
    let mut report = InequalityReport::default();
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        qsum[mask] = qsum[mask & (mask - 1)] + q[low];
        let rhs = (qsum[mask] / k as f64).powi(k as i32);
        report.record(mass[mask], rhs, || (0..n).filter(|&i| mask & (1 << i) != 0).collect());
    }
    Ok(report)
}

fn check_weights(n: usize, tau: &[usize], p: &[f64], k: usize) -> Result<()> {
    if p.len() != n {
        return Err(invalid_param(format!("expected {n} weights, got {}", p.len())));
    }
    if tau.len() < k {
        return Err(invalid_param(format!("sequence length {} is below k = {k}", tau.len())));
    }
    for &e in tau {
        if e >= n {
            return Err(invalid_param(format!("element {e} outside the ground set")));
        }
        if !(p[e] > 0.0 && p[e].is_finite()) {
            return Err(invalid_param(format!("weight of element {e} must be positive")));
        }
    }
    Ok(())
}

/// Both sides of the weighted bound
/// `sum_{I ⊆ [t], |I| = k} mu(tau_I) prod_{i in I} 1 / p(tau_i)
///  <= (sum_i q_{tau_i} / (k p(tau_i)))^k`.
///
/// `p` is indexed by ground-set element. Index sets whose images collide
/// contribute zero.
pub fn weighted_sides(table: &ExactTable, tau: &[usize], p: &[f64]) -> Result<(f64, f64)> {
    let (n, k) = (table.n(), table.k());
    check_weights(n, tau, p, k)?;
    let sets = binomial(tau.len(), k);
    if sets > MAX_INDEX_SETS {
        return Err(crate::error::Error::CapExceeded {
            required: sets,
            cap: MAX_INDEX_SETS,
        });
    }
    let mut lhs = 0.0;
    let mut image = Vec::with_capacity(k);
    for_each_subset(tau.len(), k, |idx| {
        image.clear();
        image.extend(idx.iter().map(|&i| tau[i]));
        image.sort_unstable();
        if image.windows(2).any(|w| w[0] == w[1]) {
            return;
        }
        let mu = table.prob_of(&image);
        if mu > 0.0 {
            lhs += mu / image.iter().map(|&e| p[e]).product::<f64>();
        }
    });
    let q = table.marginals();
    let rhs = (tau.iter().map(|&e| q[e] / (k as f64 * p[e])).sum::<f64>()).powi(k as i32);
    Ok((lhs, rhs))
}

pub fn verify_weighted_bound(table: &ExactTable, tau: &[usize], p: &[f64]) -> Result<InequalityReport> {
    let (lhs, rhs) = weighted_sides(table, tau, p)?;
    let mut report = InequalityReport::default();
    report.record(lhs, rhs, || tau.to_vec());
    Ok(report)
}

/// Replaces an element repeated `m` times in `tau` by a single occurrence
/// with weight `p(e) / m`. Returns the distinct elements and the new weights.
pub fn merge_duplicates(tau: &[usize], p: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut distinct = tau.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut merged = p.to_vec();
    for &e in &distinct {
        let m = tau.iter().filter(|&&x| x == e).count();
        merged[e] = p[e] / m as f64;
    }
    (distinct, merged)
}

#[derive(Clone, Debug)]
pub struct KlContraction {
    /// `D(nu D_{k->l} || mu D_{k->l})`.
    pub lhs: f64,
    /// `(l / k) D(nu || mu)`.
    pub rhs: f64,
    pub report: InequalityReport,
}

/// `D(nu D_{k->l} || mu D_{k->l}) <= (l / k) D(nu || mu)`.
pub fn verify_kl_contraction(table: &ExactTable, nu: &DistTable, l: usize) -> Result<KlContraction> {
    let k = table.k();
    if nu.n() != table.n() || nu.level() != k {
        return Err(invalid_param("nu must live on the same level as mu"));
    }
    if l == 0 || l > k {
        return Err(invalid_param(format!("need 1 <= l <= k, got l = {l}, k = {k}")));
    }
    if nu
        .probs()
        .iter()
        .zip(table.probs())
        .any(|(&a, &b)| a > 0.0 && b == 0.0)
    {
        return Err(invalid_param("nu is not supported inside the support of mu"));
    }
    let full = nu.kl_divergence(table.dist())?;
    let lhs = if l == k {
        full
    } else {
        nu.down(l)?.kl_divergence(&table.dist().down(l)?)?
    };
    let rhs = l as f64 / k as f64 * full;
    let mut report = InequalityReport::default();
    report.record(lhs, rhs, || vec![l]);
    Ok(KlContraction { lhs, rhs, report })
}
