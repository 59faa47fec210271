use super::{support_point_by_search, LogDensityOracle, QueryCounter};
use crate::error::{invalid_param, Error, Result};
use crate::linalg::cholesky_logdet;
use crate::subset::SubsetState;

/// Relative pivot tolerance for principal-minor factorization.
const MINOR_TOLERANCE: f64 = 1e-12;

/// Search fallback for the support point stops at this many subsets.
const SEARCH_CAP: u128 = 2_000_000;

/// L-ensemble k-DPP: `ln mu(S) = ln det(L_S)` for a symmetric PSD kernel `L`.
///
/// Minors are factored by Cholesky; a minor that fails to factor (pivot below
/// `1e-12` of the largest diagonal entry) is treated as zero.
#[derive(Clone, Debug)]
pub struct DppDensity {
    n: usize,
    k: usize,
    kernel: Vec<f64>,
    counter: QueryCounter,
}

impl DppDensity {
    /// `kernel` is row-major `n x n` and must be symmetric.
    pub fn new(n: usize, kernel: Vec<f64>, k: usize) -> Result<Self> {
        if kernel.len() != n * n {
            return Err(invalid_param(format!(
                "expected {} kernel entries, got {}",
                n * n,
                kernel.len()
            )));
        }
        if k > n {
            return Err(invalid_param(format!("k = {k} exceeds n = {n}")));
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(invalid_param("kernel entries must be finite"));
        }
        for i in 0..n {
            if kernel[i * n + i] < 0.0 {
                return Err(invalid_param(format!("negative diagonal entry at {i}")));
            }
            for j in 0..i {
                let (a, b) = (kernel[i * n + j], kernel[j * n + i]);
                if (a - b).abs() > 1e-9 * (1.0 + a.abs().max(b.abs())) {
                    return Err(invalid_param(format!("kernel not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DppDensity {
            n,
            k,
            kernel,
            counter: QueryCounter::default(),
        })
    }

    /// Diagonal kernel: the product measure `mu(S) = prod_{i in S} d_i`.
    pub fn diagonal(diag: &[f64], k: usize) -> Result<Self> {
        let n = diag.len();
        let mut kernel = vec![0.0; n * n];
        for (i, &d) in diag.iter().enumerate() {
            kernel[i * n + i] = d;
        }
        Self::new(n, kernel, k)
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    fn minor_logdet(&self, elements: &[usize]) -> f64 {
        let m = elements.len();
        let mut sub = Vec::with_capacity(m * m);
        for &i in elements {
            sub.extend(elements.iter().map(|&j| self.kernel[i * self.n + j]));
        }
        cholesky_logdet(&mut sub, m, MINOR_TOLERANCE)
    }
}

impl LogDensityOracle for DppDensity {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn degree(&self) -> usize {
        self.k
    }

    #[inline]
    fn eval(&self, elements: &[usize]) -> f64 {
        self.minor_logdet(elements)
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    /// Greedy max-volume selection, then exhaustive search if the greedy
    /// path hits a numerically singular minor.
    fn support_point(&self) -> Result<SubsetState> {
        let mut chosen: Vec<usize> = Vec::with_capacity(self.k);
        let mut candidate = Vec::with_capacity(self.k);
        while chosen.len() < self.k {
            let mut best: Option<(usize, f64)> = None;
            for j in (0..self.n).filter(|j| !chosen.contains(j)) {
                candidate.clear();
                candidate.extend_from_slice(&chosen);
                candidate.push(j);
                candidate.sort_unstable();
                self.counter.bump();
                let v = self.minor_logdet(&candidate);
                if v > f64::NEG_INFINITY && best.is_none_or(|(_, b)| v > b) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, _)) => chosen.push(j),
                None => break,
            }
        }
        if chosen.len() == self.k {
            chosen.sort_unstable();
            return Ok(SubsetState::from_sorted(chosen));
        }
        support_point_by_search(self, SEARCH_CAP).map_err(|e| match e {
            Error::CapExceeded { .. } => {
                Error::EmptySupport("greedy selection failed and the kernel is too large to search".into())
            }
            other => other,
        })
    }
}
