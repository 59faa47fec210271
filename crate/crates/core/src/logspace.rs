//! Log-space arithmetic helpers.

use rand::Rng;

/// `ln(sum_i exp(x_i))` with a max shift. Returns `-inf` for an empty slice or
/// when every entry is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Draws an index with probability proportional to `exp(log_weights[i])`.
///
/// Returns `None` when every weight is zero.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_weights: &[f64], rng: &mut R) -> Option<usize> {
    let mut scratch = Vec::new();
    sample_log_categorical_with(log_weights, rng, &mut scratch)
}

/// [`sample_log_categorical`] with a caller-owned buffer for the shifted weights.
pub fn sample_log_categorical_with<R: Rng + ?Sized>(
    log_weights: &[f64],
    rng: &mut R,
    scratch: &mut Vec<f64>,
) -> Option<usize> {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    scratch.clear();
    scratch.extend(log_weights.iter().map(|&w| (w - max).exp()));
    let total: f64 = scratch.iter().sum();
    let mut target = rng.random::<f64>() * total;
    let mut last_positive = None;
    for (i, &mass) in scratch.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        if target < mass {
            return Some(i);
        }
        target -= mass;
        last_positive = Some(i);
    }
    // Rounding can leave `target` marginally above the accumulated mass.
    last_positive
}
