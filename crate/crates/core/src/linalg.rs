//! Small dense linear algebra used by the matrix-backed densities and the
//! matrix-tree cross-check. Matrices are row-major slices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

/// Relative pivot threshold for floating rank decisions.
pub const PIVOT_THRESHOLD: f64 = 1e-10;

/// Rank of a `rows x cols` matrix by Gaussian elimination with partial
/// pivoting. A pivot counts as nonzero when its magnitude exceeds
/// `PIVOT_THRESHOLD * scale`. The matrix is overwritten.
pub fn rank_f64(m: &mut [f64], rows: usize, cols: usize, scale: f64) -> usize {
    let tol = PIVOT_THRESHOLD * scale.max(f64::MIN_POSITIVE);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let (best, best_abs) = (rank..rows)
            .map(|r| (r, m[r * cols + col].abs()))
            .fold((rank, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= tol {
            continue;
        }
        if best != rank {
            for c in 0..cols {
                m.swap(best * cols + c, rank * cols + c);
            }
        }
        let pivot = m[rank * cols + col];
        for r in rank + 1..rows {
            let factor = m[r * cols + col] / pivot;
            if factor != 0.0 {
                for c in col..cols {
                    m[r * cols + c] -= factor * m[rank * cols + c];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Exact rank over the rationals.
pub fn rank_rational(m: &mut [BigRational], rows: usize, cols: usize) -> usize {
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(pivot_row) = (rank..rows).find(|&r| !m[r * cols + col].is_zero()) else {
            continue;
        };
        if pivot_row != rank {
            for c in 0..cols {
                m.swap(pivot_row * cols + c, rank * cols + c);
            }
        }
        let pivot = m[rank * cols + col].clone();
        for r in rank + 1..rows {
            if m[r * cols + col].is_zero() {
                continue;
            }
            let factor = &m[r * cols + col] / &pivot;
            for c in col..cols {
                let delta = &factor * &m[rank * cols + c];
                m[r * cols + c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

/// `ln det` of a symmetric `k x k` matrix via an LDL^T (Cholesky) sweep.
///
/// Any pivot at or below `rel_tol * max_diag` makes the minor numerically
/// singular (or indefinite) and yields `-inf`. The matrix is overwritten.
pub fn cholesky_logdet(m: &mut [f64], k: usize, rel_tol: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let max_diag = (0..k).map(|i| m[i * k + i]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let tol = rel_tol * max_diag;
    let mut logdet = 0.0;
    for j in 0..k {
        let mut d = m[j * k + j];
        for p in 0..j {
            d -= m[j * k + p] * m[j * k + p];
        }
        if d <= tol {
            return f64::NEG_INFINITY;
        }
        let root = d.sqrt();
        m[j * k + j] = root;
        logdet += d.ln();
        for i in j + 1..k {
            let mut v = m[i * k + j];
            for p in 0..j {
                v -= m[i * k + p] * m[j * k + p];
            }
            m[i * k + j] = v / root;
        }
    }
    logdet
}

/// Determinant of an integer matrix by fraction-free Bareiss elimination.
pub fn bareiss_det(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::from(1);
    }
    let mut sign = 1i32;
    let mut prev = BigInt::from(1);
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&r| !m[r][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

/// Parses a decimal literal (`-1.25`, `3`, `2.5e-3`) into an exact rational.
pub fn parse_decimal_rational(token: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match token.find(['e', 'E']) {
        Some(pos) => (&token[..pos], token[pos + 1..].parse::<i32>().ok()?),
        None => (token, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all_digits.parse().ok()?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Some(value)
}

pub(crate) fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_rank() {
        let mut m = vec![1.0, 2.0, 2.0, 4.0];
        assert_eq!(rank_f64(&mut m, 2, 2, 4.0), 1);
        let mut id = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(rank_f64(&mut id, 2, 3, 1.0), 2);
    }

    #[test]
    fn rational_rank_and_parse() {
        let q = |s: &str| parse_decimal_rational(s).unwrap();
        assert_eq!(q("0.25"), BigRational::new(1.into(), 4.into()));
        assert_eq!(q("-1.5e1"), BigRational::from_integer((-15).into()));
        assert!(parse_decimal_rational("abc").is_none());
        // Columns (1/3, 1) and (1, 3) are dependent exactly.
        let mut m = vec![q("1"), q("3"), BigRational::new(1.into(), 3.into()), q("1")];
        assert_eq!(rank_rational(&mut m, 2, 2), 1);
    }

    #[test]
    fn cholesky_matches_known_determinant() {
        let mut m = vec![2.0, 1.0, 1.0, 2.0];
        assert!((cholesky_logdet(&mut m, 2, 1e-12) - 3f64.ln()).abs() < 1e-14);
        let mut singular = vec![1.0, 1.0, 1.0, 1.0];
        assert_eq!(cholesky_logdet(&mut singular, 2, 1e-12), f64::NEG_INFINITY);
    }

    #[test]
    fn bareiss_small() {
        let m = vec![
            vec![BigInt::from(3), BigInt::from(-1), BigInt::from(-1)],
            vec![BigInt::from(-1), BigInt::from(3), BigInt::from(-1)],
            vec![BigInt::from(-1), BigInt::from(-1), BigInt::from(3)],
        ];
        // Reduced Laplacian of K4.
        assert_eq!(bareiss_det(m), BigInt::from(16));
    }
}
