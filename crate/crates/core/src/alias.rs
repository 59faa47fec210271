//! Constant-time sampling from a fixed probability vector (Vose alias method).

use rand::Rng;

use crate::error::{invalid_param, Error, Result};

/// A strictly positive probability vector over `[n]` with alias tables.
#[derive(Clone, Debug)]
pub struct SamplingDistribution {
    p: Vec<f64>,
    log_p: Vec<f64>,
    /// Probability of keeping cell `i` rather than jumping to `alias[i]`.
    keep: Vec<f64>,
    alias: Vec<u32>,
}

impl SamplingDistribution {
    /// Normalizes `weights`. With `floor = Some(f)`, mixes with the uniform
    /// distribution just enough that every entry is at least `f`.
    ///
    /// Without a floor, zero weights stay zero and those indices are never
    /// drawn; see [`Self::is_strictly_positive`].
    pub fn build(weights: &[f64], floor: Option<f64>) -> Result<Self> {
        let n = weights.len();
        if n == 0 {
            return Err(invalid_param("empty weight vector"));
        }
        if n > u32::MAX as usize {
            return Err(invalid_param("too many weights"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid_param("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::EmptySupport("all weights are zero".into()));
        }
        let mut p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        if let Some(f) = floor {
            let uniform = 1.0 / n as f64;
            if !(0.0..=uniform).contains(&f) {
                return Err(invalid_param(format!(
                    "floor {f} must lie in [0, 1/n] = [0, {uniform}]"
                )));
            }
            let min = p.iter().copied().fold(f64::INFINITY, f64::min);
            if min < f {
                // (1 - g) * min + g / n = f
                let g = (f - min) / (uniform - min);
                p.iter_mut().for_each(|v| *v = (1.0 - g) * *v + g * uniform);
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(Self::from_normalized(p))
    }

    /// Uniform distribution over `[n]`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::build(&vec![1.0; n], None)
    }

    fn from_normalized(p: Vec<f64>) -> Self {
        let n = p.len();
        let mut scaled: Vec<f64> = p.iter().map(|v| v * n as f64).collect();
        let mut keep = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            keep[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        for i in small.into_iter().chain(large) {
            keep[i] = 1.0;
            alias[i] = i as u32;
        }
        let log_p = p.iter().map(|v| v.ln()).collect();
        SamplingDistribution { p, log_p, keep, alias }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    pub fn p(&self, i: usize) -> f64 {
        self.p[i]
    }

    pub fn log_p(&self, i: usize) -> f64 {
        self.log_p[i]
    }

    pub fn min_prob(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.p.iter().all(|&v| v > 0.0)
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let cell = rng.random_range(0..self.p.len());
        if rng.random::<f64>() < self.keep[cell] {
            cell
        } else {
            self.alias[cell] as usize
        }
    }

    pub fn draw_sequence<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::with_capacity(t);
        self.draw_into(t, rng, &mut out);
        out
    }

    /// Appends `t` draws to `out`.
    pub fn draw_into<R: Rng + ?Sized>(&self, t: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.extend((0..t).map(|_| self.draw(rng)));
    }

    /// Probabilities implied by the alias tables, `(keep_i + sum_{j: alias_j = i} (1 - keep_j)) / n`.
    pub fn implied_probs(&self) -> Vec<f64> {
        let n = self.p.len() as f64;
        let mut out: Vec<f64> = self.keep.iter().map(|k| k / n).collect();
        for (j, &a) in self.alias.iter().enumerate() {
            out[a as usize] += (1.0 - self.keep[j]) / n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn uniform_and_single_weight() {
        let u = SamplingDistribution::uniform(5).unwrap();
        assert!(u.probs().iter().all(|&v| (v - 0.2).abs() < 1e-15));
        let d = SamplingDistribution::build(&[0.0, 0.0, 4.0], None).unwrap();
        let mut rng = stream_rng(0, 0);
        assert!(d.draw_sequence(1000, &mut rng).iter().all(|&i| i == 2));
        assert!(!d.is_strictly_positive());
        assert!(d.draw_sequence(0, &mut rng).is_empty());
    }

    #[test]
    fn errors() {
        assert!(SamplingDistribution::build(&[0.0, 0.0], None).is_err());
        assert!(SamplingDistribution::build(&[], None).is_err());
        assert!(SamplingDistribution::build(&[1.0, -1.0], None).is_err());
        assert!(SamplingDistribution::build(&[1.0, 1.0], Some(0.6)).is_err());
    }

    #[test]
    fn one_three_frequencies() {
        let d = SamplingDistribution::build(&[1.0, 3.0], None).unwrap();
        assert_eq!(d.probs(), &[0.25, 0.75]);
        let mut rng = stream_rng(11, 0);
        let draws = 1_000_000;
        let hits = (0..draws).filter(|_| d.draw(&mut rng) == 0).count();
        assert!((hits as f64 / draws as f64 - 0.25).abs() <= 0.003);
    }

    #[test]
    fn floor_is_enforced() {
        let d = SamplingDistribution::build(&[0.0, 1.0, 9.0], Some(0.05)).unwrap();
        assert!((d.min_prob() - 0.05).abs() < 1e-12);
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.is_strictly_positive());
        let unchanged = SamplingDistribution::build(&[1.0, 1.0], Some(0.1)).unwrap();
        assert_eq!(unchanged.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn alias_tables_reproduce_p() {
        let mut rng = stream_rng(2, 0);
        for n in [1usize, 2, 3, 7, 16, 33] {
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let d = SamplingDistribution::build(&w, None).unwrap();
            for (a, b) in d.implied_probs().iter().zip(d.probs()) {
                assert!((a - b).abs() < 1e-12, "n = {n}");
            }
        }
    }

    #[test]
    fn pairwise_independence_chi_square() {
        let d = SamplingDistribution::build(&[1.0, 2.0, 3.0, 4.0], None).unwrap();
        let mut rng = stream_rng(4, 0);
        let pairs = 200_000;
        let mut counts = [[0u64; 4]; 4];
        let seq = d.draw_sequence(2 * pairs, &mut rng);
        for c in seq.chunks(2) {
            counts[c[0]][c[1]] += 1;
        }
        let mut chi = 0.0;
        for (a, row) in counts.iter().enumerate() {
            for (b, &c) in row.iter().enumerate() {
                let e = pairs as f64 * d.p(a) * d.p(b);
                chi += (c as f64 - e).powi(2) / e;
            }
        }
        // 15 degrees of freedom; 99.9% quantile is about 37.7.
        assert!(chi < 37.7, "chi-square {chi}");
    }

    #[test]
    fn split_stream_concatenation() {
        let d = SamplingDistribution::build(&[1.0, 2.0, 5.0], None).unwrap();
        let mut a = stream_rng(8, 1);
        let whole = d.draw_sequence(30, &mut a);
        let mut b = stream_rng(8, 1);
        let mut parts = d.draw_sequence(12, &mut b);
        parts.extend(d.draw_sequence(18, &mut b));
        assert_eq!(whole, parts);
    }
}
