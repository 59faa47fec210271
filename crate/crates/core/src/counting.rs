//! Partition-function estimation by a telescoping product over the cooling
//! schedule, and exact spanning-tree and forest counts for cross-checks.

use num_bigint::BigInt;
use rand::Rng;

use crate::alias::SamplingDistribution;
use crate::density::{ForestDensity, Graph, LogDensityOracle};
use crate::error::{invalid_param, Error, Result};
use crate::linalg::bareiss_det;
use crate::marginals::{
    build_isotropy_oracle, check_unit, collect_samples, ChainPool, CoolingSchedule, PipelineConfig, TAG_RATIO,
};
use crate::subset::{binomial, for_each_subset, SubsetState};

/// One factor `Z_{i+1} / Z_i` of the telescoping product.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelRatio {
    pub mean: f64,
    pub samples: usize,
}

/// `ln Z_hat = ln Z_0 + sum_i ln(mean_i)`.
#[derive(Clone, Debug)]
pub struct CountEstimate {
    pub log_z_hat: f64,
    pub log_z0: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub levels: Vec<LevelRatio>,
    pub schedule: CoolingSchedule,
    /// Queries spent finding the anchor.
    pub admissible_queries: u64,
    /// Queries spent building per-level sampling distributions.
    pub pipeline_queries: u64,
    /// Queries spent on the ratio samples and `Z_0`.
    pub ratio_queries: u64,
}

impl CountEstimate {
    /// `Z_hat` when it is representable as a finite `f64`.
    pub fn z_hat(&self) -> Option<f64> {
        let z = self.log_z_hat.exp();
        z.is_finite().then_some(z)
    }

    pub fn total_queries(&self) -> u64 {
        self.admissible_queries + self.pipeline_queries + self.ratio_queries
    }

    /// Recomputes `ln Z_0 + sum ln(mean_i)` from the recorded means.
    pub fn telescoped(&self) -> f64 {
        self.log_z0 + self.levels.iter().map(|l| l.mean.ln()).sum::<f64>()
    }
}

/// `m_i = ceil(2 (2T w_i / eps)^2 ln(8T / delta))`.
pub fn ratio_sample_count(steps: usize, width: f64, epsilon: f64, delta: f64) -> u128 {
    let t = steps as f64;
    let m = 2.0 * (2.0 * t * width / epsilon).powi(2) * (8.0 * t / delta).ln();
    if m >= u128::MAX as f64 {
        u128::MAX
    } else {
        (m.ceil() as u128).max(1)
    }
}

/// `(lambda_{i+1} / lambda_i)^{|S ∩ U|}` for one sample.
pub fn ratio_value(schedule: &CoolingSchedule, level: usize, sample: &SubsetState) -> f64 {
    let overlap = sample.intersection_size(schedule.anchor.elements());
    (overlap as f64 * schedule.log_step(level)).exp()
}

/// Mean of [`ratio_value`] over samples of level `level`. Checks each value
/// against the range `[(lambda_{i+1} / lambda_i)^k, 1]`.
pub fn ratio_from_samples(schedule: &CoolingSchedule, level: usize, samples: &[SubsetState]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid_param("no samples for the ratio estimate"));
    }
    let floor = (schedule.k as f64 * schedule.log_step(level)).exp();
    let mut sum = 0.0;
    for s in samples {
        let v = ratio_value(schedule, level, s);
        if !(v >= floor * (1.0 - 1e-12) && v <= 1.0) {
            return Err(Error::Invariant(format!("ratio sample {v} outside [{floor}, 1]")));
        }
        sum += v;
    }
    Ok(sum / samples.len() as f64)
}

/// Estimates `Z_{i+1} / Z_i` from `m` isotropic samples of level `i`, each from
/// a fresh chain started at the anchor.
pub fn ratio_estimate<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    schedule: &CoolingSchedule,
    level: usize,
    p: &SamplingDistribution,
    m: usize,
    config: &PipelineConfig,
    rng: &mut R,
) -> Result<f64> {
    if level >= schedule.steps() {
        return Err(invalid_param(format!("level {level} has no successor")));
    }
    let density = schedule.level(oracle, level);
    let cfg = config.sampler_config(schedule.k, 0.5, 1);
    let mut pool = ChainPool::new(&schedule.anchor, 1);
    let seed: u64 = rng.random();
    let samples = collect_samples(&density, p, cfg, false, &mut pool, m, seed, TAG_RATIO, level, config.threads)?;
    ratio_from_samples(schedule, level, &samples)
}

/// `(1 ± eps)` estimate of `Z = sum_S mu(S)` with probability `1 - delta`
/// (under the theoretical preset). Half of `delta` goes to building the
/// per-level sampling distributions, half to the ratio estimates.
pub fn count<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    epsilon: f64,
    delta: f64,
    rng: &mut R,
    config: &PipelineConfig,
) -> Result<CountEstimate> {
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    let k = oracle.degree();
    let iso = build_isotropy_oracle(oracle, delta / 2.0, rng, epsilon, config)?;
    let schedule = iso.schedule.clone();
    let steps = schedule.steps();
    if config.is_theoretical() && schedule.max_width() > 1.0 / (32.0 * k as f64) {
        return Err(Error::Invariant(format!(
            "estimator width {} exceeds 1/(32k)",
            schedule.max_width()
        )));
    }
    let seed: u64 = rng.random();
    let q0 = oracle.queries();
    let log_mu_u = oracle.query(schedule.anchor.elements());
    let log_z0 = k as f64 * schedule.log_lambda0() + log_mu_u;

    // Check the whole budget before drawing anything.
    let counts: Vec<u128> = (0..steps)
        .map(|i| match config.ratio_samples {
            Some(m) => m as u128,
            None => {
                let w = 1.0 - (k as f64 * schedule.log_step(i)).exp();
                ratio_sample_count(steps, w, epsilon, delta)
            }
        })
        .collect();
    if let Some(&worst) = counts.iter().max() {
        if worst > config.sample_budget {
            return Err(Error::SampleBudget {
                required: worst,
                budget: config.sample_budget,
            });
        }
    }

    let mut pool = ChainPool::new(&schedule.anchor, config.chains.unwrap_or(1));
    let mut levels = Vec::with_capacity(steps);
    for (i, &m) in counts.iter().enumerate() {
        let m = m as usize;
        let density = schedule.level(oracle, i);
        let cfg = config.sampler_config(k, delta / (4.0 * steps as f64), m);
        let samples = collect_samples(
            &density,
            &iso.estimates[i].p,
            cfg,
            config.chains.is_some(),
            &mut pool,
            m,
            seed,
            TAG_RATIO,
            i,
            config.threads,
        )?;
        levels.push(LevelRatio {
            mean: ratio_from_samples(&schedule, i, &samples)?,
            samples: m,
        });
    }
    let mut est = CountEstimate {
        log_z_hat: 0.0,
        log_z0,
        epsilon,
        delta,
        levels,
        schedule,
        admissible_queries: iso.admissible_queries,
        pipeline_queries: iso.pipeline_queries,
        ratio_queries: oracle.queries() - q0,
    };
    est.log_z_hat = est.telescoped();
    Ok(est)
}

/// Number of spanning trees by the matrix-tree theorem (exact).
pub fn spanning_tree_count(graph: &Graph) -> BigInt {
    let v = graph.vertex_count();
    if v <= 1 {
        return BigInt::from(1);
    }
    let mut lap = vec![vec![BigInt::from(0); v]; v];
    for &(a, b) in graph.edges() {
        if a == b {
            continue;
        }
        lap[a][a] += 1;
        lap[b][b] += 1;
        lap[a][b] -= 1;
        lap[b][a] -= 1;
    }
    let reduced: Vec<Vec<BigInt>> = lap.into_iter().skip(1).map(|row| row.into_iter().skip(1).collect()).collect();
    bareiss_det(reduced)
}

/// Ceiling on `C(|E|, k)` for [`forest_count`].
pub const MAX_FOREST_ENUMERATION: u128 = 50_000_000;

/// Number of acyclic k-edge subsets, by enumeration.
pub fn forest_count(graph: &Graph, k: usize) -> Result<u64> {
    let m = graph.edge_count();
    if binomial(m, k) > MAX_FOREST_ENUMERATION {
        return Err(Error::CapExceeded {
            required: binomial(m, k),
            cap: MAX_FOREST_ENUMERATION,
        });
    }
    let mut total = 0u64;
    for_each_subset(m, k, |s| {
        if graph.is_acyclic(s) {
            total += 1;
        }
    });
    Ok(total)
}

/// Exact partition function of a forest density: the matrix-tree count when
/// `k` is the spanning-tree size of a connected graph, enumeration otherwise.
pub fn exact_count_crosscheck(density: &ForestDensity) -> Result<BigInt> {
    let g = density.graph();
    let k = density.degree();
    if k + 1 == g.vertex_count() {
        let trees = spanning_tree_count(g);
        if trees > BigInt::from(0) {
            return Ok(trees);
        }
    }
    forest_count(g, k).map(BigInt::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{ExplicitDensity, UniformDensity};
    use crate::exact::ExactTable;
    use crate::marginals::build_schedule;
    use crate::rng::stream_rng;

    #[test]
    fn matrix_tree_counts() {
        assert_eq!(spanning_tree_count(&Graph::complete(4)), BigInt::from(16));
        assert_eq!(spanning_tree_count(&Graph::complete(5)), BigInt::from(125));
        assert_eq!(spanning_tree_count(&Graph::cycle(6)), BigInt::from(6));
        assert_eq!(spanning_tree_count(&Graph::petersen()), BigInt::from(2000));
        let k4 = ForestDensity::new(Graph::complete(4), 3).unwrap();
        assert_eq!(exact_count_crosscheck(&k4).unwrap(), BigInt::from(16));
        assert_eq!(forest_count(&Graph::complete(4), 3).unwrap(), 16);
    }

    #[test]
    fn petersen_three_forests() {
        // Only 5-cycles exist as short cycles, so every edge triple is a forest.
        let g = Graph::petersen();
        let d = ForestDensity::new(g.clone(), 3).unwrap();
        let want = ExactTable::enumerate(&d).unwrap().partition().round() as u64;
        assert_eq!(forest_count(&g, 3).unwrap(), want);
        assert_eq!(want, 455);
        assert_eq!(exact_count_crosscheck(&d).unwrap(), BigInt::from(455));
    }

    #[test]
    fn ratio_width_and_count_formula() {
        let m = ratio_sample_count(10, 0.01, 0.1, 0.1);
        assert_eq!(m, (2.0f64 * 4.0 * 800f64.ln()).ceil() as u128);
    }

    #[test]
    fn ratio_is_one_without_tilt_change() {
        let u = UniformDensity::new(5, 2).unwrap();
        let mut s = build_schedule(&u, SubsetState::from_sorted(vec![0, 1]), 0.1, 1.0).unwrap();
        let last = s.log_lambdas.len() - 1;
        s.log_lambdas[last - 1] = 0.0;
        s.log_lambdas[last] = 0.0;
        let samples = vec![SubsetState::from_sorted(vec![0, 1]), SubsetState::from_sorted(vec![2, 3])];
        assert_eq!(ratio_from_samples(&s, last - 1, &samples).unwrap(), 1.0);
    }

    #[test]
    fn point_mass_counts_exactly() {
        let d = ExplicitDensity::new(5, 2, vec![(vec![1, 3], 2.5)]).unwrap();
        let mut rng = stream_rng(1, 0);
        let est = count(&d, 0.1, 0.1, &mut rng, &PipelineConfig::practical(2)).unwrap();
        assert!((est.log_z_hat - 2.5f64.ln()).abs() < 1e-9);
        for (i, lvl) in est.levels.iter().enumerate() {
            assert!((lvl.mean - (2.0 * est.schedule.log_step(i)).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn unbiased_with_exact_samples() {
        let base = UniformDensity::new(5, 2).unwrap();
        let s = build_schedule(&base, SubsetState::from_sorted(vec![0, 1]), 0.1, 1.0).unwrap();
        let i = s.steps() * 3 / 4;
        let hi = ExactTable::enumerate(&s.level(&base, i)).unwrap();
        let lo = ExactTable::enumerate(&s.level(&base, i + 1)).unwrap();
        let exact = (lo.log_partition() - hi.log_partition()).exp();
        let mut rng = stream_rng(2, 0);
        let m = 200_000;
        let samples: Vec<SubsetState> = (0..m).map(|_| hi.sample(&mut rng)).collect();
        let vals: Vec<f64> = samples.iter().map(|x| ratio_value(&s, i, x)).collect();
        let mean = vals.iter().sum::<f64>() / m as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        assert!((mean - exact).abs() <= 3.0 * (var / m as f64).sqrt() + 1e-15);
        assert!((ratio_from_samples(&s, i, &samples).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn ratio_estimate_runs_mid_level() {
        let base = UniformDensity::new(5, 2).unwrap();
        let s = build_schedule(&base, SubsetState::from_sorted(vec![0, 1]), 0.1, 1.0).unwrap();
        let i = s.steps() / 2;
        let hi = ExactTable::enumerate(&s.level(&base, i)).unwrap();
        let lo = ExactTable::enumerate(&s.level(&base, i + 1)).unwrap();
        let exact = (lo.log_partition() - hi.log_partition()).exp();
        let q: Vec<f64> = hi.marginals().to_vec();
        let p = SamplingDistribution::build(&q, Some(0.01)).unwrap();
        let mut rng = stream_rng(3, 0);
        let cfg = PipelineConfig::practical(2);
        let est = ratio_estimate(&base, &s, i, &p, 4000, &cfg, &mut rng).unwrap();
        let floor = (2.0 * s.log_step(i)).exp();
        // Values lie in [floor, 1], so the standard deviation is at most (1 - floor) / 2.
        let sigma = (1.0 - floor) / 2.0 / (4000f64).sqrt();
        assert!((est - exact).abs() <= 4.0 * sigma, "{est} vs {exact}");
    }

    #[test]
    fn theoretical_budget_refuses() {
        let u = ForestDensity::new(Graph::complete(5), 4).unwrap();
        let mut rng = stream_rng(4, 0);
        let err = count(&u, 0.1, 0.1, &mut rng, &PipelineConfig::theoretical()).unwrap_err();
        assert!(matches!(err, Error::SampleBudget { .. }), "{err:?}");
    }
}
