//! Construction of a sampling distribution `p` whose scaled entries `k p(i)`
//! dominate the marginals of `mu`, by annealing along a cooling schedule of
//! tilted densities.

use rand::Rng;

use crate::alias::SamplingDistribution;
use crate::density::{LogDensityOracle, TiltedDensity};
use crate::downup;
use crate::error::{invalid_param, Error, Result};
use crate::isotropic::{IsotropicChain, IsotropicConfig};
use crate::rng::stream_rng;
use crate::subset::{log_binomial, SubsetState};

/// Schedule constant `c` in `r = 1 + 1 / (c k^2)` under the theoretical preset.
pub const THEORETICAL_SCHEDULE_CONSTANT: f64 = 64.0;

/// Accuracy of the per-level marginal estimates, `1 / (80 k)`.
pub fn estimation_epsilon(k: usize) -> f64 {
    1.0 / (80.0 * k.max(1) as f64)
}

/// `(1 - 1/(80k)) (1 + 1/(64k^2))^{-k} >= (1 + 1/(20k))^{-1}`: the slack that
/// keeps each level's `p` valid for the next level.
pub fn constant_budget_holds(k: usize) -> bool {
    let kf = k as f64;
    let lhs = (1.0 - estimation_epsilon(k)) * (1.0 + 1.0 / (64.0 * kf * kf)).powf(-kf);
    lhs >= 1.0 / (1.0 + 1.0 / (20.0 * kf))
}

/// Tunables of the annealing pipeline and of the counting estimator built on it.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// `c` in the schedule ratio `r = 1 + 1 / (c k^2)`.
    pub schedule_constant: f64,
    /// Samples per level for marginal estimation; `None` uses the
    /// concentration bound.
    pub marginal_samples: Option<usize>,
    /// Samples per level for the counting ratios; `None` uses the
    /// concentration bound.
    pub ratio_samples: Option<usize>,
    /// Overrides of the isotropic sampler's `t`, `s`, `l`. Unset fields follow
    /// the defaults at the per-sample TV budget.
    pub t: Option<usize>,
    pub s: Option<usize>,
    pub l: Option<usize>,
    /// Number of persistent chains that emit consecutive samples. `None`
    /// starts a fresh chain for every sample.
    pub chains: Option<usize>,
    /// Refuse to run when a level needs more samples than this.
    pub sample_budget: u128,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self::theoretical()
    }
}

impl PipelineConfig {
    /// Every constant at its proven value. Exceeds any practical budget
    /// except on the tiniest instances.
    pub fn theoretical() -> Self {
        PipelineConfig {
            schedule_constant: THEORETICAL_SCHEDULE_CONSTANT,
            marginal_samples: None,
            ratio_samples: None,
            t: None,
            s: None,
            l: None,
            chains: None,
            sample_budget: 100_000_000,
            threads: 1,
        }
    }

    /// Coarser schedule, fixed per-level sample counts, a smaller sampler,
    /// and warm-started persistent chains. Suited to desk-scale instances.
    pub fn practical(k: usize) -> Self {
        let k = k.max(1);
        PipelineConfig {
            schedule_constant: 1.0,
            marginal_samples: Some(200),
            ratio_samples: Some(600),
            t: Some(2 * k * k),
            s: Some(4 * k),
            l: Some(1),
            chains: Some(4),
            sample_budget: 100_000_000,
            threads: 1,
        }
    }

    pub fn is_theoretical(&self) -> bool {
        self.schedule_constant >= THEORETICAL_SCHEDULE_CONSTANT
            && self.marginal_samples.is_none()
            && self.ratio_samples.is_none()
    }

    /// Sampler configuration when each of `samples` draws may be off by
    /// `budget / samples` in total variation.
    pub(crate) fn sampler_config(&self, k: usize, budget: f64, samples: usize) -> IsotropicConfig {
        let eps = (budget / samples.max(1) as f64).clamp(f64::MIN_POSITIVE, 0.5);
        IsotropicConfig::with_overrides(k, eps, self.t, self.s, self.l)
    }

    fn validate(&self) -> Result<()> {
        if !(self.schedule_constant > 0.0 && self.schedule_constant.is_finite()) {
            return Err(invalid_param("schedule constant must be positive"));
        }
        if self.chains == Some(0) || self.threads == 0 {
            return Err(invalid_param("chains and threads must be positive"));
        }
        if self.marginal_samples == Some(0) || self.ratio_samples == Some(0) {
            return Err(invalid_param("sample counts must be positive"));
        }
        Ok(())
    }
}

/// Anchor `U` and decreasing tilts `ln lambda_0 > .. > ln lambda_T = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoolingSchedule {
    pub anchor: SubsetState,
    pub log_lambdas: Vec<f64>,
    pub log_r: f64,
    pub n: usize,
    pub k: usize,
}

impl CoolingSchedule {
    /// Number of steps `T`; there are `T + 1` levels.
    pub fn steps(&self) -> usize {
        self.log_lambdas.len() - 1
    }

    pub fn log_lambda0(&self) -> f64 {
        self.log_lambdas[0]
    }

    /// `ln(lambda_{i+1} / lambda_i)`, which is negative.
    pub fn log_step(&self, i: usize) -> f64 {
        self.log_lambdas[i + 1] - self.log_lambdas[i]
    }

    /// The tilted density of level `i`.
    pub fn level<'a, O: LogDensityOracle + ?Sized>(&self, oracle: &'a O, i: usize) -> TiltedDensity<&'a O> {
        TiltedDensity::new(oracle, self.anchor.clone(), self.log_lambdas[i])
    }

    /// `2 C(n, k) / lambda_0`, the TV bound between `mu_0` and the point mass on `U`.
    pub fn point_mass_tv_bound(&self) -> f64 {
        (std::f64::consts::LN_2 + log_binomial(self.n, self.k) - self.log_lambda0()).exp()
    }

    /// Largest estimator width `w_i = 1 - (lambda_{i+1} / lambda_i)^k`.
    pub fn max_width(&self) -> f64 {
        (0..self.steps())
            .map(|i| 1.0 - (self.k as f64 * self.log_step(i)).exp())
            .fold(0.0, f64::max)
    }

    /// Monotone, ends at zero, and every step within `ln r`.
    pub fn validate(&self) -> Result<()> {
        if self.log_lambdas.last() != Some(&0.0) {
            return Err(Error::Invariant("schedule must end at lambda = 1".into()));
        }
        for w in self.log_lambdas.windows(2) {
            if w[0] <= w[1] || w[0].is_nan() || w[1].is_nan() || w[0] - w[1] > self.log_r + 1e-12 * w[0].abs().max(1.0) {
                return Err(Error::Invariant(format!(
                    "schedule step from {} to {} is not in (0, ln r]",
                    w[0], w[1]
                )));
            }
        }
        Ok(())
    }
}

/// The most likely of `ceil(3 ln(1/delta))` down-up samples, each run to TV 1/8.
pub fn find_admissible<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    delta: f64,
    rng: &mut R,
) -> Result<SubsetState> {
    check_unit("delta", delta)?;
    let start = oracle.support_point()?;
    let draws = ((3.0 * (1.0 / delta).ln()).ceil() as usize).max(1);
    let mut best: Option<(f64, SubsetState)> = None;
    for _ in 0..draws {
        let s = downup::sample(oracle, &start, 0.125, rng, None)?;
        let lw = oracle.query(s.elements());
        if best.as_ref().is_none_or(|(b, _)| lw > *b) {
            best = Some((lw, s));
        }
    }
    Ok(best.expect("at least one draw").1)
}

/// Doubles `lambda_0` from `2 C(n,k) n` until `2 C(n,k) / lambda_0 <=
/// min(1/n, eps / (8 T))` with `T = ceil(ln lambda_0 / ln r)`, then steps down
/// by `ln r` to zero.
pub fn build_schedule<O: LogDensityOracle + ?Sized>(
    oracle: &O,
    anchor: SubsetState,
    epsilon_target: f64,
    schedule_constant: f64,
) -> Result<CoolingSchedule> {
    check_unit("epsilon", epsilon_target)?;
    let (n, k) = (oracle.ground_size(), oracle.degree());
    anchor.check(n, k)?;
    let kf = k.max(1) as f64;
    let log_r = (1.0 / (schedule_constant * kf * kf)).ln_1p();
    let log_two_c = std::f64::consts::LN_2 + log_binomial(n, k);
    let mut log_l0 = log_two_c + (n as f64).ln();
    loop {
        let steps = (log_l0 / log_r).ceil();
        let need = (-(n as f64).ln()).min((epsilon_target / (8.0 * steps)).ln());
        if log_two_c - log_l0 <= need {
            break;
        }
        log_l0 += std::f64::consts::LN_2;
    }
    let steps = (log_l0 / log_r).ceil() as usize;
    let mut log_lambdas: Vec<f64> = (0..steps).map(|i| log_l0 - i as f64 * log_r).collect();
    log_lambdas.push(0.0);
    let schedule = CoolingSchedule {
        anchor,
        log_lambdas,
        log_r,
        n,
        k,
    };
    schedule.validate()?;
    Ok(schedule)
}

/// `1/(k+1)` on `U` and `1/((k+1)(n-k))` elsewhere.
pub fn initial_p(n: usize, k: usize, anchor: &SubsetState) -> Result<SamplingDistribution> {
    if n <= k {
        return Err(invalid_param(format!("need n > k, got n = {n}, k = {k}")));
    }
    anchor.check(n, k)?;
    let inside = 1.0 / (k as f64 + 1.0);
    let outside = inside / (n - k) as f64;
    let w: Vec<f64> = (0..n).map(|i| if anchor.contains(i) { inside } else { outside }).collect();
    SamplingDistribution::build(&w, None)
}

/// An estimated sampling distribution for one level.
#[derive(Clone, Debug)]
pub struct MarginalEstimate {
    pub p: SamplingDistribution,
    /// Empirical marginals the estimate was built from; empty for the
    /// closed-form level-0 distribution.
    pub qhat: Vec<f64>,
    pub level: usize,
    pub eps_est: f64,
    pub delta_used: f64,
    pub samples: usize,
}

/// `ceil(192 n / k * eps^-3 * ln(2n / delta))`.
pub fn marginal_sample_count(n: usize, k: usize, epsilon: f64, delta: f64) -> u128 {
    let s = 192.0 * n as f64 / k.max(1) as f64 * epsilon.powi(-3) * (2.0 * n as f64 / delta).ln();
    if s >= u128::MAX as f64 {
        u128::MAX
    } else {
        s.ceil() as u128
    }
}

/// Builds `p` from samples: `(1 - 3eps/4) qhat_i / k` on
/// `T = {i : qhat_i >= eps k / (3n)}`, the remaining mass spread uniformly
/// over the rest. When `T` is everything, the scaled estimates are
/// renormalized instead.
pub fn p_from_samples(n: usize, k: usize, epsilon: f64, samples: &[SubsetState]) -> Result<(SamplingDistribution, Vec<f64>)> {
    if samples.is_empty() {
        return Err(invalid_param("no samples to estimate marginals from"));
    }
    let mut counts = vec![0u64; n];
    for s in samples {
        for &i in s.elements() {
            counts[i] += 1;
        }
    }
    let qhat: Vec<f64> = counts.iter().map(|&c| c as f64 / samples.len() as f64).collect();
    let threshold = epsilon * k as f64 / (3.0 * n as f64);
    let scale = (1.0 - 0.75 * epsilon) / k as f64;
    let kept: Vec<bool> = qhat.iter().map(|&q| q >= threshold).collect();
    let rest = kept.iter().filter(|&&b| !b).count();
    let w: Vec<f64> = if rest == 0 {
        qhat.iter().map(|&q| q * scale).collect()
    } else {
        let mass: f64 = qhat.iter().zip(&kept).filter(|(_, &b)| b).map(|(&q, _)| q * scale).sum();
        let share = (1.0 - mass) / rest as f64;
        qhat.iter().zip(&kept).map(|(&q, &b)| if b { q * scale } else { share }).collect()
    };
    Ok((SamplingDistribution::build(&w, None)?, qhat))
}

/// Draws `marginal_sample_count(n, k, eps, delta)` samples from `draw` (or
/// `count_override` of them) and builds `p` with [`p_from_samples`].
pub fn estimate_marginals(
    n: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    count_override: Option<usize>,
    budget: u128,
    mut draw: impl FnMut(usize) -> Result<Vec<SubsetState>>,
) -> Result<MarginalEstimate> {
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    let required = match count_override {
        Some(c) => c as u128,
        None => marginal_sample_count(n, k, epsilon, delta),
    };
    if required > budget {
        return Err(Error::SampleBudget { required, budget });
    }
    let samples = draw(required as usize)?;
    let (p, qhat) = p_from_samples(n, k, epsilon, &samples)?;
    Ok(MarginalEstimate {
        p,
        qhat,
        level: 0,
        eps_est: epsilon,
        delta_used: delta,
        samples: samples.len(),
    })
}

pub(crate) fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid_param(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// RNG stream tags for the phases that draw samples.
pub(crate) const TAG_PIPELINE: u64 = 1;
pub(crate) const TAG_RATIO: u64 = 2;
const TAG_DRAW: u64 = 3;

fn stream_id(tag: u64, level: usize, chain: usize) -> u64 {
    (tag << 56) | ((level as u64 & 0xFF_FFFF) << 32) | (chain as u64 & 0xFFFF_FFFF)
}

/// States of the sampling chains carried from one level to the next.
#[derive(Clone, Debug)]
pub(crate) struct ChainPool {
    pub states: Vec<Vec<usize>>,
}

impl ChainPool {
    pub fn new(start: &SubsetState, chains: usize) -> Self {
        ChainPool {
            states: vec![start.elements().to_vec(); chains.max(1)],
        }
    }
}

/// Draws `count` samples of `density` with the isotropic chain. Persistent
/// chains emit samples round-robin and keep their states in `pool`; without
/// persistence each sample runs a fresh chain from a pool state. Each chain
/// (or sample) has its own RNG stream, so results do not depend on `threads`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn collect_samples<O: LogDensityOracle + ?Sized>(
    density: &O,
    p: &SamplingDistribution,
    config: IsotropicConfig,
    persistent: bool,
    pool: &mut ChainPool,
    count: usize,
    seed: u64,
    tag: u64,
    level: usize,
    threads: usize,
) -> Result<Vec<SubsetState>> {
    // Work items: (chain id, start state, number of samples).
    let items: Vec<(usize, Vec<usize>, usize)> = if persistent {
        let chains = pool.states.len();
        (0..chains)
            .map(|j| (j, pool.states[j].clone(), count / chains + usize::from(j < count % chains)))
            .collect()
    } else {
        (0..count)
            .map(|j| (j, pool.states[j % pool.states.len()].clone(), 1))
            .collect()
    };
    let run = |chunk: &[(usize, Vec<usize>, usize)]| -> Result<Vec<(Vec<SubsetState>, Vec<usize>)>> {
        chunk
            .iter()
            .map(|(j, start, m)| {
                let mut rng = stream_rng(seed, stream_id(tag, level, *j));
                let mut chain = IsotropicChain::resume(density, p, config, start.clone());
                let out = (0..*m).map(|_| chain.next_sample(&mut rng)).collect::<Result<Vec<_>>>()?;
                Ok((out, chain.into_state()))
            })
            .collect()
    };
    let results: Vec<(Vec<SubsetState>, Vec<usize>)> = if threads <= 1 || items.len() <= 1 {
        run(&items)?
    } else {
        let per = items.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = items.chunks(per).map(|c| scope.spawn(move || run(c))).collect();
            let mut all = Vec::with_capacity(items.len());
            for h in handles {
                all.extend(h.join().map_err(|_| Error::Invariant("sampling thread panicked".into()))??);
            }
            Ok::<_, Error>(all)
        })?
    };
    let mut samples = Vec::with_capacity(count);
    if persistent {
        // Interleave so that sample order matches a round-robin schedule.
        let longest = results.iter().map(|r| r.0.len()).max().unwrap_or(0);
        for round in 0..longest {
            for r in &results {
                if let Some(s) = r.0.get(round) {
                    samples.push(s.clone());
                }
            }
        }
        pool.states = results.into_iter().map(|r| r.1).collect();
    } else {
        for (mut out, _) in results {
            samples.append(&mut out);
        }
        if let Some(last) = samples.last() {
            pool.states = vec![last.elements().to_vec()];
        }
    }
    Ok(samples)
}

/// `count` independent isotropic samples, each from a fresh chain started at
/// `start` on its own RNG stream. The start is validated once.
pub fn draw_independent<O: LogDensityOracle + ?Sized>(
    oracle: &O,
    p: &SamplingDistribution,
    config: IsotropicConfig,
    start: &SubsetState,
    count: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<SubsetState>> {
    if threads == 0 {
        return Err(invalid_param("threads must be positive"));
    }
    IsotropicChain::new(oracle, p, config, start)?;
    let mut pool = ChainPool::new(start, 1);
    collect_samples(oracle, p, config, false, &mut pool, count, seed, TAG_DRAW, 0, threads)
}

/// Everything the pipeline produced: the schedule, `p` for every level, and
/// query counts.
#[derive(Clone, Debug)]
pub struct IsotropyOracle {
    pub schedule: CoolingSchedule,
    /// `estimates[i]` is the sampling distribution for level `i`; the last
    /// one serves `mu` itself.
    pub estimates: Vec<MarginalEstimate>,
    pub admissible_queries: u64,
    pub pipeline_queries: u64,
    /// Samples drawn across all levels.
    pub samples_drawn: u64,
}

impl IsotropyOracle {
    pub fn final_p(&self) -> &SamplingDistribution {
        &self.estimates.last().expect("at least one level").p
    }
}

/// Finds an admissible anchor, builds the cooling schedule, and walks it,
/// estimating each level's marginals with samples drawn under the previous
/// level's `p`.
pub fn build_isotropy_oracle<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    delta: f64,
    rng: &mut R,
    epsilon_target: f64,
    config: &PipelineConfig,
) -> Result<IsotropyOracle> {
    check_unit("delta", delta)?;
    config.validate()?;
    let (n, k) = (oracle.ground_size(), oracle.degree());
    if n <= k || k == 0 {
        return Err(invalid_param(format!("need 0 < k < n, got n = {n}, k = {k}")));
    }
    let seed: u64 = rng.random();
    let q0 = oracle.queries();
    let anchor = find_admissible(oracle, delta / 2.0, rng)?;
    let q1 = oracle.queries();
    let schedule = build_schedule(oracle, anchor.clone(), epsilon_target, config.schedule_constant)?;
    let steps = schedule.steps();
    let delta_level = delta / (2.0 * steps as f64);
    let eps_est = estimation_epsilon(k);

    let mut estimates = vec![MarginalEstimate {
        p: initial_p(n, k, &anchor)?,
        qhat: Vec::new(),
        level: 0,
        eps_est,
        delta_used: 0.0,
        samples: 0,
    }];
    let mut pool = ChainPool::new(&anchor, config.chains.unwrap_or(1));
    let mut drawn = 0u64;
    for i in 0..steps {
        let density = schedule.level(oracle, i);
        let p = estimates[i].p.clone();
        let mut est = estimate_marginals(n, k, eps_est, delta_level, config.marginal_samples, config.sample_budget, |m| {
            let cfg = config.sampler_config(k, delta_level / 2.0, m);
            collect_samples(&density, &p, cfg, config.chains.is_some(), &mut pool, m, seed, TAG_PIPELINE, i, config.threads)
        })?;
        drawn += est.samples as u64;
        est.level = i + 1;
        estimates.push(est);
    }
    Ok(IsotropyOracle {
        schedule,
        estimates,
        admissible_queries: q1 - q0,
        pipeline_queries: oracle.queries() - q1,
        samples_drawn: drawn,
    })
}
