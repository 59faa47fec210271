//! The isotropic chain: each outer step mixes the current state into a
//! sequence of i.i.d. draws from `p`, runs a short down-up walk on the induced
//! density over sequence positions, and reads the state back off.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::alias::SamplingDistribution;
use crate::density::{LogDensityOracle, QueryCounter};
use crate::downup::{check_epsilon, DownUpChain};
use crate::error::{invalid_param, Error, Result};
use crate::logspace::sample_log_categorical;
use crate::subset::{binomial, for_each_subset, SubsetState};
use crate::exact::ExactTable;

/// Sequence length, inner steps, and outer steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsotropicConfig {
    pub t: usize,
    pub s: usize,
    pub l: usize,
    pub epsilon: f64,
}

impl IsotropicConfig {
    /// `t = 20 k^2`, `s = ceil(3 k^2 ln(1/eps))`, `l = ceil(ln(2/eps))`.
    pub fn defaults(k: usize, epsilon: f64) -> Self {
        let k2 = (k * k) as f64;
        IsotropicConfig {
            t: 20 * k * k,
            s: ((3.0 * k2 * (1.0 / epsilon).ln()).ceil() as usize).max(1),
            l: ((2.0 / epsilon).ln().ceil() as usize).max(1),
            epsilon,
        }
    }

    /// Defaults with any of `t`, `s`, `l` replaced.
    pub fn with_overrides(k: usize, epsilon: f64, t: Option<usize>, s: Option<usize>, l: Option<usize>) -> Self {
        let d = Self::defaults(k, epsilon);
        IsotropicConfig {
            t: t.unwrap_or(d.t),
            s: s.unwrap_or(d.s),
            l: l.unwrap_or(d.l),
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if self.t == 0 || self.s == 0 || self.l == 0 {
            return Err(invalid_param(format!(
                "t, s, l must be positive, got t = {}, s = {}, l = {}",
                self.t, self.s, self.l
            )));
        }
        Ok(())
    }

    /// Base-oracle queries per emitted sample, `l s (t + 1)`.
    pub fn queries_per_sample(&self) -> u64 {
        (self.l as u64) * (self.s as u64) * (self.t as u64 + 1)
    }
}

/// The state and the i.i.d. draws arranged into one sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrangedSequence {
    pub items: Vec<usize>,
    /// Sorted positions holding the incoming state.
    pub state_positions: Vec<usize>,
}

/// Places the state's elements, in uniform random order, at `k` uniform
/// positions among `t + k`; the remaining positions take `rho` in order.
pub fn arrange<R: Rng + ?Sized>(state: &[usize], rho: &[usize], rng: &mut R) -> ArrangedSequence {
    let mut out = ArrangedSequence {
        items: Vec::with_capacity(state.len() + rho.len()),
        state_positions: Vec::with_capacity(state.len()),
    };
    arrange_into(state, rho, rng, &mut out);
    out
}

fn arrange_into<R: Rng + ?Sized>(state: &[usize], rho: &[usize], rng: &mut R, out: &mut ArrangedSequence) {
    let (k, total) = (state.len(), state.len() + rho.len());
    out.state_positions.clear();
    out.state_positions.extend(index::sample(rng, total, k).iter());
    out.state_positions.sort_unstable();
    let mut shuffled = state.to_vec();
    shuffled.shuffle(rng);
    out.items.clear();
    let (mut next_state, mut next_rho) = (0, 0);
    for pos in 0..total {
        if next_state < k && out.state_positions[next_state] == pos {
            out.items.push(shuffled[next_state]);
            next_state += 1;
        } else {
            out.items.push(rho[next_rho]);
            next_rho += 1;
        }
    }
}

/// `ln mu_{sigma,p}(S) = ln mu(sigma_S) - sum_{i in S} ln p(sigma_i)` over
/// index sets `S` of the arranged sequence, `-inf` on repeated elements.
/// Unnormalized; each query makes exactly one base query.
#[derive(Debug)]
pub struct InducedDensity<'a, O: ?Sized> {
    base: &'a O,
    items: Vec<usize>,
    neg_log_p: Vec<f64>,
    k: usize,
    counter: QueryCounter,
}

impl<'a, O: LogDensityOracle + ?Sized> InducedDensity<'a, O> {
    pub fn new(base: &'a O, p: &SamplingDistribution, sigma: &ArrangedSequence) -> Self {
        let mut d = InducedDensity {
            base,
            items: Vec::new(),
            neg_log_p: Vec::new(),
            k: base.degree(),
            counter: QueryCounter::default(),
        };
        d.reset(p, &sigma.items);
        d
    }

    fn reset(&mut self, p: &SamplingDistribution, items: &[usize]) {
        self.items.clear();
        self.items.extend_from_slice(items);
        self.neg_log_p.clear();
        self.neg_log_p.extend(items.iter().map(|&e| -p.log_p(e)));
    }

    /// Ground elements at the given positions.
    pub fn image(&self, positions: &[usize]) -> SubsetState {
        let mut v: Vec<usize> = positions.iter().map(|&i| self.items[i]).collect();
        v.sort_unstable();
        SubsetState::from_sorted(v)
    }
}

impl<O: LogDensityOracle + ?Sized> LogDensityOracle for InducedDensity<'_, O> {
    fn ground_size(&self) -> usize {
        self.items.len()
    }

    fn degree(&self) -> usize {
        self.k
    }

    #[inline]
    fn eval(&self, positions: &[usize]) -> f64 {
        let mut small = [0usize; 8];
        let mut heap;
        let buf: &mut [usize] = if positions.len() <= small.len() {
            &mut small[..positions.len()]
        } else {
            heap = vec![0; positions.len()];
            &mut heap
        };
        let mut extra = 0.0;
        for (b, &i) in buf.iter_mut().zip(positions) {
            *b = self.items[i];
            extra += self.neg_log_p[i];
        }
        let v = self.base.query_image(buf);
        if v == f64::NEG_INFINITY {
            v
        } else {
            v + extra
        }
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        Err(Error::Invariant(
            "the induced density is always started from the state positions".into(),
        ))
    }
}

fn check_p<O: LogDensityOracle + ?Sized>(oracle: &O, p: &SamplingDistribution) -> Result<()> {
    if p.len() != oracle.ground_size() {
        return Err(invalid_param(format!(
            "sampling distribution has {} entries, ground set has {}",
            p.len(),
            oracle.ground_size()
        )));
    }
    if !p.is_strictly_positive() {
        return Err(invalid_param("sampling distribution must be strictly positive"));
    }
    Ok(())
}

/// A persistent isotropic chain. Creation checks the start state with one
/// query; after that every outer step makes exactly `s (t + 1)` base queries.
#[derive(Debug)]
pub struct IsotropicChain<'a, O: ?Sized> {
    oracle: &'a O,
    p: &'a SamplingDistribution,
    config: IsotropicConfig,
    state: Vec<usize>,
    rho: Vec<usize>,
    sigma: ArrangedSequence,
    outer_steps: u64,
}

impl<'a, O: LogDensityOracle + ?Sized> IsotropicChain<'a, O> {
    pub fn new(oracle: &'a O, p: &'a SamplingDistribution, config: IsotropicConfig, start: &SubsetState) -> Result<Self> {
        config.validate()?;
        check_p(oracle, p)?;
        if oracle.log_density(start)? == f64::NEG_INFINITY {
            return Err(Error::NotInSupport);
        }
        Ok(IsotropicChain {
            oracle,
            p,
            config,
            state: start.elements().to_vec(),
            rho: Vec::with_capacity(config.t),
            sigma: ArrangedSequence {
                items: Vec::with_capacity(config.t + start.len()),
                state_positions: Vec::with_capacity(start.len()),
            },
            outer_steps: 0,
        })
    }

    /// Resumes from a sorted state the caller knows to be in the support.
    pub(crate) fn resume(oracle: &'a O, p: &'a SamplingDistribution, config: IsotropicConfig, state: Vec<usize>) -> Self {
        let k = state.len();
        IsotropicChain {
            oracle,
            p,
            config,
            state,
            rho: Vec::with_capacity(config.t),
            sigma: ArrangedSequence {
                items: Vec::with_capacity(config.t + k),
                state_positions: Vec::with_capacity(k),
            },
            outer_steps: 0,
        }
    }

    pub fn into_state(self) -> Vec<usize> {
        self.state
    }

    pub fn config(&self) -> &IsotropicConfig {
        &self.config
    }

    pub fn state(&self) -> &[usize] {
        &self.state
    }

    pub fn outer_steps(&self) -> u64 {
        self.outer_steps
    }

    /// One outer step with `s` inner down-up steps.
    pub fn outer_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<&[usize]> {
        self.rho.clear();
        self.p.draw_into(self.config.t, rng, &mut self.rho);
        arrange_into(&self.state, &self.rho, rng, &mut self.sigma);
        let induced = InducedDensity::new(self.oracle, self.p, &self.sigma);
        let mut inner = DownUpChain::new_unchecked(&induced, self.sigma.state_positions.clone());
        inner.run(self.config.s, rng)?;
        let image = induced.image(inner.current());
        self.state.clear();
        self.state.extend_from_slice(image.elements());
        self.outer_steps += 1;
        Ok(&self.state)
    }

    /// Runs `l` outer steps and returns the state.
    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<SubsetState> {
        for _ in 0..self.config.l {
            self.outer_step(rng)?;
        }
        Ok(SubsetState::from_sorted(self.state.clone()))
    }
}

/// One outer step from `state` (one extra query to check the start).
pub fn outer_step<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    state: &SubsetState,
    oracle: &O,
    p: &SamplingDistribution,
    config: &IsotropicConfig,
    rng: &mut R,
) -> Result<SubsetState> {
    let mut chain = IsotropicChain::new(oracle, p, *config, state)?;
    chain.outer_step(rng)?;
    Ok(SubsetState::from_sorted(chain.state.clone()))
}

/// `l` outer steps from `start` under `config`, or under
/// [`IsotropicConfig::defaults`] when none is given.
pub fn sample<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    p: &SamplingDistribution,
    start: &SubsetState,
    epsilon: f64,
    rng: &mut R,
    config: Option<IsotropicConfig>,
) -> Result<SubsetState> {
    let config = config.unwrap_or_else(|| IsotropicConfig::defaults(oracle.degree(), epsilon));
    IsotropicChain::new(oracle, p, config, start)?.next_sample(rng)
}

/// Largest induced state space for [`exact_outer_kernel_tv`].
pub const MAX_INDUCED_STATES: u128 = 100_000;

/// Empirical TV to `mu` after one outer step from `S ~ mu`, with the inner
/// walk replaced by an exact draw from the induced density.
pub fn exact_outer_kernel_tv<O: LogDensityOracle + ?Sized, R: Rng + ?Sized>(
    oracle: &O,
    p: &SamplingDistribution,
    t: usize,
    trials: u64,
    rng: &mut R,
) -> Result<f64> {
    check_p(oracle, p)?;
    let table = ExactTable::enumerate(oracle)?;
    let k = oracle.degree();
    let induced_states = binomial(t + k, k);
    if induced_states > MAX_INDUCED_STATES {
        return Err(Error::CapExceeded {
            required: induced_states,
            cap: MAX_INDUCED_STATES,
        });
    }
    let mut position_sets: Vec<Vec<usize>> = Vec::with_capacity(induced_states as usize);
    for_each_subset(t + k, k, |s| position_sets.push(s.to_vec()));
    let mut counts = vec![0u64; table.probs().len()];
    let mut rho = Vec::with_capacity(t);
    let mut sigma = ArrangedSequence {
        items: Vec::new(),
        state_positions: Vec::new(),
    };
    let mut log_w = Vec::with_capacity(position_sets.len());
    let mut induced = InducedDensity::new(oracle, p, &sigma);
    for _ in 0..trials {
        let state = table.sample(rng);
        rho.clear();
        p.draw_into(t, rng, &mut rho);
        arrange_into(state.elements(), &rho, rng, &mut sigma);
        induced.reset(p, &sigma.items);
        log_w.clear();
        log_w.extend(position_sets.iter().map(|s| induced.eval(s)));
        let pick = sample_log_categorical(&log_w, rng)
            .ok_or_else(|| Error::Invariant("induced density vanished".into()))?;
        let out = induced.image(&position_sets[pick]);
        counts[table.dist().rank(out.elements())] += 1;
    }
    Ok(table.tv_from_counts(&counts, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{ExplicitDensity, ForestDensity, Graph, UniformDensity};
    use crate::rng::stream_rng;

    #[test]
    fn default_parameters() {
        let c = IsotropicConfig::defaults(2, 0.1);
        assert_eq!((c.t, c.s, c.l), (80, 28, 3));
        assert_eq!(c.queries_per_sample(), 3 * 28 * 81);
        let o = IsotropicConfig::with_overrides(2, 0.1, Some(5), None, Some(1));
        assert_eq!((o.t, o.s, o.l), (5, 28, 1));
        assert!(IsotropicConfig { t: 0, ..c }.validate().is_err());
    }

    #[test]
    fn arrange_preserves_multiset() {
        let mut rng = stream_rng(0, 0);
        for _ in 0..200 {
            let state = [2, 5, 7];
            let rho: Vec<usize> = (0..6).map(|_| rng.random_range(0..9)).collect();
            let a = arrange(&state, &rho, &mut rng);
            let mut got = a.items.clone();
            got.sort_unstable();
            let mut want: Vec<usize> = state.iter().chain(&rho).copied().collect();
            want.sort_unstable();
            assert_eq!(got, want);
            let mut at: Vec<usize> = a.state_positions.iter().map(|&i| a.items[i]).collect();
            at.sort_unstable();
            assert_eq!(at, state);
            let rest: Vec<usize> = (0..9).filter(|i| !a.state_positions.contains(i)).map(|i| a.items[i]).collect();
            assert_eq!(rest, rho);
        }
        let a = arrange(&[3, 1], &[], &mut rng);
        assert_eq!(a.state_positions, vec![0, 1]);
    }

    #[test]
    fn arrange_position_is_fair() {
        let mut rng = stream_rng(1, 0);
        let trials = 100_000;
        let first = (0..trials)
            .filter(|_| arrange(&[4], &[9], &mut rng).state_positions == [0])
            .count();
        assert!((first as f64 / trials as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn collisions_have_zero_density() {
        let u = UniformDensity::new(5, 2).unwrap();
        let p = SamplingDistribution::uniform(5).unwrap();
        let sigma = ArrangedSequence {
            items: vec![1, 3, 1, 4],
            state_positions: vec![0, 1],
        };
        let d = InducedDensity::new(&u, &p, &sigma);
        assert_eq!(d.query(&[0, 2]), f64::NEG_INFINITY);
        assert!((d.query(&[1, 3]) - 2.0 * 5f64.ln()).abs() < 1e-12);
        assert_eq!(u.queries(), 2);
        assert_eq!(d.image(&[2, 3]).elements(), &[1, 4]);
    }

    #[test]
    fn point_mass_is_fixed() {
        let d = ExplicitDensity::new(6, 2, vec![(vec![0, 5], 1.0)]).unwrap();
        let p = SamplingDistribution::build(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], None).unwrap();
        let start = SubsetState::from_sorted(vec![0, 5]);
        let mut rng = stream_rng(2, 0);
        let cfg = IsotropicConfig::with_overrides(2, 0.2, Some(10), Some(5), None);
        for _ in 0..50 {
            assert_eq!(sample(&d, &p, &start, 0.2, &mut rng, Some(cfg)).unwrap(), start);
        }
        assert_eq!(exact_outer_kernel_tv(&d, &p, 3, 1000, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn outer_step_query_budget() {
        let u = UniformDensity::new(1000, 2).unwrap();
        let p = SamplingDistribution::uniform(1000).unwrap();
        let cfg = IsotropicConfig::defaults(2, 0.1);
        let mut chain = IsotropicChain::new(&u, &p, cfg, &SubsetState::from_sorted(vec![0, 1])).unwrap();
        let mut rng = stream_rng(3, 0);
        let before = u.queries();
        chain.outer_step(&mut rng).unwrap();
        assert_eq!(u.queries() - before, (cfg.s * (cfg.t + 1)) as u64);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = ForestDensity::new(Graph::complete(3), 3).unwrap();
        let p = SamplingDistribution::uniform(3).unwrap();
        let cfg = IsotropicConfig::defaults(3, 0.1);
        assert!(matches!(
            IsotropicChain::new(&f, &p, cfg, &SubsetState::from_sorted(vec![0, 1, 2])),
            Err(Error::NotInSupport)
        ));
        let u = UniformDensity::new(3, 1).unwrap();
        let zero = SamplingDistribution::build(&[0.0, 1.0, 1.0], None).unwrap();
        assert!(IsotropicChain::new(&u, &zero, cfg, &SubsetState::from_sorted(vec![1])).is_err());
        let short = SamplingDistribution::uniform(2).unwrap();
        assert!(IsotropicChain::new(&u, &short, cfg, &SubsetState::from_sorted(vec![1])).is_err());
    }

    #[test]
    fn uniform_one_outer_step_is_uniform() {
        let u = UniformDensity::new(6, 2).unwrap();
        let table = ExactTable::enumerate(&u).unwrap();
        let p = SamplingDistribution::uniform(6).unwrap();
        let cfg = IsotropicConfig::with_overrides(2, 0.1, None, None, Some(1));
        let start = SubsetState::from_sorted(vec![0, 1]);
        let mut rng = stream_rng(4, 0);
        let draws: Vec<SubsetState> = (0..20_000)
            .map(|_| outer_step(&start, &u, &p, &cfg, &mut rng).unwrap())
            .collect();
        assert!(table.empirical_tv(&draws) <= 0.03);
    }

    #[test]
    fn exact_kernel_keeps_mu_stationary() {
        let u = UniformDensity::new(4, 2).unwrap();
        let p = SamplingDistribution::build(&[0.9, 0.1 / 3.0, 0.1 / 3.0, 0.1 / 3.0], None).unwrap();
        let mut rng = stream_rng(5, 0);
        assert!(exact_outer_kernel_tv(&u, &p, 1, 100_000, &mut rng).unwrap() <= 0.015);
    }
}
