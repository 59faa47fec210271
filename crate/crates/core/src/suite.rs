//! Built-in verification suites over small enumerable families: the
//! negative-dependence inequalities, stationarity of the outer chain, and
//! exactness of the down-up kernel.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::alias::SamplingDistribution;
use crate::density::{DppDensity, ExplicitDensity, ForestDensity, Graph, LogDensityOracle, TiltedDensity, UniformDensity};
use crate::downup::transition_matrix;
use crate::error::Result;
use crate::exact::verify::{
    verify_alpha_bound, verify_kl_contraction, verify_point_negcorr, verify_subset_bound_all, verify_weighted_bound,
    InequalityReport,
};
use crate::exact::{DistTable, ExactTable};
use crate::isotropic::exact_outer_kernel_tv;
use crate::rng::stream_rng;

/// All graphs on `vertices` vertices up to isomorphism, as edge lists over the
/// pairs `(u, v)` with `u < v`.
pub fn nonisomorphic_graphs(vertices: usize) -> Vec<Graph> {
    let pairs: Vec<(usize, usize)> = (0..vertices)
        .flat_map(|v| (0..v).map(move |u| (u, v)))
        .collect();
    let m = pairs.len();
    let index = |u: usize, v: usize| {
        let (a, b) = if u < v { (u, v) } else { (v, u) };
        b * (b - 1) / 2 + a
    };
    let mut perms = Vec::new();
    permutations(vertices, &mut Vec::new(), &mut perms);
    let images: Vec<Vec<usize>> = perms
        .iter()
        .map(|perm| pairs.iter().map(|&(u, v)| index(perm[u], perm[v])).collect())
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << m) {
        let canonical = images
            .iter()
            .map(|img| (0..m).filter(|&e| mask >> e & 1 == 1).fold(0u32, |acc, e| acc | 1 << img[e]))
            .min()
            .unwrap_or(mask);
        if canonical == mask && seen.insert(mask) {
            let edges = (0..m).filter(|&e| mask >> e & 1 == 1).map(|e| pairs[e]).collect();
            out.push(Graph::new(vertices, edges).expect("edges are in range"));
        }
    }
    out
}

fn permutations(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for v in 0..n {
        if !prefix.contains(&v) {
            prefix.push(v);
            permutations(n, prefix, out);
            prefix.pop();
        }
    }
}

/// Rank of the graphic matroid: vertices minus connected components.
pub fn graphic_rank(graph: &Graph) -> usize {
    let mut uf = crate::density::UnionFind::new(graph.vertex_count());
    graph.edges().iter().filter(|&&(u, v)| uf.union(u, v)).count()
}

/// A reproducible recipe for one suite density.
#[derive(Clone, Debug)]
pub enum Family {
    Forest { graph: Graph, k: usize },
    Dpp { n: usize, kernel: Vec<f64>, k: usize },
    Tilted { base: Box<Family>, anchor: Vec<usize>, log_lambda: f64 },
}

impl Family {
    pub fn build(&self) -> Result<Box<dyn LogDensityOracle>> {
        Ok(match self {
            Family::Forest { graph, k } => Box::new(ForestDensity::new(graph.clone(), *k)?),
            Family::Dpp { n, kernel, k } => Box::new(DppDensity::new(*n, kernel.clone(), *k)?),
            Family::Tilted {
                base,
                anchor,
                log_lambda,
            } => Box::new(TiltedDensity::new(
                base.build()?,
                crate::subset::SubsetState::from_sorted(anchor.clone()),
                *log_lambda,
            )),
        })
    }

    pub fn label(&self) -> String {
        match self {
            Family::Forest { graph, k } => format!("forest(v={}, m={}, k={k})", graph.vertex_count(), graph.edge_count()),
            Family::Dpp { n, k, .. } => format!("dpp(n={n}, k={k})"),
            Family::Tilted { base, log_lambda, .. } => format!("tilted({}, ln λ={log_lambda:.3})", base.label()),
        }
    }
}

/// `L = B B^T` with `B` an `n x r` standard Gaussian matrix, `r` uniform in `k..=n`.
pub fn random_psd_kernel<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let r = rng.random_range(k..=n);
    let b: Vec<f64> = (0..n * r).map(|_| rng.sample(StandardNormal)).collect();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = (0..r).map(|c| b[i * r + c] * b[j * r + c]).sum();
            l[i * n + j] = v;
            l[j * n + i] = v;
        }
    }
    l
}

/// Sizes of the negative-dependence suite.
#[derive(Clone, Copy, Debug)]
pub struct NegDepConfig {
    pub max_vertices: usize,
    pub max_k: usize,
    pub dpps: usize,
    pub max_dpp_n: usize,
    pub tilted: usize,
    pub sequences_per_instance: usize,
    pub nus_per_instance: usize,
    pub seed: u64,
}

impl Default for NegDepConfig {
    fn default() -> Self {
        NegDepConfig {
            max_vertices: 6,
            max_k: 4,
            dpps: 100,
            max_dpp_n: 8,
            tilted: 50,
            sequences_per_instance: 20,
            nus_per_instance: 20,
            seed: 0,
        }
    }
}

/// Graphic matroids, random DPPs, and random tilts of either.
pub fn negative_dependence_families(config: &NegDepConfig) -> Result<Vec<Family>> {
    let mut out = Vec::new();
    // Graphs on fewer vertices appear here with isolated vertices added, which
    // leaves the matroid unchanged.
    for graph in nonisomorphic_graphs(config.max_vertices) {
        let rank = graphic_rank(&graph);
        for k in 1..=rank.min(config.max_k) {
            out.push(Family::Forest { graph: graph.clone(), k });
        }
    }
    let mut rng = stream_rng(config.seed, 0x5EED_0001);
    for _ in 0..config.dpps {
        let n = rng.random_range(2..=config.max_dpp_n);
        let k = rng.random_range(1..=config.max_k.min(n));
        out.push(Family::Dpp {
            n,
            kernel: random_psd_kernel(n, k, &mut rng),
            k,
        });
    }
    let bases = out.len();
    for _ in 0..config.tilted {
        let base = out[rng.random_range(0..bases)].clone();
        let table = ExactTable::enumerate(&base.build()?)?;
        let anchor = table.sample(&mut rng).into_vec();
        let log_lambda = rng.random_range(-3.0..3.0);
        out.push(Family::Tilted {
            base: Box::new(base),
            anchor,
            log_lambda,
        });
    }
    Ok(out)
}

/// Per-inequality outcome aggregated over instances.
#[derive(Clone, Debug, Default)]
pub struct NegDepReport {
    pub instances: usize,
    pub point: InequalityReport,
    pub alpha: InequalityReport,
    /// Instances where `alpha(k, 2) <= 2` or `alpha(k, l) <= e^l` failed.
    pub alpha_constant_failures: usize,
    pub subset: InequalityReport,
    pub weighted: InequalityReport,
    pub kl: InequalityReport,
    /// Label of the first instance with any violation.
    pub first_failure: Option<String>,
}

impl NegDepReport {
    pub fn sections(&self) -> [(&'static str, &InequalityReport); 5] {
        [
            ("point", &self.point),
            ("alpha", &self.alpha),
            ("subset", &self.subset),
            ("weighted", &self.weighted),
            ("kl", &self.kl),
        ]
    }

    pub fn max_violation(&self) -> f64 {
        self.sections().iter().map(|(_, r)| r.max_violation()).fold(0.0, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.alpha_constant_failures == 0 && self.sections().iter().all(|(_, r)| r.holds())
    }
}

/// Runs every inequality on one table, with random `(tau, p)` and `nu` drawn
/// from `rng`.
pub fn check_table<R: Rng + ?Sized>(
    table: &ExactTable,
    sequences: usize,
    nus: usize,
    rng: &mut R,
    report: &mut NegDepReport,
) -> Result<()> {
    let (n, k) = (table.n(), table.k());
    report.instances += 1;
    report.point.merge(&verify_point_negcorr(table));
    for l in 1..=k {
        let a = verify_alpha_bound(table, l)?;
        if !(a.alpha_le_two && a.alpha_le_exp) {
            report.alpha_constant_failures += 1;
        }
        report.alpha.merge(&a.report);
    }
    report.subset.merge(&verify_subset_bound_all(table)?);
    for _ in 0..sequences {
        let len = rng.random_range(k..=k + 6);
        let tau: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        report.weighted.merge(&verify_weighted_bound(table, &tau, &p)?);
    }
    if k >= 2 {
        let support: Vec<usize> = (0..table.probs().len()).filter(|&r| table.probs()[r] > 0.0).collect();
        for _ in 0..nus {
            let mut w = vec![0.0; table.probs().len()];
            let sparse = rng.random_bool(0.5);
            for &r in &support {
                if !sparse || rng.random_bool(0.3) {
                    w[r] = rng.random_range(0.0..1.0f64).powi(3);
                }
            }
            if w.iter().all(|&x| x == 0.0) {
                w[support[rng.random_range(0..support.len())]] = 1.0;
            }
            let nu = DistTable::from_weights(n, k, w)?;
            let l = rng.random_range(1..k);
            report.kl.merge(&verify_kl_contraction(table, &nu, l)?.report);
        }
    }
    Ok(())
}

/// The full negative-dependence suite.
pub fn run_negative_dependence(config: &NegDepConfig) -> Result<NegDepReport> {
    let families = negative_dependence_families(config)?;
    let mut report = NegDepReport::default();
    for (i, family) in families.iter().enumerate() {
        let table = ExactTable::enumerate(&family.build()?)?;
        let mut rng = stream_rng(config.seed, i as u64);
        let before = report.clone();
        check_table(&table, config.sequences_per_instance, config.nus_per_instance, &mut rng, &mut report)?;
        let failed = report.alpha_constant_failures > before.alpha_constant_failures
            || report
                .sections()
                .iter()
                .zip(before.sections())
                .any(|((_, a), (_, b))| a.violations > b.violations);
        if failed && report.first_failure.is_none() {
            report.first_failure = Some(family.label());
        }
    }
    Ok(report)
}

/// A density on 4 elements with mass on `{0,1}` and `{2,3}` only; it is
/// positively correlated, so the point and subset bounds must fail.
pub fn witness() -> ExplicitDensity {
    ExplicitDensity::new(4, 2, vec![(vec![0, 1], 1.0), (vec![2, 3], 1.0)]).expect("valid witness")
}

/// True when the verifiers flag the witness.
pub fn witness_detected() -> Result<bool> {
    let table = ExactTable::enumerate(&witness())?;
    Ok(!verify_point_negcorr(&table).holds() && !verify_subset_bound_all(&table)?.holds())
}

/// Strictly positive, far from the marginals: element 0 gets 0.7, the rest
/// share 0.3 with geometric decay.
pub fn adversarial_p(n: usize) -> Result<SamplingDistribution> {
    let mut w: Vec<f64> = (0..n).map(|i| 0.5f64.powi(i as i32)).collect();
    if n > 1 {
        let tail: f64 = w[1..].iter().sum();
        for x in &mut w[1..] {
            *x *= 0.3 / tail;
        }
        w[0] = 0.7;
    }
    SamplingDistribution::build(&w, None)
}

#[derive(Clone, Debug)]
pub struct StationarityCase {
    pub name: String,
    pub t: usize,
    pub tv: f64,
}

pub fn stationarity_fixtures() -> Result<Vec<(String, Box<dyn LogDensityOracle>)>> {
    Ok(vec![
        ("U(4,2)".into(), Box::new(UniformDensity::new(4, 2)?)),
        ("U(6,2)".into(), Box::new(UniformDensity::new(6, 2)?)),
        ("K4-trees".into(), Box::new(ForestDensity::spanning_trees(Graph::complete(4))?)),
    ])
}

/// One outer step from `S ~ mu` with exact inner sampling, for each fixture,
/// `t` in `ts`, and the adversarial `p`.
pub fn run_stationarity(ts: &[usize], trials: u64, seed: u64) -> Result<Vec<StationarityCase>> {
    let mut out = Vec::new();
    for (f, (name, oracle)) in stationarity_fixtures()?.into_iter().enumerate() {
        let p = adversarial_p(oracle.ground_size())?;
        for &t in ts {
            let mut rng = stream_rng(seed, (f * 1000 + t) as u64);
            let tv = exact_outer_kernel_tv(&oracle, &p, t, trials, &mut rng)?;
            out.push(StationarityCase { name: name.clone(), t, tv });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct KernelCheck {
    pub name: String,
    pub states: usize,
    /// `max_i |sum_j P(i, j) - 1|`.
    pub row_error: f64,
    /// `max_{i,j} |mu(i) P(i, j) - mu(j) P(j, i)|`.
    pub balance_error: f64,
    /// `max_j |(mu P)(j) - mu(j)|`.
    pub stationarity_error: f64,
}

impl KernelCheck {
    pub fn max_error(&self) -> f64 {
        self.row_error.max(self.balance_error).max(self.stationarity_error)
    }
}

pub fn kernel_fixtures() -> Result<Vec<(String, Box<dyn LogDensityOracle>)>> {
    Ok(vec![
        ("U(4,2)".into(), Box::new(UniformDensity::new(4, 2)?)),
        ("U(6,2)".into(), Box::new(UniformDensity::new(6, 2)?)),
        ("U(8,3)".into(), Box::new(UniformDensity::new(8, 3)?)),
        ("K4-trees".into(), Box::new(ForestDensity::spanning_trees(Graph::complete(4))?)),
        ("K5-trees".into(), Box::new(ForestDensity::spanning_trees(Graph::complete(5))?)),
        ("petersen-3-forests".into(), Box::new(ForestDensity::new(Graph::petersen(), 3)?)),
        ("diag-dpp".into(), Box::new(DppDensity::diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0], 2)?)),
        (
            "dense-dpp".into(),
            Box::new(DppDensity::new(6, random_psd_kernel(6, 3, &mut stream_rng(7, 0)), 3)?),
        ),
    ])
}

/// Row sums, detailed balance, and `mu P = mu` for the exact down-up kernel.
pub fn check_kernel<O: LogDensityOracle + ?Sized>(name: &str, oracle: &O) -> Result<KernelCheck> {
    let table = ExactTable::enumerate(oracle)?;
    let matrix = transition_matrix(oracle)?;
    let mu = table.probs();
    let mut row_error = 0.0f64;
    let mut balance_error = 0.0f64;
    for i in 0..matrix.states() {
        let row = matrix.row(i);
        row_error = row_error.max((row.iter().map(|&(_, v)| v).sum::<f64>() - 1.0).abs());
        for &(j, v) in row {
            balance_error = balance_error.max((mu[i] * v - mu[j] * matrix.get(j, i)).abs());
        }
    }
    let moved = matrix.apply_left(mu);
    let stationarity_error = moved.iter().zip(mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(KernelCheck {
        name: name.to_string(),
        states: matrix.states(),
        row_error,
        balance_error,
        stationarity_error,
    })
}

pub fn run_kernel_checks() -> Result<Vec<KernelCheck>> {
    kernel_fixtures()?
        .iter()
        .map(|(name, oracle)| check_kernel(name, oracle))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_counts_match_known_sequence() {
        let counts: Vec<usize> = (1..=5).map(|v| nonisomorphic_graphs(v).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 11, 34]);
    }

    #[test]
    fn rank_of_small_graphs() {
        assert_eq!(graphic_rank(&Graph::complete(4)), 3);
        assert_eq!(graphic_rank(&Graph::new(5, vec![(0, 1), (2, 3)]).unwrap()), 2);
    }

    #[test]
    fn psd_kernel_is_symmetric_with_full_support() {
        let mut rng = stream_rng(1, 0);
        let l = random_psd_kernel(5, 3, &mut rng);
        let d = DppDensity::new(5, l, 3).unwrap();
        let t = ExactTable::enumerate(&d).unwrap();
        assert!(t.probs().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn small_suite_holds() {
        let config = NegDepConfig {
            max_vertices: 4,
            dpps: 10,
            tilted: 5,
            sequences_per_instance: 5,
            nus_per_instance: 5,
            ..NegDepConfig::default()
        };
        let report = run_negative_dependence(&config).unwrap();
        assert!(report.holds(), "{report:?}");
        assert!(report.max_violation() <= 1e-9);
        assert!(report.instances > 20);
        assert!(witness_detected().unwrap());
    }

    #[test]
    fn suite_flags_the_witness_table() {
        let table = ExactTable::enumerate(&witness()).unwrap();
        let mut report = NegDepReport::default();
        check_table(&table, 2, 2, &mut stream_rng(0, 0), &mut report).unwrap();
        assert!(!report.holds());
    }

    #[test]
    fn adversarial_p_shape() {
        let p = adversarial_p(6).unwrap();
        assert!((p.p(0) - 0.7).abs() < 1e-12);
        assert!(p.is_strictly_positive());
        assert!((p.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernels_are_exact() {
        for check in run_kernel_checks().unwrap() {
            assert!(check.max_error() <= 1e-10, "{check:?}");
        }
    }

    #[test]
    fn stationarity_small_run() {
        let cases = run_stationarity(&[1], 20_000, 3).unwrap();
        assert_eq!(cases.len(), 3);
        for c in cases {
            assert!(c.tv < 0.05, "{c:?}");
        }
    }
}
