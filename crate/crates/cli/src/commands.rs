use std::fmt::Write as _;
use std::time::Instant;

use isosample::downup::{self, DownUpChain};
use isosample::exact::ExactTable;
use isosample::marginals::draw_independent;
use isosample::rng::stream_rng;
use isosample::suite::{self, NegDepConfig, NegDepReport};
use isosample::{
    build_isotropy_oracle, IsotropicConfig, LogDensityOracle, PipelineConfig, SamplingDistribution, SubsetState,
    UniformDensity,
};
use rand::Rng;

use crate::problem::{load, Problem};
use crate::{BenchArgs, Common, CountArgs, Failure, MarginalArgs, Mode, POracle, Preset, SampleArgs, VerifyArgs};

type Outcome = Result<bool, Failure>;

fn emit(output: Option<&std::path::Path>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn check_common(c: &Common) -> Result<u64, Failure> {
    for (name, v) in [("epsilon", c.epsilon), ("delta", c.delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Failure::Usage(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    if c.threads == 0 {
        return Err(Failure::Usage("threads must be positive".into()));
    }
    Ok(c.seed.unwrap_or_else(|| rand::rng().random()))
}

fn pipeline_config(c: &Common, k: usize) -> PipelineConfig {
    let mut cfg = match c.preset {
        Preset::Practical => PipelineConfig::practical(k),
        Preset::Theoretical => PipelineConfig::theoretical(),
    };
    cfg.t = c.t.or(cfg.t);
    cfg.s = c.s.or(cfg.s);
    cfg.l = c.l.or(cfg.l);
    cfg.threads = c.threads;
    cfg
}

fn preset_name(p: Preset) -> &'static str {
    match p {
        Preset::Practical => "practical",
        Preset::Theoretical => "theoretical",
    }
}

fn header(out: &mut String, problem: &Problem, c: &Common, seed: u64) {
    let _ = writeln!(out, "instance {}", problem.label);
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "epsilon {}", c.epsilon);
    let _ = writeln!(out, "delta {}", c.delta);
    let _ = writeln!(out, "threads {}", c.threads);
}

pub fn sample(a: SampleArgs) -> Outcome {
    let c = &a.common;
    let seed = check_common(c)?;
    let problem = load(&c.input, c.format, c.k)?;
    let oracle = &problem.oracle;
    let k = oracle.degree();
    let mut rng = stream_rng(seed, 0);
    let mut report = String::new();
    let samples: Vec<SubsetState>;
    let preprocess;
    let per_sample_bound;
    match a.mode {
        Mode::Downup => {
            let start = oracle.support_point()?;
            let steps = a.steps.unwrap_or_else(|| downup::default_steps(k, c.epsilon));
            preprocess = oracle.queries();
            samples = (0..a.samples)
                .map(|j| {
                    let mut rng = stream_rng(seed, 1 + j as u64);
                    let mut chain = DownUpChain::new(&**oracle, start.clone())?;
                    chain.run(steps, &mut rng)?;
                    Ok(chain.into_state())
                })
                .collect::<Result<_, isosample::Error>>()?;
            per_sample_bound = 1 + steps as u64 * (oracle.ground_size() - k + 1) as u64;
            let _ = writeln!(report, "mode downup");
            let _ = writeln!(report, "steps {steps}");
        }
        Mode::Isotropic => {
            let cfg = IsotropicConfig::with_overrides(k, c.epsilon, c.t, c.s, c.l);
            let (p, start) = match a.p_oracle {
                POracle::Uniform => (SamplingDistribution::uniform(oracle.ground_size())?, oracle.support_point()?),
                POracle::Pipeline => {
                    let pc = pipeline_config(c, k);
                    let iso = build_isotropy_oracle(&**oracle, c.delta / 2.0, &mut rng, c.epsilon, &pc)?;
                    let p = iso.final_p().clone();
                    (p, iso.schedule.anchor)
                }
            };
            // The batch sampler validates the start with one query.
            preprocess = oracle.queries() + 1;
            samples = draw_independent(&**oracle, &p, cfg, &start, a.samples, rng.random(), c.threads)?;
            per_sample_bound = cfg.queries_per_sample();
            let _ = writeln!(report, "mode isotropic");
            let _ = writeln!(report, "t {}", cfg.t);
            let _ = writeln!(report, "s {}", cfg.s);
            let _ = writeln!(report, "l {}", cfg.l);
        }
    }
    let total = oracle.queries();
    let sampling = total - preprocess;
    let mut out = String::new();
    for s in &samples {
        let line: Vec<String> = s.elements().iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    emit(c.output.as_deref(), &out)?;

    let _ = writeln!(report, "instance {}", problem.label);
    let _ = writeln!(report, "seed {seed}");
    let _ = writeln!(report, "queries_preprocess {preprocess}");
    let _ = writeln!(report, "queries_sampling {sampling}");
    if !samples.is_empty() {
        let _ = writeln!(report, "queries_per_sample {:.3}", sampling as f64 / samples.len() as f64);
    }
    let _ = writeln!(report, "queries_per_sample_bound {per_sample_bound}");
    let _ = writeln!(report, "queries_total {total}");
    if a.exact_crosscheck {
        let table = ExactTable::enumerate(oracle)?;
        let _ = writeln!(report, "exact_tv {:.6}", table.empirical_tv(samples.iter()));
    }
    eprint!("{report}");
    Ok(true)
}

pub fn count(a: CountArgs) -> Outcome {
    let c = &a.common;
    let seed = check_common(c)?;
    let problem = load(&c.input, c.format, c.k)?;
    let oracle = &problem.oracle;
    let mut cfg = pipeline_config(c, oracle.degree());
    cfg.ratio_samples = a.ratio_samples.or(cfg.ratio_samples);
    cfg.marginal_samples = a.marginal_samples.or(cfg.marginal_samples);
    let mut rng = stream_rng(seed, 0);
    let est = isosample::count(&**oracle, c.epsilon, c.delta, &mut rng, &cfg)?;
    let mut out = String::new();
    header(&mut out, &problem, c, seed);
    let _ = writeln!(out, "preset {}", preset_name(c.preset));
    let _ = writeln!(out, "estimate {}", est.log_z_hat.exp());
    let _ = writeln!(out, "log_estimate {:.12}", est.log_z_hat);
    let _ = writeln!(out, "levels {}", est.schedule.steps());
    let _ = writeln!(out, "ratio_samples_total {}", est.levels.iter().map(|l| l.samples as u64).sum::<u64>());
    let _ = writeln!(out, "queries_preprocess {}", est.admissible_queries + est.pipeline_queries);
    let _ = writeln!(out, "queries_admissible {}", est.admissible_queries);
    let _ = writeln!(out, "queries_pipeline {}", est.pipeline_queries);
    let _ = writeln!(out, "queries_ratio {}", est.ratio_queries);
    let _ = writeln!(out, "queries_total {}", est.total_queries());
    if a.exact_crosscheck {
        let (z, text, method) = problem.exact_partition()?;
        let _ = writeln!(out, "exact {text}");
        let _ = writeln!(out, "exact_method {method}");
        let _ = writeln!(out, "relative_error {:.6}", (est.log_z_hat.exp() - z).abs() / z);
    }
    emit(c.output.as_deref(), &out)?;
    Ok(true)
}

pub fn marginals(a: MarginalArgs) -> Outcome {
    let c = &a.common;
    let seed = check_common(c)?;
    let problem = load(&c.input, c.format, c.k)?;
    let oracle = &problem.oracle;
    let mut cfg = pipeline_config(c, oracle.degree());
    cfg.marginal_samples = a.marginal_samples.or(cfg.marginal_samples);
    let mut rng = stream_rng(seed, 0);
    let iso = build_isotropy_oracle(&**oracle, c.delta, &mut rng, c.epsilon, &cfg)?;
    let exact = if a.exact_crosscheck {
        Some(ExactTable::enumerate(oracle)?.marginals().to_vec())
    } else {
        None
    };
    let last = iso.estimates.last().expect("at least one level");
    let k = oracle.degree() as f64;
    let mut out = String::new();
    header(&mut out, &problem, c, seed);
    let _ = writeln!(out, "preset {}", preset_name(c.preset));
    let _ = writeln!(out, "levels {}", iso.schedule.steps());
    let _ = writeln!(out, "anchor {:?}", iso.schedule.anchor.elements());
    let _ = writeln!(out, "samples_drawn {}", iso.samples_drawn);
    let _ = writeln!(out, "queries_admissible {}", iso.admissible_queries);
    let _ = writeln!(out, "queries_pipeline {}", iso.pipeline_queries);
    let _ = writeln!(out, "queries_total {}", oracle.queries());
    let _ = write!(out, "element p qhat");
    if exact.is_some() {
        let _ = write!(out, " q k_p_over_q");
    }
    let _ = writeln!(out);
    for i in 0..oracle.ground_size() {
        let _ = write!(out, "{i} {:.6} {:.6}", last.p.p(i), last.qhat.get(i).copied().unwrap_or(f64::NAN));
        if let Some(q) = &exact {
            let _ = write!(out, " {:.6} {:.6}", q[i], k * last.p.p(i) / q[i]);
        }
        let _ = writeln!(out);
    }
    emit(c.output.as_deref(), &out)?;
    Ok(true)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn negdep_lines(out: &mut String, report: &NegDepReport) {
    let _ = writeln!(out, "negdep instances {}", report.instances);
    for (name, r) in report.sections() {
        let _ = writeln!(
            out,
            "negdep {name} checks {} violations {} max_violation {:e} {}",
            r.checks,
            r.violations,
            r.max_violation(),
            verdict(r.holds())
        );
    }
    let _ = writeln!(
        out,
        "negdep alpha_constants failures {} {}",
        report.alpha_constant_failures,
        verdict(report.alpha_constant_failures == 0)
    );
    if let Some(label) = &report.first_failure {
        let _ = writeln!(out, "negdep first_failure {label}");
    }
}

pub fn verify(a: VerifyArgs) -> Outcome {
    let mut out = String::new();
    let mut ok = true;
    if let Some(path) = &a.input {
        let problem = load(path, a.format, a.k)?;
        let table = ExactTable::enumerate(&problem.oracle)?;
        let mut report = NegDepReport::default();
        suite::check_table(&table, 20, 20, &mut stream_rng(a.seed, 0), &mut report)?;
        let _ = writeln!(out, "instance {}", problem.label);
        negdep_lines(&mut out, &report);
        ok &= report.holds();
        let kc = suite::check_kernel(&problem.label, &problem.oracle)?;
        let good = kc.max_error() <= 1e-10;
        ok &= good;
        let _ = writeln!(out, "downup_kernel states {} max_error {:e} {}", kc.states, kc.max_error(), verdict(good));
    } else {
        let report = suite::run_negative_dependence(&NegDepConfig {
            seed: a.seed,
            ..NegDepConfig::default()
        })?;
        negdep_lines(&mut out, &report);
        ok &= report.holds();
        let witness = suite::witness_detected()?;
        ok &= witness;
        let _ = writeln!(out, "witness detected {}", verdict(witness));
        for kc in suite::run_kernel_checks()? {
            let good = kc.max_error() <= 1e-10;
            ok &= good;
            let _ = writeln!(
                out,
                "downup_kernel {} states {} max_error {:e} {}",
                kc.name,
                kc.states,
                kc.max_error(),
                verdict(good)
            );
        }
        for case in suite::run_stationarity(&[1, 3], a.trials, a.seed)? {
            let good = case.tv <= a.tv_threshold;
            ok &= good;
            let _ = writeln!(
                out,
                "stationarity {} t {} trials {} tv {:.6} {}",
                case.name,
                case.t,
                a.trials,
                case.tv,
                verdict(good)
            );
        }
    }
    let _ = writeln!(out, "verify {}", verdict(ok));
    emit(a.output.as_deref(), &out)?;
    Ok(ok)
}

pub fn bench(a: BenchArgs) -> Outcome {
    if !(a.epsilon > 0.0 && a.epsilon <= 0.5) {
        return Err(Failure::Usage(format!("epsilon must lie in (0, 0.5], got {}", a.epsilon)));
    }
    if a.samples == 0 {
        return Err(Failure::Usage("samples must be positive".into()));
    }
    let cfg = IsotropicConfig::with_overrides(a.k, a.epsilon, a.t, a.s, a.l);
    let steps = downup::default_steps(a.k, a.epsilon);
    let mut out = String::new();
    let _ = writeln!(out, "k {} epsilon {} t {} s {} l {} seed {}", a.k, a.epsilon, cfg.t, cfg.s, cfg.l, a.seed);
    let _ = writeln!(out, "n isotropic_queries_per_sample bound downup_queries_per_sample");
    let mut per_sample = Vec::new();
    for &n in &a.ns {
        let started = Instant::now();
        let u = UniformDensity::new(n, a.k)?;
        let p = SamplingDistribution::uniform(n)?;
        let start = SubsetState::from_sorted((0..a.k).collect());
        draw_independent(&u, &p, cfg, &start, a.samples, a.seed, 1)?;
        // One validation query precedes the samples.
        let iso = (u.queries() - 1) as f64 / a.samples as f64;
        per_sample.push(iso);
        let downup_cost = steps as u64 * (n - a.k + 1) as u64;
        let _ = writeln!(out, "{n} {iso} {} {downup_cost}", cfg.queries_per_sample());
        eprintln!("n {n} wall_time_per_sample_s {:.4}", started.elapsed().as_secs_f64() / a.samples as f64);
    }
    let flat = per_sample.windows(2).all(|w| w[0] == w[1]);
    let _ = writeln!(out, "n_independent {}", verdict(flat));
    emit(a.output.as_deref(), &out)?;
    Ok(flat)
}
