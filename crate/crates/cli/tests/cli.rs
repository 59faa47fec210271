use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isosample"))
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .to_string()
}

#[test]
fn sample_prints_one_subset_per_line() {
    let k4 = fixture("k4.graph");
    let o = run(&["sample", "--input", &k4, "--mode", "isotropic", "-n", "5", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    for line in lines {
        let edges: Vec<usize> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(edges.len(), 3);
        assert!(edges.windows(2).all(|w| w[0] < w[1]) && edges[2] < 6);
    }
    let err = stderr(&o);
    assert_eq!(field(&err, "queries_per_sample"), format!("{}.000", field(&err, "queries_per_sample_bound")));
    assert!(err.contains("queries_preprocess"));
    assert!(err.contains("wall_time_s"));
}

#[test]
fn downup_sample_accounting() {
    let k4 = fixture("k4.graph");
    let o = run(&["sample", "--input", &k4, "--mode", "downup", "-n", "4", "--seed", "2", "--steps", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    // One validation query plus 10 steps of n - k + 1 = 4 queries.
    assert_eq!(field(&stderr(&o), "queries_sampling"), "164");
}

#[test]
fn outputs_are_byte_identical_for_a_fixed_seed() {
    let k4 = fixture("k4.graph");
    let u42 = fixture("u42.explicit");
    let dpp = fixture("dpp.matrix");
    let cases: Vec<Vec<&str>> = vec![
        vec!["sample", "--input", &k4, "-n", "20", "--seed", "9"],
        vec!["sample", "--input", &dpp, "-k", "2", "-n", "20", "--seed", "9", "--mode", "downup"],
        vec!["count", "--input", &u42, "--seed", "4", "--ratio-samples", "100"],
        vec!["marginals", "--input", &dpp, "-k", "2", "--seed", "4"],
        vec!["verify", "--input", &k4],
        vec!["bench", "--ns", "50,500", "--samples", "2"],
    ];
    for args in cases {
        let a = run(&args);
        let b = run(&args);
        assert!(a.status.success(), "{args:?}: {}", stderr(&a));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn thread_count_does_not_change_samples() {
    let k4 = fixture("k4.graph");
    let one = run(&["sample", "--input", &k4, "-n", "12", "--seed", "5", "--threads", "1"]);
    let three = run(&["sample", "--input", &k4, "-n", "12", "--seed", "5", "--threads", "3"]);
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn seed_is_echoed_when_drawn_from_entropy() {
    let u42 = fixture("u42.explicit");
    let o = run(&["sample", "--input", &u42, "-n", "3", "--p", "uniform"]);
    assert!(o.status.success());
    let seed: u64 = field(&stderr(&o), "seed").parse().unwrap();
    let again = run(&["sample", "--input", &u42, "-n", "3", "--p", "uniform", "--seed", &seed.to_string()]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn count_k5_is_near_cayley() {
    let k5 = fixture("k5.graph");
    let o = run(&["count", "--input", &k5, "--seed", "3", "--exact-crosscheck"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(field(&out, "exact"), "125");
    assert_eq!(field(&out, "exact_method"), "matrix-tree");
    let est: f64 = field(&out, "estimate").parse().unwrap();
    assert!((est - 125.0).abs() / 125.0 < 0.1, "{est}");
    let total: u64 = field(&out, "queries_total").parse().unwrap();
    let pre: u64 = field(&out, "queries_preprocess").parse().unwrap();
    let ratio: u64 = field(&out, "queries_ratio").parse().unwrap();
    assert_eq!(total, pre + ratio);
}

#[test]
fn marginals_table_covers_the_ground_set() {
    let dpp = fixture("dpp.matrix");
    let o = run(&["marginals", "--input", &dpp, "-k", "2", "--seed", "1", "--exact-crosscheck"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip_while(|l| !l.starts_with("element")).skip(1).collect();
    assert_eq!(rows.len(), 5);
    let p_sum: f64 = rows.iter().map(|r| r.split(' ').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((p_sum - 1.0).abs() < 1e-5);
}

#[test]
fn verify_passes_on_shipped_fixtures() {
    for (name, extra) in [
        ("k4.graph", vec![]),
        ("k5.graph", vec![]),
        ("dpp.matrix", vec!["-k", "3"]),
        ("linear.matrix", vec!["--format", "matrix-linear"]),
        ("u42.explicit", vec![]),
    ] {
        let path = fixture(name);
        let mut args = vec!["verify", "--input", path.as_str()];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{name}: {}", stdout(&o));
        assert!(stdout(&o).ends_with("verify ok\n"));
    }
}

#[test]
fn verify_builtin_suites_pass() {
    let o = run(&["verify", "--trials", "50000", "--tv-threshold", "0.02"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("witness detected ok"));
    assert!(!out.contains("FAIL"));
}

#[test]
fn verify_fails_on_a_positively_correlated_table() {
    let dir = std::env::temp_dir().join(format!("isosample-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("witness.explicit");
    std::fs::write(&path, "explicit 4 2\n0 1 1\n2 3 1\n").unwrap();
    let o = run(&["verify", "--input", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn bench_reports_flat_query_counts() {
    let o = run(&["bench", "--ns", "1000,100000", "--samples", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .filter(|l| l.starts_with(|c: char| c.is_ascii_digit()))
        .map(|l| l.split(' ').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], rows[1][1]);
    assert_eq!(rows[0][1], rows[0][2]);
    assert!(out.contains("n_independent ok"));
}

#[test]
fn output_flag_writes_file() {
    let u42 = fixture("u42.explicit");
    let path = std::env::temp_dir().join(format!("isosample-out-{}.txt", std::process::id()));
    let o = run(&["sample", "--input", &u42, "-n", "4", "--seed", "1", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["sample"]).status.code(), Some(2));
    let k4 = fixture("k4.graph");
    assert_eq!(run(&["sample", "--input", &k4, "--epsilon", "2"]).status.code(), Some(2));
    let bad = std::env::temp_dir().join(format!("isosample-bad-{}.graph", std::process::id()));
    std::fs::write(&bad, "graph 3 2\n0 1\n").unwrap();
    let o = run(&["sample", "--input", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(run(&["sample", "--input", "/nonexistent/file"]).status.code(), Some(1));
    // A DPP needs k; the theoretical preset exceeds the sample budget.
    let dpp = fixture("dpp.matrix");
    assert_eq!(run(&["sample", "--input", &dpp]).status.code(), Some(2));
    let k5 = fixture("k5.graph");
    let o = run(&["count", "--input", &k5, "--preset", "theoretical", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("budget"), "{}", stderr(&o));
}
