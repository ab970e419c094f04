use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rivw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rivw"))
        .args(args)
        .env("RIVW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rivw(args);
    assert!(
        out.status.success(),
        "rivw {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    rivw(args).status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
p = 20000
pi_x = 0.02
pi_y = 0.02
eps_x2 = 1e-4
tau2 = 1e-4
beta = 0.5
n_x = 100000
n_y = 100000
n_reps = 1
seed = 4
methods = [{ method = "ivw" }, { method = "rivw" }]
"#;

fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, SMALL).unwrap();
    p
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let stdout = ok(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(stdout.contains("RIVW"));
    let lines = data_lines(&out.join("metrics.tsv"));
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("method\tbeta_hat\tmonte_sd\tse\tcp"));
    assert!(lines[1].starts_with("IVW (lambda=5.45)\t"));
    assert!(lines[2].starts_with("RIVW (lambda=4.06, eta=0.5)\t"));
    let text = fs::read_to_string(out.join("metrics.tsv")).unwrap();
    assert!(text.starts_with("# command: simulate\n# config_digest: sha256:"));
    assert!(text.contains("# seed: 4\n"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(json["metrics"].as_array().unwrap().len(), 2);
    assert_eq!(json["manifest"]["command"], "simulate");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["simulate", "--config", s(&cfg), "--out", s(&a)]);
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--seed",
        "5",
        "--reps",
        "2",
        "--out",
        s(&b),
    ]);
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(record["config"]["simulation"]["seed"], 5);
    assert_eq!(record["config"]["simulation"]["n_reps"], 2);
    assert_ne!(
        fs::read_to_string(a.join("metrics.tsv")).unwrap(),
        fs::read_to_string(b.join("metrics.tsv")).unwrap()
    );
}

fn assert_same_outputs(a: &Path, b: &Path, files: &[&str]) {
    for f in files {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(x == y, "{f} differs between runs");
    }
}

#[test]
fn replay_reproduces_simulation_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--reps",
        "3",
        "--traces",
        "--out",
        s(&a),
    ]);
    ok(&["replay", "--manifest", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert_same_outputs(&a, &b, &["metrics.tsv", "metrics.json", "traces.tsv"]);
}

#[test]
fn fixture_analysis_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let fx = dir.path().join("fx");
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--fixture",
        "--replicate",
        "2",
        "--out",
        s(&fx),
    ]);
    for f in ["exposure.tsv", "outcome.tsv", "ld.tsv", "truth.tsv"] {
        assert!(fx.join(f).exists(), "{f}");
    }
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| {
        vec![
            "analyze".to_string(),
            "--exposure".into(),
            s(&fx.join("exposure.tsv")).into(),
            "--outcome".into(),
            s(&fx.join("outcome.tsv")).into(),
            "--ld".into(),
            s(&fx.join("ld.tsv")).into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            s(out).into(),
        ]
    };
    let argv: Vec<String> = args(&a);
    let stdout = ok(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(stdout.starts_with("RIVW: beta = "), "{stdout}");
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["method"], "rivw");
    assert_eq!(report["manifest"]["seed"], 11);
    let (lo, hi) = (
        report["report"]["ci_low"].as_f64().unwrap(),
        report["report"]["ci_high"].as_f64().unwrap(),
    );
    assert!(lo < hi);
    let rejects = data_lines(&a.join("rejects.tsv"));
    assert!(rejects.iter().any(|l| l.ends_with("harmonize: palindromic")));

    ok(&["replay", "--manifest", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert_same_outputs(&a, &b, &["report.json", "diagnostics.tsv", "rejects.tsv"]);

    // A modified input must not be silently replayed.
    let mut text = fs::read_to_string(fx.join("outcome.tsv")).unwrap();
    text.push_str("# edited\n");
    fs::write(fx.join("outcome.tsv"), text).unwrap();
    assert_eq!(
        code(&[
            "replay",
            "--manifest",
            s(&a.join("manifest.json")),
            "--out",
            s(&dir.path().join("c"))
        ]),
        11
    );
}

#[test]
fn rb_check_and_oracle_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&[
        "rb-check",
        "--seed",
        "3",
        "--draws",
        "20000",
        "--bins",
        "10",
        "--out",
        s(&a),
    ]);
    assert_eq!(data_lines(&a.join("rb_summary.tsv")).len(), 4);
    // Three ratios, raw and corrected, ten bins each.
    assert_eq!(data_lines(&a.join("rb_histogram.tsv")).len(), 1 + 3 * 2 * 10);
    ok(&["replay", "--manifest", s(&a.join("manifest.json")), "--out", s(&b)]);
    assert_same_outputs(&a, &b, &["rb_summary.tsv", "rb_histogram.tsv", "rb_check.json"]);

    let (c, d) = (dir.path().join("c"), dir.path().join("d"));
    let stdout = ok(&["oracle", "--gamma", "-1.5", "--draws", "20000", "--out", s(&c)]);
    assert!(stdout.contains("closed-form variance"));
    ok(&["replay", "--manifest", s(&c.join("manifest.json")), "--out", s(&d)]);
    assert_same_outputs(&c, &d, &["oracle.json"]);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let missing = dir.path().join("missing.tsv");
    let out = dir.path().join("out");

    // Usage errors come from the argument parser.
    assert_eq!(code(&["simulate"]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    // I/O
    assert_eq!(
        code(&[
            "analyze",
            "--exposure",
            s(&missing),
            "--outcome",
            s(&missing),
            "--seed",
            "1"
        ]),
        3
    );
    assert_eq!(code(&["simulate", "--config", s(&missing)]), 3);
    // Format: a summary file without a beta column.
    let bad = dir.path().join("bad.tsv");
    fs::write(&bad, "snp_id\tchrom\tpos\tea\tnea\tse\nrs1\t1\t1\tA\tC\t0.1\n").unwrap();
    assert_eq!(
        code(&[
            "analyze",
            "--exposure",
            s(&bad),
            "--outcome",
            s(&bad),
            "--seed",
            "1",
            "--out",
            s(&out)
        ]),
        4
    );
    // Configuration
    let broken = dir.path().join("broken.toml");
    fs::write(&broken, "p = [").unwrap();
    assert_eq!(code(&["simulate", "--config", s(&broken)]), 5);
    fs::write(&broken, SMALL.replace("pi_y = 0.02", "pi_y = 0.99")).unwrap();
    assert_eq!(code(&["simulate", "--config", s(&broken)]), 5);
    fs::write(&broken, format!("{SMALL}\nunknown_key = 1\n")).unwrap();
    assert_eq!(code(&["simulate", "--config", s(&broken)]), 5);
    assert_eq!(
        code(&[
            "analyze",
            "--exposure",
            s(&cfg),
            "--outcome",
            s(&cfg),
            "--method",
            "bogus"
        ]),
        5
    );
    assert_eq!(
        code(&["simulate", "--config", s(&cfg), "--reps", "1", "--out", s(&out)]),
        0
    );
    // Domain
    assert_eq!(code(&["oracle", "--gamma", "1", "--eta=-1", "--draws", "20000"]), 6);
    assert_eq!(code(&["rb-check", "--seed", "1", "--draws", "10"]), 6);
}
