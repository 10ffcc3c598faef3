use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ldtl-shield"));
    c.env_remove("LDTL_SHIELD_OUT");
    c
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in ["sample_site", "sample_site_unshielded"] {
        let o = run(&["validate", p(&scenario(name))]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("ok: 40 states, 9 joint actions, 8 joint observations, 2 obligations"));
    }
}

#[test]
fn validate_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("sample_site")).unwrap();
    let broken = text.replacen("F f3", "F f4", 1).replacen("gamma = 0.5", "gamma = 1.5", 1);
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, broken).unwrap();
    let o = run(&["validate", p(&path)]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.contains("f4"), "{out}");
    assert!(out.contains("gamma") || out.contains("1.5"), "{out}");

    std::fs::write(&path, "not toml [").unwrap();
    assert_eq!(run(&["validate", p(&path)]).status.code(), Some(1));
    assert_eq!(run(&["validate", "/nonexistent.toml"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(run(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["run", p(&scenario("sample_site")), "--shield", "sometimes"]).status.code(), Some(2));
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let cfg = scenario("sample_site");
    let mut args = vec!["run", p(&cfg), "--episodes", "3", "--horizon", "30", "--out", p(dir)];
    args.extend_from_slice(extra);
    run(&args)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn run_is_byte_identical_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_into(a.path(), &["--seed", "7"]).status.success());
    assert!(run_into(b.path(), &["--seed", "7"]).status.success());
    let fa = files(a.path());
    assert_eq!(fa, files(b.path()));
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        ["batch.csv", "episode_0000_seed_7.jsonl", "episode_0001_seed_8.jsonl", "episode_0002_seed_9.jsonl", "summary.csv"]
    );

    let c = tempfile::tempdir().unwrap();
    assert!(run_into(c.path(), &["--seed", "8"]).status.success());
    let fc = files(c.path());
    assert_eq!(fc[1].1, fa[2].1, "episode seeded 8 is the same in both batches");
}

#[test]
fn output_directory_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("sample_site");
    let o = bin()
        .args(["run", p(&cfg), "--episodes", "1", "--horizon", "5"])
        .env("LDTL_SHIELD_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("summary.csv").exists());
}

#[test]
fn audit_accepts_shielded_and_flags_tampering() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &["--seed", "3"]).status.success());
    let trace = dir.path().join("episode_0000_seed_3.jsonl");
    let cfg = scenario("sample_site");
    let o = run(&["audit", p(&trace), "--config", p(&cfg)]);
    assert!(o.status.success(), "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("oracle true, monitor pass"));

    // flip the recorded belief mass between two states at step 2
    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut v: serde_json::Value = serde_json::from_str(&lines[3]).unwrap();
    let belief = v["step"]["belief"].as_array_mut().unwrap();
    belief.swap(0, 39);
    belief.swap(1, 38);
    lines[3] = v.to_string();
    let tampered = dir.path().join("tampered.jsonl");
    std::fs::write(&tampered, lines.join("\n") + "\n").unwrap();
    let o = run(&["audit", p(&tampered), "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("step 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn audit_reports_unshielded_breach() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("sample_site_unshielded");
    assert!(run(&["run", p(&cfg), "--episodes", "1", "--horizon", "40", "--out", p(dir.path())]).status.success());
    let o = run(&["audit", p(&dir.path().join("episode_0000_seed_0.jsonl")), "--config", p(&cfg)]);
    let out = stdout(&o);
    assert!(out.contains("failed at least one step"), "{out}");
    assert!(out.contains("oracle false, monitor fail"), "{out}");
}

#[test]
fn sweep_prints_one_row_per_point() {
    let o = run(&["sweep", p(&scenario("sample_site")), "--episodes", "1", "--horizon", "10", "--eps", "0.05,0.1,0.2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let deadlines: Vec<&str> = out.lines().skip(1).map(|l| l.split(',').nth(4).unwrap()).collect();
    assert_eq!(deadlines, ["219", "161", "110"]);

    let o = run(&["sweep", p(&scenario("sample_site")), "--episodes", "1", "--rho", "1.0"]);
    assert_eq!(o.status.code(), Some(1));
}
