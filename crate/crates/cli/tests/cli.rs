use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmfkit::record::{self, ResultRecord, Status};

fn rmfkit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rmfkit"));
    c.env_remove("RMFKIT_OUT_DIR");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn records(out: &Output) -> Vec<ResultRecord> {
    record::parse_jsonl(out.stdout.as_slice()).unwrap()
}

#[test]
fn counts_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "n = [4]\npairs = [[2, 2]]\nsystem = \"equal-product\"\n",
    );
    let out = rmfkit().args(["counts", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].total.as_deref(), Some("28"));
    assert_eq!(recs[0].status, Status::Exact);
}

#[test]
fn moments_at_length_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "m.toml",
        "n = [1]\npairs = [[1, 1], [2, 1], [3, 3]]\ntrials = 3\n",
    );
    let out = rmfkit().args(["moments", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    for r in records(&out).iter().filter(|r| r.quantity.starts_with("moment(")) {
        let want = if r.j == r.k { 1.0 } else { 0.0 };
        assert!((r.value_re.unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn validate_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.toml", "n = [100]\nmax_ell = 4\n");
    let out = rmfkit().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let recs = records(&out);
    assert!(!recs.is_empty() && recs.iter().all(|r| r.status == Status::Exact));
}

#[test]
fn config_errors_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "n = [9, 3]\n");
    let out = rmfkit().args(["counts", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`n`"));

    let out = rmfkit()
        .args(["counts", "--config"])
        .arg(dir.path().join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refusals_are_not_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.toml",
        "n = [12]\npairs = [[3, 3]]\nenumeration_cap = 10\n",
    );
    let out = rmfkit().args(["counts", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert_eq!(records(&out)[0].status, Status::Refused);
    let out = rmfkit()
        .args(["counts", "--override-budget", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(records(&out)[0].status, Status::Exact);
}

#[test]
fn hard_failure_sets_exit_status() {
    // a band of a millionth of a standard error cannot hold a sampled mean
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.toml",
        "kinds = [\"rademacher\"]\nn = [8]\npairs = [[2, 2]]\ntrials = 100\nsigmas = 0.000001\n",
    );
    let out = rmfkit().args(["identity", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(records(&out).iter().any(|r| r.status == Status::Fail));

    let cfg = write(dir.path(), "z.toml", "values = [0, 4]\n");
    let out = rmfkit().args(["factorize", "--config"]).arg(&cfg).output().unwrap();
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn jsonl_output_is_deterministic_apart_from_timestamp() {
    let strip = |out: &Output| {
        records(out)
            .into_iter()
            .map(|mut r| {
                r.timestamp = 0;
                r
            })
            .collect::<Vec<_>>()
    };
    let cfg = configs().join("moments.toml");
    let a = rmfkit()
        .args(["moments", "--threads", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let b = rmfkit()
        .args(["moments", "--threads", "3", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(a.status.success());
    assert_eq!(strip(&a), strip(&b));
    let c = rmfkit()
        .args(["moments", "--seed", "5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_ne!(strip(&a), strip(&c));
}

#[test]
fn csv_output_appends_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sub/out.csv");
    let cfg = write(dir.path(), "c.toml", "n = [3, 5]\npairs = [[1, 1]]\n");
    for _ in 0..2 {
        let st = rmfkit()
            .args(["counts", "--format", "csv", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_path)
            .status()
            .unwrap();
        assert!(st.success());
    }
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert_eq!(text.lines().filter(|l| l.starts_with("name,")).count(), 1);
    assert_eq!(record::read_csv(text.as_bytes()).unwrap().len(), 4);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "name = \"envtest\"\nn = [3]\n");
    let st = rmfkit()
        .env("RMFKIT_OUT_DIR", dir.path())
        .args(["counts", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(st.success());
    let recs = record::parse_jsonl(
        std::fs::read(dir.path().join("envtest-counts.jsonl"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    assert_eq!(recs.len(), 1);
}

#[test]
fn sample_tables_are_written_and_decodable() {
    let dir = tempfile::tempdir().unwrap();
    let tables = dir.path().join("tables");
    let cfg = write(
        dir.path(),
        "s.toml",
        &format!(
            "name = \"s\"\nn = [50]\ntrials = 2\nsample_encoding = \"binary\"\nsample_dir = \"{}\"\n",
            tables.display()
        ),
    );
    let out = rmfkit().args(["sample", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert_eq!(records(&out).len(), 4);
    let bytes = std::fs::read(tables.join("s-steinhaus-n50-t1.rmfs")).unwrap();
    assert_eq!(rmfkit::rmf::decode_binary(&bytes).unwrap().limit(), 50);
}

#[test]
fn shipped_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let text = std::fs::read_to_string(&p).unwrap();
        rmfkit::config::ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}

#[test]
fn quick_configs_run_clean() {
    for name in ["counts", "validate", "factorize", "identity"] {
        let out = rmfkit()
            .arg(name)
            .arg("--config")
            .arg(configs().join(format!("{name}.toml")))
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}
