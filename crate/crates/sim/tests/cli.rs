//! Black-box tests of the `aegis` binary: exit codes, file outputs and seed
//! resolution.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_aegis"));
    c.env_remove("AEGIS_SEED");
    c
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aegis-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("config.toml");
    let text = format!(
        r#"
seed = 7
[ring]
bit_width = 64
frac_bits = 16
bound = 64.0
[rule]
kind = "multi_krum"
f = 1
m = 3
[round]
n = 5
alpha = 0.2
{extra}
"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn round_then_audit_passes() {
    let dir = tmp("round-audit");
    let cfg = write_config(&dir, "");
    let tdir = dir.join("transcripts");
    let out = bin()
        .args(["round", "--config"])
        .arg(&cfg)
        .args(["--transcript-dir"])
        .arg(&tdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("\"selected\""));
    assert!(tdir.join("S1.jsonl").exists());
    assert!(tdir.join("S2.jsonl").exists());
    assert!(tdir.join("W0.jsonl").exists());

    let out = bin()
        .args(["audit", "--config"])
        .arg(&cfg)
        .args(["--transcripts"])
        .arg(&tdir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn audit_exit_code_4_on_leaky_transcript() {
    let dir = tmp("audit-fail");
    let cfg = write_config(&dir, "");
    let tdir = dir.join("transcripts");
    bin()
        .args(["round", "--config"])
        .arg(&cfg)
        .args(["--transcript-dir"])
        .arg(&tdir)
        .output()
        .unwrap();
    // forge a distance reveal at S1, which may only ever reveal z
    let s1 = tdir.join("S1.jsonl");
    let mut text = std::fs::read_to_string(&s1).unwrap();
    text.push_str(
        "{\"record\":\"reveal\",\"round\":0,\"label\":\"d2(0,1)\",\"scale\":2,\"elems\":[12345]}\n",
    );
    std::fs::write(&s1, text).unwrap();
    let out = bin()
        .args(["audit", "--config"])
        .arg(&cfg)
        .args(["--transcripts"])
        .arg(&tdir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tmp("bad-config");
    let cfg = write_config(&dir, "");
    let broken = std::fs::read_to_string(&cfg).unwrap().replace("alpha = 0.2", "alpha = 0.9");
    std::fs::write(&cfg, broken).unwrap();
    let out = bin().args(["round", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = bin()
        .args(["round", "--config"])
        .arg(dir.join("missing.toml"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn round_is_deterministic_and_env_seed_wins() {
    let dir = tmp("seeds");
    let cfg = write_config(&dir, "");
    let run = |seed_arg: Option<&str>, env: Option<&str>| {
        let mut c = bin();
        c.args(["round", "--config"]).arg(&cfg);
        if let Some(s) = seed_arg {
            c.args(["--seed", s]);
        }
        if let Some(e) = env {
            c.env("AEGIS_SEED", e);
        }
        stdout(&c.output().unwrap())
    };
    assert_eq!(run(Some("42"), None), run(Some("42"), None));
    assert_ne!(run(Some("42"), None), run(Some("43"), None));
    // the environment variable overrides the flag
    assert_eq!(run(Some("42"), Some("43")), run(Some("99"), Some("43")));
    assert!(run(None, Some("43")).contains("\"seed\":43"));
}

#[test]
fn train_writes_metrics_csv() {
    let dir = tmp("train");
    let cfg = write_config(
        &dir,
        "[task]\nkind = \"linear_regression\"\ndim = 3\nsamples = 20\n[train]\nrounds = 4\neta = 0.3\nprotocol = \"two_server\"\n",
    );
    let csv = dir.join("metrics.csv");
    let out = bin()
        .args(["train", "--config"])
        .arg(&cfg)
        .args(["--metrics"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("final loss"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("round,loss,selected,byzantine_selected,aborted"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn bench_writes_csv_with_byte_columns() {
    let dir = tmp("bench");
    let cfg = write_config(&dir, "");
    let csv = dir.join("bench.csv");
    let out = bin()
        .args(["bench", "--config"])
        .arg(&cfg)
        .args(["--dims", "1000,10000", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("protocol,rule,n,dim,"));
    assert!(text.contains(&format!("{}", 2 * (34 + 8 * 1000))));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn dealer_writes_share_files_and_honors_env_seed() {
    let dir = tmp("dealer");
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out_dir in [&out1, &out2] {
        let out = bin()
            .args(["dealer", "--count", "4", "--dim", "3", "--form", "elementwise"])
            .args(["--seed", &format!("{}", if out_dir == &out1 { 1 } else { 2 })])
            .env("AEGIS_SEED", "77")
            .args(["--out-dir"])
            .arg(out_dir)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["s1.triples", "s2.triples"] {
        let a = std::fs::read(out1.join(name)).unwrap();
        let b = std::fs::read(out2.join(name)).unwrap();
        assert!(!a.is_empty());
        // AEGIS_SEED overrides the differing --seed flags
        assert_eq!(a, b, "{name}");
    }
    assert_ne!(
        std::fs::read(out1.join("s1.triples")).unwrap(),
        std::fs::read(out1.join("s2.triples")).unwrap()
    );
}
