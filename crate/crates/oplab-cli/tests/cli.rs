//! End-to-end checks of the command-line surface: exit codes, config
//! diagnostics, artifact schemas, and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::Command;

fn oplab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oplab"))
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("oplab-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_family(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn corpus_conditions_report_no_violations() {
    let dir = tmp_dir("conditions");
    let status = oplab()
        .args(["check-conditions", "--family", "corpus", "--n", "4096"])
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    // one report per family plus the summary and manifest
    let entries = std::fs::read_dir(dir.join("out")).unwrap().count();
    assert_eq!(entries, 12);
}

#[test]
fn constant_table_conditions_violated_exit_two() {
    let dir = tmp_dir("violated");
    let family = write_family(
        &dir,
        "const.toml",
        "kind = \"custom-table\"\ntable = [2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0]\n",
    );
    // long constant table via a generated file
    let mut table = String::from("kind = \"custom-table\"\ntable = [");
    table.push_str(&vec!["2.0"; 1200].join(", "));
    table.push_str("]\n");
    std::fs::write(&family, table).unwrap();
    let status = oplab()
        .args(["check-conditions", "--n", "1000"])
        .arg("--family")
        .arg(&family)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn malformed_config_exits_one_with_key_path() {
    let dir = tmp_dir("badcfg");
    let family = write_family(
        &dir,
        "bad.toml",
        "kind = \"power-law\"\nc = 1.0\np = 1.5\n",
    );
    let output = oplab()
        .args(["eval", "--omega", "1", "--n", "100"])
        .arg("--family")
        .arg(&family)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("family.p"), "stderr: {stderr}");
}

#[test]
fn limits_artifacts_and_determinism() {
    let dir = tmp_dir("determinism");
    let run = |out: &Path| {
        let status = oplab()
            .args([
                "limits",
                "--family",
                "hermite",
                "--omega-grid",
                "0,0.5,1",
                "--n",
                "20000",
            ])
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    };
    run(&dir.join("a"));
    run(&dir.join("b"));
    let a = std::fs::read(dir.join("a/limits.json")).unwrap();
    let b = std::fs::read(dir.join("b/limits.json")).unwrap();
    assert_eq!(a, b, "limits.json must be byte-identical across reruns");
}

#[test]
fn eval_csv_schema() {
    let dir = tmp_dir("evalcsv");
    let status = oplab()
        .args([
            "eval", "--family", "hermite", "--omega", "1", "--n", "100", "--stride", "10",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("eval.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,p_n,p_np1,sum_p2,sum_invgamma"));
    assert_eq!(csv.lines().count(), 12); // header + 10 checkpoints + final row
}

#[test]
fn phase_trace_csv_schema() {
    let dir = tmp_dir("phasecsv");
    let status = oplab()
        .args([
            "phase-trace", "--family", "hermite", "--omega", "1", "--n", "500", "--stride", "100",
        ])
        .arg("--out")
        .arg(&dir)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("phase.csv")).unwrap();
    assert!(csv.starts_with("n,abs_E,phi,delta,mu,S\n"));
    assert!(dir.join("phase_summary.json").exists());
}

#[test]
fn conjecture_emits_envelopes() {
    let dir = tmp_dir("conjecture");
    let family = write_family(&dir, "root.toml", "kind = \"power-law\"\nc = 1.0\np = 0.5\n");
    let status = oplab()
        .args(["conjecture", "--rho-grid", "0,2.5", "--omega", "1", "--n", "20000"])
        .arg("--family")
        .arg(&family)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(dir.join("out/envelope_rho_0.csv").exists());
    assert!(dir.join("out/envelope_rho_2.5.csv").exists());
    let json = std::fs::read_to_string(dir.join("out/conjecture.json")).unwrap();
    assert!(json.contains("\"classification\":\"unstable\""), "{json}");
}

#[test]
fn chromatic_signal_modes() {
    let dir = tmp_dir("chromatic");
    let signal = write_family(
        &dir,
        "signal.toml",
        "[[terms]]\nomega = 1.0\nre = 1.0\nim = 0.0\n\n[[terms]]\nomega = 2.0\nre = 0.5\nim = -0.25\n\n[[terms_g]]\nomega = 0.5\nre = 1.0\nim = 0.0\n",
    );
    let status = oplab()
        .args(["chromatic", "--family", "hermite", "--mode", "cd", "--order", "40"])
        .arg("--signal")
        .arg(&signal)
        .arg("--out")
        .arg(dir.join("cd"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let status = oplab()
        .args([
            "chromatic",
            "--family",
            "hermite",
            "--mode",
            "orthogonality",
            "--omega",
            "1",
            "--sigma",
            "2",
            "--n",
            "20000",
        ])
        .arg("--out")
        .arg(dir.join("orth"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("orth/orthogonality.csv")).unwrap();
    assert!(csv.starts_with("n,ratio,cd_bound\n"));
}

#[test]
fn lemma_verify_single_case() {
    let dir = tmp_dir("lemma");
    let family = write_family(&dir, "pl.toml", "kind = \"power-law\"\nc = 1.0\np = 0.5\n");
    let output = oplab()
        .args(["lemma-verify", "--lemma", "basicn", "--omega", "1"])
        .arg("--family")
        .arg(&family)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("consistent"), "{stdout}");
    assert!(dir.join("out/lemma_summary.json").exists());
}
