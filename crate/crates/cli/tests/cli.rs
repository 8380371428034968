use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_futamix"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn assets() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn with_stdin(mut cmd: Command, input: &str) -> Output {
    let mut child = cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const POWER: &str = "(program (def power (n x) (if (eq? n '0) '1 (* x (call power (- n '1) x)))))";

fn power_file(dir: &Path) -> PathBuf {
    let p = dir.join("power.l0");
    std::fs::write(&p, POWER).unwrap();
    p
}

#[test]
fn run_prints_value_and_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = power_file(dir.path());
    let o = bin().arg("run").arg(&p).args(["--args", "(3 5)"]).output().unwrap();
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "125");
    let o = bin().arg("run").arg(&p).args(["--args", "(3 5)", "--budget", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().arg("run").arg(&p).args(["--args", "(3 x)"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["run", "/nonexistent.l0"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mix_engines_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = power_file(dir.path());
    let host = bin().arg("mix").arg(&p).args(["--static", "n=3", "--dynamic", "x"]).output().unwrap();
    let l0 = bin().arg("mix").arg(&p).args(["--static", "n=3", "--dynamic", "x", "--engine", "l0"]).output().unwrap();
    assert!(host.status.success() && l0.status.success());
    assert_eq!(stdout(&host), stdout(&l0));
    assert!(stdout(&host).contains("power_3"));
    let bad = bin().arg("mix").arg(&p).args(["--static", "m=3", "--dynamic", "x"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn projections_write_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["project", "1", "--dialog"])
        .arg(fixtures().join("coffee.dlg"))
        .env("FUTAMIX_OUT", out.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.path().join("stager_coffee.l0").exists());
    for (n, file) in [("2", "compiler.l0"), ("3", "cogen.l0")] {
        let o = bin().args(["--json", "project", n, "--out"]).arg(out.path()).output().unwrap();
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert!(v["defs"].as_u64().unwrap() > 10);
        assert!(out.path().join(file).exists());
    }
    let o = bin().args(["project", "3", "--budget-points", "5", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = bin().args(["project", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stage_reprompts_unless_strict() {
    for engine in ["interp", "stager", "compiled", "cogen"] {
        let mut cmd = bin();
        cmd.arg("stage").arg(fixtures().join("coffee.dlg")).args(["--engine", engine]);
        let o = with_stdin(cmd, "huge\nlarge\ndark\nno\n");
        assert!(o.status.success(), "{engine}");
        let out = stdout(&o);
        assert!(out.ends_with("(done \"coffee as ordered\" ((size large) (blend dark) (cream no)))\n"), "{out}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("`huge` is not one of"));
    }
    let mut cmd = bin();
    cmd.arg("stage").arg(fixtures().join("coffee.dlg")).arg("--strict");
    let o = with_stdin(cmd, "huge\n");
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).trim(), "(invalid size huge)");
    let mut cmd = bin();
    cmd.args(["--json", "stage"]).arg(fixtures().join("coffee.dlg"));
    let o = with_stdin(cmd, "small\n");
    assert_eq!(o.status.code(), Some(2));
    let last: serde_json::Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(last["outcome"], "(invalid blend ())");
}

#[test]
fn check_passes_and_names_a_corrupted_asset() {
    let o = bin().arg("check").arg(fixtures()).output().unwrap();
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));

    let bad = tempfile::tempdir().unwrap();
    for f in ["mix.l0", "interp.l0", "interp_step.l0"] {
        std::fs::copy(assets().join(f), bad.path().join(f)).unwrap();
    }
    let interp = std::fs::read_to_string(bad.path().join("interp.l0")).unwrap();
    std::fs::write(bad.path().join("interp.l0"), interp.replace("'done", "'dome")).unwrap();
    let o = bin().args(["--json", "check"]).arg(fixtures()).arg("--assets").arg(bad.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(summary["pass"], false);
    assert_eq!(summary["first_failure"]["column"], "interp-l0");

    let o = bin().args(["check", "/nonexistent"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("check").arg(fixtures()).args(["--assets", "/nonexistent"]).output().unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn serve_reports_a_taken_port() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = listener.local_addr().unwrap().port().to_string();
    let o = bin().args(["serve", "--port", &port]).output().unwrap();
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}
