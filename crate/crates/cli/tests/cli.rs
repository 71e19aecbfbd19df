use std::path::Path;
use std::process::{Command, Output};

fn akflow(args: &[&str], threads: Option<usize>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_akflow"));
    c.args(args);
    match threads {
        Some(n) => c.env("AKFLOW_THREADS", n.to_string()),
        None => c.env_remove("AKFLOW_THREADS"),
    };
    c.output().unwrap()
}

fn out_arg(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn flat_run_succeeds_and_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("flat");
    let o = akflow(&["run", "-s", "m=8", "-s", "init=flat", "-s", "t_end=0.2", "-o", &out_arg(&dir)], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["config.echo", "monitors.csv", "identity.csv"] {
        assert!(dir.join(f).exists());
    }
    let o = akflow(&["report", &out_arg(&dir)], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("blow-up: no"));
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "mode = \"homogeneous\"\nmanifold = \"torus4\"\n").unwrap();
    let o = akflow(&["run", "-c", &out_arg(&cfg)], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("preset"));
    assert_eq!(akflow(&["run", "-s", "colour=3"], None).status.code(), Some(1));
    assert_eq!(akflow(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(akflow(&["report", &out_arg(&tmp.path().join("missing"))], None).status.code(), Some(1));
    assert_eq!(akflow(&["report", &out_arg(tmp.path())], Some(0)).status.code(), Some(1));
}

#[test]
fn help_documents_defaults() {
    let o = akflow(&["run", "--help"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("cfl = 0.1") && text.contains("AKFLOW_THREADS"));
}

#[test]
fn homogeneous_run_and_verify_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("kt");
    let o = akflow(
        &["run", "-s", "mode=homogeneous", "-s", "manifold=kodaira-thurston", "-s", "dt=0.01", "-s", "t_end=1", "-o", &out_arg(&dir)],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let ids = std::fs::read_to_string(dir.join("identity.csv")).unwrap();
    assert!(ids.lines().skip(1).all(|l| l.ends_with(",true")));

    let dir = tmp.path().join("verify");
    let o = akflow(&["verify", "-s", "m=12", "-o", &out_arg(&dir)], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let ids = std::fs::read_to_string(dir.join("identity.csv")).unwrap();
    assert_eq!(ids.lines().count(), 1 + 21 + 7);
    assert!(ids.lines().skip(1).all(|l| l.ends_with(",true")), "{ids}");
}

#[test]
fn large_amplitude_run_exits_with_blow_up() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("big");
    let o = akflow(
        &["run", "-s", "m=8", "-s", "amplitude=0.6", "-s", "blow_up=5", "-s", "t_end=1", "-s", "monitor_every=1", "-o", &out_arg(&dir)],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stdout));
    let csv = std::fs::read_to_string(dir.join("monitors.csv")).unwrap();
    let rows = akflow::monitor::read_csv(&csv).unwrap();
    assert!(rows.iter().all(|r| r.values().iter().all(|v| v.is_finite())));
    assert!(rows.last().unwrap().sup_rm > 5.0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("blow-up"));
}

#[test]
fn monitors_are_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for n in [1, 4] {
        let dir = tmp.path().join(format!("t{n}"));
        let o = akflow(&["run", "-s", "m=8", "-s", "t_end=0.3", "-s", "monitor_every=1", "-o", &out_arg(&dir)], Some(n));
        assert_eq!(o.status.code(), Some(0));
        files.push(std::fs::read(dir.join("monitors.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}
