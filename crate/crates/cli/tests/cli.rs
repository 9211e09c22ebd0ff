use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rackdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rackdm"))
        .args(args)
        .env_remove("RACKDM_CONFIG")
        .output()
        .expect("binary runs")
}

fn small(out: &Path) -> Vec<String> {
    [
        "--set",
        "nodes=4",
        "--set",
        "pools=2",
        "--set",
        "workloads=fft:2,lbm:2",
        "--set",
        "scale=0.0001",
        "--out",
        out.to_str().unwrap(),
    ]
    .map(String::from)
    .to_vec()
}

#[test]
fn run_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let mut args = vec!["run".to_string(), "--policy".into(), "smart_idle".into()];
    args.extend(small(&out));
    let o = rackdm(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.json", "config.txt"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("remote avg"), "{stdout}");
}

#[test]
fn sweep_writes_every_cell() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let mut args = vec!["sweep".to_string()];
    args.extend(small(&out));
    let o = rackdm(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs: Vec<_> = fs::read_dir(&out).unwrap().collect();
    assert_eq!(dirs.len(), 4);
    for cell in ["local_first_round_robin", "alternate_smart_idle"] {
        assert!(out.join(cell).join("summary.json").exists(), "missing {cell}");
    }
}

#[test]
fn bad_config_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.conf");
    fs::write(&path, "nodes = 4\n\npools = 0\n").unwrap();
    let o = rackdm(&["validate-config", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("pools"), "{err}");

    let o = rackdm(&["run", "--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rackdm(&["run", "--policy", "fastest"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_trace_exits_with_two() {
    let o = rackdm(&["run", "--set", "trace=/nonexistent/t.csv"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "").unwrap();
    let mut args = vec!["run".to_string()];
    args.extend(small(&blocker.join("sub")));
    let o = rackdm(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn validate_config_echo_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rackdm(&["validate-config", "--set", "seed=9"]);
    assert_eq!(o.status.code(), Some(0));
    let echo = tmp.path().join("echo.conf");
    fs::write(&echo, &o.stdout).unwrap();
    let again = rackdm(&["validate-config", "--config", echo.to_str().unwrap()]);
    assert_eq!(
        again.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    assert_eq!(again.stdout, o.stdout);
}

#[test]
fn gen_and_filter_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("t.csv.gz");
    let o = rackdm(&[
        "gen-trace",
        "--set",
        "nodes=4",
        "--set",
        "workloads=fft:2,lbm:2",
        "--set",
        "scale=0.0001",
        "--output",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(trace.exists());

    // the generated trace replays through `run`
    let out = tmp.path().join("replay");
    let o = rackdm(&[
        "run",
        "--set",
        "nodes=4",
        "--set",
        "workloads=fft:2,lbm:2",
        "--set",
        &format!("trace={}", trace.display()),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let refs = tmp.path().join("refs.csv");
    let body: String = (0..2000u64)
        .map(|i| format!("{},{:x},R\n", i % 2, (i * 4096) % (1 << 26)))
        .collect();
    fs::write(&refs, format!("thread,vaddr,kind\n{body}")).unwrap();
    let misses = tmp.path().join("m.csv");
    let o = rackdm(&[
        "filter-trace",
        "--input",
        refs.to_str().unwrap(),
        "--output",
        misses.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&misses).unwrap();
    assert!(text.lines().count() > 1000);
}
