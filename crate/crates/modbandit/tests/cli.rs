use std::path::Path;
use std::process::{Command, Output};

fn modbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modbandit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, text).unwrap();
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = modbandit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("Usage:"), "{err}");
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(modbandit(&["--help"]).status.code(), Some(0));
    assert_eq!(modbandit(&["--version"]).status.code(), Some(0));
    assert_eq!(modbandit(&["train", "--help"]).status.code(), Some(0));
}

#[test]
fn bad_values_are_usage_errors() {
    for args in [
        &["--seeds", "0", "bench"][..],
        &["--bandit", "greedy", "bench"],
        &["--actors", "0", "train"],
        &["train", "--episodes", "0"],
        &["--bandit", "ucb", "lavaworld-stationary"],
        &["--modulation-set", "/no/such/set.toml", "train"],
        &["--seed", "minus-one", "bench"],
    ] {
        assert_eq!(modbandit(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = modbandit(&["train", "--map", dir.path().join("missing.txt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.txt"));
    let resume = modbandit(&["train", "--episodes", "2", "--resume", dir.path().to_str().unwrap()]);
    assert_eq!(resume.status.code(), Some(1));
}

#[test]
fn rank_prints_the_two_variant_fixture() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("outcomes.csv"), "game,seed,variant,score\ng,0,A,4\ng,1,A,3\ng,0,B,2\ng,1,B,1\n");
    let o = modbandit(&["rank", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "A=1.0 B=0.0\n");
}

#[test]
fn rank_reports_games_and_rejects_mismatched_seeds() {
    let dir = tempfile::tempdir().unwrap();
    write(&dir.path().join("a/outcomes.csv"), "game,seed,variant,score\ng,0,A,1\ng,0,B,2\n");
    write(&dir.path().join("b/outcomes.csv"), "game,seed,variant,score\nh,0,A,1\nh,0,B,1\n");
    let o = modbandit(&["rank", dir.path().to_str().unwrap()]);
    assert_eq!(stdout(&o), "A=0.25 B=0.75\ng: A=0.0 B=1.0\nh: A=0.5 B=0.5\n");
    write(&dir.path().join("c.csv"), "game,seed,variant,score\nk,0,A,1\nk,1,A,1\nk,0,B,2\n");
    assert_eq!(modbandit(&["rank", dir.path().to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn drop_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("o.csv");
    write(&file, "game,seed,variant,score\ng,0,early,5\ng,0,best,8\ng,0,worst,2\n");
    let o = modbandit(&["drop", file.to_str().unwrap(), "--early", "early"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("early=early score=0.5 drop=0.5\n"), "{}", stdout(&o));
    assert_eq!(modbandit(&["drop", file.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(modbandit(&["drop", file.to_str().unwrap(), "--early", "nobody"]).status.code(), Some(2));
}

#[test]
fn drop_picks_the_early_leader_from_run_logs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ns");
    let o = modbandit(&["--seeds", "2", "--out", out.to_str().unwrap(), "lavaworld-nonstationary", "--episodes", "40"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = modbandit(&["drop", out.to_str().unwrap()]);
    assert_eq!(d.status.code(), Some(0), "{}", String::from_utf8_lossy(&d.stderr));
    let last = stdout(&d).lines().last().unwrap().to_string();
    assert!(last.starts_with("early=") && last.contains(" drop="), "{last}");
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn deterministic_runs_write_identical_trees() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = modbandit(&[
            "--deterministic", "--seed", "7", "--actors", "4", "--out", out.to_str().unwrap(), "train", "--episodes", "40",
        ]);
        assert_eq!(o.status.code(), Some(0));
        (stdout(&o), tree(&out))
    };
    let (a, b) = (run("a"), run("b"));
    assert!(a.1.iter().any(|(p, _)| p.ends_with("log.csv")));
    assert!(a.1.iter().any(|(p, _)| p.ends_with("bandit.txt")));
    assert_eq!(a, b);
}

#[test]
fn train_resumes_from_its_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let cfg = dir.path().join("run.toml");
    write(&cfg, "episodes = 30\neval_period = 5\n[learner]\nbatch_size = 16\n");
    let base = ["--config", cfg.to_str().unwrap(), "--bandit", "factored-adaptive"];
    let o = modbandit(&[&base[..], &["--out", first.to_str().unwrap(), "train"]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let snapshot = first.join("runs/factored-adaptive/0/bandit.txt");
    assert!(std::fs::read_to_string(&snapshot).unwrap().starts_with("kind factored\ndimensions 3\n"));
    let o = modbandit(&[&base[..], &["--out", second.to_str().unwrap(), "train", "--resume", first.to_str().unwrap()]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let resumed = std::fs::read_to_string(second.join("runs/factored-adaptive/0/bandit.txt")).unwrap();
    // the resumed bandit continues its clock
    assert!(resumed.contains("\ntime 60\n"), "{resumed}");
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    let o = modbandit(&["--seeds", "3", "--out", out.to_str().unwrap(), "bench", "--steps", "200", "--period", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv, stdout(&o));
    let rows: Vec<&str> = csv.lines().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(rows, ["bandit", "adaptive", "ucb", "thompson", "uniform"]);
    // per-seed rewards feed straight into rank
    assert_eq!(modbandit(&["rank", out.to_str().unwrap()]).status.code(), Some(0));
}
