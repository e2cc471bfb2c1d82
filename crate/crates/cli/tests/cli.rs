use std::path::Path;
use std::process::{Command, Output};

fn aht(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aht"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("the aht binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn plan_prints_a_plan() {
    let dir = tempfile::tempdir().unwrap();
    let o = aht(&["plan", "--task", "prepare_breakfast", "--anticipate", "prepare_coffee", "--seed", "3"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("prepare_breakfast holds after step"));
    assert!(out.contains("prepare_coffee holds after step"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 5] = [
        &["run", "--exp", "exp9"],
        &["run", "--exp", "exp1", "--trials", "0"],
        &["run", "--exp", "exp1", "--variants", "ours,base99"],
        &["run", "--exp", "exp1", "--theta", "1.5"],
        &["plan", "--task", "bake_bread"],
    ];
    for args in cases {
        let o = aht(args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = aht(&["learn-bm", "--traces", "missing.tsv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn collect_learn_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let o = aht(&["collect-traces", "--count", "300", "--out", "traces.tsv"], p);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = aht(&["learn-bm", "--traces", "traces.tsv", "--id", "default", "--out", "models.json"], p);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(p.join("models.json").exists());
    let o = aht(
        &["run", "--exp", "exp1", "--trials", "2", "--variants", "ours,base3", "--models", "models.json", "--out", "res"],
        p,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(p.join("res/summary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("variant,stepRatio,timeRatio,absSteps,absTime,failures"));
    assert!(lines.next().unwrap().starts_with("ours,1.0000,1.0000,"));
    assert_eq!(std::fs::read_to_string(p.join("res/trials.jsonl")).unwrap().lines().count(), 4);
    assert!(stdout(&o).contains("base3"));
}
