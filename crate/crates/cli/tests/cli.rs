use std::path::Path;
use std::process::{Command, Output};

use ordlab_cli::config::Settings;
use ordlab_cli::{aggregate, run_experiment, HarnessError, RunRecord};
use ordlab_core::generators::container::import_collection;

fn ordlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ordlab"))
        .args(args)
        .env_remove("ORDLAB_OUT_DIR")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

const SMALL: &[&str] = &[
    "--generator",
    "isotropic",
    "--d",
    "12",
    "--r",
    "3",
    "--T",
    "5",
    "--repeats",
    "3",
    "--strategy",
    "md",
    "--strategy",
    "random-without",
];

#[test]
fn two_strategies_three_repeats_five_iterations_give_thirty_rows() {
    let out = ordlab(SMALL);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 31);
    assert_eq!(
        lines[0],
        "strategy,repeat,seed,iteration,avg_loss,distance_sq,decrement,chosen_index"
    );
    assert!(text.ends_with('\n'));
    assert!(lines[1].starts_with("md,0,42,1,"));
    assert!(lines[30].starts_with("random-without,2,44,5,"));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec![
            "--generator",
            "isotropic",
            "--d",
            "5",
            "--r",
            "2",
            "--T",
            "3",
        ],
        vec!["--preset", "nope"],
        vec!["--preset", "fig3a", "--strategy", "greedy"],
        vec!["--preset", "fig3a", "--repeats", "0"],
        vec!["--preset", "fig3a", "--iterations", "51"],
        vec!["--preset", "fig5", "--repeats", "2"],
        vec!["--bogus-flag"],
    ] {
        assert_eq!(code(&ordlab(&args)), 2, "{args:?}");
    }
}

#[test]
fn io_errors_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let bad = blocker.join("sub").join("out.csv");
    let mut args = SMALL.to_vec();
    args.extend(["--out", bad.to_str().unwrap()]);
    assert_eq!(code(&ordlab(&args)), 4);
    let missing = dir.path().join("missing.cfg");
    assert_eq!(code(&ordlab(&["--config", missing.to_str().unwrap()])), 4);
}

#[test]
fn exit_code_mapping() {
    assert_eq!(HarnessError::BoundViolation(1).exit_code(), 3);
    assert_eq!(HarnessError::usage("x").exit_code(), 2);
}

#[test]
fn verify_passes_on_a_preset() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = ordlab(&[
        "--preset",
        "rank_dminus1",
        "--verify",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("[ok] rank-(d-1)"), "{err}");
    assert!(!err.contains("FAILED"));
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "# small sweep\ngenerator = rank_dminus1\nd = 6\nT = 4\nstrategies = mr, min-distance\nrepeats = 2\nseed = 9\n",
    )
    .unwrap();
    let out = ordlab(&["--config", cfg.to_str().unwrap(), "--seed", "100"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 2 * 4);
    assert!(text.lines().nth(1).unwrap().starts_with("mr,0,100,1,"));
}

#[test]
fn env_var_sets_the_default_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ordlab"))
        .args(["--preset", "rank_dminus1", "--repeats", "1"])
        .env("ORDLAB_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    assert!(dir.path().join("rank_dminus1.csv").is_file());
}

#[test]
fn exported_collection_reimports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tcol");
    let out = ordlab(&[
        "--generator",
        "adversarial3d",
        "--K",
        "4",
        "--strategy",
        "md",
        "--export-collection",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let c = import_collection(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(c.len(), 15);
    assert_eq!(c.dim(), 3);
}

/// Independent column-wise recomputation of mean and standard error.
fn recompute(csv: &str, strategy: &str, iteration: usize) -> (f64, f64) {
    let values: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] == strategy && f[3].parse::<usize>().unwrap() == iteration)
        .map(|f| f[4].parse().unwrap())
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

fn read_dat(path: &Path) -> Vec<(usize, f64, f64)> {
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# iteration mean stderr\n"));
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(' ').collect();
            (
                f[0].parse().unwrap(),
                f[1].parse().unwrap(),
                f[2].parse().unwrap(),
            )
        })
        .collect()
}

#[test]
fn plot_data_matches_a_recomputation_from_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("runs.csv");
    let plots = dir.path().join("plots");
    let mut args = SMALL.to_vec();
    args.extend([
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&ordlab(&args)), 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    for strategy in ["md", "random-without"] {
        let points = read_dat(&plots.join(format!("{strategy}.dat")));
        assert_eq!(points.len(), 5);
        for (it, mean, se) in points {
            let (m, s) = recompute(&text, strategy, it);
            assert!(
                (mean - m).abs() <= 1e-12 * m.abs().max(1e-300),
                "{strategy} {it}"
            );
            assert!(
                (se - s).abs() <= 1e-12 * s.abs().max(1e-300),
                "{strategy} {it}"
            );
        }
    }
}

#[test]
fn single_repeat_has_zero_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let plots = dir.path().join("plots");
    let out = ordlab(&[
        "--generator",
        "adversarial_highdim",
        "--d",
        "30",
        "--strategy",
        "md",
        "--plot",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let points = read_dat(&plots.join("md.dat"));
    assert_eq!(points.len(), 29);
    assert!(points.iter().all(|&(_, _, se)| se == 0.0));
}

fn records(text: &str) -> Vec<RunRecord> {
    let cfg = Settings::parse_str(text).unwrap().build().unwrap();
    run_experiment(&cfg).unwrap().records()
}

#[test]
fn two_half_sweeps_equal_one_full_sweep() {
    let base = "generator=anisotropic\nd=15\nr=3\nT=6\nstrategies=md,random-with,hybrid-mr";
    let full = records(&format!("{base}\nrepeats=4\nseed=42"));
    let mut halves = records(&format!("{base}\nrepeats=2\nseed=42"));
    let second = records(&format!("{base}\nrepeats=2\nseed=44"));
    halves.extend(second.into_iter().map(|mut r| {
        r.repeat += 2;
        r
    }));
    let key = |r: &RunRecord| (r.strategy.clone(), r.repeat, r.iteration);
    halves.sort_by_key(key);
    let mut sorted_full = full;
    sorted_full.sort_by_key(key);
    assert_eq!(halves, sorted_full);

    // Aggregating the concatenation matches aggregating the full sweep.
    let (a, b) = (aggregate(&halves), aggregate(&sorted_full));
    assert_eq!(a.len(), 3);
    assert_eq!(a.len(), b.len());
    for (a, b) in a.iter().zip(b.iter()) {
        assert_eq!(a.strategy, b.strategy);
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.0, q.0);
            assert!((p.1 - q.1).abs() <= 1e-15 * q.1.abs());
            assert!((p.2 - q.2).abs() <= 1e-12 * q.2.abs().max(1e-300));
        }
    }
}

#[test]
fn list_presets() {
    let out = ordlab(&["--list-presets"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig3a", "fig_rep", "fig5", "fig6", "adversarial3d"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
