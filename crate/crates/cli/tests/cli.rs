//! End-to-end tests of the command-line surface: file outputs, determinism,
//! exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noisy-lpm"))
}

fn run_ok(args: &[&str], cwd: &Path) {
    let out = bin().args(args).current_dir(cwd).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn simulate_writes_three_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--n", "60", "--seed", "7", "--out-dir", "net",
    ];
    run_ok(&args, dir.path());
    for f in ["net/edges.txt", "net/true_positions.csv", "net/params.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let first = std::fs::read(dir.path().join("net/edges.txt")).unwrap();
    let first_pos = std::fs::read(dir.path().join("net/true_positions.csv")).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    run_ok(&args, dir2.path());
    assert_eq!(first, std::fs::read(dir2.path().join("net/edges.txt")).unwrap());
    assert_eq!(
        first_pos,
        std::fs::read(dir2.path().join("net/true_positions.csv")).unwrap()
    );
}

#[test]
fn simulate_replicates_write_density_summary() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "simulate", "--n", "40", "--seed", "3", "--replicates", "4", "--out-dir", "reps",
        ],
        dir.path(),
    );
    assert!(dir.path().join("reps/densities.csv").exists());
    assert!(dir.path().join("reps/rep_003/edges.txt").exists());
}

#[test]
fn fit_noisy_and_exact_produce_declared_draw_counts() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["simulate", "--n", "25", "--seed", "5", "--out-dir", "net"],
        dir.path(),
    );
    for (mode, out) in [("exact", "fe"), ("noisy", "fn")] {
        run_ok(
            &[
                "fit", "--edges", "net/edges.txt", "--mode", mode, "--grid-m", "6",
                "--iterations", "300", "--burn-in", "100", "--thin", "10",
                "--seed", "9", "--out-dir", out,
            ],
            dir.path(),
        );
        let text = std::fs::read_to_string(dir.path().join(out).join("summary.json")).unwrap();
        let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(summary["data"]["n_draws"], 20);
        // Per-sweep mean wall clock for both phases is reported.
        assert!(summary["data"]["timings"]["mean_sweep_secs_sampling"].as_f64().unwrap() > 0.0);
        assert!(summary["data"]["timings"]["mean_sweep_secs_burn_in"].as_f64().unwrap() > 0.0);
        assert!(summary["meta"]["config_hash"].as_str().unwrap().len() == 64);

        let psi = std::fs::read_to_string(dir.path().join(out).join("psi_draws.csv")).unwrap();
        let rows = psi.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 21, "header plus 20 draws");
        assert!(dir.path().join(out).join("positions_mean.csv").exists());
        assert!(dir.path().join(out).join("z_draws.csv").exists());
        assert!(dir.path().join(out).join("idmap.json").exists());
    }
}

#[test]
fn fit_with_true_reference_uses_it() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &["simulate", "--n", "20", "--seed", "6", "--out-dir", "net"],
        dir.path(),
    );
    run_ok(
        &[
            "fit", "--edges", "net/edges.txt", "--mode", "exact", "--iterations", "200",
            "--burn-in", "50", "--thin", "5", "--ref-positions", "net/true_positions.csv",
            "--out-dir", "fit",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("fit/summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(summary["data"]["reference"], "true-positions");
}

#[test]
fn bounds_zero_box_side_gives_zero_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bounds", "--n", "50", "--b", "0"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("bounds JSON on stdout");
    let report = &doc["reports"][0];
    for key in [
        "lr_error_position",
        "lr_error_param",
        "acc_error_position",
        "acc_error_param",
    ] {
        assert_eq!(report[key], 0.0, "{key} nonzero at b = 0");
    }
    assert_eq!(report["tv_bound"], 0.0);
}

#[test]
fn bounds_m_sweep_is_monotone() {
    // Small n keeps the error factor unsaturated so the decrease is strict.
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("tight.toml");
    std::fs::write(
        &config,
        "[model]\nlink = \"hoff-logit\"\npsi_bounds = [[-1.0, 1.0]]\npsi_prior_std = [10.0]\nprop_std_psi = [0.5]\nprop_std_z = 0.5\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "bounds", "--n", "5", "--m", "8,12,16", "--config",
            config.to_str().unwrap(),
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let bounds: Vec<f64> = (0..3)
        .map(|i| doc["reports"][i]["lr_error_position"].as_f64().unwrap())
        .collect();
    assert!(
        bounds[0] > bounds[1] && bounds[1] > bounds[2],
        "not monotone: {bounds:?}"
    );
}

#[test]
fn bounds_certify_runs_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bounds", "--n", "6", "--m", "8", "--certify"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["certification"]["violations"], 0);
}

#[test]
fn config_errors_exit_2_and_data_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // tau outside (0,1): configuration error.
    let out = bin()
        .args(["bounds", "--n", "10", "--m", "8", "--tau", "1.5"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // Missing edge file: data error.
    let out = bin()
        .args(["fit", "--edges", "nope.txt", "--iterations", "10", "--burn-in", "1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Malformed edge file: data error.
    std::fs::write(dir.path().join("bad.txt"), "0 1\nfoo bar\n").unwrap();
    let out = bin()
        .args(["fit", "--edges", "bad.txt", "--iterations", "10", "--burn-in", "1"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    // Invalid sampler config: configuration error (checked before data).
    std::fs::write(dir.path().join("ok.txt"), "0 1\n1 2\n").unwrap();
    let out = bin()
        .args(["fit", "--edges", "ok.txt", "--iterations", "10", "--burn-in", "20"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_study1_and_chains_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "compare", "study1", "--n", "40", "--replicates", "3", "--m-list", "4,8",
            "--seed", "11", "--out", "study1.csv",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("study1.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 1 + 3 * 2, "header plus replicate×grid rows");

    run_ok(
        &["simulate", "--n", "20", "--seed", "13", "--out-dir", "net"],
        dir.path(),
    );
    run_ok(
        &[
            "fit", "--edges", "net/edges.txt", "--mode", "exact", "--iterations", "300",
            "--burn-in", "100", "--thin", "10", "--seed", "17", "--out-dir", "fit",
        ],
        dir.path(),
    );
    // A fit compared against itself: zero RMSE.
    run_ok(
        &[
            "compare", "chains", "--fit-a", "fit", "--fit-b", "fit",
            "--truth", "net/true_positions.csv", "--out-dir", "cmp",
        ],
        dir.path(),
    );
    let rmse = std::fs::read_to_string(dir.path().join("cmp/rmse.csv")).unwrap();
    let a_vs_b: f64 = rmse
        .lines()
        .find(|l| l.starts_with("a_vs_b"))
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(a_vs_b < 1e-12, "self-comparison RMSE {a_vs_b}");
    assert!(dir.path().join("cmp/psi_summary.csv").exists());
    assert!(dir.path().join("cmp/edge_prob_scatter.csv").exists());
}

#[test]
fn bench_emits_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "bench", "--n-list", "30", "--m-list", "4", "--sweeps", "20",
            "--seed", "19", "--out", "bench.csv",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap();
    assert!(header.starts_with("mode,n,m,sweeps,total_secs"));
    assert_eq!(lines.count(), 2, "exact plus one noisy row");
}
