//! End-to-end runs of the binary: every subcommand once, at desk scale,
//! checking the files it promises to emit.

use std::path::Path;
use std::process::Command;

fn rfhnd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rfhnd"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("binary runs");
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(out.status.success(), "command failed.\nstdout: {stdout}\nstderr: {stderr}");
    stdout
}

fn lines_of(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|_| panic!("missing {}", path.display()))
        .lines()
        .map(str::to_string)
        .collect()
}

#[test]
fn pipeline_gen_noise_curvature_flow_diffuse_train() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let data = out.join("sbm.json");

    run_ok(rfhnd()
        .args(["--seed", "3", "--out-dir"])
        .arg(out)
        .args(["gen", "--alpha", "2", "--n-per-class", "60", "--edges", "40", "--edge-size", "8", "--feature-dim", "6", "--out"])
        .arg(&data));
    assert!(data.exists());
    assert!(out.join("sbm.features.csv").exists());

    // Noise round: mask features, then perturb the structure.
    let masked = out.join("masked.json");
    run_ok(rfhnd()
        .args(["--seed", "5", "--out-dir"])
        .arg(out)
        .args(["noise", "--kind", "mask", "--rate", "0.2", "--in"])
        .arg(&data)
        .arg("--out")
        .arg(&masked));
    let structured = out.join("structured.json");
    run_ok(rfhnd()
        .args(["--seed", "5", "--out-dir"])
        .arg(out)
        .args(["noise", "--kind", "structure", "--rate", "0.3", "--in"])
        .arg(&data)
        .arg("--out")
        .arg(&structured));
    assert!(masked.exists() && structured.exists());

    // Curvature table.
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["curvature", "--in"])
        .arg(&data)
        .args(["--kind", "forman", "--attribute-weights"]));
    let curv = lines_of(&out.join("curvature.csv"));
    assert_eq!(curv[0], "edge_id,size,weight,kappa");
    assert_eq!(curv.len(), 41);
    assert!(out.join("curvature.meta.json").exists());

    // Attribute-mode flow: trajectory plus both reports.
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["flow", "--in"])
        .arg(&data)
        .args(["--curvature", "forman", "--dt", "0.05", "--steps", "30", "--delta", "0.01"]));
    let traj = lines_of(&out.join("flow_trajectory.csv"));
    assert_eq!(traj[0], "t,edge_id,w,kappa");
    assert_eq!(traj.len(), 1 + 31 * 40);
    assert!(out.join("energy_report.json").exists());
    assert!(out.join("convergence_report.json").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("energy_report.json")).unwrap())
            .unwrap();
    let mean = report["mean_energy"].as_f64().unwrap();
    assert!(mean >= report["b2"].as_f64().unwrap() - 1e-9);
    assert!(mean <= report["b1"].as_f64().unwrap() + 1e-9);

    // Pure weight flow still writes a trajectory and a convergence report.
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["flow", "--mode", "weight", "--in"])
        .arg(&data)
        .args(["--dt", "0.01", "--steps", "20"]));

    // Diffusion with snapshots.
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["diffuse", "--in"])
        .arg(&data)
        .args(["--mode", "analytic", "--steps", "10", "--tau", "0.05", "--snapshots", "0,10"]));
    let diff = lines_of(&out.join("diffuse.csv"));
    assert_eq!(diff[0], "step,energy,max_row_sum,min_w,max_w");
    assert_eq!(diff.len(), 12);
    assert!(out.join("snapshot_0000.csv").exists());
    assert!(out.join("snapshot_0010.csv").exists());

    // Learned-mode diffuse exercises the callback provider.
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["diffuse", "--in"])
        .arg(&data)
        .args(["--mode", "learned", "--steps", "4", "--tau", "0.05", "--force"]));

    // Training emits metrics plus a parameter snapshot the loader accepts.
    run_ok(rfhnd()
        .args(["--seed", "1", "--out-dir"])
        .arg(out)
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--epochs", "30", "--steps", "2"]));
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("train_metrics.json")).unwrap())
            .unwrap();
    assert!(metrics["test_accuracy"].as_f64().unwrap() >= 0.0);
    let params = rfhnd::neural::load_params(out.join("params.rfnp")).unwrap();
    assert!(params.encoder.w.is_finite());

    // Ablation switch parses.
    run_ok(rfhnd()
        .args(["--seed", "1", "--out-dir"])
        .arg(out)
        .args(["train", "--dataset"])
        .arg(&data)
        .args(["--epochs", "5", "--ablation", "no-both", "--model", "baseline"]));
}

#[test]
fn complexity_subcommand_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let stdout = run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args(["complexity", "--sizes", "100,200,400", "--edge-size", "8", "--feature-dim", "8", "--n-per-class", "40"]));
    assert!(stdout.contains("slope"));
    let rows = lines_of(&out.join("complexity.csv"));
    assert_eq!(rows[0], "m,seconds_per_step,repeats");
    assert_eq!(rows.len(), 4);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("complexity.meta.json")).unwrap())
            .unwrap();
    assert!(meta["config"]["slope"].as_f64().is_some());
    assert!(meta["git_hash"].as_str().is_some());
}

#[test]
fn oversmooth_csv_lists_requested_depths_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args([
            "oversmooth",
            "--depths",
            "2,4,10,20,30,40",
            "--seeds",
            "1",
            "--epochs",
            "3",
            "--n-per-class",
            "40",
            "--edges",
            "30",
        ]));
    let rows = lines_of(&out.join("oversmooth.csv"));
    assert_eq!(rows[0], "model,depth,seed,accuracy,dirichlet_energy");
    for depth in ["2", "4", "10", "20", "30", "40"] {
        for model in ["rfhnd", "baseline"] {
            assert!(
                rows.iter().any(|r| r.starts_with(&format!("{model},{depth},"))),
                "missing row for {model} at depth {depth}"
            );
        }
    }
    // Depth-0 rows carry the initial-feature energy.
    assert!(rows.iter().any(|r| r.starts_with("rfhnd,0,")));
}

#[test]
fn robustness_rate_zero_equals_clean_run_and_grid_is_verbatim() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    run_ok(rfhnd()
        .args(["--out-dir"])
        .arg(out)
        .args([
            "robustness",
            "--rates",
            "0,0.1,0.2,0.3,0.4",
            "--kinds",
            "mask",
            "--seeds",
            "2",
            "--epochs",
            "10",
            "--n-per-class",
            "40",
            "--edges",
            "30",
        ]));
    let rows = lines_of(&out.join("robustness.csv"));
    for rate in ["0.1", "0.2", "0.3", "0.4"] {
        assert!(rows.iter().any(|r| r.contains(&format!(",mask,{rate},"))));
    }
    // Two rate-0 runs with the same seed are the clean run twice.
    let zero_rows: Vec<&String> = rows.iter().filter(|r| r.contains(",mask,0,")).collect();
    assert!(!zero_rows.is_empty());
    assert!(out.join("robustness_summary.csv").exists());
}

/// Desk-scale copy of the generator's file contract: a large SBM dataset
/// round-trips load -> save -> load with identical bytes.
#[test]
fn large_sbm_file_roundtrips_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = rfhnd::synthgen::SbmConfig {
        nodes_per_class: 2625,
        num_edges: 700,
        edge_size: 15,
        alpha: 3,
        feature_dim: 8,
        seed: 12,
        ..Default::default()
    };
    let ds = rfhnd::synthgen::generate_sbm(&cfg).unwrap();
    assert_eq!(ds.hypergraph.num_nodes(), 5250);
    let first = out.join("big.json");
    ds.save(&first).unwrap();
    let loaded = rfhnd::hypergraph::Dataset::load(&first).unwrap();
    let second_dir = tempfile::tempdir().unwrap();
    let second = second_dir.path().join("big.json");
    loaded.save(&second).unwrap();
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    assert_eq!(
        std::fs::read(out.join("big.features.csv")).unwrap(),
        std::fs::read(second_dir.path().join("big.features.csv")).unwrap()
    );
}
