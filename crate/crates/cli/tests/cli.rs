use std::path::Path;
use std::process::{Command, Output};

fn robust_potts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robust-potts"))
        .args(args)
        .env("ROBUST_POTTS_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn csv_body(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn over_cap_enumeration_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_potts(&[
        "enumerate",
        "--L",
        "5",
        "--q",
        "2",
        "--J",
        "0.7",
        "--mode",
        "wired-ghost",
        "--output.dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("enumeration edge cap of 24"), "{stderr}");
    assert!(!dir.path().join("results.csv").exists());
}

#[test]
fn config_errors_exit_nonzero() {
    let out = robust_potts(&["sample", "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ε must lie in [0,1]"));

    let out = robust_potts(&["sample", "--qq", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("qq"));

    let out = robust_potts(&["sample", "--L", "4", "--mode", "weakly-wired-ghost"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_configs_give_identical_csv_bodies() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        r#"
[model]
L_list = [3, 5]
q = 3
J = 0.6
epsilon_list = [0.2, 1.0]
mode = "weakly-wired-ghost"
[chain]
sweeps = 2000
burn_in = 200
seed = 11
streams = 2
"#,
    )
    .unwrap();
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = robust_potts(&[
            "sample",
            "--config",
            config.to_str().unwrap(),
            "--output.dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        bodies.push(csv_body(&out_dir.join("results.csv")));
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(bodies[0].lines().count(), 1 + 4);

    let out_dir = dir.path().join("c");
    let out = robust_potts(&[
        "sample",
        "--config",
        config.to_str().unwrap(),
        "--output.dir",
        out_dir.to_str().unwrap(),
        "--seed=12",
    ]);
    assert!(out.status.success());
    assert_ne!(csv_body(&out_dir.join("results.csv")), bodies[0]);
}

#[test]
fn robustness_gives_one_curve_per_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_potts(&[
        "robustness",
        "--q",
        "3",
        "--J",
        "1.2",
        "--epsilon_list",
        "[0.1, 0.5, 1.0]",
        "--L_list",
        "[3, 5]",
        "--chain.sweeps",
        "1200",
        "--burn_in",
        "200",
        "--output.dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(files.len(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let curves = summary["verdicts"]["curves"].as_array().unwrap();
    let eps: Vec<f64> = curves
        .iter()
        .map(|c| c["epsilon"].as_f64().unwrap())
        .collect();
    assert_eq!(eps, vec![0.1, 0.5, 1.0]);
    assert_eq!(summary["tables"]["results"].as_array().unwrap().len(), 6);
    assert_eq!(
        summary["rng"],
        "ChaCha8 (rand_chacha 0.9, seed_from_u64 + set_stream)"
    );
    assert!(summary["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!((summary["resolved_couplings"][0][1].as_f64().unwrap() - 1.2).abs() < 1e-15);
}

#[test]
fn selfdual_coupling_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = robust_potts(&[
        "enumerate",
        "--L",
        "3",
        "--q",
        "25",
        "--mode",
        "free",
        "--r",
        "0",
        "--epsilon",
        "0.5",
        "--output.dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let j = 6f64.ln().to_string();
    assert!(text.contains(&format!("# resolved J(q = 25) = {j}")));
    let row = text.lines().find(|l| l.starts_with("1,")).unwrap();
    assert_eq!(row.split(',').nth(3).unwrap(), j);
}
