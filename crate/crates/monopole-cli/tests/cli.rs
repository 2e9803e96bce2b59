//! End-to-end tests of the `monopole` binary: every subcommand once, plus
//! the format, exit-code and determinism contracts.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn monopole(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monopole"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON report")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn bps_export_writes_profile_peak_and_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = monopole(
        &[
            "bps",
            "--grid",
            "9,-2,2",
            "--centre",
            "0.5,0,0",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    );
    let rep = report(&out);
    // Grid point nearest the centre is index 5 along x (origin -2, step 0.5).
    assert_eq!(rep["energy_peak"]["index"], serde_json::json!([5, 4, 4]));
    assert_eq!(rep["energy_peak"]["position"][0].as_f64().unwrap(), 0.5);

    let vol = std::fs::read_to_string(dir.path().join("bps_energy.vol")).unwrap();
    let header = vol.lines().next().unwrap();
    assert_eq!(
        header,
        "{\"nx\":9,\"ny\":9,\"nz\":9,\"origin\":[-2.0,-2.0,-2.0],\
         \"spacing\":[0.5,0.5,0.5],\"field\":\"energy_density\",\"units\":\"length^-4\"}"
    );

    let profile = std::fs::read_to_string(dir.path().join("bps_profile.csv")).unwrap();
    let mut rows = profile.lines();
    assert_eq!(rows.next().unwrap(), "r,energy_density");
    let values: Vec<f64> = rows
        .map(|row| row.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((values[0] - 2.0 / 3.0).abs() < 1e-12);
    assert!(values.windows(2).all(|w| w[1] < w[0]), "profile must decrease");
}

#[test]
fn verify_builtin_passes_every_check() {
    let out = monopole(&["verify"], &[]);
    let rep = report(&out);
    assert_eq!(rep["passed"], Value::Bool(true));
    for check in rep["checks"].as_array().unwrap() {
        assert_eq!(check["passed"], Value::Bool(true), "failing: {check}");
    }
}

#[test]
fn corrupted_volume_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_string();
    report(&monopole(&["bps", "--grid", "7,-1.5,1.5", "--out", &out_dir], &[]));

    let path = dir.path().join("bps_energy.vol");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    // Nudge one cell well past the 1e-6 agreement threshold.
    let mut parts: Vec<String> = lines[40].split(',').map(String::from).collect();
    parts[3] = format!("{}", parts[3].parse::<f64>().unwrap() + 0.01);
    lines[40] = parts.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let out = monopole(
        &["verify", "--source", "volume", "--file", path.to_str().unwrap()],
        &[],
    );
    assert_eq!(exit_code(&out), 2);
    let rep: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep["passed"], Value::Bool(false));
    assert!(String::from_utf8_lossy(&out.stderr).contains("verification failed"));
}

#[test]
fn intact_volume_verifies_clean() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_string();
    report(&monopole(
        &["bps", "--grid", "7,-1.5,1.5", "--centre", "0.2,0,0", "--out", &out_dir],
        &[],
    ));
    let vol = dir.path().join("bps_higgs.vol");
    let rep = report(&monopole(
        &["verify", "--source", "volume", "--centre", "0.2,0,0", "--file", vol.to_str().unwrap()],
        &[],
    ));
    assert_eq!(rep["passed"], Value::Bool(true));
}

#[test]
fn reports_and_volumes_are_thread_count_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_string();
    let args = ["bps", "--grid", "7,-2,2", "--out", out_dir.as_str()];

    let first = monopole(&args, &[("MONOPOLE_THREADS", "1")]);
    assert!(first.status.success());
    let vol1 = std::fs::read(dir.path().join("bps_energy.vol")).unwrap();

    let second = monopole(&args, &[("MONOPOLE_THREADS", "2")]);
    assert!(second.status.success());
    let vol2 = std::fs::read(dir.path().join("bps_energy.vol")).unwrap();

    assert_eq!(first.stdout, second.stdout, "report must be byte-identical");
    assert_eq!(vol1, vol2, "volume must be byte-identical");
}

#[test]
fn vacuum_scan_is_a_validation_error() {
    let out = monopole(&["scan", "--source", "vacuum"], &[]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("charge"));
}

#[test]
fn scan_recovers_the_monopole_centre() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("scan.csv");
    let out = monopole(
        &[
            "scan",
            "--centre",
            "0.3,-0.2,0.5",
            "--tol",
            "1e-8",
            "--tmax",
            "21.5",
            "--format",
            "csv",
            "--out",
            csv_path.to_str().unwrap(),
        ],
        &[],
    );
    let rep = report(&out);
    let centre: Vec<f64> =
        rep["centre"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in centre.iter().zip([0.3, -0.2, 0.5]) {
        assert!((got - want).abs() < 1e-3, "centre {centre:?}");
    }
    assert!(rep["reality_defect"].as_f64().unwrap() < 1e-3);

    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut rows = csv.lines();
    assert_eq!(rows.next().unwrap(), "zeta_re,zeta_im,eta_re,eta_im,residual");
    assert_eq!(rows.count(), rep["zeta_samples"].as_u64().unwrap() as usize);
}

#[test]
fn donaldson_rmap_reports_the_projected_pole() {
    let out = monopole(
        &["rmap", "--mode", "donaldson", "--centre", "0.3,-0.2,0", "--tmax", "21.5"],
        &[],
    );
    let rep = report(&out);
    assert_eq!(rep["based"], Value::Bool(true));
    assert_eq!(rep["degree"].as_u64(), Some(1));
    let poles = rep["poles"].as_array().unwrap();
    assert_eq!(poles.len(), 1);
    let (re, im) = (poles[0][0].as_f64().unwrap(), poles[0][1].as_f64().unwrap());
    assert!((re - 0.3).abs() < 1e-4 && (im + 0.2).abs() < 1e-4, "pole {re}+{im}i");
    // The single free constant is normalized away: numerator is exactly [1].
    assert_eq!(rep["numerator"], serde_json::json!([[1.0, 0.0]]));
}

#[test]
fn jarvis_rmap_degrees_for_vacuum_and_bps() {
    let vacuum = report(&monopole(&["rmap", "--mode", "jarvis", "--source", "vacuum"], &[]));
    assert_eq!(vacuum["degree"].as_u64(), Some(0));

    let bps = report(&monopole(&["rmap", "--mode", "jarvis"], &[]));
    assert_eq!(bps["degree"].as_u64(), Some(1));
    // Centred charge 1 with the conjugated-chart convention is R(ζ) = ζ.
    let p = bps["numerator"].as_array().unwrap();
    assert!(p[0][0].as_f64().unwrap().abs() < 1e-10);
    assert!((p[1][0].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn nahm_evolve_tracks_the_exact_pole_solution() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("trajectory.json");
    let rep = report(&monopole(
        &["nahm", "evolve", "--init", "pole", "--out", traj.to_str().unwrap()],
        &[],
    ));
    assert!(rep["analytic_error"].as_f64().unwrap() < 1e-8);
    assert!(rep["spectral_drift"].as_f64().unwrap() < 1e-8);
    assert_eq!(rep["charge"].as_u64(), Some(2));

    let stored: Value =
        serde_json::from_slice(&std::fs::read(&traj).unwrap()).expect("trajectory parses");
    assert_eq!(stored["k"].as_u64(), Some(2));
}

#[test]
fn nahm_curve_of_point_data_reports_its_centre() {
    let rep = report(&monopole(&["nahm", "curve", "--centre", "0.3,-0.2,0.5"], &[]));
    let centre: Vec<f64> =
        rep["centre"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (got, want) in centre.iter().zip([0.3, -0.2, 0.5]) {
        assert!((got - want).abs() < 1e-9, "centre {centre:?}");
    }
    assert!(rep["reality_defect"].as_f64().unwrap() < 1e-12);
}

#[test]
fn nahm_reconstruct_round_trips_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rep = report(&monopole(
        &[
            "nahm",
            "reconstruct",
            "--grid",
            "7,-1.5,1.5",
            "--quad-order",
            "48",
            "--centre",
            "0.2,0.1,-0.3",
            "--out",
            dir.path().to_str().unwrap(),
        ],
        &[],
    ));
    assert_eq!(rep["passed"], Value::Bool(true));
    assert!(rep["max_higgs_deviation"].as_f64().unwrap() < 1e-6);
    assert_eq!(rep["failures"].as_u64(), Some(0));

    let vol = std::fs::read_to_string(dir.path().join("nahm_higgs.vol")).unwrap();
    assert!(vol.lines().next().unwrap().contains("\"field\":\"higgs_norm\""));
    assert_eq!(vol.lines().count(), 1 + 7 * 7 * 7);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "[grid]\nn = 5\nmin = -1\nmax = 1\n\n[run]\nseed = 7\n").unwrap();

    let out_dir = dir.path().join("export");
    let rep = report(&monopole(
        &[
            "bps",
            "--config",
            cfg_path.to_str().unwrap(),
            "--grid",
            "7,-2,2",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    ));
    assert_eq!(rep["grid"]["counts"], serde_json::json!([7, 7, 7]));
    assert_eq!(rep["grid"]["origin"], serde_json::json!([-2.0, -2.0, -2.0]));
}

#[test]
fn malformed_flags_and_configs_exit_2() {
    let out = monopole(&["bps", "--grid", "5", "--out", "/tmp/unused"], &[]);
    assert_eq!(exit_code(&out), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    std::fs::write(&cfg_path, "[grid]\nresolution = 9\n").unwrap();
    let out = monopole(
        &["verify", "--config", cfg_path.to_str().unwrap()],
        &[],
    );
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown config key"));
}

#[test]
fn missing_out_directory_is_reported() {
    let out = monopole(&["bps"], &[]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

#[test]
fn missing_volume_file_is_an_io_error() {
    let missing = Path::new("/tmp/definitely-not-here.vol");
    let out = monopole(
        &["verify", "--source", "volume", "--file", missing.to_str().unwrap()],
        &[],
    );
    assert_eq!(exit_code(&out), 4);
}
