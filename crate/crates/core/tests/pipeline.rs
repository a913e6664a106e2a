//! End-to-end runs through the config, bundle and CSV layer.

use std::path::Path;

use oam_plasmon::pipeline::{
    cmd_design_filter, cmd_mode_matrix, cmd_scan, reproduce_paper, write_bundle, BUNDLE_FILE, FIGURE_FILES,
    MODE_MATRIX_CSV_HEADER, SCAN_CSV_HEADER,
};
use oam_plasmon::{Config, Error};

fn quick(overrides: &[&str]) -> Config {
    let mut o: Vec<String> = vec!["scan.n_points=41".into()];
    o.extend(overrides.iter().map(|s| s.to_string()));
    Config::from_toml_with_overrides("", &o).unwrap()
}

#[test]
fn default_run_reproduces_after_plate_state() {
    let bundle = reproduce_paper(&quick(&[])).unwrap();
    let after = &bundle.states.after.amplitudes;
    let get = |l1: i32, l2: i32| after.iter().find(|a| a.l_signal == l1 && a.l_idler == l2).unwrap().re;
    for (got, want) in [(get(0, 0), 0.8897), (get(-1, 1), 0.3488), (get(1, -1), 0.2954)] {
        assert!((got - want).abs() < 0.01, "{got} vs {want}");
    }
    assert!(bundle.states.max_deviation_from_reference < 0.01);
    assert!((bundle.scan_before.calibrated_visibility - 0.977).abs() < 1e-4);
    assert!((bundle.scan_after.calibrated_visibility - 0.976).abs() < 1e-4);
    assert!((bundle.scan_before.ideal_visibility - 1.0).abs() < 1e-9);
    assert!(bundle.dip_shift.abs() > 0.05);
    assert!((bundle.filter.output.entropy_nats - 3f64.ln()).abs() < 1e-9);
    assert_eq!(bundle.metadata.config_hash, bundle.config.hash());
    assert!(bundle.mode_matrix_before.max_non_conserving() < 1e-12);
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    std::iter::once(BUNDLE_FILE)
        .chain(FIGURE_FILES)
        .map(|f| (f.to_string(), std::fs::read(dir.join(f)).unwrap()))
        .collect()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = quick(&[]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_bundle(&reproduce_paper(&cfg).unwrap(), a.path()).unwrap();
    write_bundle(&reproduce_paper(&cfg).unwrap(), b.path()).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa, fb);
    for (name, body) in &fa {
        let text = String::from_utf8(body.clone()).unwrap();
        assert!(!text.contains('\r'), "{name} has CR line endings");
    }
    let scan = String::from_utf8(fa[2].1.clone()).unwrap();
    assert!(scan.starts_with(SCAN_CSV_HEADER));
    assert_eq!(scan.lines().count(), 42);
}

#[test]
fn lossless_channel_leaves_state_unchanged() {
    let bundle = reproduce_paper(&quick(&["channel.eta=[1.0, 1.0, 1.0]"])).unwrap();
    for (a, b) in bundle.states.after.amplitudes.iter().zip(&bundle.states.before.amplitudes) {
        assert!((a.re - b.re).abs() < 1e-12 && (a.im - b.im).abs() < 1e-12);
    }
    assert!((bundle.states.channel_success_prob - 1.0).abs() < 1e-12);
}

#[test]
fn three_point_scan_csv() {
    let cfg = Config::from_toml_with_overrides("", &["scan.n_points=3".into(), "scan.d_min=-1.0".into(), "scan.d_max=1.0".into()])
        .unwrap();
    let csv = cmd_scan(&cfg).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SCAN_CSV_HEADER);
    assert_eq!(lines.len(), 4);
    let d: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(d, ["-1", "0", "1"]);
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), 4);
        assert!(l.split(',').nth(3).unwrap().parse::<u64>().is_ok());
    }
}

#[test]
fn isotropic_noise_scan_is_flat() {
    let csv = cmd_scan(&quick(&["epsilon_noise=1.0"])).unwrap();
    let probs: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    for p in &probs {
        assert!((p - probs[0]).abs() < 1e-9);
    }
}

#[test]
fn scan_output_is_reproducible_and_seeded() {
    let cfg = quick(&[]);
    assert_eq!(cmd_scan(&cfg).unwrap(), cmd_scan(&cfg).unwrap());
    assert_ne!(cmd_scan(&cfg).unwrap(), cmd_scan(&quick(&["run.rng_seed=99"])).unwrap());
}

#[test]
fn missing_config_names_path() {
    let err = Config::load(Path::new("/definitely/not/here.toml"), &[]).unwrap_err();
    assert!(err.is_config());
    assert!(err.to_string().contains("/definitely/not/here.toml"));
}

#[test]
fn invalid_config_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "epsilon_noise = 3.0\n").unwrap();
    let err = Config::load(&path, &[]).unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    assert!(err.to_string().contains("bad.toml"));
}

#[test]
fn mode_matrix_csv_has_both_stages() {
    let csv = cmd_mode_matrix(&Config::default()).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], MODE_MATRIX_CSV_HEADER);
    assert_eq!(lines.len(), 1 + 18);
    assert!(lines[1].starts_with("before,-1,-1,"));
    assert!(lines[18].starts_with("after,1,1,"));
}

#[test]
fn filter_json_for_measured_state() {
    let json: serde_json::Value = serde_json::from_str(&cmd_design_filter(&Config::default(), Some(0.0325)).unwrap()).unwrap();
    let eta: Vec<f64> = json["filter"]["eta"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((eta.iter().copied().fold(0.0, f64::max) - 0.0325).abs() < 1e-15);
    assert!((json["output"]["entropy_nats"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-9);
    assert!(json["filter"]["yield"].as_f64().unwrap() > 0.0);
}

#[test]
fn filter_for_maximal_input_is_uniform() {
    let cfg = Config::from_toml_with_overrides("", &["state.anti_diagonal=[1.0, 1.0, 1.0]".into()]).unwrap();
    let json: serde_json::Value = serde_json::from_str(&cmd_design_filter(&cfg, Some(0.3)).unwrap()).unwrap();
    for v in json["filter"]["eta"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 0.3).abs() < 1e-15);
    }
}

#[test]
fn product_input_cannot_be_concentrated() {
    let cfg = Config::from_toml_with_overrides("", &["state.anti_diagonal=[0.0, 1.0, 0.0]".into()]).unwrap();
    assert!(matches!(cmd_design_filter(&cfg, None), Err(Error::Domain(_))));
    assert!(matches!(cmd_design_filter(&Config::default(), Some(0.0)), Err(Error::Config(_))));
}
