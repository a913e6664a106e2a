//! Replays the checked-in fuzz corpus through the same checks the fuzz targets make.

use std::path::PathBuf;

use oam_plasmon::config::apply_override;
use oam_plasmon::Config;

fn corpus(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "empty corpus {}", dir.display());
    files.into_iter().map(|p| (p.clone(), std::fs::read_to_string(&p).unwrap())).collect()
}

#[test]
fn config_toml_corpus() {
    let mut accepted = 0;
    for (_, text) in corpus("config_toml") {
        if let Ok(cfg) = Config::from_toml_str(&text) {
            accepted += 1;
            cfg.spectrum().unwrap();
            cfg.input_state().unwrap();
            cfg.loss_channel().unwrap();
            let _ = cfg.run_config();
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn config_override_corpus() {
    for (path, text) in corpus("config_override") {
        let overrides: Vec<String> = text.lines().map(str::to_owned).collect();
        let mut table = toml::Table::new();
        for o in &overrides {
            if apply_override(&mut table, o).is_err() {
                break;
            }
        }
        if let Ok(cfg) = Config::from_toml_with_overrides("", &overrides) {
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn config_roundtrip_corpus() {
    for (path, text) in corpus("config_roundtrip") {
        let cfg = Config::from_toml_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let rendered = cfg.to_toml_string();
        let back = Config::from_toml_str(&rendered).unwrap();
        assert_eq!(cfg.hash(), back.hash());
        assert_eq!(rendered, back.to_toml_string());
    }
}
