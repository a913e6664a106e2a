#![no_main]

use libfuzzer_sys::fuzz_target;
use oam_plasmon::config::apply_override;
use oam_plasmon::Config;

// Input: newline-separated `key=value` overrides applied to the default config.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let overrides: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut table = toml::Table::new();
    for o in &overrides {
        if apply_override(&mut table, o).is_err() {
            break;
        }
    }
    if let Ok(cfg) = Config::from_toml_with_overrides("", &overrides) {
        cfg.validate().expect("accepted config validates");
    }
});
