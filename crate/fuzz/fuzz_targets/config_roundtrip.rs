#![no_main]

use libfuzzer_sys::fuzz_target;
use oam_plasmon::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = Config::from_toml_str(text) else { return };
    let rendered = cfg.to_toml_string();
    let back = Config::from_toml_str(&rendered).expect("serialized config parses");
    assert_eq!(cfg.hash(), back.hash());
    assert_eq!(rendered, back.to_toml_string());
});
