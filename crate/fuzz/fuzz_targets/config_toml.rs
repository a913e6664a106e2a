#![no_main]

use libfuzzer_sys::fuzz_target;
use oam_plasmon::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::from_toml_str(text) {
        // Anything accepted must also build its derived objects without panicking.
        let _ = cfg.spectrum();
        let _ = cfg.input_state();
        let _ = cfg.loss_channel();
        let _ = cfg.run_config();
        let _ = cfg.hash();
    }
});
