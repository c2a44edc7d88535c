#![no_main]

use libfuzzer_sys::fuzz_target;
use relmas_cli::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ExperimentConfig::from_json_with(text, Vec::new()) {
            let _ = cfg.validate();
        }
    }
});
