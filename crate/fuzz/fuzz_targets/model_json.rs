#![no_main]

use libfuzzer_sys::fuzz_target;
use relmas_core::model::{parse_model_json, ModelZoo};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_model_json(text, 0);
        let _ = ModelZoo::from_json(text);
    }
});
