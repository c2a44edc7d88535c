#![no_main]

use libfuzzer_sys::fuzz_target;
use relmas_core::agent::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = Checkpoint::decode(data) {
        // anything accepted must survive a round trip
        assert_eq!(Checkpoint::decode(&ckpt.encode()).unwrap().encode(), ckpt.encode());
    }
});
