#![no_main]

use std::sync::OnceLock;

use libfuzzer_sys::fuzz_target;
use relmas_core::cost::CostTable;
use relmas_core::model::ModelZoo;
use relmas_core::workload::parse_trace_jsonl;
use relmas_core::MasConfig;

fn table() -> &'static CostTable {
    static TABLE: OnceLock<CostTable> = OnceLock::new();
    TABLE.get_or_init(|| CostTable::analytic(&ModelZoo::bundled(), &MasConfig::reference()).unwrap())
}

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_trace_jsonl(text, table());
    }
});
