#![no_main]

use libfuzzer_sys::fuzz_target;
use relmas_core::cost::CostTable;
use relmas_core::model::ModelZoo;
use relmas_core::MasConfig;

fuzz_target!(|data: &[u8]| {
    let cfg = MasConfig::reference();
    let zoo = ModelZoo::bundled();
    for partial in [false, true] {
        if let Ok(table) = CostTable::from_csv_reader(data, &cfg, &zoo, partial) {
            assert_eq!(table.num_sas(), cfg.num_sas());
        }
    }
});
