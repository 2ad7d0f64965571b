#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = dissolve_core::ingest::parse_id_csv(data, "fuzz", true);
    let _ = dissolve_core::ingest::parse_id_csv(data, "fuzz", false);
});
