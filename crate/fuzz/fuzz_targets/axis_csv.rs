#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = dissolve_core::ingest::parse_axis_csv(data, "fuzz");
});
