#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(r) = dissolve_core::experiment::SweepReport::from_csv(text) {
            let _ = r.to_markdown();
            let _ = dissolve_core::experiment::SweepReport::from_csv(&r.to_csv()).expect("csv reparses");
        }
    }
});
