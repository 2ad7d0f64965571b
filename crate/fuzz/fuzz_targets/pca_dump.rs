#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = dissolve_core::pca::PcaModel::from_dump(text) {
            let _ = dissolve_core::pca::PcaModel::from_dump(&m.to_dump()).expect("dump reparses");
        }
    }
});
