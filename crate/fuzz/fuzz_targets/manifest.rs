#![no_main]

use dissolve_core::ingest::Manifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = Manifest::parse(text) {
            let rendered = m.render();
            let again = Manifest::parse(&rendered).expect("rendered manifest reparses");
            assert_eq!(again.render(), rendered);
        }
    }
});
