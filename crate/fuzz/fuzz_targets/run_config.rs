#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = dissolve_core::config::RunConfig::parse(text) {
            let again = dissolve_core::config::RunConfig::parse(&cfg.to_document().render())
                .expect("resolved config reparses");
            assert_eq!(again, cfg);
        }
    }
});
