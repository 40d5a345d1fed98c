#![no_main]

use libfuzzer_sys::fuzz_target;
use risuav::Scenario;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // anything that loads must also validate and hash without panicking
        if let Ok(s) = Scenario::from_config_str(text) {
            assert!(s.validate().is_ok());
            let _ = s.hash();
        }
    }
});
