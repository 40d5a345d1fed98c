#![no_main]

use libfuzzer_sys::fuzz_target;
use risuav::io::{parse_phases_csv, phases_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = parse_phases_csv(text) {
        let round = parse_phases_csv(&phases_csv(&s).unwrap()).unwrap();
        assert_eq!(round, s);
    }
});
