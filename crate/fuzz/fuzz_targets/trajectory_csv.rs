#![no_main]

use libfuzzer_sys::fuzz_target;
use risuav::io::{parse_trajectory_csv, trajectory_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_trajectory_csv(text) {
        let round = parse_trajectory_csv(&trajectory_csv(&t).unwrap()).unwrap();
        assert_eq!(round, t);
    }
});
