#![no_main]

use libfuzzer_sys::fuzz_target;
use risuav::channel::ChannelRealization;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = ChannelRealization::from_json_str(text) {
        let again = ChannelRealization::from_json_str(&r.to_json()).expect("re-parse");
        assert_eq!(again.m_elements(), r.m_elements());
    }
});
