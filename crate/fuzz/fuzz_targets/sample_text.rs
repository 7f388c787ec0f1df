#![no_main]

use libfuzzer_sys::fuzz_target;
use rmfkit::rmf::{decode_text, encode_text};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(sample) = decode_text(text) {
        let again = decode_text(&encode_text(&sample)).expect("encoded sample must decode");
        assert_eq!(again, sample);
    }
});
