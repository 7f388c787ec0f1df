#![no_main]

use libfuzzer_sys::fuzz_target;
use rmfkit::rmf::{decode_binary, encode_binary};

fuzz_target!(|data: &[u8]| {
    if let Ok(sample) = decode_binary(data) {
        let again = decode_binary(&encode_binary(&sample)).expect("encoded sample must decode");
        assert_eq!(again, sample);
    }
});
