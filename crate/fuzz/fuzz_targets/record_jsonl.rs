#![no_main]

use libfuzzer_sys::fuzz_target;
use rmfkit::record::{parse_jsonl, write_jsonl};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = parse_jsonl(data) {
        let mut out = Vec::new();
        write_jsonl(&records, &mut out).unwrap();
        let again = parse_jsonl(out.as_slice()).expect("emitted records must parse");
        assert_eq!(again.len(), records.len());
    }
});
