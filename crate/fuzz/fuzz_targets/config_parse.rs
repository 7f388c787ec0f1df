#![no_main]

use libfuzzer_sys::fuzz_target;
use rmfkit::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ExperimentConfig::parse(text) {
        let again = ExperimentConfig::parse(&cfg.to_toml()).expect("serialized config must parse");
        assert_eq!(again, cfg);
    }
});
