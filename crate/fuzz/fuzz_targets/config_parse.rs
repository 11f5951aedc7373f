#![no_main]

use libfuzzer_sys::fuzz_target;
use treewalk::config::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(c) = ExperimentConfig::parse(text) {
        let _ = c.validate();
        if let Ok(again) = c.to_toml() {
            assert_eq!(ExperimentConfig::parse(&again).unwrap(), c);
        }
    }
});
