#![no_main]

use libfuzzer_sys::fuzz_target;
use lowlight::config::parse_config;
use lowlight::EnhanceConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text, EnhanceConfig::default()) {
            cfg.validate().unwrap();
        }
    }
});
