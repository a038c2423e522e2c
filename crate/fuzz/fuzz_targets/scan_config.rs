#![no_main]

use libfuzzer_sys::fuzz_target;
use pqcm_core::io::{emit_scan_config, parse_scan_config};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_scan_config(s) {
        // accepted configs are valid and survive a round trip
        file.config.validate().unwrap();
        assert_eq!(parse_scan_config(&emit_scan_config(&file)).unwrap(), file);
    }
});
