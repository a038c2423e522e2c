#![no_main]

use libfuzzer_sys::fuzz_target;
use pqcm_core::io::{emit_report, parse_report};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_report(s) {
        assert_eq!(parse_report(&emit_report(&report)).unwrap(), report);
    }
});
