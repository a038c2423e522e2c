#![no_main]

use libfuzzer_sys::fuzz_target;
use pqcm_core::io::parse_state_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_state_spec(s) {
        assert_eq!(parse_state_spec(&spec.to_string()).unwrap(), spec);
        let (a, b) = spec.qubit().amplitudes();
        assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-9);
    }
});
