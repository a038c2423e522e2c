#![no_main]

use libfuzzer_sys::fuzz_target;
use pqcm_core::io::{read_records, records_to_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = read_records(data) {
        let text = records_to_csv(&records);
        assert_eq!(read_records(text.as_bytes()).unwrap(), records);
    }
});
