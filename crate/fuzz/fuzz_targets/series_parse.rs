#![no_main]

use libfuzzer_sys::fuzz_target;
use qpn_core::io::parse_series;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(values) = parse_series(&text) {
        assert!(!values.is_empty());
        assert!(values.iter().all(|v| v.is_finite()));
    }
});
