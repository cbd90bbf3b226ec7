#![no_main]

use libfuzzer_sys::fuzz_target;
use qpn_core::io::{encode_sidecar, parse_sidecar};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(params) = parse_sidecar(text) {
        let again = parse_sidecar(&encode_sidecar(&params).unwrap()).unwrap();
        assert_eq!(again, params);
    }
});
