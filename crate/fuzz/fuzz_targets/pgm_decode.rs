#![no_main]

use libfuzzer_sys::fuzz_target;
use qpn_core::io::{decode_pgm, encode_pgm};

fuzz_target!(|data: &[u8]| {
    let Ok(frame) = decode_pgm(data) else {
        return;
    };
    // Decoded counts are whole numbers within 16 bits, so re-encoding is lossless.
    let bytes = encode_pgm(&frame).expect("decoded frame re-encodes");
    assert_eq!(decode_pgm(&bytes).expect("round trip decodes"), frame);
});
