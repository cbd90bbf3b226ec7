//! Replays the checked-in fuzz seeds through the parsers on stable builds.

use std::path::PathBuf;

use qpn_core::io::{decode_pgm, encode_pgm, encode_sidecar, parse_series, parse_sidecar};
use qpn_core::scenario::Scenario;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            let bytes = std::fs::read(&path).unwrap();
            (path, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn scenario_seeds() {
    let mut parsed = 0;
    for (_, bytes) in seeds("scenario_parse") {
        if let Ok(s) = Scenario::from_toml(std::str::from_utf8(&bytes).unwrap()) {
            parsed += 1;
            let _ = (s.sagnac_config(), s.sequence_config(), s.sweep_options(), s.imaging_scene());
        }
    }
    assert!(parsed >= 1);
}

#[test]
fn series_seeds() {
    for (path, bytes) in seeds("series_parse") {
        if let Ok(v) = parse_series(&String::from_utf8_lossy(&bytes)) {
            assert!(v.iter().all(|x| x.is_finite()), "{}", path.display());
        }
    }
}

#[test]
fn pgm_seeds() {
    let mut decoded = 0;
    for (path, bytes) in seeds("pgm_decode") {
        if let Ok(frame) = decode_pgm(&bytes) {
            decoded += 1;
            assert_eq!(decode_pgm(&encode_pgm(&frame).unwrap()).unwrap(), frame, "{}", path.display());
        }
    }
    assert_eq!(decoded, 2);
}

#[test]
fn sidecar_seeds() {
    let mut parsed = 0;
    for (_, bytes) in seeds("sidecar_parse") {
        if let Ok(p) = parse_sidecar(std::str::from_utf8(&bytes).unwrap()) {
            parsed += 1;
            assert_eq!(parse_sidecar(&encode_sidecar(&p).unwrap()).unwrap(), p);
        }
    }
    assert_eq!(parsed, 1);
}

mod arbitrary_input {
    use super::*;
    use proptest::prelude::*;

    fn mutated(target: &'static str) -> impl Strategy<Value = Vec<u8>> {
        let bases: Vec<Vec<u8>> = seeds(target).into_iter().map(|(_, b)| b).collect();
        (proptest::sample::select(bases), proptest::collection::vec((any::<usize>(), any::<u8>()), 0..8))
            .prop_map(|(mut b, edits)| {
                for (at, byte) in edits {
                    if !b.is_empty() {
                        let i = at % b.len();
                        b[i] = byte;
                    }
                }
                b
            })
    }

    proptest! {
        #[test]
        fn pgm_never_panics(bytes in prop_oneof![proptest::collection::vec(any::<u8>(), 0..64), mutated("pgm_decode")]) {
            if let Ok(frame) = decode_pgm(&bytes) {
                prop_assert_eq!(decode_pgm(&encode_pgm(&frame).unwrap()).unwrap(), frame);
            }
        }

        #[test]
        fn text_parsers_never_panic(bytes in prop_oneof![
            mutated("series_parse"),
            mutated("scenario_parse"),
            mutated("sidecar_parse"),
        ]) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_series(&text);
            if let Ok(s) = Scenario::from_toml(&text) {
                let _ = (s.sagnac_config(), s.sequence_config(), s.sweep_options(), s.imaging_scene());
            }
            if let Ok(p) = parse_sidecar(&text) {
                prop_assert_eq!(parse_sidecar(&encode_sidecar(&p).unwrap()).unwrap(), p);
            }
        }
    }
}
