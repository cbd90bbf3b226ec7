#![no_main]

use libfuzzer_sys::fuzz_target;
use qpn_core::scenario::Scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // A scenario that parses must also survive being turned into configs.
    if let Ok(s) = Scenario::from_toml(text) {
        let _ = s.sagnac_config();
        let _ = s.sequence_config();
        let _ = s.raman_params();
        let _ = s.trap_params();
        let _ = s.sweep_options();
        let _ = s.imaging_scene();
    }
});
