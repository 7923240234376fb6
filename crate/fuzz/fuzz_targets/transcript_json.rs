#![no_main]

use libfuzzer_sys::fuzz_target;
use present_dfa_cli::Transcript;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(t) = Transcript::from_json(s) {
        let _ = t.to_json();
        let _ = t.summary();
    }
});
