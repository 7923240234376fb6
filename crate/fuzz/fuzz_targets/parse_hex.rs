#![no_main]

use libfuzzer_sys::fuzz_target;
use present_dfa::{CipherState, KeyRegister, RoundKey};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(state) = s.parse::<CipherState>() {
        assert_eq!(state.to_string().parse::<CipherState>(), Ok(state));
        assert!(s.eq_ignore_ascii_case(&state.to_string()));
    }
    if let Ok(key) = s.parse::<KeyRegister>() {
        assert!(key.bits() < 1u128 << 80);
        assert_eq!(key.to_string().parse::<KeyRegister>(), Ok(key));
    }
    let _ = s.parse::<RoundKey>();
});
