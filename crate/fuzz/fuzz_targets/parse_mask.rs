#![no_main]

use libfuzzer_sys::fuzz_target;
use present_dfa_cli::parse_mask;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = parse_mask(s) {
        assert!((1..=15).contains(&m));
        assert_eq!(parse_mask(&format!("{m:04b}")), Ok(m));
    }
});
