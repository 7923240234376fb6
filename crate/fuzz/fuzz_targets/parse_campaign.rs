#![no_main]

use libfuzzer_sys::fuzz_target;
use present_dfa_cli::config::format_campaign;
use present_dfa_cli::parse_campaign;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(file) = parse_campaign(s) {
        // Accepted campaigns survive a render/parse cycle.
        let text = format_campaign(&file.campaign, file.trojan_trigger.unwrap_or(true));
        let again = parse_campaign(&text).expect("rendered campaign parses");
        assert_eq!(again.campaign, file.campaign);
    }
});
