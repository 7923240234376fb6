#![no_main]

// Arbitrary observed ciphertext pairs and assumed masks must produce a
// profile or an error, never a panic.

use libfuzzer_sys::fuzz_target;
use present_dfa::{extract_candidates, intersect_profiles, CipherState, FaultedPair};

fn word(bytes: &[u8]) -> u64 {
    let mut buf = [0u8; 8];
    buf[..bytes.len()].copy_from_slice(bytes);
    u64::from_le_bytes(buf)
}

fuzz_target!(|data: &[u8]| {
    if data.len() < 24 {
        return;
    }
    let correct = CipherState::new(word(&data[..8]));
    let mut profiles = Vec::new();
    for chunk in data[8..].chunks(16) {
        if chunk.len() < 16 {
            break;
        }
        let faulty = CipherState::new(word(&chunk[..8]));
        let packed = word(&chunk[8..]);
        let masks = std::array::from_fn(|j| ((packed >> (4 * j)) & 0xF) as u8);
        let pair = FaultedPair { plaintext: CipherState::default(), correct, faulty, masks };
        if let Ok(p) = extract_candidates(&pair) {
            assert!(p.sets().iter().all(|s| !s.is_empty()));
            profiles.push(p);
        }
    }
    let _ = intersect_profiles(&profiles);
});
