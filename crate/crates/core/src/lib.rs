//! PRESENT-80 with a simulated fault-injecting hardware trojan and the
//! multiple-fault differential fault analysis that recovers the 80-bit key
//! from two faulty ciphertexts and a 2^16 search.
//!
//! - [`cipher`]: the block cipher, its key schedule and their inverses.
//! - [`trojan`]: fault specs, trigger lines and faulty encryption.
//! - [`dfa`]: difference tables, candidate intersection and key recovery.

pub mod cipher;
pub mod dfa;
pub mod trojan;

pub use cipher::{
    decrypt, encrypt, encrypt_traced, key_schedule, CipherState, KeyRegister, ParseHexError, Present80,
    RoundCounter, RoundKey, RoundTrace,
};
pub use dfa::{
    analyze, extract_candidates, intersect_profiles, output_differences, recover_last_round_key,
    recover_master_key, run_attack, run_attack_with_trigger, AttackRun, AttackTranscript, CandidateProfile,
    DfaError, DifferenceTable, FaultedPair, Intersection, NibbleSet,
};
pub use trojan::{
    encrypt_with_faults, expected_input_masks, resolve_trigger, FaultSpec, InjectionCampaign, TriggerState,
    TrojanDevice, TrojanError,
};
