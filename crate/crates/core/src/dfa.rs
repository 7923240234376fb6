//! Differential fault analysis of the last PRESENT-80 round.
//!
//! A fault on the round-30 S-layer output reaches the round-31 S-layer input
//! as a known per-nibble XOR mask. Undoing the final P-layer on the correct
//! and faulty ciphertexts gives the round-31 S-layer output difference of
//! every nibble (the whitening key cancels). For each nibble the difference
//! table of its mask lists the inputs consistent with that difference;
//! intersecting the lists from runs with different masks leaves the single
//! true input. From the 16 inputs the post-whitening key follows directly,
//! and the 16 register bits it does not cover are brute-forced against the
//! known plaintext/ciphertext pair.

use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::cipher::{
    inv_player, invert_key_register, player, sbox_layer, CipherState, KeyRegister, Present80, RoundCounter,
    RoundKey, ROUNDS, ROUND_KEYS, SBOX,
};
use crate::trojan::{expected_input_masks, FaultSpec, InjectionCampaign, TrojanDevice, TrojanError};

/// Number of register bits left for exhaustive search once the
/// post-whitening key is known.
pub const SEARCH_BITS: u32 = 16;

/// Upper bound on candidates tried by [`recover_master_key`].
pub const SEARCH_SPACE: u32 = 1 << SEARCH_BITS;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DfaError {
    #[error("fault mask must be a nonzero 4-bit value, got {0:#x}")]
    InvalidMask(u8),
    #[error("faulty ciphertext equals the correct one; the fault did not take effect")]
    EmptyInformation,
    #[error("nibble {nibble}: difference {delta:04b} is impossible under mask {mask:04b}")]
    EmptyCandidateSet { nibble: usize, mask: u8, delta: u8 },
    #[error("candidate sets for nibble {nibble} have an empty intersection")]
    ContradictoryProfiles { nibble: usize },
    #[error("no candidate profiles to intersect")]
    NoProfiles,
    #[error("after {runs} faulty encryptions some nibbles are still ambiguous")]
    Underdetermined { runs: usize, residual: Box<CandidateProfile> },
    #[error("none of the {tested} key candidates reproduces the known ciphertext")]
    NoCandidateFound { tested: u32 },
    #[error("key search needs at least one known plaintext/ciphertext pair")]
    NoKnownPair,
    #[error(transparent)]
    Fault(#[from] TrojanError),
}

/// A subset of `0..16`, one bit per value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct NibbleSet(u16);

impl NibbleSet {
    pub const EMPTY: Self = Self(0);
    pub const FULL: Self = Self(u16::MAX);

    pub const fn from_bits(bits: u16) -> Self {
        Self(bits)
    }

    pub const fn bits(self) -> u16 {
        self.0
    }

    pub fn insert(&mut self, v: u8) {
        self.0 |= 1 << (v & 0xF);
    }

    pub fn contains(self, v: u8) -> bool {
        v < 16 && self.0 & (1 << v) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    /// The only element, if there is exactly one.
    pub fn single(self) -> Option<u8> {
        (self.len() == 1).then(|| self.0.trailing_zeros() as u8)
    }

    pub fn iter(self) -> impl Iterator<Item = u8> {
        (0..16u8).filter(move |&v| self.contains(v))
    }
}

impl FromIterator<u8> for NibbleSet {
    fn from_iter<I: IntoIterator<Item = u8>>(iter: I) -> Self {
        let mut s = Self::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

impl fmt::Display for NibbleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v:X}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for NibbleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// One line of a difference table: `I`, `I' = I ^ m`, `O = S(I)`,
/// `O' = S(I')` and `delta = O ^ O'`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DifferenceRow {
    pub input: u8,
    pub faulty_input: u8,
    pub output: u8,
    pub faulty_output: u8,
    pub delta: u8,
}

/// For one input mask, the inputs producing each output difference.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct DifferenceTable {
    mask: u8,
    sbox: [u8; 16],
    by_delta: [NibbleSet; 16],
}

impl DifferenceTable {
    pub fn build(mask: u8) -> Result<Self, DfaError> {
        Self::with_sbox(&SBOX, mask)
    }

    /// Builds the table for an arbitrary 4-bit S-box.
    pub fn with_sbox(sbox: &[u8; 16], mask: u8) -> Result<Self, DfaError> {
        if mask == 0 || mask > 0xF {
            return Err(DfaError::InvalidMask(mask));
        }
        let mut by_delta = [NibbleSet::EMPTY; 16];
        for input in 0..16u8 {
            let delta = (sbox[input as usize] ^ sbox[(input ^ mask) as usize]) & 0xF;
            by_delta[delta as usize].insert(input);
        }
        Ok(Self { mask, sbox: *sbox, by_delta })
    }

    pub fn mask(&self) -> u8 {
        self.mask
    }

    /// Inputs consistent with output difference `delta`.
    pub fn candidates(&self, delta: u8) -> NibbleSet {
        self.by_delta[(delta & 0xF) as usize]
    }

    /// All 16 rows ordered by input.
    pub fn rows(&self) -> impl Iterator<Item = DifferenceRow> + '_ {
        (0..16u8).map(move |input| {
            let faulty_input = input ^ self.mask;
            let output = self.sbox[input as usize];
            let faulty_output = self.sbox[faulty_input as usize];
            DifferenceRow { input, faulty_input, output, faulty_output, delta: output ^ faulty_output }
        })
    }
}

fn table_for(mask: u8) -> DifferenceTable {
    DifferenceTable::build(mask).expect("mask checked nonzero")
}

/// Candidate round-31 S-layer inputs, one set per nibble.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CandidateProfile {
    sets: [NibbleSet; 16],
}

impl Default for CandidateProfile {
    fn default() -> Self {
        Self::full()
    }
}

impl CandidateProfile {
    /// No information: every nibble may be anything.
    pub fn full() -> Self {
        Self { sets: [NibbleSet::FULL; 16] }
    }

    pub fn from_sets(sets: [NibbleSet; 16]) -> Self {
        Self { sets }
    }

    pub fn sets(&self) -> &[NibbleSet; 16] {
        &self.sets
    }

    pub fn nibble(&self, j: usize) -> NibbleSet {
        self.sets[j]
    }

    /// The determined state if every nibble has exactly one candidate.
    pub fn unique(&self) -> Option<CipherState> {
        let mut nibbles = [0u8; 16];
        for (n, set) in nibbles.iter_mut().zip(self.sets) {
            *n = set.single()?;
        }
        Some(CipherState::from_nibbles(nibbles))
    }

    /// log2 of the number of states still consistent with the profile.
    pub fn remaining_bits(&self) -> f64 {
        self.sets.iter().map(|s| (s.len() as f64).log2()).sum()
    }
}

/// A correct/faulty ciphertext pair and the round-31 input masks the
/// attacker assumes were in effect.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FaultedPair {
    pub plaintext: CipherState,
    pub correct: CipherState,
    pub faulty: CipherState,
    pub masks: [u8; 16],
}

impl FaultedPair {
    /// Pair whose masks come from the fault specs of a chosen-fault run.
    pub fn for_faults(
        plaintext: CipherState,
        correct: CipherState,
        faulty: CipherState,
        faults: &[FaultSpec],
    ) -> Self {
        Self { plaintext, correct, faulty, masks: expected_input_masks(faults) }
    }
}

/// Round-31 S-layer output differences: `P^-1(C') ^ P^-1(C)` per nibble.
pub fn output_differences(c: CipherState, c_faulty: CipherState) -> [u8; 16] {
    (inv_player(c_faulty) ^ inv_player(c)).nibbles()
}

pub fn extract_candidates(pair: &FaultedPair) -> Result<CandidateProfile, DfaError> {
    if pair.correct == pair.faulty && pair.masks.iter().any(|&m| m != 0) {
        return Err(DfaError::EmptyInformation);
    }
    let deltas = output_differences(pair.correct, pair.faulty);
    let mut sets = [NibbleSet::FULL; 16];
    for (nibble, set) in sets.iter_mut().enumerate() {
        let (mask, delta) = (pair.masks[nibble] & 0xF, deltas[nibble]);
        *set = match (mask, delta) {
            (0, 0) => NibbleSet::FULL,
            // An undisturbed input cannot change the output.
            (0, _) => NibbleSet::EMPTY,
            _ => table_for(mask).candidates(delta),
        };
        if set.is_empty() {
            return Err(DfaError::EmptyCandidateSet { nibble, mask, delta });
        }
    }
    Ok(CandidateProfile { sets })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Intersection {
    /// Every nibble is pinned; the round-31 S-layer input state.
    Unique(CipherState),
    /// Some nibbles still have more than one candidate.
    Residual(CandidateProfile),
}

pub fn intersect_profiles(profiles: &[CandidateProfile]) -> Result<Intersection, DfaError> {
    let (first, rest) = profiles.split_first().ok_or(DfaError::NoProfiles)?;
    let mut acc = *first;
    for p in rest {
        for (a, b) in acc.sets.iter_mut().zip(p.sets) {
            *a = a.intersection(b);
        }
    }
    if let Some(nibble) = acc.sets.iter().position(|s| s.is_empty()) {
        return Err(DfaError::ContradictoryProfiles { nibble });
    }
    Ok(match acc.unique() {
        Some(state) => Intersection::Unique(state),
        None => Intersection::Residual(acc),
    })
}

/// Post-whitening key from the ciphertext and the round-31 S-layer input.
pub fn recover_last_round_key(c: CipherState, s_inputs: CipherState) -> RoundKey {
    RoundKey::new((c ^ player(sbox_layer(s_inputs))).bits())
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct KeySearch {
    pub master: KeyRegister,
    /// Position of the winning candidate in ascending search order, plus one.
    pub candidates_tested: u32,
}

pub fn recover_master_key(
    last_round_key: RoundKey,
    known_pt: CipherState,
    known_ct: CipherState,
) -> Result<KeySearch, DfaError> {
    recover_master_key_with(last_round_key, &[(known_pt, known_ct)])
}

/// Tries all 2^16 values of register bits `k15..k0` behind the final round
/// key, walking each candidate register back to a master key and checking it
/// against every known pair. The lowest verifying candidate wins regardless
/// of how the range is split across threads.
pub fn recover_master_key_with(
    last_round_key: RoundKey,
    known: &[(CipherState, CipherState)],
) -> Result<KeySearch, DfaError> {
    if known.is_empty() {
        return Err(DfaError::NoKnownPair);
    }
    (0..SEARCH_SPACE)
        .into_par_iter()
        .find_map_first(|low| {
            let cipher = candidate_cipher(last_round_key, low as u16);
            known
                .iter()
                .all(|&(p, c)| cipher.0.encrypt(p) == c)
                .then_some(KeySearch { master: cipher.1, candidates_tested: low + 1 })
        })
        .ok_or(DfaError::NoCandidateFound { tested: SEARCH_SPACE })
}

// Rebuilds the whole schedule from the final register state, collecting the
// round keys on the way back to the master key.
fn candidate_cipher(last_round_key: RoundKey, low: u16) -> (Present80, KeyRegister) {
    let mut reg = KeyRegister::from_parts(last_round_key.bits(), low);
    let mut keys = [RoundKey::default(); ROUND_KEYS];
    keys[ROUNDS] = reg.round_key();
    for rc in RoundCounter::all().rev() {
        reg = invert_key_register(reg, rc);
        keys[rc.value() as usize - 1] = reg.round_key();
    }
    (Present80::from_round_keys(keys), reg)
}

/// One faulty encryption and what the attacker learned from it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackRun {
    pub faults: Vec<FaultSpec>,
    pub pair: FaultedPair,
    pub deltas: [u8; 16],
    pub profile: CandidateProfile,
    /// Intersection of all profiles so far.
    pub accumulated: CandidateProfile,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackTranscript {
    pub plaintext: CipherState,
    pub ciphertext: CipherState,
    pub runs: Vec<AttackRun>,
    pub round31_inputs: CipherState,
    pub last_round_key: RoundKey,
    pub candidates_tested: u32,
    pub master_key: KeyRegister,
    pub duration: Duration,
}

impl AttackTranscript {
    pub fn faulty_encryptions(&self) -> usize {
        self.runs.len()
    }
}

/// Simulates the trojan-assisted attack on `master` and recovers it.
pub fn run_attack(
    master: KeyRegister,
    plaintext: CipherState,
    campaign: &InjectionCampaign,
) -> Result<AttackTranscript, DfaError> {
    run_attack_with_trigger(master, plaintext, campaign, true)
}

/// As [`run_attack`], with the trojan trigger line held at the given level.
/// The attacker still assumes the campaign's masks, so a low trigger ends in
/// [`DfaError::EmptyInformation`].
pub fn run_attack_with_trigger(
    master: KeyRegister,
    plaintext: CipherState,
    campaign: &InjectionCampaign,
    trojan_trigger: bool,
) -> Result<AttackTranscript, DfaError> {
    let start = Instant::now();
    let device = TrojanDevice::new(master, campaign.clone());
    let correct = Present80::new(master).encrypt(plaintext);
    let faulty_runs = (0..campaign.len()).map(|run| {
        let faulty = device.encrypt_run(plaintext, run, trojan_trigger);
        (campaign.insertions()[run].clone(), faulty)
    });
    let mut transcript = analyze(plaintext, correct, faulty_runs)?;
    transcript.duration = start.elapsed();
    Ok(transcript)
}

/// Attack steps on observed data: feeds faulty ciphertexts (with the fault
/// specs the attacker chose) until every round-31 input is pinned, then
/// derives the last round key and searches for the master key. Runs beyond
/// the one that completes the intersection are not consumed.
pub fn analyze<I>(plaintext: CipherState, correct: CipherState, faulty_runs: I) -> Result<AttackTranscript, DfaError>
where
    I: IntoIterator<Item = (Vec<FaultSpec>, CipherState)>,
{
    let start = Instant::now();
    let mut runs: Vec<AttackRun> = Vec::new();
    let mut accumulated = CandidateProfile::full();
    let mut pinned = None;
    for (faults, faulty) in faulty_runs {
        let pair = FaultedPair::for_faults(plaintext, correct, faulty, &faults);
        let profile = extract_candidates(&pair)?;
        let step = intersect_profiles(&[accumulated, profile])?;
        accumulated = match step {
            Intersection::Unique(_) => intersect_sets(&accumulated, &profile),
            Intersection::Residual(r) => r,
        };
        let deltas = output_differences(correct, faulty);
        runs.push(AttackRun { faults, pair, deltas, profile, accumulated });
        if let Intersection::Unique(state) = step {
            pinned = Some(state);
            break;
        }
    }
    let Some(round31_inputs) = pinned else {
        return Err(DfaError::Underdetermined { runs: runs.len(), residual: Box::new(accumulated) });
    };
    let last_round_key = recover_last_round_key(correct, round31_inputs);
    let search = recover_master_key(last_round_key, plaintext, correct)?;
    Ok(AttackTranscript {
        plaintext,
        ciphertext: correct,
        runs,
        round31_inputs,
        last_round_key,
        candidates_tested: search.candidates_tested,
        master_key: search.master,
        duration: start.elapsed(),
    })
}

fn intersect_sets(a: &CandidateProfile, b: &CandidateProfile) -> CandidateProfile {
    CandidateProfile { sets: std::array::from_fn(|j| a.sets[j].intersection(b.sets[j])) }
}

/// How well a pair of fault masks pins an S-box input.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct MaskPairReport {
    pub first: u8,
    pub second: u8,
    /// Number of true inputs (out of 16) for which the two candidate sets
    /// intersect in exactly that input.
    pub unique_inputs: u8,
    /// Largest intersection over all true inputs.
    pub worst_case: u8,
}

impl MaskPairReport {
    pub fn always_unique(&self) -> bool {
        self.unique_inputs == 16
    }
}

pub fn mask_pair_report(first: u8, second: u8) -> Result<MaskPairReport, DfaError> {
    let (t1, t2) = (DifferenceTable::build(first)?, DifferenceTable::build(second)?);
    let mut unique_inputs = 0;
    let mut worst_case = 0;
    for v in 0..16u8 {
        let d1 = SBOX[(v ^ first) as usize] ^ SBOX[v as usize];
        let d2 = SBOX[(v ^ second) as usize] ^ SBOX[v as usize];
        let both = t1.candidates(d1).intersection(t2.candidates(d2));
        if both.single() == Some(v) {
            unique_inputs += 1;
        }
        worst_case = worst_case.max(both.len() as u8);
    }
    Ok(MaskPairReport { first, second, unique_inputs, worst_case })
}

/// Reports for all 105 unordered pairs of distinct nonzero masks.
pub fn uniqueness_report() -> Vec<MaskPairReport> {
    (1..16u8)
        .flat_map(|a| (a + 1..16u8).map(move |b| (a, b)))
        .map(|(a, b)| mask_pair_report(a, b).expect("nonzero masks"))
        .collect()
}
