//! Behavioural model of the fault-injecting hardware trojan.
//!
//! The payload sits on the wires between an S-box output and the P-layer.
//! When active it XORs a fixed mask into selected nibbles of one round. Two
//! trigger lines pick what the device does on a given encryption:
//!
//! | `trojan_trigger` | `flip_trigger` | behaviour        |
//! |------------------|----------------|------------------|
//! | 0                | any            | plain encryption |
//! | 1                | 0              | first insertion  |
//! | 1                | 1              | second insertion |

use std::fmt;

use thiserror::Error;

use crate::cipher::{player, CipherState, KeyRegister, Present80, RoundTrace, ROUNDS};

/// Round whose S-layer output the attack corrupts.
pub const ATTACK_ROUND: u8 = 30;

/// Full-nibble flip.
pub const FULL_NIBBLE: u8 = 0xF;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrojanError {
    #[error("fault round {0} outside 1..=31")]
    InvalidRound(u8),
    #[error("fault nibble {0} outside 0..=15")]
    InvalidNibble(u8),
    #[error("fault mask {0:#x} is not a nonzero 4-bit value")]
    InvalidMask(u8),
    #[error("nibble {nibble} of round {round} is faulted twice")]
    DuplicateInjection { round: u8, nibble: u8 },
    #[error("campaign has no insertions")]
    EmptyCampaign,
    #[error("insertion {0} has no faults")]
    EmptyInsertion(usize),
}

/// One XOR fault applied to an S-box output, before the P-layer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FaultSpec {
    round: u8,
    nibble: u8,
    mask: u8,
}

impl FaultSpec {
    pub fn new(round: u8, nibble: u8, mask: u8) -> Result<Self, TrojanError> {
        if round == 0 || round as usize > ROUNDS {
            return Err(TrojanError::InvalidRound(round));
        }
        if nibble > 15 {
            return Err(TrojanError::InvalidNibble(nibble));
        }
        if mask == 0 || mask > 0xF {
            return Err(TrojanError::InvalidMask(mask));
        }
        Ok(Self { round, nibble, mask })
    }

    /// Full flip of `nibble` at the round-30 S-layer output.
    pub fn nibble_flip(nibble: u8) -> Result<Self, TrojanError> {
        Self::new(ATTACK_ROUND, nibble, FULL_NIBBLE)
    }

    pub fn round(self) -> u8 {
        self.round
    }

    pub fn nibble(self) -> u8 {
        self.nibble
    }

    pub fn mask(self) -> u8 {
        self.mask
    }

    /// The fault as a 64-bit XOR difference on the S-layer output.
    pub fn difference(self) -> CipherState {
        CipherState::new(u64::from(self.mask) << (4 * self.nibble))
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}/n{}/{:04b}", self.round, self.nibble, self.mask)
    }
}

/// Per-round XOR differences for a validated set of faults.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct FaultPlan {
    per_round: [u64; ROUNDS],
}

impl FaultPlan {
    pub fn new(faults: &[FaultSpec]) -> Result<Self, TrojanError> {
        let mut per_round = [0u64; ROUNDS];
        for f in faults {
            let slot = &mut per_round[f.round as usize - 1];
            let nibble_bits = 0xFu64 << (4 * f.nibble);
            if *slot & nibble_bits != 0 {
                return Err(TrojanError::DuplicateInjection { round: f.round, nibble: f.nibble });
            }
            *slot |= f.difference().bits();
        }
        Ok(Self { per_round })
    }

    /// XOR difference for the 1-based `round`.
    pub fn difference(&self, round: usize) -> CipherState {
        CipherState::new(self.per_round[round - 1])
    }

    fn apply(&self, round: usize, s: CipherState) -> CipherState {
        s ^ self.difference(round)
    }
}

pub fn encrypt_with_faults(
    p: CipherState,
    k: KeyRegister,
    faults: &[FaultSpec],
) -> Result<CipherState, TrojanError> {
    let plan = FaultPlan::new(faults)?;
    Ok(Present80::new(k).encrypt_with_hook(p, |r, s| plan.apply(r, s)))
}

pub fn encrypt_traced_with_faults(
    p: CipherState,
    k: KeyRegister,
    faults: &[FaultSpec],
) -> Result<(CipherState, Vec<RoundTrace>), TrojanError> {
    let plan = FaultPlan::new(faults)?;
    Ok(Present80::new(k).encrypt_traced_with_hook(p, |r, s| plan.apply(r, s)))
}

/// XOR differences the faults induce on the next round's S-layer inputs,
/// one 4-bit mask per S-box. Round numbers are ignored; every spec is treated
/// as sitting in the same round.
pub fn expected_input_masks(faults: &[FaultSpec]) -> [u8; 16] {
    let diff = faults
        .iter()
        .fold(CipherState::default(), |acc, f| acc ^ f.difference());
    player(diff).nibbles()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct TriggerState {
    pub trojan_trigger: bool,
    pub flip_trigger: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TrojanMode {
    Encryption,
    FirstInsertion,
    SecondInsertion,
}

impl TriggerState {
    pub fn new(trojan_trigger: bool, flip_trigger: bool) -> Self {
        Self { trojan_trigger, flip_trigger }
    }

    pub fn mode(self) -> TrojanMode {
        match (self.trojan_trigger, self.flip_trigger) {
            (false, _) => TrojanMode::Encryption,
            (true, false) => TrojanMode::FirstInsertion,
            (true, true) => TrojanMode::SecondInsertion,
        }
    }
}

impl fmt::Display for TrojanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrojanMode::Encryption => "encryption",
            TrojanMode::FirstInsertion => "1st insertion",
            TrojanMode::SecondInsertion => "2nd insertion",
        })
    }
}

/// Ordered list of fault insertions, one per faulty encryption.
///
/// The two-line trigger addresses the first two insertions. Longer campaigns
/// (the single-nibble variant, partial masks) model a payload that is
/// re-armed with a new fault set for each run.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct InjectionCampaign {
    insertions: Vec<Vec<FaultSpec>>,
}

impl InjectionCampaign {
    pub fn new(insertions: Vec<Vec<FaultSpec>>) -> Result<Self, TrojanError> {
        if insertions.is_empty() {
            return Err(TrojanError::EmptyCampaign);
        }
        for (i, insertion) in insertions.iter().enumerate() {
            if insertion.is_empty() {
                return Err(TrojanError::EmptyInsertion(i));
            }
            FaultPlan::new(insertion)?;
        }
        Ok(Self { insertions })
    }

    /// Two runs of four full-nibble flips in round 30: nibbles 15, 11, 7, 3
    /// then 14, 10, 6, 2.
    ///
    /// Each run hits one nibble of every group, so every round-31 S-box sees a
    /// one-bit input difference: bit 3 (mask 0x8) in the first run and bit 2
    /// (mask 0x4) in the second. Counting S-boxes from the most significant
    /// end these are S-boxes 0, 4, 8, 12 and 1, 5, 9, 13.
    ///
    /// Not every pair of one-bit masks pins the input: 0x1 with 0x2 or 0x4
    /// leaves four inputs ambiguous, see [`crate::dfa::uniqueness_report`].
    pub fn two_run() -> Self {
        Self::from_nibble_runs(&[&[15, 11, 7, 3], &[14, 10, 6, 2]])
    }

    /// Eight runs of one full-nibble flip each: nibbles with bit residues 3
    /// and 2 from every group.
    pub fn eight_run() -> Self {
        Self::from_nibble_runs(&[&[15], &[14], &[11], &[10], &[7], &[6], &[3], &[2]])
    }

    fn from_nibble_runs(runs: &[&[u8]]) -> Self {
        let insertions = runs
            .iter()
            .map(|run| {
                run.iter()
                    .map(|&n| FaultSpec::nibble_flip(n).expect("nibble in range"))
                    .collect()
            })
            .collect();
        Self::new(insertions).expect("fixed campaign is valid")
    }

    pub fn insertions(&self) -> &[Vec<FaultSpec>] {
        &self.insertions
    }

    pub fn len(&self) -> usize {
        self.insertions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insertions.is_empty()
    }

    pub fn first_insertion(&self) -> &[FaultSpec] {
        &self.insertions[0]
    }

    pub fn second_insertion(&self) -> &[FaultSpec] {
        self.insertions.get(1).map_or(&[], Vec::as_slice)
    }

    /// Faults the device applies on faulty run `run` (0-based). With the
    /// trojan trigger low nothing is injected. For runs 0 and 1 this equals
    /// [`resolve_trigger`] with `flip_trigger` set to the run index.
    pub fn payload(&self, run: usize, trojan_trigger: bool) -> &[FaultSpec] {
        if !trojan_trigger {
            return &[];
        }
        self.insertions.get(run).map_or(&[], Vec::as_slice)
    }
}

/// Fault set selected by the trigger lines.
pub fn resolve_trigger(ts: TriggerState, campaign: &InjectionCampaign) -> &[FaultSpec] {
    match ts.mode() {
        TrojanMode::Encryption => &[],
        TrojanMode::FirstInsertion => campaign.first_insertion(),
        TrojanMode::SecondInsertion => campaign.second_insertion(),
    }
}

/// A PRESENT-80 device with the trojan wired in.
#[derive(Clone, Debug)]
pub struct TrojanDevice {
    cipher: Present80,
    campaign: InjectionCampaign,
}

impl TrojanDevice {
    pub fn new(key: KeyRegister, campaign: InjectionCampaign) -> Self {
        Self { cipher: Present80::new(key), campaign }
    }

    pub fn campaign(&self) -> &InjectionCampaign {
        &self.campaign
    }

    pub fn encrypt(&self, p: CipherState, ts: TriggerState) -> CipherState {
        self.encrypt_faulted(p, resolve_trigger(ts, &self.campaign))
    }

    /// Runs faulty encryption number `run` of the campaign.
    pub fn encrypt_run(&self, p: CipherState, run: usize, trojan_trigger: bool) -> CipherState {
        self.encrypt_faulted(p, self.campaign.payload(run, trojan_trigger))
    }

    fn encrypt_faulted(&self, p: CipherState, faults: &[FaultSpec]) -> CipherState {
        // Insertions were validated when the campaign was built.
        let plan = FaultPlan::new(faults).expect("validated insertion");
        self.cipher.encrypt_with_hook(p, |r, s| plan.apply(r, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::{encrypt, encrypt_traced, inv_player};
    use proptest::prelude::*;

    fn flip(n: u8) -> FaultSpec {
        FaultSpec::nibble_flip(n).unwrap()
    }

    #[test]
    fn fault_spec_validation() {
        assert_eq!(FaultSpec::new(0, 0, 1), Err(TrojanError::InvalidRound(0)));
        assert_eq!(FaultSpec::new(32, 0, 1), Err(TrojanError::InvalidRound(32)));
        assert_eq!(FaultSpec::new(30, 16, 1), Err(TrojanError::InvalidNibble(16)));
        assert_eq!(FaultSpec::new(30, 0, 0), Err(TrojanError::InvalidMask(0)));
        assert_eq!(FaultSpec::new(30, 0, 0x10), Err(TrojanError::InvalidMask(0x10)));
        assert!(FaultSpec::new(31, 15, 0xF).is_ok());
    }

    #[test]
    fn trigger_table() {
        let c = InjectionCampaign::two_run();
        assert!(resolve_trigger(TriggerState::new(false, false), &c).is_empty());
        assert!(resolve_trigger(TriggerState::new(false, true), &c).is_empty());
        assert_eq!(resolve_trigger(TriggerState::new(true, false), &c), c.first_insertion());
        assert_eq!(resolve_trigger(TriggerState::new(true, true), &c), c.second_insertion());
        assert_eq!(TriggerState::new(true, true).mode().to_string(), "2nd insertion");
        for run in 0..2 {
            let ts = TriggerState::new(true, run == 1);
            assert_eq!(c.payload(run, true), resolve_trigger(ts, &c));
        }
    }

    #[test]
    fn duplicate_injection_rejected() {
        let p = CipherState::new(1);
        let k = KeyRegister::default();
        let err = encrypt_with_faults(p, k, &[flip(3), FaultSpec::new(30, 3, 1).unwrap()]);
        assert_eq!(err, Err(TrojanError::DuplicateInjection { round: 30, nibble: 3 }));
        // Same nibble in different rounds is fine.
        assert!(encrypt_with_faults(p, k, &[flip(3), FaultSpec::new(29, 3, 1).unwrap()]).is_ok());
        assert!(InjectionCampaign::new(vec![vec![flip(1), flip(1)]]).is_err());
        assert_eq!(InjectionCampaign::new(vec![]), Err(TrojanError::EmptyCampaign));
        assert_eq!(InjectionCampaign::new(vec![vec![]]), Err(TrojanError::EmptyInsertion(0)));
    }

    #[test]
    fn no_faults_is_plain_encryption() {
        let k = KeyRegister::from_parts(0x1234_5678_9ABC_DEF0, 0x4242);
        let p = CipherState::new(0xAAAA_5555_0F0F_F0F0);
        assert_eq!(encrypt_with_faults(p, k, &[]).unwrap(), encrypt(p, k));
        let dev = TrojanDevice::new(k, InjectionCampaign::two_run());
        assert_eq!(dev.encrypt(p, TriggerState::new(false, true)), encrypt(p, k));
        assert_ne!(dev.encrypt(p, TriggerState::new(true, false)), encrypt(p, k));
    }

    #[test]
    fn canonical_masks() {
        let c = InjectionCampaign::two_run();
        let first = expected_input_masks(c.first_insertion());
        let second = expected_input_masks(c.second_insertion());
        assert_eq!(first, [0x8; 16]);
        assert_eq!(second, [0x4; 16]);
        let low: Vec<_> = [0, 4, 8, 12].iter().map(|&n| flip(n)).collect();
        assert_eq!(expected_input_masks(&low), [0x1; 16]);
        let single = expected_input_masks(&[flip(0)]);
        assert_eq!(single.iter().filter(|&&m| m != 0).count(), 4);
        assert_eq!(expected_input_masks(&[]), [0; 16]);
    }

    #[test]
    fn canonical_insertion_trace_diff() {
        let k = KeyRegister::from_parts(0x0F1E_2D3C_4B5A_6978, 0x8796);
        let p = CipherState::new(0x1111_2222_3333_4444);
        let (_, clean) = encrypt_traced(p, k);
        let c = InjectionCampaign::two_run();
        for (insertion, bit) in [(c.first_insertion(), 0x8), (c.second_insertion(), 0x4)] {
            let (_, faulty) = encrypt_traced_with_faults(p, k, insertion).unwrap();
            let diff = clean[30].after_key ^ faulty[30].after_key;
            assert_eq!(diff.nibbles(), [bit; 16]);
        }
        let (_, faulty) = encrypt_traced_with_faults(p, k, &[flip(0)]).unwrap();
        let diff = (clean[30].after_key ^ faulty[30].after_key).nibbles();
        assert_eq!(diff.iter().filter(|&&d| d != 0).count(), 4);
    }

    fn faults_strategy() -> impl Strategy<Value = Vec<FaultSpec>> {
        proptest::collection::btree_map(0u8..16, 1u8..16, 0..8).prop_map(|m| {
            m.into_iter()
                .map(|(n, mask)| FaultSpec::new(ATTACK_ROUND, n, mask).unwrap())
                .collect()
        })
    }

    proptest! {
        #[test]
        fn masks_are_linear(faults in faults_strategy(), split in 0usize..8) {
            let split = split.min(faults.len());
            let (a, b) = faults.split_at(split);
            let whole = expected_input_masks(&faults);
            let (ma, mb) = (expected_input_masks(a), expected_input_masks(b));
            for j in 0..16 {
                prop_assert_eq!(whole[j], ma[j] ^ mb[j]);
            }
        }

        #[test]
        fn injected_difference_visible_after_p(
            faults in faults_strategy(),
            p in any::<u64>(),
            k in 0u128..(1u128 << 80),
        ) {
            let k = KeyRegister::new(k).unwrap();
            let p = CipherState::new(p);
            let (_, clean) = encrypt_traced(p, k);
            let (_, faulty) = encrypt_traced_with_faults(p, k, &faults).unwrap();
            let r = ATTACK_ROUND as usize - 1;
            let seen = inv_player(faulty[r].after_player) ^ inv_player(clean[r].after_player);
            let injected = faults.iter().fold(CipherState::default(), |a, f| a ^ f.difference());
            prop_assert_eq!(seen, injected);
            // The next S-layer input differs by exactly the predicted masks.
            let next = (faulty[r + 1].after_key ^ clean[r + 1].after_key).nibbles();
            prop_assert_eq!(next, expected_input_masks(&faults));
        }
    }
}
