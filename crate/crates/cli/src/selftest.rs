//! Exhaustive invariant checks run by `present-dfa selftest`.
//!
//! The S-box is a parameter so a tampered table can be fed in and the
//! suites that depend on it are expected to fail.

use std::fmt;

use present_dfa::cipher::{
    invert_key_register, player, inv_player, update_key_register, SBOX, PBOX,
};
use present_dfa::{encrypt, CipherState, DifferenceTable, KeyRegister, RoundCounter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub note: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelftestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for SelftestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            let verdict = if s.passed() { "PASS" } else { "FAIL" };
            write!(f, "{verdict} {:<30} {:>4} cases, {} failed", s.name, s.cases, s.failures)?;
            if let Some(note) = &s.note {
                write!(f, " ({note})")?;
            }
            writeln!(f)?;
        }
        let passed = self.suites.iter().filter(|s| s.passed()).count();
        write!(f, "{passed}/{} suites passed", self.suites.len())
    }
}

pub const SBOX_BIJECTION: &str = "sbox-bijection";
pub const PLAYER_BIJECTION: &str = "player-bijection";
pub const TABLE_REGENERATION: &str = "difference-table-regeneration";
pub const SINGLE_BIT_UNIQUENESS: &str = "single-bit-uniqueness";
pub const KEY_SCHEDULE_ROUND_TRIP: &str = "key-schedule-round-trip";
pub const TEST_VECTORS: &str = "test-vectors";

// (I, I', O, O', delta) for masks 1000 and 0100, as published.
const PUBLISHED_ROWS: [(u8, [[u8; 5]; 16]); 2] = [
    (
        0x8,
        [
            [0x0, 0x8, 0xC, 0x3, 0xF], [0x1, 0x9, 0x5, 0xE, 0xB], [0x2, 0xA, 0x6, 0xF, 0x9], [0x3, 0xB, 0xB, 0x8, 0x3],
            [0x4, 0xC, 0x9, 0x4, 0xD], [0x5, 0xD, 0x0, 0x7, 0x7], [0x6, 0xE, 0xA, 0x1, 0xB], [0x7, 0xF, 0xD, 0x2, 0xF],
            [0x8, 0x0, 0x3, 0xC, 0xF], [0x9, 0x1, 0xE, 0x5, 0xB], [0xA, 0x2, 0xF, 0x6, 0x9], [0xB, 0x3, 0x8, 0xB, 0x3],
            [0xC, 0x4, 0x4, 0x9, 0xD], [0xD, 0x5, 0x7, 0x0, 0x7], [0xE, 0x6, 0x1, 0xA, 0xB], [0xF, 0x7, 0x2, 0xD, 0xF],
        ],
    ),
    (
        0x4,
        [
            [0x0, 0x4, 0xC, 0x9, 0x5], [0x1, 0x5, 0x5, 0x0, 0x5], [0x2, 0x6, 0x6, 0xA, 0xC], [0x3, 0x7, 0xB, 0xD, 0x6],
            [0x4, 0x0, 0x9, 0xC, 0x5], [0x5, 0x1, 0x0, 0x5, 0x5], [0x6, 0x2, 0xA, 0x6, 0xC], [0x7, 0x3, 0xD, 0xB, 0x6],
            [0x8, 0xC, 0x3, 0x4, 0x7], [0x9, 0xD, 0xE, 0x7, 0x9], [0xA, 0xE, 0xF, 0x1, 0xE], [0xB, 0xF, 0x8, 0x2, 0xA],
            [0xC, 0x8, 0x4, 0x3, 0x7], [0xD, 0x9, 0x7, 0xE, 0x9], [0xE, 0xA, 0x1, 0xF, 0xE], [0xF, 0xB, 0x2, 0x8, 0xA],
        ],
    ),
];

// Exhaustive measurement for the real S-box: the single-bit mask pairs and
// true inputs whose candidate intersection is not a singleton.
const AMBIGUOUS_SINGLE_BIT_CASES: [(u8, u8, u8); 8] = [
    (0x1, 0x2, 0xC), (0x1, 0x2, 0xD), (0x1, 0x2, 0xE), (0x1, 0x2, 0xF),
    (0x1, 0x4, 0x0), (0x1, 0x4, 0x1), (0x1, 0x4, 0x4), (0x1, 0x4, 0x5),
];

// Round-31 mask pairs used by the built-in campaigns; these must pin every input.
const CAMPAIGN_MASK_PAIRS: [(u8, u8); 1] = [(0x8, 0x4)];

fn sbox_bijection(sbox: &[u8; 16]) -> SuiteResult {
    let mut seen = [false; 16];
    let mut failures = 0;
    for &y in sbox {
        if y > 0xF || std::mem::replace(&mut seen[y as usize], true) {
            failures += 1;
        }
    }
    SuiteResult { name: SBOX_BIJECTION, cases: 16, failures, note: None }
}

fn player_bijection() -> SuiteResult {
    let mut failures = 0;
    let mut hit = 0u64;
    for (i, &p) in PBOX.iter().enumerate() {
        let s = CipherState::new(1 << i);
        let out = player(s);
        if out.bits() != 1 << p || inv_player(out) != s {
            failures += 1;
        }
        hit |= out.bits();
    }
    if hit != u64::MAX {
        failures += 1;
    }
    SuiteResult { name: PLAYER_BIJECTION, cases: 64, failures, note: None }
}

fn table_regeneration(sbox: &[u8; 16]) -> SuiteResult {
    let mut cases = 0;
    let mut failures = 0;
    for (mask, rows) in &PUBLISHED_ROWS {
        let Ok(table) = DifferenceTable::with_sbox(sbox, *mask) else {
            failures += rows.len();
            cases += rows.len();
            continue;
        };
        for (row, want) in table.rows().zip(rows) {
            cases += 1;
            if [row.input, row.faulty_input, row.output, row.faulty_output, row.delta] != *want {
                failures += 1;
            }
        }
    }
    SuiteResult { name: TABLE_REGENERATION, cases, failures, note: None }
}

fn pins_input(sbox: &[u8; 16], a: u8, b: u8, v: u8) -> bool {
    let (Ok(ta), Ok(tb)) = (DifferenceTable::with_sbox(sbox, a), DifferenceTable::with_sbox(sbox, b)) else {
        return false;
    };
    let da = sbox[(v ^ a) as usize] ^ sbox[v as usize];
    let db = sbox[(v ^ b) as usize] ^ sbox[v as usize];
    ta.candidates(da).intersection(tb.candidates(db)).single() == Some(v)
}

fn single_bit_uniqueness(sbox: &[u8; 16]) -> SuiteResult {
    let bits = [1u8, 2, 4, 8];
    let mut ambiguous = Vec::new();
    let mut cases = 0;
    for (i, &a) in bits.iter().enumerate() {
        for &b in &bits[i + 1..] {
            for v in 0..16u8 {
                cases += 1;
                if !pins_input(sbox, a, b, v) {
                    ambiguous.push((a, b, v));
                }
            }
        }
    }
    let mut failures = usize::from(ambiguous != AMBIGUOUS_SINGLE_BIT_CASES);
    for &(a, b) in &CAMPAIGN_MASK_PAIRS {
        failures += (0..16u8).filter(|&v| !pins_input(sbox, a, b, v)).count();
    }
    let note = format!(
        "{}/{cases} unique, as measured; campaign pair 1000/0100 always unique",
        cases - ambiguous.len()
    );
    SuiteResult { name: SINGLE_BIT_UNIQUENESS, cases, failures, note: Some(note) }
}

fn key_schedule_round_trip() -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6B65_7973);
    let mut cases = 0;
    let mut failures = 0;
    for _ in 0..64 {
        let reg = KeyRegister::from_bits_truncate(rng.gen());
        for rc in RoundCounter::all() {
            cases += 1;
            if invert_key_register(update_key_register(reg, rc), rc) != reg {
                failures += 1;
            }
        }
    }
    SuiteResult { name: KEY_SCHEDULE_ROUND_TRIP, cases, failures, note: None }
}

fn test_vectors() -> SuiteResult {
    let ones = (1u128 << 80) - 1;
    let vectors: [(u128, u64, u64); 4] = [
        (0, 0, 0x5579_C138_7B22_8445),
        (ones, 0, 0xE72C_46C0_F594_5049),
        (0, u64::MAX, 0xA112_FFC7_2F68_417B),
        (ones, u64::MAX, 0x3333_DCD3_2132_10D2),
    ];
    let failures = vectors
        .iter()
        .filter(|&&(k, p, c)| encrypt(CipherState::new(p), KeyRegister::from_bits_truncate(k)).bits() != c)
        .count();
    SuiteResult { name: TEST_VECTORS, cases: vectors.len(), failures, note: None }
}

/// Runs every suite against the given S-box.
pub fn run_selftest_with_sbox(sbox: &[u8; 16]) -> SelftestReport {
    SelftestReport {
        suites: vec![
            sbox_bijection(sbox),
            player_bijection(),
            table_regeneration(sbox),
            single_bit_uniqueness(sbox),
            key_schedule_round_trip(),
            test_vectors(),
        ],
    }
}

pub fn run_selftest() -> SelftestReport {
    run_selftest_with_sbox(&SBOX)
}
