//! JSON attack transcripts.
//!
//! Field reference:
//!
//! - `mode`, `seed`, `trojan_trigger`: run configuration (`seed` is null for
//!   explicit inputs).
//! - `key`, `plaintext`, `ciphertext`: the simulated device's key and the
//!   correct encryption, hex (20 and 16 digits).
//! - `campaign`: insertions as lists of `{round, nibble, mask}`, mask in
//!   binary.
//! - `runs`: faulty encryptions actually consumed, each with the faulty
//!   ciphertext, the assumed round-31 input masks and the observed output
//!   differences (one hex digit per S-box, S-box 0 first), the candidate
//!   set of every S-box for this run and the running intersection.
//! - `faulty_encryptions`, `round31_inputs`, `last_round_key`,
//!   `candidates_tested`, `search_space`, `recovered_key`, `success`,
//!   `error`: outcome; absent values are null.
//! - `duration_ms`: wall-clock time; the only field that varies between
//!   identical runs.

use std::time::Instant;

use present_dfa::dfa::SEARCH_SPACE;
use present_dfa::{run_attack_with_trigger, AttackRun, CandidateProfile, DfaError, FaultSpec, InjectionCampaign};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub round: u8,
    pub nibble: u8,
    pub mask: String,
}

impl From<&FaultSpec> for FaultRecord {
    fn from(f: &FaultSpec) -> Self {
        Self { round: f.round(), nibble: f.nibble(), mask: format!("{:04b}", f.mask()) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub faults: Vec<FaultRecord>,
    pub faulty_ciphertext: String,
    pub input_masks: Vec<String>,
    pub output_differences: Vec<String>,
    pub candidates: Vec<Vec<String>>,
    pub intersection: Vec<Vec<String>>,
}

fn hex_digits(values: &[u8]) -> Vec<String> {
    values.iter().map(|v| format!("{v:X}")).collect()
}

fn profile_sets(p: &CandidateProfile) -> Vec<Vec<String>> {
    p.sets().iter().map(|s| s.iter().map(|v| format!("{v:X}")).collect()).collect()
}

impl From<&AttackRun> for RunRecord {
    fn from(r: &AttackRun) -> Self {
        Self {
            faults: r.faults.iter().map(FaultRecord::from).collect(),
            faulty_ciphertext: r.pair.faulty.to_string(),
            input_masks: hex_digits(&r.pair.masks),
            output_differences: hex_digits(&r.deltas),
            candidates: profile_sets(&r.profile),
            intersection: profile_sets(&r.accumulated),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub mode: String,
    pub seed: Option<u64>,
    pub trojan_trigger: u8,
    pub key: String,
    pub plaintext: String,
    pub ciphertext: String,
    pub campaign: Vec<Vec<FaultRecord>>,
    pub runs: Vec<RunRecord>,
    pub faulty_encryptions: usize,
    pub round31_inputs: Option<String>,
    pub last_round_key: Option<String>,
    pub candidates_tested: Option<u32>,
    pub search_space: u32,
    pub recovered_key: Option<String>,
    pub success: bool,
    pub error: Option<String>,
    pub duration_ms: f64,
}

fn campaign_records(c: &InjectionCampaign) -> Vec<Vec<FaultRecord>> {
    c.insertions().iter().map(|i| i.iter().map(FaultRecord::from).collect()).collect()
}

impl Transcript {
    /// Runs the configured attack. The transcript is produced on failure too;
    /// the second value says whether the key was recovered.
    pub fn run(config: &RunConfig) -> (Transcript, Result<(), CliError>) {
        let start = Instant::now();
        let ciphertext = present_dfa::encrypt(config.plaintext, config.key);
        let mut t = Transcript {
            mode: config.mode.name().to_string(),
            seed: config.seed,
            trojan_trigger: u8::from(config.trojan_trigger),
            key: config.key.to_string(),
            plaintext: config.plaintext.to_string(),
            ciphertext: ciphertext.to_string(),
            campaign: campaign_records(&config.campaign),
            runs: Vec::new(),
            faulty_encryptions: 0,
            round31_inputs: None,
            last_round_key: None,
            candidates_tested: None,
            search_space: SEARCH_SPACE,
            recovered_key: None,
            success: false,
            error: None,
            duration_ms: 0.0,
        };
        let result =
            run_attack_with_trigger(config.key, config.plaintext, &config.campaign, config.trojan_trigger);
        let status = match result {
            Ok(a) => {
                t.runs = a.runs.iter().map(RunRecord::from).collect();
                t.faulty_encryptions = a.faulty_encryptions();
                t.round31_inputs = Some(a.round31_inputs.to_string());
                t.last_round_key = Some(a.last_round_key.to_string());
                t.candidates_tested = Some(a.candidates_tested);
                t.recovered_key = Some(a.master_key.to_string());
                if a.master_key == config.key {
                    t.success = true;
                    Ok(())
                } else {
                    Err(CliError::WrongKey { recovered: a.master_key.to_string(), expected: config.key.to_string() })
                }
            }
            Err(e) => {
                if let DfaError::Underdetermined { runs, .. } = &e {
                    t.faulty_encryptions = *runs;
                }
                if let DfaError::NoCandidateFound { tested } = &e {
                    t.candidates_tested = Some(*tested);
                }
                Err(CliError::Attack(e))
            }
        };
        if let Err(e) = &status {
            t.error = Some(e.to_string());
        }
        t.duration_ms = start.elapsed().as_secs_f64() * 1e3;
        (t, status)
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self).map(|mut s| {
            s.push('\n');
            s
        })
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn summary(&self) -> String {
        format!(
            "success={} mode={} faulty_encryptions={} candidates_tested={} recovered_key={}",
            self.success,
            self.mode,
            self.faulty_encryptions,
            self.candidates_tested.map_or("-".to_string(), |n| n.to_string()),
            self.recovered_key.as_deref().unwrap_or("-"),
        )
    }
}
