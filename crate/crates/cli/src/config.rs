//! Run configuration and campaign files.
//!
//! A campaign file is TOML. Each `[[insertion]]` is one faulty encryption;
//! nibbles use the library's numbering (nibble 0 = least significant).
//!
//! ```toml
//! trojan_trigger = 1          # optional, default 1
//!
//! [[insertion]]
//! faults = [
//!     { round = 30, nibble = 15, mask = "1111" },
//!     { nibble = 11, mask = 0xF },           # round defaults to 30
//! ]
//! ```
//!
//! Masks are either integers or strings: four binary digits (`"1000"`),
//! `0x`-prefixed hex, or decimal.

use std::path::PathBuf;

use present_dfa::trojan::ATTACK_ROUND;
use present_dfa::{CipherState, FaultSpec, InjectionCampaign, KeyRegister, TrojanError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid mask {0:?}: expected 1..15 as four binary digits, 0x-hex or decimal")]
    Mask(String),
    #[error("campaign file: {0}")]
    Syntax(String),
    #[error("campaign file: insertion {insertion}: {source}")]
    Fault { insertion: usize, source: TrojanError },
    #[error("campaign file: {0}")]
    Campaign(TrojanError),
    #[error("campaign file: trojan_trigger must be 0 or 1, got {0}")]
    Trigger(i64),
}

/// Parses a 4-bit fault mask.
pub fn parse_mask(s: &str) -> Result<u8, ConfigError> {
    let err = || ConfigError::Mask(s.to_string());
    let t = s.trim();
    let value = if t.len() == 4 && t.bytes().all(|b| b == b'0' || b == b'1') {
        u8::from_str_radix(t, 2).map_err(|_| err())?
    } else if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u8::from_str_radix(hex, 16).map_err(|_| err())?
    } else {
        t.parse::<u8>().map_err(|_| err())?
    };
    if (1..=15).contains(&value) {
        Ok(value)
    } else {
        Err(err())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum MaskValue {
    Int(i64),
    Text(String),
}

impl MaskValue {
    fn resolve(&self) -> Result<u8, ConfigError> {
        match self {
            MaskValue::Int(v) => u8::try_from(*v)
                .ok()
                .filter(|m| (1..=15).contains(m))
                .ok_or_else(|| ConfigError::Mask(v.to_string())),
            MaskValue::Text(s) => parse_mask(s),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultEntry {
    round: Option<u8>,
    nibble: u8,
    mask: MaskValue,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct InsertionEntry {
    faults: Vec<FaultEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCampaign {
    trojan_trigger: Option<i64>,
    #[serde(default)]
    insertion: Vec<InsertionEntry>,
}

/// A parsed campaign file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignFile {
    pub campaign: InjectionCampaign,
    pub trojan_trigger: Option<bool>,
}

pub fn parse_campaign(text: &str) -> Result<CampaignFile, ConfigError> {
    let raw: RawCampaign = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.message().to_string()))?;
    let trojan_trigger = match raw.trojan_trigger {
        None => None,
        Some(0) => Some(false),
        Some(1) => Some(true),
        Some(other) => return Err(ConfigError::Trigger(other)),
    };
    let mut insertions = Vec::with_capacity(raw.insertion.len());
    for (i, ins) in raw.insertion.iter().enumerate() {
        let mut specs = Vec::with_capacity(ins.faults.len());
        for f in &ins.faults {
            let mask = f.mask.resolve()?;
            let spec = FaultSpec::new(f.round.unwrap_or(ATTACK_ROUND), f.nibble, mask)
                .map_err(|source| ConfigError::Fault { insertion: i, source })?;
            specs.push(spec);
        }
        insertions.push(specs);
    }
    let campaign = InjectionCampaign::new(insertions).map_err(ConfigError::Campaign)?;
    Ok(CampaignFile { campaign, trojan_trigger })
}

/// Renders a campaign in the file format accepted by [`parse_campaign`].
pub fn format_campaign(campaign: &InjectionCampaign, trojan_trigger: bool) -> String {
    let mut out = format!("trojan_trigger = {}\n", u8::from(trojan_trigger));
    for insertion in campaign.insertions() {
        out.push_str("\n[[insertion]]\nfaults = [\n");
        for f in insertion {
            out.push_str(&format!(
                "    {{ round = {}, nibble = {}, mask = \"{:04b}\" }},\n",
                f.round(),
                f.nibble(),
                f.mask()
            ));
        }
        out.push_str("]\n");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Four nibbles per encryption, two faulty encryptions.
    TwoRun,
    /// One nibble per encryption, eight faulty encryptions.
    EightRun,
    /// Insertions read from --campaign.
    Custom,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::TwoRun => "two-run",
            Mode::EightRun => "eight-run",
            Mode::Custom => "custom",
        }
    }
}

/// Fully resolved inputs of one attack run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub key: KeyRegister,
    pub plaintext: CipherState,
    pub seed: Option<u64>,
    pub mode: Mode,
    pub campaign: InjectionCampaign,
    pub trojan_trigger: bool,
    pub out: Option<PathBuf>,
}

/// Raw command-line choices before validation.
#[derive(Debug, Clone, Default)]
pub struct RunRequest {
    pub key: Option<String>,
    pub plaintext: Option<String>,
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub campaign_text: Option<String>,
    pub trojan_trigger: Option<bool>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Each of key and plaintext comes from its explicit flag or, failing
    /// that, from the seeded generator. The generator always draws the key
    /// first, then the plaintext, so a seed names one fixed pair.
    pub fn resolve(req: RunRequest) -> Result<Self, crate::CliError> {
        use crate::CliError::Usage;

        let explicit_key = req.key.as_deref().map(str::parse::<KeyRegister>).transpose()?;
        let explicit_pt = req.plaintext.as_deref().map(str::parse::<CipherState>).transpose()?;
        let seeded = match req.seed {
            Some(seed) => {
                if explicit_key.is_some() && explicit_pt.is_some() {
                    return Err(Usage("--seed given but both --key and --pt are explicit".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let key = KeyRegister::from_bits_truncate(rng.gen::<u128>());
                let pt = CipherState::new(rng.gen());
                Some((key, pt))
            }
            None => None,
        };
        let key = explicit_key
            .or(seeded.map(|s| s.0))
            .ok_or_else(|| Usage("need --key or --seed".into()))?;
        let plaintext = explicit_pt
            .or(seeded.map(|s| s.1))
            .ok_or_else(|| Usage("need --pt or --seed".into()))?;

        let mode = match (req.mode, req.campaign_text.is_some()) {
            (None, true) | (Some(Mode::Custom), true) => Mode::Custom,
            (Some(Mode::Custom), false) => return Err(Usage("--mode custom needs --campaign".into())),
            (Some(m), true) => return Err(Usage(format!("--campaign conflicts with --mode {}", m.name()))),
            (m, false) => m.unwrap_or(Mode::TwoRun),
        };
        let (campaign, file_trigger) = match mode {
            Mode::TwoRun => (InjectionCampaign::two_run(), None),
            Mode::EightRun => (InjectionCampaign::eight_run(), None),
            Mode::Custom => {
                let file = parse_campaign(req.campaign_text.as_deref().unwrap_or_default())?;
                (file.campaign, file.trojan_trigger)
            }
        };
        let trojan_trigger = req.trojan_trigger.or(file_trigger).unwrap_or(true);
        Ok(RunConfig { key, plaintext, seed: req.seed, mode, campaign, trojan_trigger, out: req.out })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn masks() {
        assert_eq!(parse_mask("1000"), Ok(8));
        assert_eq!(parse_mask("0100"), Ok(4));
        assert_eq!(parse_mask("0xF"), Ok(15));
        assert_eq!(parse_mask("12"), Ok(12));
        assert_eq!(parse_mask("1"), Ok(1));
        assert!(parse_mask("0000").is_err());
        assert!(parse_mask("0").is_err());
        assert!(parse_mask("16").is_err());
        assert!(parse_mask("0x").is_err());
        assert!(parse_mask("all").is_err());
    }

    #[test]
    fn campaign_file() {
        let text = r#"
            trojan_trigger = 0
            [[insertion]]
            faults = [{ round = 30, nibble = 15, mask = "1111" }, { nibble = 11, mask = 0xF }]
            [[insertion]]
            faults = [{ nibble = 14, mask = 15 }]
        "#;
        let file = parse_campaign(text).unwrap();
        assert_eq!(file.trojan_trigger, Some(false));
        assert_eq!(file.campaign.len(), 2);
        assert_eq!(file.campaign.first_insertion()[1], FaultSpec::new(30, 11, 15).unwrap());
    }

    #[test]
    fn campaign_errors() {
        assert!(matches!(parse_campaign(""), Err(ConfigError::Campaign(TrojanError::EmptyCampaign))));
        assert!(matches!(parse_campaign("[[insertion]]\nfaults = []"), Err(ConfigError::Campaign(_))));
        assert!(matches!(
            parse_campaign("[[insertion]]\nfaults = [{ nibble = 16, mask = 1 }]"),
            Err(ConfigError::Fault { insertion: 0, .. })
        ));
        assert!(matches!(parse_campaign("[[insertion]]\nfaults = [{ nibble = 1, mask = 0 }]"), Err(ConfigError::Mask(_))));
        assert!(matches!(parse_campaign("trojan_trigger = 2"), Err(ConfigError::Trigger(2))));
        assert!(matches!(parse_campaign("bogus = 1"), Err(ConfigError::Syntax(_))));
        assert!(matches!(
            parse_campaign("[[insertion]]\nfaults = [{ nibble = 1, mask = 1 }, { nibble = 1, mask = 2 }]"),
            Err(ConfigError::Campaign(TrojanError::DuplicateInjection { .. }))
        ));
    }

    #[test]
    fn builtin_campaigns_round_trip_through_text() {
        for c in [InjectionCampaign::two_run(), InjectionCampaign::eight_run()] {
            let file = parse_campaign(&format_campaign(&c, true)).unwrap();
            assert_eq!(file.campaign, c);
            assert_eq!(file.trojan_trigger, Some(true));
        }
    }

    #[test]
    fn resolve_sources() {
        let req = RunRequest { seed: Some(7), ..Default::default() };
        let a = RunConfig::resolve(req.clone()).unwrap();
        let b = RunConfig::resolve(req).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode, Mode::TwoRun);

        let req = RunRequest { key: Some("00000000000000000000".into()), seed: Some(7), ..Default::default() };
        let c = RunConfig::resolve(req).unwrap();
        assert_eq!(c.key, KeyRegister::default());
        assert_eq!(c.plaintext, a.plaintext);

        assert!(RunConfig::resolve(RunRequest::default()).is_err());
        let both = RunRequest {
            key: Some("00000000000000000000".into()),
            plaintext: Some("0000000000000000".into()),
            seed: Some(1),
            ..Default::default()
        };
        assert!(RunConfig::resolve(both).is_err());
        let bad = RunRequest { key: Some("000".into()), seed: Some(1), ..Default::default() };
        assert!(RunConfig::resolve(bad).is_err());
        let custom = RunRequest { seed: Some(1), mode: Some(Mode::Custom), ..Default::default() };
        assert!(RunConfig::resolve(custom).is_err());
    }

    proptest! {
        #[test]
        fn parse_mask_never_panics(s in ".{0,12}") {
            if let Ok(m) = parse_mask(&s) {
                prop_assert!((1..=15).contains(&m));
            }
        }

        #[test]
        fn campaign_parser_never_panics(s in "[\\[\\]a-z_=0-9{}, \"\n]{0,80}") {
            let _ = parse_campaign(&s);
        }
    }
}
