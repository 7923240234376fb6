use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use present_dfa::{decrypt, encrypt, CipherState, KeyRegister};
use present_dfa_cli::config::{Mode, RunRequest};
use present_dfa_cli::{run_selftest, tables, CliError, RunConfig, Transcript};

/// PRESENT-80 with a simulated fault-injecting trojan and the DFA key recovery.
#[derive(Parser, Debug)]
#[command(name = "present-dfa", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encrypt one block.
    Encrypt {
        /// 80-bit key, 20 hex digits.
        #[arg(long)]
        key: String,
        /// 64-bit plaintext, 16 hex digits.
        #[arg(long)]
        pt: String,
    },
    /// Decrypt one block.
    Decrypt {
        #[arg(long)]
        key: String,
        /// 64-bit ciphertext, 16 hex digits.
        #[arg(long)]
        ct: String,
    },
    /// Print S-box difference tables.
    Tables {
        /// Mask as four binary digits (1000), 0x-hex or decimal; or `all`.
        #[arg(default_value = "all")]
        mask: String,
    },
    /// Simulate the fault campaign and recover the key.
    Attack {
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        pt: Option<String>,
        /// Seed for any of key/plaintext not given explicitly.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Campaign file (TOML); implies --mode custom.
        #[arg(long)]
        campaign: Option<PathBuf>,
        /// Level of the trojan trigger line.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
        trojan_trigger: Option<u8>,
        /// Where to write the JSON transcript; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exhaustive invariant suites.
    Selftest,
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Encrypt { key, pt } => {
            let key: KeyRegister = key.parse()?;
            let pt: CipherState = pt.parse()?;
            println!("{}", encrypt(pt, key));
        }
        Command::Decrypt { key, ct } => {
            let key: KeyRegister = key.parse()?;
            let ct: CipherState = ct.parse()?;
            println!("{}", decrypt(ct, key));
        }
        Command::Tables { mask } => print!("{}", tables::cmd_tables(&mask)?),
        Command::Attack { key, pt, seed, mode, campaign, trojan_trigger, out } => {
            let campaign_text = campaign
                .map(|p| fs::read_to_string(&p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display()))))
                .transpose()?;
            let config = RunConfig::resolve(RunRequest {
                key,
                plaintext: pt,
                seed,
                mode,
                campaign_text,
                trojan_trigger: trojan_trigger.map(|t| t == 1),
                out,
            })?;
            let (transcript, status) = Transcript::run(&config);
            let json = transcript.to_json()?;
            match config.out.as_deref() {
                Some(p) if p.as_os_str() == "-" => print!("{json}"),
                Some(p) => {
                    fs::write(p, json)?;
                    println!("{}", transcript.summary());
                }
                None => println!("{}", transcript.summary()),
            }
            status?;
        }
        Command::Selftest => {
            let report = run_selftest();
            println!("{report}");
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
