// Licensed under the Apache-2.0 license

//! `care`: build signed frame images, verify them, and simulate boots
//! under attack.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 input error, 3 secure halt.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "care", version, about = "Frame-based secure boot toolchain and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame and sign a firmware binary.
    Build(BuildArgs),
    /// Check an image against its manifest.
    Verify(VerifyArgs),
    /// Attack a provisioned device, then boot it.
    Simulate(SimulateArgs),
    /// Boot time and energy estimate.
    Cost(CostArgs),
    /// Write a seeded attack campaign.
    AttackGen(AttackGenArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    pub fn enabled(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub firmware: PathBuf,
    /// Decimal or 0x-prefixed hex.
    #[arg(long, value_parser = parse_u32)]
    pub vendor_id: u32,
    /// 32 hex digits; dashes are ignored.
    #[arg(long, value_parser = parse_uuid)]
    pub uuid: [u8; 16],
    #[arg(long, value_parser = parse_u16)]
    pub board_version: u16,
    #[arg(long, value_parser = parse_u32)]
    pub firmware_revision: u32,
    /// File holding the 32-byte master key.
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest_out: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
    /// Campaign file, one JSON attack per line.
    #[arg(long, conflicts_with = "corrupt")]
    pub campaign: Option<PathBuf>,
    /// Flip one payload bit in each listed frame, e.g. `2,4`.
    #[arg(long, value_delimiter = ',')]
    pub corrupt: Option<Vec<u32>>,
    /// Generates a campaign when no other attack source is given.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Attacks in a generated campaign.
    #[arg(long, default_value_t = 4, requires = "seed")]
    pub attacks: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub care: Toggle,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record that the hardened core variant is in use.
    #[arg(long)]
    pub secure_ibex: bool,
    /// TOML timing parameters.
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Write the post-boot device snapshot into this directory.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CostArgs {
    #[arg(long)]
    pub frames: u32,
    #[arg(long, value_enum)]
    pub care: Toggle,
    #[arg(long, default_value_t = 0)]
    pub recovered: u32,
    #[arg(long)]
    pub timing: Option<PathBuf>,
    /// Print the report envelope instead of key: value lines.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct AttackGenArgs {
    #[arg(long)]
    pub frames: u32,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub attacks: usize,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_u32(s: &str) -> Result<u32, String> {
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u32::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn parse_u16(s: &str) -> Result<u16, String> {
    u16::try_from(parse_u32(s)?).map_err(|e| e.to_string())
}

fn parse_uuid(s: &str) -> Result<[u8; 16], String> {
    let digits: String = s.chars().filter(|&c| c != '-').collect();
    let bytes = hex::decode(&digits).map_err(|e| e.to_string())?;
    bytes
        .try_into()
        .map_err(|b: Vec<u8>| format!("uuid has {} bytes, expected 16", b.len()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(a) => commands::build(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Cost(a) => commands::cost(&a),
        Command::AttackGen(a) => commands::attack_gen(&a),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::Status::InputError as u8)
        }
    }
}
