use std::path::PathBuf;

use catrate::{NoiseChoice, Protocol};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "catrate", version, about = "Secret key rates and error thresholds for BB84 and 6-state QKD")]
pub struct Cli {
    /// Worker threads (default: CATRATE_THREADS, else all cores). Results do not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one parameter point, as JSON.
    Rate(RateArgs),
    /// Largest bit error rate with a positive key rate, as JSON.
    Threshold(ThresholdArgs),
    /// Rates over a range of bit error rates, as CSV.
    Curve(CurveArgs),
    /// Thresholds for several blocklengths, as CSV.
    ScanM(ScanArgs),
    /// Twofold iterated preprocessing (BB84), as CSV.
    Iterate(IterateArgs),
    /// Compare the fast routines against brute-force constructions.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long)]
    pub p: f64,
    /// Added noise rate, or `auto` to optimize it.
    #[arg(long, default_value = "auto", value_parser = parse_noise)]
    pub q: NoiseChoice,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value = "auto", value_parser = parse_noise)]
    pub q: NoiseChoice,
    /// Lower end of the search bracket (rate must be positive there).
    #[arg(long)]
    pub p_lo: Option<f64>,
    /// Upper end of the search bracket (rate must not be positive there).
    #[arg(long)]
    pub p_hi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub p_min: f64,
    #[arg(long)]
    pub p_max: f64,
    /// Number of points; 1 evaluates only `p_min`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    /// Blocklengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<u64>,
    #[arg(long, default_value = "auto", value_parser = parse_noise)]
    pub q: NoiseChoice,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    /// Blocklengths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_list: Vec<u64>,
    #[arg(long, default_value = "auto", value_parser = parse_noise)]
    pub q: NoiseChoice,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IterateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m1: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m2: u64,
    /// First-round noise, or `auto` (requires `--Q auto` too).
    #[arg(long, default_value = "auto", value_parser = parse_noise)]
    pub q: NoiseChoice,
    /// Second-round noise, or `auto`.
    #[arg(long = "Q", default_value = "auto", value_parser = parse_noise)]
    pub big_q: NoiseChoice,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Seed for the random state families.
    #[arg(long, default_value_t = 2007)]
    pub seed: u64,
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse().map_err(|e: catrate::Error| e.to_string())
}

fn parse_noise(s: &str) -> Result<NoiseChoice, String> {
    s.parse().map_err(|e: catrate::Error| e.to_string())
}
