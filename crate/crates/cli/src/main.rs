mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use commands::*;
use config::resolve;

#[derive(Parser, Debug)]
#[command(name = "rlc", version, about = "Exact and Monte Carlo experiments on random linear codes")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write records here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// q-ary entropy h_q(x).
    Entropy(EntropyArgs),
    /// Field tables for GF(q).
    MakeField(MakeFieldArgs),
    /// Kernel of a random parity-check matrix.
    SampleCode(SampleCodeArgs),
    /// Exhaustive (p, L) list-decoding check.
    CheckLd(CheckLdArgs),
    /// Exhaustive (p, L) average-radius check.
    CheckAr(CheckArArgs),
    /// Exhaustive list-recovery from erasures check.
    CheckLr(CheckLrArgs),
    /// Entropy and dimension of a type.
    TypeEntropy(TypeEntropyArgs),
    /// Implicit rarity search over all full-rank maps.
    Rarity(RarityArgs),
    /// Sample a bad matrix and its witness.
    ConstructBad(ConstructBadArgs),
    /// Re-verify a stored witness.
    VerifyWitness(VerifyWitnessArgs),
    /// Potential and finite lemma checks for a binary code.
    Potential(PotentialArgs),
    /// Grow a random binary code and record its potential trajectory.
    Grow(GrowArgs),
    /// Monte Carlo containment frequency of a type.
    Mc(McArgs),
}

fn run(cli: &Cli) -> Result<(&'static str, Value, Outcome), String> {
    let file: Option<Value> = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("reading {}: {e}", p.display()))?;
            Some(serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", p.display()))?)
        }
        None => None,
    };
    let f = file.as_ref();
    macro_rules! dispatch {
        ($name:literal, $args:expr, $run:ident) => {{
            let (args, echo) = resolve($args, f, $name)?;
            Ok(($name, echo, $run(&args)?))
        }};
    }
    match &cli.command {
        Command::Entropy(a) => dispatch!("entropy", a, entropy),
        Command::MakeField(a) => dispatch!("make-field", a, make_field_cmd),
        Command::SampleCode(a) => dispatch!("sample-code", a, sample_code),
        Command::CheckLd(a) => dispatch!("check-ld", a, check_ld),
        Command::CheckAr(a) => dispatch!("check-ar", a, check_ar),
        Command::CheckLr(a) => dispatch!("check-lr", a, check_lr),
        Command::TypeEntropy(a) => dispatch!("type-entropy", a, type_entropy),
        Command::Rarity(a) => dispatch!("rarity", a, rarity),
        Command::ConstructBad(a) => dispatch!("construct-bad", a, construct_bad),
        Command::VerifyWitness(a) => dispatch!("verify-witness", a, verify_witness_cmd),
        Command::Potential(a) => dispatch!("potential", a, potential),
        Command::Grow(a) => dispatch!("grow", a, grow),
        Command::Mc(a) => dispatch!("mc", a, mc),
    }
}

fn emit(cli: &Cli, name: &str, echo: &Value, outcome: &Outcome, wall: f64) -> Result<(), String> {
    let body = match cli.format {
        Format::Text => outcome.text.clone(),
        Format::Json => {
            let mut s = String::new();
            for r in &outcome.records {
                let rec = json!({
                    "command": name,
                    "version": env!("CARGO_PKG_VERSION"),
                    "config": echo,
                    "status": outcome.status.label(),
                    "result": r,
                    "wall_time_s": wall,
                });
                s.push_str(&serde_json::to_string(&rec).map_err(|e| e.to_string())?);
                s.push('\n');
            }
            s
        }
    };
    match &cli.output {
        Some(p) => fs::write(p, body).map_err(|e| format!("writing {}: {e}", p.display())),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let start = Instant::now();
    match run(&cli).and_then(|(name, echo, outcome)| {
        emit(&cli, name, &echo, &outcome, start.elapsed().as_secs_f64())?;
        Ok(outcome.status)
    }) {
        Ok(status) => ExitCode::from(status.code()),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
