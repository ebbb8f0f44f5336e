use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;

use motivic::cli::{run_command, CliOptions};

#[derive(Parser)]
#[command(name = "motivic", about = "Symbolic summation and push-forward checks for constructible functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Scenario file to load
    #[arg(long)]
    scenario: PathBuf,
    /// Specialization base, an integer or a fraction like 5/2 (repeatable)
    #[arg(long = "q")]
    q: Vec<String>,
    /// Prime for residue and p-adic oracles (repeatable)
    #[arg(long = "prime")]
    prime: Vec<u64>,
    /// p-adic truncation level
    #[arg(long)]
    level: Option<i64>,
    /// Radius for integer-point enumeration
    #[arg(long = "box")]
    box_radius: Option<i64>,
    /// Emit the report as JSON
    #[arg(long)]
    json: bool,
    /// Suppress the timing field so reruns are byte-identical
    #[arg(long = "no-timing")]
    no_timing: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the function in normal form
    Normalize(Common),
    /// Push the function forward along the X coordinates
    Push(Common),
    /// Pull the function back along the declared map
    Pull(Common),
    /// Sum the function over all its coordinates to a closed form
    Sum(Common),
    /// Compare push-forward after pull-back with pull-back of push-forward
    CheckCommutativity(Common),
    /// Run the invariant suite applicable to the scenario
    CheckAxioms(Common),
    /// Compare the symbolic push-forward against truncated direct sums
    Oracle(Common),
}

fn run(name: &str, common: &Common) -> ExitCode {
    let mut qs = Vec::new();
    for s in &common.q {
        match parse_rational(s) {
            Some(q) => qs.push(q),
            None => {
                eprintln!("error: invalid rational '{s}'");
                return ExitCode::from(2);
            }
        }
    }
    let text = match std::fs::read_to_string(&common.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.scenario.display());
            return ExitCode::from(2);
        }
    };
    let opts = CliOptions {
        qs,
        primes: common.prime.clone(),
        level: common.level,
        box_radius: common.box_radius,
        json: common.json,
        no_timing: common.no_timing,
    };
    let (out, code) = run_command(name, &text, &opts);
    print!("{out}");
    ExitCode::from(code as u8)
}

fn parse_rational(s: &str) -> Option<BigRational> {
    if let Some((n, d)) = s.split_once('/') {
        let n = num_bigint::BigInt::from_str(n).ok()?;
        let d = num_bigint::BigInt::from_str(d).ok()?;
        Some(BigRational::new(n, d))
    } else {
        Some(BigRational::from(num_bigint::BigInt::from_str(s).ok()?))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::Normalize(c) => run("normalize", c),
        Cmd::Push(c) => run("push", c),
        Cmd::Pull(c) => run("pull", c),
        Cmd::Sum(c) => run("sum", c),
        Cmd::CheckCommutativity(c) => run("check-commutativity", c),
        Cmd::CheckAxioms(c) => run("check-axioms", c),
        Cmd::Oracle(c) => run("oracle", c),
    }
}
