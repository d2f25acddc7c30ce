//! `sqg`: command-line driver for the solver suite. Each subcommand parses a
//! TOML run configuration, executes the matching scenario, and prints one
//! verdict line per emitted check report.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure
//! (including any check verdict that fails), 4 I/O or snapshot error.

use clap::{Args, Parser, Subcommand};
use sqg_core::config::{parse_config_file, Overrides, RunConfig, Scenario};
use sqg_core::error::Error;
use sqg_core::report::CheckReport;
use sqg_core::scenario::{run_scenario, ScenarioOutcome};
use std::path::PathBuf;
use std::process::ExitCode;

/// Environment variable naming the output root used when neither `--output`
/// nor the config file sets one.
const OUTPUT_ROOT_ENV: &str = "SQG_OUTPUT_ROOT";

const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "sqg",
    version,
    about = "Pseudo-spectral solver suite for the dissipative surface quasi-geostrophic equation",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for a steady state and certify residual and contraction.
    Steady(RunArgs),
    /// Integrate the full equation forward in time.
    Evolve(RunArgs),
    /// Perturb a steady state and certify the stability inequalities.
    Stability(RunArgs),
    /// Run the semigroup-remainder equation and its decay diagnostics.
    Decay(RunArgs),
    /// Run the operator, envelope, and functional-inequality property suite.
    Verify(RunArgs),
    /// Run a scenario over the cross product of parameter lists.
    Sweep(RunArgs),
}

impl Command {
    fn scenario(&self) -> Scenario {
        match self {
            Command::Steady(_) => Scenario::Steady,
            Command::Evolve(_) => Scenario::Evolve,
            Command::Stability(_) => Scenario::Stability,
            Command::Decay(_) => Scenario::Decay,
            Command::Verify(_) => Scenario::Verify,
            Command::Sweep(_) => Scenario::Sweep,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Steady(a)
            | Command::Evolve(a)
            | Command::Stability(a)
            | Command::Decay(a)
            | Command::Verify(a)
            | Command::Sweep(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output root directory; overrides the config file.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Worker threads for sweep sub-runs.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Replace the seed family: force seed, then derived scenario seeds.
    #[arg(long, value_name = "U64")]
    seed_override: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = cli.command.scenario();
    let args = cli.command.args();

    let over = Overrides {
        output_dir: args.output.clone(),
        default_output_root: std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from),
        seed: args.seed_override,
        threads: args.threads,
        scenario: Some(scenario),
    };

    let config = match parse_config_file(&args.config, &over) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    announce(&config);

    match run_scenario(&config) {
        Ok(outcome) => conclude(&outcome),
        Err(e) => fail(&e),
    }
}

fn announce(config: &RunConfig) {
    println!(
        "run {} scenario={} n={} kappa={} alpha={}",
        config.config_hash,
        config.scenario.name(),
        config.grid.n,
        config.kappa,
        config.alpha
    );
    for d in &config.defaulted {
        println!("default {d}");
    }
}

fn verdict_line(r: &CheckReport) -> String {
    format!(
        "check {} {} slack_min={:.3e} observed={:.6e}",
        r.check_id,
        if r.pass { "pass" } else { "FAIL" },
        r.slack_min,
        r.constant_observed
    )
}

fn conclude(outcome: &ScenarioOutcome) -> ExitCode {
    for r in &outcome.reports {
        println!("{}", verdict_line(r));
    }
    let n_pass = outcome.reports.iter().filter(|r| r.pass).count();
    println!(
        "wrote {} artifacts to {} ({}/{} checks passed)",
        outcome.manifest.artifacts.len(),
        outcome.run_dir.display(),
        n_pass,
        outcome.reports.len()
    );
    if outcome.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

/// Print a structured error record on stderr and map the error to its exit
/// class.
fn fail(e: &Error) -> ExitCode {
    let code = e.exit_code();
    eprintln!(
        "{{\"error\":{},\"exit_code\":{code}}}",
        json_string(&e.to_string())
    );
    ExitCode::from(code as u8)
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
