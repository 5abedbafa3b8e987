use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use rop_core::problem::{parse_problem, OrientationChoice};
use rop_core::Error;
use rop_core::run::{run, BasisChoice, Command, Options};

/// Recursion operators for multidimensional PDEs from their Lax pairs.
#[derive(Parser)]
#[command(name = "rop", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file.
    file: PathBuf,
    #[arg(long, value_enum)]
    orientation: Option<OrientationArg>,
    /// Bound on the jet order of demanded prolongations.
    #[arg(long, default_value_t = 4)]
    max_order: u32,
    /// Bound on the number of solver branches.
    #[arg(long, default_value_t = 64)]
    branch_bound: usize,
    /// Emit a JSON report.
    #[arg(long)]
    json: bool,
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that the Lax pair is compatible modulo the equation.
    LaxCheck(Common),
    /// Print the linearization of the equation.
    Linearize(Common),
    /// Verify the file's twist.
    Verify(Common),
    /// Search for twists over an ansatz.
    Solve(Common),
    /// Print the first k levels of the untwisted recursion chain.
    Hierarchy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Forward,
    Swapped,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Auto,
    File,
}

fn timeout_from_env() -> Result<Option<Duration>, String> {
    match std::env::var("ROP_TIMEOUT_SECS") {
        Ok(s) => s
            .trim()
            .parse::<u64>()
            .map(|n| Some(Duration::from_secs(n)))
            .map_err(|_| format!("ROP_TIMEOUT_SECS must be a whole number of seconds, got `{s}`")),
        Err(_) => Ok(None),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, k) = match cli.command {
        Cmd::LaxCheck(c) => (Command::LaxCheck, c, 1),
        Cmd::Linearize(c) => (Command::Linearize, c, 1),
        Cmd::Verify(c) => (Command::Verify, c, 1),
        Cmd::Solve(c) => (Command::Solve, c, 1),
        Cmd::Hierarchy { common, k } => (Command::Hierarchy, common, k),
    };
    let json = common.json;
    match execute(command, common, k) {
        Ok((text, code)) => {
            print!("{text}");
            ExitCode::from(code as u8)
        }
        Err(msg) => {
            if json {
                println!("{}", serde_json::json!({ "command": command.name(), "error": msg }));
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command, common: Common, k: usize) -> Result<(String, i32), String> {
    let text = std::fs::read_to_string(&common.file)
        .map_err(|e| format!("{}: {e}", common.file.display()))?;
    let problem = parse_problem(&text).map_err(|e| match e {
        Error::Parse { .. } => format!("{}:{e}", common.file.display()),
        _ => format!("{}: {e}", common.file.display()),
    })?;
    let options = Options {
        orientation: common.orientation.map(|o| match o {
            OrientationArg::Forward => OrientationChoice::Forward,
            OrientationArg::Swapped => OrientationChoice::Swapped,
            OrientationArg::Both => OrientationChoice::Both,
        }),
        max_order: common.max_order,
        branch_bound: common.branch_bound,
        basis: common.basis.map(|b| match b {
            BasisArg::Auto => BasisChoice::Auto,
            BasisArg::File => BasisChoice::File,
        }),
        k,
        timeout: timeout_from_env()?,
    };
    let report = run(command, &problem, &options).map_err(|e| e.to_string())?;
    let out = if common.json {
        let mut s = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
        s.push('\n');
        s
    } else {
        report.to_string()
    };
    Ok((out, report.exit_code()))
}
