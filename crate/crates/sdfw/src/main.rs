use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sdfw::commands::CompileInput;
use sdfw::{cmd_check_policies, cmd_compile, cmd_run, CliError, Format, RunConfig};

#[derive(Parser)]
#[command(
    name = "sdfw",
    version,
    about = "Stateful distributed firewall simulator"
)]
struct Cli {
    /// More output on stderr; repeat for more.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and report.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
    },
    /// List conflicts between policies; exits 1 if there are any.
    CheckPolicies { path: PathBuf },
    /// Print the rules each switch would receive.
    Compile {
        #[arg(long, requires = "topology", conflicts_with = "scenario")]
        policies: Option<PathBuf>,
        /// flat:N or tree:DEPTH,FANOUT
        #[arg(long, value_parser = sdfw::io::parse_topology)]
        topology: Option<sdfw_core::simnet::TopologySpec>,
        #[arg(long, required_unless_present = "policies")]
        scenario: Option<PathBuf>,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            format,
        } => {
            let cfg = RunConfig {
                scenario_path: scenario,
                output_path: out,
                seed,
                verbosity: cli.verbose,
                format: match format {
                    FormatArg::Json => Format::Json,
                    FormatArg::Table => Format::Table,
                },
            };
            match cmd_run(&cfg) {
                Ok(o) => {
                    eprint!("{}", o.stderr);
                    print!("{}", o.stdout);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::CheckPolicies { path } => match cmd_check_policies(&path) {
            Ok((conflicts, text)) => {
                print!("{text}");
                if conflicts.is_empty() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => fail(e),
        },
        Command::Compile {
            policies,
            topology,
            scenario,
        } => {
            let input = match (policies, topology, scenario) {
                (Some(policies), Some(topology), _) => CompileInput::Files { policies, topology },
                (_, _, Some(s)) => CompileInput::Scenario(s),
                _ => unreachable!("clap enforces one input"),
            };
            match cmd_compile(&input) {
                Ok(text) => {
                    print!("{text}");
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
    }
}
