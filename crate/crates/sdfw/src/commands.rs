//! The three subcommands, minus argument parsing and process exit.

use std::path::{Path, PathBuf};

use sdfw_core::control::{
    build_policy_graph, compile_to_flow_rules, detect_conflicts, CompileError, CompileMode,
    Conflict, ControlError,
};
use sdfw_core::flow_table::FlowTable;
use sdfw_core::simnet::{MetricsReport, Scenario, SimError, Simulation, TopologySpec};
use sdfw_core::topology::LinkParams;
use sdfw_core::SimTime;

use crate::io::{self, LoadError};
use crate::report::{self, ComparisonRow};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{}: compile error: {message}", path.display())]
    Compile { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for invalid input, 3 for policies that cannot be compiled, 4 for
    /// I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Load(LoadError::Io { .. }) | CliError::Write { .. } => 4,
            CliError::Load(_) | CliError::Invalid { .. } => 2,
            CliError::Compile { .. } => 3,
        }
    }
}

fn compile_failure(path: &Path, e: CompileError) -> CliError {
    match e {
        CompileError::Policy(p) => CliError::Invalid {
            path: path.to_path_buf(),
            message: format!("policies: {p}"),
        },
        other => CliError::Compile {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

fn sim_failure(path: &Path, e: SimError) -> CliError {
    let invalid = |message: String| CliError::Invalid {
        path: path.to_path_buf(),
        message,
    };
    match e {
        SimError::Control(ControlError::Compile(c)) => compile_failure(path, c),
        SimError::Topology(t) => invalid(format!("field `topology`: {t}")),
        SimError::Traffic { index, reason } => {
            invalid(format!("field `traffic[{index}]`: {reason}"))
        }
        SimError::Duration => invalid(format!("field `duration_s`: {e}")),
        SimError::Detection(d) => invalid(format!("field `config.detection`: {d}")),
        SimError::Config(field) => invalid(format!("field `config.{field}`: must be positive")),
        other => invalid(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Table,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verbosity: u8,
    pub format: Format,
}

impl RunConfig {
    pub fn new(scenario_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            scenario_path: scenario_path.into(),
            output_path: None,
            seed: None,
            verbosity: 0,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    /// What goes to stdout.
    pub stdout: String,
    /// Progress and summary lines for stderr.
    pub stderr: String,
}

fn simulate(path: &Path, scenario: &Scenario) -> Result<MetricsReport, CliError> {
    let mut sim = Simulation::new(scenario).map_err(|e| sim_failure(path, e))?;
    Ok(sim.run())
}

fn host_count(path: &Path, topology: &TopologySpec) -> Result<usize, CliError> {
    topology
        .build(LinkParams::default())
        .map(|t| t.hosts().count())
        .map_err(|e| CliError::Invalid {
            path: path.to_path_buf(),
            message: format!("field `topology`: {e}"),
        })
}

/// Runs a scenario. With `--out` the JSON report goes to that file; stdout
/// gets the JSON report, or for the table format a comparison against the
/// same scenario with the firewall toggled.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let path = cfg.scenario_path.as_path();
    let mut scenario = io::load_scenario(path)?;
    if let Some(seed) = cfg.seed {
        scenario.seed = seed;
    }
    let report = simulate(path, &scenario)?;
    let json = report::to_json(&report);
    if let Some(out) = &cfg.output_path {
        std::fs::write(out, &json).map_err(|source| CliError::Write {
            path: out.clone(),
            source,
        })?;
    }
    let mut stderr = String::new();
    if cfg.verbosity > 0 {
        stderr.push_str(&report::summary(&report));
    }
    let stdout = match cfg.format {
        Format::Json if cfg.output_path.is_some() => String::new(),
        Format::Json => json,
        Format::Table => {
            let mut other = scenario.clone();
            other.sdfw_enabled = !scenario.sdfw_enabled;
            let counterpart = simulate(path, &other)?;
            if cfg.verbosity > 1 {
                stderr.push_str(&report::summary(&counterpart));
            }
            let (off, on) = if scenario.sdfw_enabled {
                (&counterpart, &report)
            } else {
                (&report, &counterpart)
            };
            report::comparison_table(&[ComparisonRow::from_runs(
                host_count(path, &scenario.topology)?,
                off,
                on,
            )])
        }
    };
    Ok(RunOutput {
        report,
        stdout,
        stderr,
    })
}

/// Pairwise policy conflicts, one line each, or `no conflicts`.
pub fn cmd_check_policies(path: &Path) -> Result<(Vec<Conflict>, String), CliError> {
    let policies = io::load_policies(path)?;
    let conflicts = detect_conflicts(&policies);
    let text = if conflicts.is_empty() {
        String::from("no conflicts\n")
    } else {
        conflicts.iter().map(|c| format!("{c}\n")).collect()
    };
    Ok((conflicts, text))
}

/// Where `compile` takes its policies and topology from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompileInput {
    Files {
        policies: PathBuf,
        topology: TopologySpec,
    },
    Scenario(PathBuf),
}

/// The flow table each switch would receive, in dump format.
pub fn cmd_compile(input: &CompileInput) -> Result<String, CliError> {
    let (path, policies, topology) = match input {
        CompileInput::Files { policies, topology } => {
            (policies.as_path(), io::load_policies(policies)?, *topology)
        }
        CompileInput::Scenario(p) => {
            let s = io::load_scenario(p)?;
            (p.as_path(), s.policies, s.topology)
        }
    };
    let topo = topology
        .build(LinkParams::default())
        .map_err(|e| CliError::Invalid {
            path: path.to_path_buf(),
            message: format!("topology: {e}"),
        })?;
    let graph = build_policy_graph(&policies, &topo).map_err(|e| compile_failure(path, e))?;
    let programs = compile_to_flow_rules(&graph, &topo, CompileMode::Stateful);
    let mut out = String::new();
    for (sw, prog) in &programs {
        let mut table = FlowTable::new(0, prog.miss_policy);
        for m in prog.flow_mods() {
            table.apply(&m, SimTime::ZERO);
        }
        out.push_str(&format!("{sw} ({} rules)\n", table.len()));
        out.push_str(&table.dump(SimTime::ZERO));
    }
    Ok(out)
}
