//! Loading scenario and policy files.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use sdfw_core::control::Policy;
use sdfw_core::simnet::{Scenario, TopologySpec};
use serde::de::DeserializeOwned;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: field `{field}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{}: field `{field}`: {message}", path.display())]
    Invalid {
        path: PathBuf,
        field: String,
        message: String,
    },
}

fn read(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// JSON with the failing field's path in the error.
fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, LoadError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        LoadError::Parse {
            path: path.to_path_buf(),
            field,
            message: e.into_inner().to_string(),
        }
    })
}

fn check_policies(path: &Path, prefix: &str, policies: &[Policy]) -> Result<(), LoadError> {
    let mut ids = BTreeSet::new();
    for (i, p) in policies.iter().enumerate() {
        let invalid = |field: &str, message: String| LoadError::Invalid {
            path: path.to_path_buf(),
            field: format!("{prefix}[{i}].{field}"),
            message,
        };
        if let Err(e) = p.validate() {
            let field = if p.src.is_empty() { "src" } else { "dst" };
            return Err(invalid(field, e.to_string()));
        }
        if !ids.insert(p.id.as_str()) {
            return Err(invalid("id", format!("duplicate policy id {:?}", p.id)));
        }
    }
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let scenario: Scenario = parse(path, &read(path)?)?;
    check_policies(path, "policies", &scenario.policies)?;
    Ok(scenario)
}

#[derive(Deserialize)]
struct PolicyDoc {
    policies: Vec<Policy>,
}

/// A policy file is either a bare JSON array or `{"policies": [...]}`.
pub fn load_policies(path: &Path) -> Result<Vec<Policy>, LoadError> {
    let text = read(path)?;
    let (policies, prefix) = if text.trim_start().starts_with('{') {
        (parse::<PolicyDoc>(path, &text)?.policies, "policies")
    } else {
        (parse::<Vec<Policy>>(path, &text)?, "")
    };
    check_policies(path, prefix, &policies)?;
    Ok(policies)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BadTopology(pub String);

impl fmt::Display for BadTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "bad topology {:?}: expected flat:N or tree:DEPTH,FANOUT",
            self.0
        )
    }
}

impl std::error::Error for BadTopology {}

/// `flat:N` or `tree:DEPTH,FANOUT`.
pub fn parse_topology(s: &str) -> Result<TopologySpec, BadTopology> {
    let bad = || BadTopology(s.to_string());
    let (kind, args) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "flat" => Ok(TopologySpec::Flat {
            hosts: args.trim().parse().map_err(|_| bad())?,
        }),
        "tree" => {
            let (d, f) = args.split_once(',').ok_or_else(bad)?;
            Ok(TopologySpec::Tree {
                depth: d.trim().parse().map_err(|_| bad())?,
                fanout: f.trim().parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}
