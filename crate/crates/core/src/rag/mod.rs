//! Prompt assembly for navigation questions, with or without the verbalized
//! street graph as context, and the gateways that answer them.

mod mock;
mod provider;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{json_location, Error, Result};
use crate::graph::SpatialGraph;
use crate::verbalize::{verbalize_area, verbalize_streets};

pub use mock::{MockGateway, MockStrategy};
pub use provider::{
    gateway_for, load_providers, Completion, Gateway, HttpGateway, ProviderConfig, MOCK_PREFIX,
};

pub const TEMPLATE_VERSION: u32 = 1;
pub const SYSTEM_TEXT: &str =
    "You are a pedestrian navigation assistant. Use only the street descriptions provided.";
pub const CONTEXT_OPEN: &str = "<<<STREET DESCRIPTIONS";
pub const CONTEXT_CLOSE: &str = "STREET DESCRIPTIONS>>>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigationTask {
    pub id: String,
    pub city: String,
    /// A street name or a named place such as a station.
    pub origin: String,
    pub destination: String,
    /// Streets at a named-place origin. Empty when the origin is a street.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub origin_streets: Vec<String>,
    /// south, west, north, east
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_region: Option<[f64; 4]>,
}

impl NavigationTask {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::TaskDefinition("task with empty id".into()));
        }
        if self.origin == self.destination {
            return Err(Error::TaskDefinition(format!(
                "task {}: origin and destination are both {:?}",
                self.id, self.origin
            )));
        }
        Ok(())
    }

    /// Streets the route may start on: the listed origin streets, or the
    /// origin itself when it names a street of `graph`.
    pub fn start_streets(&self, graph: &SpatialGraph) -> Vec<String> {
        if !self.origin_streets.is_empty() {
            self.origin_streets.clone()
        } else if graph.has_street(&self.origin) {
            vec![self.origin.clone()]
        } else {
            Vec::new()
        }
    }
}

/// Tasks from a JSON array or from JSON Lines.
pub fn load_tasks(bytes: &[u8]) -> Result<Vec<NavigationTask>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::parse("tasks", e))?;
    let tasks: Vec<NavigationTask> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text).map_err(|e| Error::parse(json_location(&e), e))?
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(n, l)| {
                serde_json::from_str(l).map_err(|e| Error::parse(format!("line {}", n + 1), e))
            })
            .collect::<Result<_>>()?
    };
    let mut ids = BTreeSet::new();
    for t in &tasks {
        t.validate()?;
        if !ids.insert(t.id.as_str()) {
            return Err(Error::TaskDefinition(format!("duplicate task id {}", t.id)));
        }
    }
    Ok(tasks)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Test,
}

impl Group {
    pub fn as_str(self) -> &'static str {
        match self {
            Group::Control => "control",
            Group::Test => "test",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "control" => Ok(Group::Control),
            "test" => Ok(Group::Test),
            other => Err(Error::InvalidParameter(format!(
                "unknown group {other:?} (expected control or test)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scope {
    #[default]
    WholeArea,
    /// Streets within this many intersection hops of origin or destination.
    KHop(u32),
}

impl FromStr for Scope {
    type Err = Error;

    /// `whole-area` or `k-hop:<k>`
    fn from_str(s: &str) -> Result<Self> {
        if s == "whole-area" {
            return Ok(Scope::WholeArea);
        }
        s.strip_prefix("k-hop:")
            .and_then(|k| k.parse().ok())
            .map(Scope::KHop)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown scope {s:?} (expected whole-area or k-hop:<k>)"
                ))
            })
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::WholeArea => f.write_str("whole-area"),
            Scope::KHop(k) => write!(f, "k-hop:{k}"),
        }
    }
}

/// Verbalized context for `task`.
pub fn build_context(graph: &SpatialGraph, task: &NavigationTask, scope: Scope) -> Result<String> {
    match scope {
        Scope::WholeArea => Ok(verbalize_area(graph)?.rendered()),
        Scope::KHop(k) => {
            let mut seeds = task.start_streets(graph);
            if seeds.is_empty() {
                return Err(Error::NotFound(format!(
                    "origin {:?} is not a street of the graph",
                    task.origin
                )));
            }
            seeds.push(task.destination.clone());
            for s in &seeds {
                if !graph.has_street(s) {
                    return Err(Error::NotFound(format!("street {s:?}")));
                }
            }
            let adj = graph.street_adjacency();
            let mut dist: std::collections::BTreeMap<&str, u32> = Default::default();
            let mut queue = VecDeque::new();
            for s in &seeds {
                if dist.insert(s.as_str(), 0).is_none() {
                    queue.push_back(s.as_str());
                }
            }
            while let Some(s) = queue.pop_front() {
                let d = dist[s];
                if d == k {
                    continue;
                }
                for n in &adj[s] {
                    if !dist.contains_key(n.as_str()) {
                        dist.insert(n.as_str(), d + 1);
                        queue.push_back(n.as_str());
                    }
                }
            }
            let streets: Vec<&str> = dist.into_keys().collect();
            Ok(verbalize_streets(graph, &streets)?.rendered())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub task: NavigationTask,
    pub group: Group,
    pub template_version: u32,
    pub system_text: String,
    pub user_text: String,
    pub context: Option<String>,
}

pub fn question(task: &NavigationTask) -> String {
    format!(
        "Give step-by-step walking directions from {} to {} in {}. Answer as a numbered list of street names.",
        task.origin, task.destination, task.city
    )
}

/// Test bundle when `context` is given, control bundle otherwise.
pub fn assemble_prompt(task: &NavigationTask, context: Option<&str>) -> PromptBundle {
    let q = question(task);
    let (group, user_text) = match context {
        Some(ctx) => (
            Group::Test,
            format!(
                "{CONTEXT_OPEN}\n{ctx}{}{CONTEXT_CLOSE}\n\n{q}",
                if ctx.ends_with('\n') { "" } else { "\n" }
            ),
        ),
        None => (Group::Control, q),
    };
    PromptBundle {
        task: task.clone(),
        group,
        template_version: TEMPLATE_VERSION,
        system_text: SYSTEM_TEXT.to_string(),
        user_text,
        context: context.map(str::to_string),
    }
}

impl PromptBundle {
    /// Hex SHA-256 over everything sent to the model.
    pub fn prompt_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.template_version.to_le_bytes());
        h.update(self.group.as_str());
        h.update([0]);
        h.update(&self.system_text);
        h.update([0]);
        h.update(&self.user_text);
        hex::encode(h.finalize())
    }
}

/// The context block embedded in a user message, if any.
pub fn extract_context(user_text: &str) -> Option<&str> {
    let start = user_text.find(CONTEXT_OPEN)? + CONTEXT_OPEN.len();
    let end = user_text[start..].find(CONTEXT_CLOSE)? + start;
    Some(user_text[start..end].trim_start_matches('\n'))
}
