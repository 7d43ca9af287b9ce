use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::graph::SpatialGraph;
use crate::rag::NavigationTask;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteStep {
    Street(String),
    /// An answer step that names no known street.
    Unknown(String),
}

impl fmt::Display for RouteStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RouteStep::Street(s) => f.write_str(s),
            RouteStep::Unknown(s) => write!(f, "?{s}"),
        }
    }
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric())
}

/// Byte offsets of whole-word occurrences of `needle` in `hay`.
fn word_matches<'a>(hay: &'a str, needle: &'a str) -> impl Iterator<Item = usize> + 'a {
    hay.match_indices(needle).filter_map(move |(i, _)| {
        let before = hay[..i].chars().next_back();
        let after = hay[i + needle.len()..].chars().next();
        (!is_word_char(before) && !is_word_char(after)).then_some(i)
    })
}

/// `1. x`, `2) x`, `- x` and `* x` items, markup stripped.
fn list_items(text: &str) -> Vec<String> {
    let mut items = Vec::new();
    for line in text.lines() {
        let t = line.trim_start();
        let digits = t.chars().take_while(char::is_ascii_digit).count();
        let rest = if digits > 0 {
            t[digits..].strip_prefix(['.', ')'])
        } else {
            t.strip_prefix("- ").or_else(|| t.strip_prefix("* "))
        };
        if let Some(rest) = rest {
            let item = rest.replace("**", "").replace('`', "");
            let item = item.trim().trim_end_matches(['.', ',', ';', ':']).trim();
            if !item.is_empty() {
                items.push(item.to_string());
            }
        }
    }
    items
}

/// Extract the street sequence from a model answer.
///
/// List items are matched one by one: exactly after NFC normalization, else
/// by the longest known name occurring in the item as a whole word. Items
/// naming no known street become [`RouteStep::Unknown`]. Answers without a
/// list are scanned for known names in text order.
pub fn parse_route<S: AsRef<str>>(completion: &str, known: &[S]) -> Vec<RouteStep> {
    let mut known: Vec<(String, &str)> = known
        .iter()
        .map(|k| (nfc(k.as_ref()), k.as_ref()))
        .collect();
    known.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    let text = nfc(completion);
    let items = list_items(&text);
    if !items.is_empty() {
        return items
            .into_iter()
            .map(|item| {
                if let Some((_, raw)) = known.iter().find(|(k, _)| *k == item) {
                    return RouteStep::Street(raw.to_string());
                }
                match known
                    .iter()
                    .find(|(k, _)| word_matches(&item, k).next().is_some())
                {
                    Some((_, raw)) => RouteStep::Street(raw.to_string()),
                    None => RouteStep::Unknown(item),
                }
            })
            .collect();
    }

    // free prose: leftmost, then longest, non-overlapping matches
    let mut hits: Vec<(usize, usize, &str)> = Vec::new();
    for (k, raw) in &known {
        for i in word_matches(&text, k) {
            hits.push((i, k.len(), raw));
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut route: Vec<RouteStep> = Vec::new();
    let mut covered = 0;
    for (i, len, raw) in hits {
        if i < covered {
            continue;
        }
        covered = i + len;
        let step = RouteStep::Street(raw.to_string());
        if route.last() != Some(&step) {
            route.push(step);
        }
    }
    route
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FailureReason {
    EmptyRoute,
    UnknownStreet { step: String },
    Disconnected { from: String, to: String },
    WrongStart { street: String },
    WrongDestination { street: String },
    ProviderError { message: String },
    ManualOverride,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::EmptyRoute => f.write_str("no route found in the answer"),
            FailureReason::UnknownStreet { step } => write!(f, "unknown street: {step}"),
            FailureReason::Disconnected { from, to } => {
                write!(f, "disconnected pair: {from} does not meet {to}")
            }
            FailureReason::WrongStart { street } => {
                write!(f, "route starts on {street}, away from the origin")
            }
            FailureReason::WrongDestination { street } => {
                write!(f, "wrong destination: route ends on {street}")
            }
            FailureReason::ProviderError { message } => write!(f, "provider error: {message}"),
            FailureReason::ManualOverride => f.write_str("labeled failure by manual override"),
        }
    }
}

/// Check a parsed route against the street graph. Conditions are checked in
/// order and the first violation is reported: every step is a known street,
/// consecutive streets meet, the route starts at the origin, and it ends on
/// the destination.
pub fn validate_route(
    graph: &SpatialGraph,
    route: &[RouteStep],
    task: &NavigationTask,
) -> Result<std::result::Result<(), FailureReason>> {
    if !graph.has_street(&task.destination) {
        return Err(Error::TaskDefinition(format!(
            "task {}: destination {:?} is not a street of the {} graph",
            task.id, task.destination, task.city
        )));
    }
    let mut streets = Vec::with_capacity(route.len());
    for step in route {
        match step {
            RouteStep::Street(s) if graph.has_street(s) => streets.push(s.as_str()),
            RouteStep::Street(s) | RouteStep::Unknown(s) => {
                return Ok(Err(FailureReason::UnknownStreet { step: s.clone() }))
            }
        }
    }
    let (Some(first), Some(last)) = (streets.first(), streets.last()) else {
        return Ok(Err(FailureReason::EmptyRoute));
    };
    let adj = graph.street_adjacency();
    for w in streets.windows(2) {
        if w[0] != w[1] && !adj[w[0]].contains(w[1]) {
            return Ok(Err(FailureReason::Disconnected {
                from: w[0].to_string(),
                to: w[1].to_string(),
            }));
        }
    }
    let origins = task.start_streets(graph);
    let known_origins: BTreeSet<&str> = origins
        .iter()
        .map(String::as_str)
        .filter(|s| graph.has_street(s))
        .collect();
    if !known_origins.is_empty()
        && !known_origins.contains(first)
        && !known_origins.iter().any(|o| adj[*o].contains(*first))
    {
        return Ok(Err(FailureReason::WrongStart {
            street: first.to_string(),
        }));
    }
    if *last != task.destination {
        return Ok(Err(FailureReason::WrongDestination {
            street: last.to_string(),
        }));
    }
    Ok(Ok(()))
}
