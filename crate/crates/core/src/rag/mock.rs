use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::provider::{Completion, Gateway};
use super::{extract_context, PromptBundle};
use crate::error::{Error, Result};
use crate::verbalize::VerbalizationDocument;

const REFUSAL: &str =
    "I do not have enough information about the local streets to give directions.";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MockStrategy {
    /// Shortest street sequence through the adjacency the context describes.
    EchoRoute,
    /// Plausible-sounding street names that do not exist.
    Hallucinate,
}

#[derive(Clone, Debug)]
pub struct MockGateway {
    name: String,
    strategy: MockStrategy,
    seed: u64,
}

impl MockGateway {
    pub fn new(name: &str, seed: u64) -> Result<Self> {
        let strategy = match name.strip_prefix(super::MOCK_PREFIX) {
            Some("echo-route") => MockStrategy::EchoRoute,
            Some("hallucinate") => MockStrategy::Hallucinate,
            _ => {
                return Err(Error::Config(format!(
                    "unknown mock provider {name:?} (known: mock:echo-route, mock:hallucinate)"
                )))
            }
        };
        Ok(MockGateway {
            name: name.to_string(),
            strategy,
            seed,
        })
    }

    pub fn strategy(&self) -> MockStrategy {
        self.strategy
    }
}

fn numbered(route: &[String]) -> String {
    route
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {s}\n", i + 1))
        .collect()
}

fn context_adjacency(doc: &VerbalizationDocument) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for section in &doc.sections {
        adj.entry(section.street.as_str()).or_default();
        for line in &section.lines {
            for n in line.neighbors() {
                adj.entry(section.street.as_str()).or_default().insert(n);
                adj.entry(n).or_default().insert(section.street.as_str());
            }
        }
    }
    adj
}

fn echo_route(bundle: &PromptBundle) -> String {
    let Some(doc) =
        extract_context(&bundle.user_text).and_then(|c| VerbalizationDocument::parse(c).ok())
    else {
        return REFUSAL.to_string();
    };
    let adj = context_adjacency(&doc);
    let task = &bundle.task;
    let starts: Vec<&str> = if task.origin_streets.is_empty() {
        vec![task.origin.as_str()]
    } else {
        task.origin_streets.iter().map(String::as_str).collect()
    };
    let mut prev: BTreeMap<&str, Option<&str>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in starts {
        if adj.contains_key(s) && !prev.contains_key(s) {
            prev.insert(s, None);
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if s == task.destination {
            let mut route = vec![s.to_string()];
            let mut cur = s;
            while let Some(Some(p)) = prev.get(cur) {
                route.push(p.to_string());
                cur = p;
            }
            route.reverse();
            return numbered(&route);
        }
        for n in &adj[s] {
            if !prev.contains_key(n) {
                prev.insert(n, Some(s));
                queue.push_back(n);
            }
        }
    }
    REFUSAL.to_string()
}

const SYLLABLES: [&str; 12] = [
    "Zan", "Quor", "Velm", "Ibra", "Tosk", "Ulme", "Wirn", "Yssel", "Grav", "Pell", "Onder", "Fahl",
];
const SUFFIXES: [&str; 5] = ["-Allee", "straße", "weg", "ring", "-Promenade"];

fn hallucinate(bundle: &PromptBundle, seed: u64) -> String {
    let hash = bundle.prompt_hash();
    let mix = u64::from_str_radix(&hash[..16], 16).expect("hex digest");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ mix);
    let known: Vec<String> = extract_context(&bundle.user_text)
        .and_then(|c| VerbalizationDocument::parse(c).ok())
        .map(|d| d.sections.into_iter().map(|s| s.street).collect())
        .unwrap_or_default();
    let steps = rng.gen_range(3..=5);
    let mut route: Vec<String> = Vec::new();
    while route.len() < steps {
        let name = format!(
            "{}{}{}",
            SYLLABLES.choose(&mut rng).expect("non-empty"),
            SYLLABLES
                .choose(&mut rng)
                .expect("non-empty")
                .to_lowercase(),
            SUFFIXES.choose(&mut rng).expect("non-empty")
        );
        let clashes = known
            .iter()
            .any(|k| k.contains(name.as_str()) || name.contains(k.as_str()));
        if !clashes && !route.contains(&name) {
            route.push(name);
        }
    }
    numbered(&route)
}

impl Gateway for MockGateway {
    fn name(&self) -> &str {
        &self.name
    }

    fn max_parallel(&self) -> usize {
        8
    }

    fn generate(&self, bundle: &PromptBundle) -> Result<Completion> {
        let text = match self.strategy {
            MockStrategy::EchoRoute => echo_route(bundle),
            MockStrategy::Hallucinate => hallucinate(bundle, self.seed),
        };
        Ok(Completion {
            text,
            latency_ms: 0,
            prompt_tokens: None,
            completion_tokens: None,
            attempts: 1,
        })
    }
}
