//! The control/test trial matrix: prompts every task to every provider with
//! and without street context, labels each answer and aggregates the results.

mod route;
mod summary;

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::SpatialGraph;
use crate::rag::{
    assemble_prompt, build_context, Gateway, Group, NavigationTask, PromptBundle, Scope,
};

pub use route::{parse_route, validate_route, FailureReason, RouteStep};
pub use summary::{format_rate, summarize, GroupBy, SummaryRow, SummaryTable, CSV_HEADER};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const EXCHANGES_FILE: &str = "exchanges.jsonl";
pub const SUMMARY_TEXT_FILE: &str = "summary.txt";
pub const SUMMARY_CSV_FILE: &str = "summary.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Success,
    Failure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelSource {
    Auto,
    ManualOverride,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub task_id: String,
    pub city: String,
    pub provider: String,
    pub group: Group,
    pub prompt_hash: String,
    pub completion: String,
    pub route: Vec<RouteStep>,
    pub label: Label,
    pub label_source: LabelSource,
    /// Why the answer failed, when it did. Kept for overridden labels too.
    pub reason: Option<FailureReason>,
    pub latency_ms: u64,
    pub attempts: u32,
}

impl TrialRecord {
    pub fn key(&self) -> TrialKey {
        (self.task_id.clone(), self.provider.clone(), self.group)
    }

    pub fn provider_failed(&self) -> bool {
        matches!(self.reason, Some(FailureReason::ProviderError { .. }))
    }
}

pub type TrialKey = (String, String, Group);

/// Manual labels keyed by `task_id` or by `task_id|provider|group`; the
/// longer key wins.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Overrides(pub BTreeMap<String, Label>);

impl Overrides {
    pub fn load(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes)
            .map_err(|e| Error::parse(format!("overrides {}", crate::error::json_location(&e)), e))
    }

    pub fn lookup(&self, task_id: &str, provider: &str, group: Group) -> Option<Label> {
        self.0
            .get(&format!("{task_id}|{provider}|{group}"))
            .or_else(|| self.0.get(task_id))
            .copied()
    }

    pub fn apply(&self, record: &mut TrialRecord) {
        if let Some(label) = self.lookup(&record.task_id, &record.provider, record.group) {
            record.label = label;
            record.label_source = LabelSource::ManualOverride;
            if label == Label::Failure && record.reason.is_none() {
                record.reason = Some(FailureReason::ManualOverride);
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub groups: Vec<Group>,
    pub scope: Scope,
    pub overrides: Overrides,
}

impl ExperimentConfig {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            out_dir: out_dir.into(),
            groups: vec![Group::Control, Group::Test],
            scope: Scope::WholeArea,
            overrides: Overrides::default(),
        }
    }
}

/// Street graphs by city name.
pub type CityGraphs = BTreeMap<String, SpatialGraph>;

fn graph_for<'a>(graphs: &'a CityGraphs, task: &NavigationTask) -> Result<&'a SpatialGraph> {
    graphs.get(&task.city).ok_or_else(|| {
        Error::TaskDefinition(format!(
            "task {}: no graph for city {:?}",
            task.id, task.city
        ))
    })
}

/// Resolve every task against its city graph before any provider is called.
pub fn check_tasks(tasks: &[NavigationTask], graphs: &CityGraphs) -> Result<()> {
    let mut ids = HashSet::new();
    for task in tasks {
        task.validate()?;
        if !ids.insert(&task.id) {
            return Err(Error::TaskDefinition(format!(
                "duplicate task id {}",
                task.id
            )));
        }
        let graph = graph_for(graphs, task)?;
        if !graph.has_street(&task.destination) {
            return Err(Error::TaskDefinition(format!(
                "task {}: destination {:?} is not a street of the {} graph",
                task.id, task.destination, task.city
            )));
        }
        for s in &task.origin_streets {
            if !graph.has_street(s) {
                return Err(Error::TaskDefinition(format!(
                    "task {}: origin street {s:?} is not in the {} graph",
                    task.id, task.city
                )));
            }
        }
    }
    Ok(())
}

/// Prompt for one trial.
pub fn trial_bundle(
    graph: &SpatialGraph,
    task: &NavigationTask,
    group: Group,
    scope: Scope,
) -> Result<PromptBundle> {
    match group {
        Group::Control => Ok(assemble_prompt(task, None)),
        Group::Test => Ok(assemble_prompt(
            task,
            Some(&build_context(graph, task, scope)?),
        )),
    }
}

/// Label a completion text (or provider error) for `task`.
pub fn label_answer(
    graph: &SpatialGraph,
    task: &NavigationTask,
    answer: std::result::Result<&str, &Error>,
) -> Result<(Vec<RouteStep>, Label, Option<FailureReason>)> {
    let text = match answer {
        Ok(t) => t,
        Err(e) => {
            return Ok((
                Vec::new(),
                Label::Failure,
                Some(FailureReason::ProviderError {
                    message: e.to_string(),
                }),
            ))
        }
    };
    let known = graph.street_names();
    let route = parse_route(text, &known);
    Ok(match validate_route(graph, &route, task)? {
        Ok(()) => (route, Label::Success, None),
        Err(reason) => (route, Label::Failure, Some(reason)),
    })
}

/// Run one trial end to end. Provider failures become failure records.
pub fn run_trial(
    graph: &SpatialGraph,
    task: &NavigationTask,
    gateway: &dyn Gateway,
    group: Group,
    scope: Scope,
) -> Result<(PromptBundle, TrialRecord, Option<Error>)> {
    let bundle = trial_bundle(graph, task, group, scope)?;
    let answer = gateway.generate(&bundle);
    let (route, label, reason) =
        label_answer(graph, task, answer.as_ref().map(|c| c.text.as_str()))?;
    let (completion, latency_ms, attempts) = match &answer {
        Ok(c) => (c.text.clone(), c.latency_ms, c.attempts),
        Err(_) => (String::new(), 0, 0),
    };
    let record = TrialRecord {
        task_id: task.id.clone(),
        city: task.city.clone(),
        provider: gateway.name().to_string(),
        group,
        prompt_hash: bundle.prompt_hash(),
        completion,
        route,
        label,
        label_source: LabelSource::Auto,
        reason,
        latency_ms,
        attempts,
    };
    Ok((bundle, record, answer.err()))
}

/// Completed trials in `path`. A torn final line from an interrupted run is
/// dropped and the file truncated to the last complete record.
pub fn load_records(path: &Path) -> Result<Vec<TrialRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut good_len = 0u64;
    let mut lines = BufReader::new(file).lines().enumerate().peekable();
    while let Some((n, line)) = lines.next() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let is_last = lines.peek().is_none();
        if line.trim().is_empty() {
            good_len += line.len() as u64 + 1;
            continue;
        }
        match serde_json::from_str::<TrialRecord>(&line) {
            Ok(r) => {
                records.push(r);
                good_len += line.len() as u64 + 1;
            }
            Err(e) if is_last => {
                log::warn!("{}: dropping incomplete last record ({e})", path.display());
                let f = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?;
                f.set_len(good_len).map_err(|e| Error::io(path, e))?;
            }
            Err(e) => {
                return Err(Error::parse(
                    format!("{} line {}", path.display(), n + 1),
                    e,
                ))
            }
        }
    }
    Ok(records)
}

fn append_line(file: &mut File, path: &Path, value: &impl Serialize) -> Result<()> {
    let mut line = serde_json::to_vec(value).map_err(|e| Error::parse("record", e))?;
    line.push(b'\n');
    file.write_all(&line).map_err(|e| Error::io(path, e))
}

/// Append one record to a records file, creating it if needed.
pub fn append_record(path: &Path, record: &TrialRecord) -> Result<()> {
    let mut file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    append_line(&mut file, path, record)
}

/// Run every task × provider × group trial not yet in the run directory and
/// write records, the exchange log and both summaries.
///
/// Records come out in task, provider, group order. Trials run in parallel
/// batches no larger than the smallest provider limit.
pub fn run_experiment(
    tasks: &[NavigationTask],
    providers: &[Box<dyn Gateway>],
    graphs: &CityGraphs,
    config: &ExperimentConfig,
) -> Result<Vec<TrialRecord>> {
    check_tasks(tasks, graphs)?;
    if providers.is_empty() || config.groups.is_empty() || tasks.is_empty() {
        return Err(Error::Config(
            "experiment needs tasks, providers and groups".into(),
        ));
    }
    std::fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let records_path = config.out_dir.join(RECORDS_FILE);
    let exchanges_path = config.out_dir.join(EXCHANGES_FILE);

    let mut done: BTreeMap<TrialKey, TrialRecord> = load_records(&records_path)?
        .into_iter()
        .map(|r| (r.key(), r))
        .collect();
    if !done.is_empty() {
        log::info!("resuming: {} trials already recorded", done.len());
    }

    let mut order: Vec<(&NavigationTask, &dyn Gateway, Group)> = Vec::new();
    for task in tasks {
        for p in providers {
            for &g in &config.groups {
                order.push((task, p.as_ref(), g));
            }
        }
    }
    let pending: Vec<_> = order
        .iter()
        .filter(|(t, p, g)| !done.contains_key(&(t.id.clone(), p.name().to_string(), *g)))
        .collect();
    log::info!("{} trials to run, {} recorded", pending.len(), done.len());

    let open = |path: &Path| {
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))
    };
    let mut records_file = open(&records_path)?;
    let mut exchanges_file = open(&exchanges_path)?;
    let batch = providers
        .iter()
        .map(|p| p.max_parallel())
        .min()
        .unwrap_or(1)
        .max(1);

    for chunk in pending.chunks(batch) {
        let results: Vec<Result<(PromptBundle, TrialRecord, Option<Error>)>> =
            std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(task, gateway, group)| {
                        s.spawn(move || {
                            let graph = graph_for(graphs, task)?;
                            run_trial(graph, task, *gateway, *group, config.scope)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("trial thread panicked"))
                    .collect()
            });
        for result in results {
            let (bundle, mut record, error) = result?;
            if let Some(e) = &error {
                log::error!(
                    "{} {} {}: {e}",
                    record.task_id,
                    record.provider,
                    record.group
                );
            }
            config.overrides.apply(&mut record);
            append_line(
                &mut exchanges_file,
                &exchanges_path,
                &json!({
                    "task_id": record.task_id,
                    "provider": record.provider,
                    "group": record.group,
                    "prompt_hash": record.prompt_hash,
                    "system": bundle.system_text,
                    "user": bundle.user_text,
                    "completion": record.completion,
                    "error": error.map(|e| e.to_string()),
                }),
            )?;
            append_line(&mut records_file, &records_path, &record)?;
            done.insert(record.key(), record);
        }
    }

    let records: Vec<TrialRecord> = order
        .iter()
        .map(|(t, p, g)| {
            let mut r = done[&(t.id.clone(), p.name().to_string(), *g)].clone();
            config.overrides.apply(&mut r);
            r
        })
        .collect();
    write_summaries(&records, &config.out_dir)?;
    Ok(records)
}

/// Text report: overall by group, then the test group by city and provider.
pub fn render_report(records: &[TrialRecord]) -> String {
    let test: Vec<TrialRecord> = records
        .iter()
        .filter(|r| r.group == Group::Test)
        .cloned()
        .collect();
    let mut out = String::new();
    out.push_str("All trials by group\n\n");
    out.push_str(&summarize(records, GroupBy::Group).to_string());
    if !test.is_empty() {
        out.push_str("\nTest group by city\n\n");
        out.push_str(&summarize(&test, GroupBy::City).to_string());
        out.push_str("\nTest group by provider\n\n");
        out.push_str(&summarize(&test, GroupBy::Provider).to_string());
    }
    out
}

/// CSV with the same three tables as [`render_report`].
pub fn render_csv(records: &[TrialRecord]) -> String {
    let test: Vec<TrialRecord> = records
        .iter()
        .filter(|r| r.group == Group::Test)
        .cloned()
        .collect();
    let mut out = format!("{CSV_HEADER}\n");
    summarize(records, GroupBy::Group).csv_rows(&mut out);
    summarize(&test, GroupBy::City).csv_rows(&mut out);
    summarize(&test, GroupBy::Provider).csv_rows(&mut out);
    out
}

pub fn write_summaries(records: &[TrialRecord], dir: &Path) -> Result<()> {
    let text = dir.join(SUMMARY_TEXT_FILE);
    std::fs::write(&text, render_report(records)).map_err(|e| Error::io(&text, e))?;
    let csv = dir.join(SUMMARY_CSV_FILE);
    std::fs::write(&csv, render_csv(records)).map_err(|e| Error::io(&csv, e))
}
