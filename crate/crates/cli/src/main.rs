use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use dipolar_core::algebra::{
    diff_against_reference, enumerate_relations, parse_reference_list, render_report,
    DEFAULT_SAMPLE_BUDGET, DEFAULT_SEED, REFERENCE_FINE_RELATIONS,
};
use dipolar_core::graph::{build_graph, load_graph, save_graph, SpatialGraph};
use dipolar_core::harness::{self, run_trial, CityGraphs, ExperimentConfig, Label, Overrides};
use dipolar_core::ingest::{
    load_geojson, snap_and_segment, BoundingBox, OverpassClient, DEFAULT_SNAP_TOLERANCE,
};
use dipolar_core::rag::{
    gateway_for, load_providers, load_tasks, Gateway, Group, NavigationTask, ProviderConfig, Scope,
};
use dipolar_core::verbalize::verbalize_area;
use dipolar_core::Error;

/// Qualitative street descriptions with the dipole relation algebra.
#[derive(Parser)]
#[command(name = "dipolar", version)]
struct Cli {
    /// More log output (repeat for debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a street graph from GeoJSON or an Overpass bounding box
    Ingest(IngestArgs),
    /// Describe every street of a graph in plain text
    Verbalize(VerbalizeArgs),
    /// List the realizable dipole relations by tier
    EnumerateRelations(EnumerateArgs),
    /// Ask one navigation question to one provider
    Ask(AskArgs),
    /// Run the control/test matrix over a task file
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// GeoJSON FeatureCollection of named (Multi)LineStrings
    #[arg(
        long,
        conflicts_with = "overpass",
        required_unless_present = "overpass"
    )]
    geojson: Option<PathBuf>,
    /// Bounding box `south,west,north,east` to download from Overpass
    #[arg(long)]
    overpass: Option<BoundingBox>,
    /// Overpass endpoint (default: $DIPOLAR_OVERPASS_URL or the public server)
    #[arg(long, requires = "overpass")]
    overpass_url: Option<String>,
    /// Directory for cached Overpass responses (default: $DIPOLAR_CACHE_DIR)
    #[arg(long, requires = "overpass")]
    cache_dir: Option<PathBuf>,
    /// Node snapping distance in meters
    #[arg(long, default_value_t = DEFAULT_SNAP_TOLERANCE)]
    tolerance: f64,
    /// Graph file to write (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerbalizeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Random general-position samples
    #[arg(long, default_value_t = DEFAULT_SAMPLE_BUDGET)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Reference list of fine relations to compare against, one code per line
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Args)]
struct ProviderArgs {
    /// TOML file of [[provider]] tables
    #[arg(long)]
    providers: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Context scope for the test group: whole-area or k-hop:<k>
    #[arg(long, default_value = "whole-area")]
    scope: Scope,
}

#[derive(Args)]
struct AskArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Origin street or named place
    #[arg(long)]
    from: String,
    /// Destination street
    #[arg(long)]
    to: String,
    /// Comma-separated streets at a named-place origin
    #[arg(long, value_delimiter = ',')]
    from_streets: Vec<String>,
    #[arg(long, default_value = "the study area")]
    city: String,
    /// Provider name: a mock:* strategy or an entry of --providers
    #[arg(long)]
    provider: String,
    /// control or test
    #[arg(long, default_value = "test")]
    group: Group,
    /// Directory for the exchange log and record of this question
    #[arg(long)]
    run_dir: Option<PathBuf>,
    #[command(flatten)]
    common: ProviderArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Tasks as a JSON array or JSON Lines
    #[arg(long)]
    tasks: PathBuf,
    /// CITY=PATH, once per city
    #[arg(long = "graph", required = true)]
    graphs: Vec<String>,
    /// Provider names to use; all configured providers when omitted
    #[arg(long = "provider")]
    provider_names: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "control,test")]
    groups: Vec<Group>,
    /// Run directory; an existing one is resumed
    #[arg(long)]
    out: PathBuf,
    /// JSON object of manual labels
    #[arg(long)]
    overrides: Option<PathBuf>,
    #[command(flatten)]
    common: ProviderArgs,
}

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn read_graph(path: &Path) -> anyhow::Result<SpatialGraph> {
    load_graph(&read(path)?).with_context(|| format!("loading graph {}", path.display()))
}

fn ingest(args: IngestArgs) -> anyhow::Result<()> {
    let document = match (&args.geojson, &args.overpass) {
        (Some(path), _) => read(path)?,
        (None, Some(bbox)) => {
            let mut client = OverpassClient::from_env();
            if let Some(url) = args.overpass_url {
                client.endpoint_url = url;
            }
            if let Some(dir) = args.cache_dir {
                client.cache_dir = Some(dir);
            }
            client.fetch(bbox)?
        }
        (None, None) => bail!("one of --geojson or --overpass is required"),
    };
    let loaded = load_geojson(&document)?;
    let seg = snap_and_segment(&loaded.streets, args.tolerance)?;
    let graph = build_graph(&seg, Some(loaded.projection))?;
    eprintln!(
        "{} streets, {} segments, {} intersections, {} edges ({} unnamed features dropped)",
        graph.street_names().len(),
        graph.segments().count(),
        graph.intersections().len(),
        graph.edges().len(),
        loaded.dropped_unnamed
    );
    write_output(args.out.as_deref(), &save_graph(&graph))
}

fn verbalize(args: VerbalizeArgs) -> anyhow::Result<()> {
    let graph = read_graph(&args.graph)?;
    write_output(
        args.out.as_deref(),
        verbalize_area(&graph)?.rendered().as_bytes(),
    )
}

fn enumerate(args: EnumerateArgs) -> anyhow::Result<()> {
    let reference_text = match &args.reference {
        Some(p) => String::from_utf8(read(p)?).context("reference list is not UTF-8")?,
        None => REFERENCE_FINE_RELATIONS.to_string(),
    };
    let reference = parse_reference_list(&reference_text)?;
    let found = enumerate_relations(args.budget, args.seed);
    let diff = diff_against_reference(&found, &reference);
    write_output(None, render_report(&found, &diff).as_bytes())
}

fn provider_configs(common: &ProviderArgs) -> anyhow::Result<Vec<ProviderConfig>> {
    match &common.providers {
        Some(p) => {
            let text = String::from_utf8(read(p)?).context("provider file is not UTF-8")?;
            Ok(load_providers(&text).with_context(|| format!("loading {}", p.display()))?)
        }
        None => Ok(Vec::new()),
    }
}

fn resolve_provider(
    name: &str,
    configs: &[ProviderConfig],
    seed: u64,
) -> anyhow::Result<Box<dyn Gateway>> {
    let config = match configs.iter().find(|c| c.name == name) {
        Some(c) => c.clone(),
        None if name.starts_with(dipolar_core::rag::MOCK_PREFIX) => ProviderConfig::mock(name),
        None => return Err(Error::Config(format!("provider {name:?} is not configured")).into()),
    };
    Ok(gateway_for(&config, seed)?)
}

fn ask(args: AskArgs) -> anyhow::Result<()> {
    let graph = read_graph(&args.graph)?;
    let task = NavigationTask {
        id: "ask".into(),
        city: args.city,
        origin: args.from,
        destination: args.to,
        origin_streets: args.from_streets,
        expected_region: None,
    };
    harness::check_tasks(
        std::slice::from_ref(&task),
        &CityGraphs::from([(task.city.clone(), graph.clone())]),
    )?;
    let configs = provider_configs(&args.common)?;
    let gateway = resolve_provider(&args.provider, &configs, args.common.seed)?;
    let (bundle, record, error) = run_trial(
        &graph,
        &task,
        gateway.as_ref(),
        args.group,
        args.common.scope,
    )?;

    println!(
        "--- system\n{}\n--- user\n{}\n--- completion\n{}",
        bundle.system_text,
        bundle.user_text,
        record.completion.trim_end()
    );
    let route: Vec<String> = record.route.iter().map(ToString::to_string).collect();
    println!("--- route\n{}", route.join(" -> "));
    match (&record.label, &record.reason) {
        (Label::Success, _) => println!("--- label\nsuccess"),
        (Label::Failure, Some(reason)) => println!("--- label\nfailure: {reason}"),
        (Label::Failure, None) => println!("--- label\nfailure"),
    }
    if let Some(dir) = &args.run_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        harness::append_record(&dir.join(harness::RECORDS_FILE), &record)?;
    }
    if let Some(e) = error {
        return Err(e.into());
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let tasks = load_tasks(&read(&args.tasks)?)
        .with_context(|| format!("loading {}", args.tasks.display()))?;
    let mut graphs: CityGraphs = BTreeMap::new();
    for spec in &args.graphs {
        let (city, path) = spec
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--graph expects CITY=PATH, got {spec:?}")))?;
        graphs.insert(city.to_string(), read_graph(Path::new(path))?);
    }
    let configs = provider_configs(&args.common)?;
    let names: Vec<String> = if args.provider_names.is_empty() {
        configs.iter().map(|c| c.name.clone()).collect()
    } else {
        args.provider_names.clone()
    };
    if names.is_empty() {
        return Err(Error::Config("no providers: pass --providers or --provider".into()).into());
    }
    let gateways = names
        .iter()
        .map(|n| resolve_provider(n, &configs, args.common.seed))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut config = ExperimentConfig::new(&args.out);
    config.groups = args.groups;
    config.scope = args.common.scope;
    if let Some(p) = &args.overrides {
        config.overrides = Overrides::load(&read(p)?)?;
    }
    let records = harness::run_experiment(&tasks, &gateways, &graphs, &config)?;
    print!("{}", harness::render_report(&records));
    let failed = records.iter().filter(|r| r.provider_failed()).count();
    if failed > 0 {
        return Err(Error::Provider {
            provider: "experiment".into(),
            message: format!(
                "{failed} trials failed at the provider; see {}",
                args.out.display()
            ),
            retryable: false,
        }
        .into());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_provider_failure() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Verbalize(a) => verbalize(a),
        Command::EnumerateRelations(a) => enumerate(a),
        Command::Ask(a) => ask(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
