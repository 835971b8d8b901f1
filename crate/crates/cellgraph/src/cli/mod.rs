//! Command-line front end. Every pipeline stage is its own subcommand
//! so intermediate artifacts (series, matrices, graphs, partitions) can
//! be produced and inspected independently; `bssn`, `asn` and `usn` run
//! the full pipelines in one step.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Each run writing
//! to an `--out` directory also writes `manifest.json` with the command
//! line, effective configuration, and input digests. Log verbosity is
//! controlled by the `CELLGRAPH_LOG` environment variable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::community::{
    builtin_profiles, label_scenarios, load_profiles, louvain, write_partition_csv,
    ScenarioAssignment, ScenarioProfile, DEFAULT_CONFIDENCE_THRESHOLD,
};
use crate::corr::{correlation_matrix, CorrelationMatrix};
use crate::error::{Error, Result};
use crate::graph::{export, import_json, pmfg, ExportFormat, NodeKind, Ranking};
use crate::records::{
    parse_call_csv, parse_cells_csv, parse_flow_csv, write_csv, ParseReport,
};
use crate::series::{
    aggregate, autocorrelation, concentration, cross_correlation, read_series_csv, top_share,
    write_concentration_csv, write_series_csv, AggregateKey, Metric,
};
use crate::socialnets::{build_asn, build_bssn, build_usn, PipelineConfig};
use crate::synth::{default_scenarios, gen_calls, gen_city, gen_subscribers};

#[derive(Parser)]
#[command(
    name = "cellgraph",
    version,
    about = "Cellular-traffic analytics: build base-station, app and user graphs from traffic records"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic city of base stations with planted scenarios.
    SynthCity(SynthCityArgs),
    /// Draw per-subscriber traffic totals from a Pareto distribution.
    SynthSubs(SynthSubsArgs),
    /// Generate a call log with planted calling blocks.
    SynthCalls(SynthCallsArgs),
    /// Aggregate flow records into per-entity time series.
    Aggregate(AggregateArgs),
    /// Series statistics: autocorrelation, cross-correlation, concentration.
    Stats(StatsArgs),
    /// Pearson correlation matrix over a set of series.
    Correlate(CorrelateArgs),
    /// Planar maximally filtered graph from a correlation matrix.
    Pmfg(PmfgArgs),
    /// Louvain communities of a graph, with optional scenario labels.
    Communities(CommunitiesArgs),
    /// Full base-station pipeline: flows + cells to labeled communities.
    Bssn(BssnArgs),
    /// Full app pipeline: flows to an app graph with communities.
    Asn(AsnArgs),
    /// Full user pipeline: calls to a user graph with communities.
    Usn(UsnArgs),
    /// Convert a graph JSON artifact to GraphML, DOT, or JSON.
    Export(ExportArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

/// Pipeline settings shared by the aggregation-based subcommands. A
/// `--config` JSON file provides the base values; explicit flags
/// override individual fields.
#[derive(Args)]
struct PipelineOpts {
    /// JSON file mirroring the pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Aggregation metric: bytes_total, bytes_down, bytes_up, flow_count.
    #[arg(long)]
    metric: Option<Metric>,
    /// Aggregation bin width in seconds.
    #[arg(long)]
    bin: Option<i64>,
    /// Analysis window start, epoch seconds (inclusive).
    #[arg(long)]
    begin: Option<i64>,
    /// Analysis window end, epoch seconds (exclusive).
    #[arg(long)]
    end: Option<i64>,
    /// Edge ranking for the planar filter: value or abs_value.
    #[arg(long)]
    ranking: Option<Ranking>,
    /// Louvain resolution.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Minimum total volume for an entity to enter the correlation stage.
    #[arg(long)]
    min_activity: Option<f64>,
}

impl PipelineOpts {
    fn effective(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => serde_json::from_reader(open_input(path)?)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = self.metric {
            cfg.metric = v;
        }
        if let Some(v) = self.bin {
            cfg.bin_width = v;
        }
        if let Some(v) = self.begin {
            cfg.span.0 = v;
        }
        if let Some(v) = self.end {
            cfg.span.1 = v;
        }
        if let Some(v) = self.ranking {
            cfg.ranking = v;
        }
        if let Some(v) = self.resolution {
            cfg.resolution = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.min_activity {
            cfg.min_activity = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthCityArgs {
    /// Cells per planted scenario.
    #[arg(long, default_value_t = 15)]
    cells_per_scenario: usize,
    #[arg(long, default_value_t = 7)]
    days: usize,
    /// Flow granularity in seconds; must divide one day.
    #[arg(long, default_value_t = 3600)]
    bin: i64,
    /// Per-bin noise as a fraction of the bin mean.
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SynthSubsArgs {
    /// Number of subscribers.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Pareto shape; smaller values mean a heavier tail.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SynthCallsArgs {
    #[arg(long, default_value_t = 10)]
    users_per_block: usize,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    /// Within-block call probability.
    #[arg(long, default_value_t = 0.9)]
    p_in: f64,
    /// Cross-block call probability.
    #[arg(long, default_value_t = 0.05)]
    p_out: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct AggregateArgs {
    /// Flow records CSV.
    #[arg(long)]
    flows: PathBuf,
    /// Aggregation entity: cell, user, or app.
    #[arg(long)]
    key: AggregateKey,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct StatsArgs {
    #[command(subcommand)]
    command: StatsCommand,
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Autocorrelation of one entity's series at lags 0..=max-lag.
    Acf {
        /// Series CSV (one row per entity).
        #[arg(long)]
        series: PathBuf,
        /// Entity id to analyze.
        #[arg(long)]
        entity: String,
        #[arg(long, default_value_t = 48)]
        max_lag: usize,
        /// Also write acf.csv and a manifest into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-correlation of two entities at lags -max-lag..=max-lag.
    Xcf {
        #[arg(long)]
        series: PathBuf,
        /// First entity id.
        #[arg(long)]
        a: String,
        /// Second entity id.
        #[arg(long)]
        b: String,
        #[arg(long, default_value_t = 24)]
        max_lag: i64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Concentration curve over per-entity totals plus top-p shares.
    Concentration {
        /// Totals CSV with header entity_id,total.
        #[arg(long)]
        totals: PathBuf,
        /// Fractions to report the top-p share for.
        #[arg(long, default_values_t = [0.2])]
        p: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    series: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PmfgArgs {
    /// Correlation matrix CSV.
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value = "value")]
    ranking: Ranking,
    /// Node kind recorded in the graph: bs, app, or user.
    #[arg(long, default_value = "bs")]
    kind: NodeKind,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct CommunitiesArgs {
    /// Graph JSON artifact (as written by pmfg, bssn, asn, or usn).
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    resolution: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Series CSV for the graph's nodes; enables scenario labeling.
    #[arg(long)]
    series: Option<PathBuf>,
    /// Custom reference profiles CSV (default: built-in library).
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Distance above which a label is flagged low-confidence.
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE_THRESHOLD)]
    threshold: f64,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct BssnArgs {
    #[arg(long)]
    flows: PathBuf,
    /// Cell table CSV with coordinates.
    #[arg(long)]
    cells: PathBuf,
    /// Abort on the first malformed row instead of skipping it.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct AsnArgs {
    #[arg(long)]
    flows: PathBuf,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct UsnArgs {
    /// Call records CSV.
    #[arg(long)]
    calls: PathBuf,
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    pipeline: PipelineOpts,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ExportArgs {
    /// Graph JSON artifact to convert.
    #[arg(long)]
    graph: PathBuf,
    /// Target format: graphml, dot, or json.
    #[arg(long)]
    format: ExportFormat,
    #[command(flatten)]
    out: OutArg,
}

/// Parse arguments, run the chosen command, and map the outcome to the
/// exit-code contract (0 ok, 1 usage, 2 data error).
pub fn run() -> i32 {
    let _ = env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("CELLGRAPH_LOG", "warn"),
    )
    .try_init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are not errors
            let code = i32::from(err.use_stderr());
            let _ = err.print();
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {err}");
        }
    }
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::SynthCity(args) => cmd_synth_city(args),
        Command::SynthSubs(args) => cmd_synth_subs(args),
        Command::SynthCalls(args) => cmd_synth_calls(args),
        Command::Aggregate(args) => cmd_aggregate(args),
        Command::Stats(args) => cmd_stats(args.command),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Pmfg(args) => cmd_pmfg(args),
        Command::Communities(args) => cmd_communities(args),
        Command::Bssn(args) => cmd_bssn(args),
        Command::Asn(args) => cmd_asn(args),
        Command::Usn(args) => cmd_usn(args),
        Command::Export(args) => cmd_export(args),
    }
}

// ---- run bookkeeping -------------------------------------------------

/// Collects what a subcommand did to an output directory and writes the
/// run manifest at the end.
struct Run {
    started: Instant,
    out: PathBuf,
    inputs: BTreeMap<String, String>,
    config: Option<PipelineConfig>,
}

impl Run {
    fn new(out: &Path) -> Result<Self> {
        std::fs::create_dir_all(out).map_err(|e| {
            Error::InvalidArgument(format!("cannot create {}: {e}", out.display()))
        })?;
        Ok(Run {
            started: Instant::now(),
            out: out.to_path_buf(),
            inputs: BTreeMap::new(),
            config: None,
        })
    }

    /// Record an input file's digest in the manifest.
    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .insert(path.display().to_string(), sha256_file(path)?);
        Ok(())
    }

    fn config(&mut self, cfg: &PipelineConfig) {
        self.config = Some(cfg.clone());
    }

    fn write<F>(&self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.out.join(name);
        let mut w = create_output(&path)?;
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let config_json = serde_json::to_string(&self.config)?;
        let manifest = serde_json::json!({
            "command": std::env::args().collect::<Vec<String>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "config_digest": hex_digest(config_json.as_bytes()),
            "inputs": self.inputs,
            "duration_ms": self.started.elapsed().as_millis() as u64,
        });
        self.write("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut reader = open_input(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn open_input(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidArgument(format!("cannot open {}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", path.display())))
}

fn note_report(what: &str, report: &ParseReport) {
    if report.rows_rejected > 0 {
        log::warn!(
            "{what}: rejected {} of {} rows",
            report.rows_rejected,
            report.rows_total
        );
        for (line, reason) in report.rejects.iter().take(5) {
            log::warn!("{what} line {line}: {reason}");
        }
    }
}

/// `entity_id,label` export for planted ground truth.
fn write_label_csv<W: Write>(labels: &BTreeMap<String, String>, out: &mut W) -> Result<()> {
    writeln!(out, "entity_id,label")?;
    for (id, label) in labels {
        writeln!(out, "{id},{label}")?;
    }
    Ok(())
}

/// `entity_id,total` export for per-entity volume totals.
fn write_totals_csv<W: Write>(totals: &BTreeMap<String, f64>, out: &mut W) -> Result<()> {
    writeln!(out, "entity_id,total")?;
    for (id, total) in totals {
        writeln!(out, "{id},{total}")?;
    }
    Ok(())
}

fn read_totals_csv<R: BufRead>(source: R) -> Result<BTreeMap<String, f64>> {
    let mut lines = source.lines();
    match lines.next().transpose()? {
        Some(header) if header.trim_end_matches('\r') == "entity_id,total" => {}
        other => {
            return Err(Error::Schema(format!(
                "expected totals header 'entity_id,total', got {other:?}"
            )))
        }
    }
    let mut totals = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let text = line.trim_end_matches('\r');
        if text.is_empty() {
            continue;
        }
        let (id, value) = text.split_once(',').ok_or_else(|| Error::Row {
            line: i + 2,
            reason: "expected 'entity_id,total'".into(),
        })?;
        let total: f64 = value.parse().map_err(|_| Error::Row {
            line: i + 2,
            reason: format!("bad total '{value}'"),
        })?;
        totals.insert(id.to_string(), total);
    }
    Ok(totals)
}

// ---- subcommands -----------------------------------------------------

fn cmd_synth_city(args: SynthCityArgs) -> Result<()> {
    let scenarios = default_scenarios(args.noise)?;
    let (flows, cells, truth) = gen_city(
        &scenarios,
        args.cells_per_scenario,
        args.days,
        args.bin,
        args.seed,
    )?;
    let run = Run::new(&args.out.out)?;
    run.write("flows.csv", |w| write_csv(&flows, w))?;
    run.write("cells.csv", |w| write_csv(&cells, w))?;
    run.write("scenarios.csv", |w| write_label_csv(&truth, w))?;
    println!(
        "synth-city: {} cells, {} flow records, {} scenarios",
        cells.len(),
        flows.len(),
        scenarios.len()
    );
    run.finish()
}

fn cmd_synth_subs(args: SynthSubsArgs) -> Result<()> {
    let totals = gen_subscribers(args.n, args.alpha, args.seed)?;
    let run = Run::new(&args.out.out)?;
    run.write("totals.csv", |w| write_totals_csv(&totals, w))?;
    println!("synth-subs: {} subscribers", totals.len());
    run.finish()
}

fn cmd_synth_calls(args: SynthCallsArgs) -> Result<()> {
    let (calls, blocks) = gen_calls(
        args.users_per_block,
        args.blocks,
        args.p_in,
        args.p_out,
        args.seed,
    )?;
    let labels: BTreeMap<String, String> = blocks
        .iter()
        .map(|(id, block)| (id.clone(), block.to_string()))
        .collect();
    let run = Run::new(&args.out.out)?;
    run.write("calls.csv", |w| write_csv(&calls, w))?;
    run.write("blocks.csv", |w| write_label_csv(&labels, w))?;
    println!("synth-calls: {} calls among {} users", calls.len(), labels.len());
    run.finish()
}

fn cmd_aggregate(args: AggregateArgs) -> Result<()> {
    let cfg = args.pipeline.effective()?;
    let (flows, report) = parse_flow_csv(open_input(&args.flows)?, args.strict)?;
    note_report("flows", &report);
    let series = aggregate(&flows, args.key, cfg.metric, cfg.bin_width, cfg.span)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.flows)?;
    run.config(&cfg);
    run.write("series.csv", |w| write_series_csv(&series, w))?;
    println!("aggregate: {} series", series.len());
    run.finish()
}

fn cmd_stats(command: StatsCommand) -> Result<()> {
    match command {
        StatsCommand::Acf {
            series,
            entity,
            max_lag,
            out,
        } => {
            let all = read_series_csv(open_input(&series)?)?;
            let ts = all.get(&entity).ok_or_else(|| {
                Error::InvalidArgument(format!("no series for entity '{entity}'"))
            })?;
            let acf = autocorrelation(ts, max_lag)?;
            let mut text = String::from("lag,r\n");
            for (lag, r) in acf.iter().enumerate() {
                text.push_str(&format!("{lag},{r}\n"));
            }
            print!("{text}");
            if let Some(dir) = out {
                let mut run = Run::new(&dir)?;
                run.input(&series)?;
                run.write("acf.csv", |w| Ok(w.write_all(text.as_bytes())?))?;
                run.finish()?;
            }
            Ok(())
        }
        StatsCommand::Xcf {
            series,
            a,
            b,
            max_lag,
            out,
        } => {
            let all = read_series_csv(open_input(&series)?)?;
            let fetch = |id: &str| {
                all.get(id).ok_or_else(|| {
                    Error::InvalidArgument(format!("no series for entity '{id}'"))
                })
            };
            let (sa, sb) = (fetch(&a)?, fetch(&b)?);
            let mut text = String::from("lag,r\n");
            let mut any = false;
            for lag in -max_lag..=max_lag {
                match cross_correlation(sa, sb, lag) {
                    Ok(r) => {
                        any = true;
                        text.push_str(&format!("{lag},{r}\n"));
                    }
                    Err(Error::InsufficientData(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            if !any {
                return Err(Error::InsufficientData(
                    "no lag has enough overlapping bins".into(),
                ));
            }
            print!("{text}");
            if let Some(dir) = out {
                let mut run = Run::new(&dir)?;
                run.input(&series)?;
                run.write("xcf.csv", |w| Ok(w.write_all(text.as_bytes())?))?;
                run.finish()?;
            }
            Ok(())
        }
        StatsCommand::Concentration { totals, p, out } => {
            let map = read_totals_csv(open_input(&totals)?)?;
            let curve = concentration(&map)?;
            for &frac in &p {
                let share = top_share(&curve, frac)?;
                println!("top_share({frac}) = {share}");
            }
            if let Some(dir) = out {
                let mut run = Run::new(&dir)?;
                run.input(&totals)?;
                run.write("concentration.csv", |w| write_concentration_csv(&curve, w))?;
                run.finish()?;
            }
            Ok(())
        }
    }
}

fn cmd_correlate(args: CorrelateArgs) -> Result<()> {
    let series = read_series_csv(open_input(&args.series)?)?;
    let matrix = correlation_matrix(&series)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.series)?;
    run.write("matrix.csv", |w| matrix.write_csv(w))?;
    println!("correlate: {} x {} matrix", matrix.n(), matrix.n());
    run.finish()
}

fn cmd_pmfg(args: PmfgArgs) -> Result<()> {
    let matrix = CorrelationMatrix::read_csv(open_input(&args.matrix)?)?;
    let (graph, certificate) = pmfg(&matrix, args.ranking, args.kind)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.matrix)?;
    run.write("graph.json", |w| export(&graph, ExportFormat::Json, w))?;
    run.write("certificate.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &certificate)?;
        writeln!(w)?;
        Ok(())
    })?;
    println!("pmfg: {} nodes, {} edges", graph.n(), graph.m());
    run.finish()
}

fn cmd_communities(args: CommunitiesArgs) -> Result<()> {
    let graph = import_json(open_input(&args.graph)?)?;
    let partition = louvain(&graph, args.resolution, args.seed)?;
    let labels = match &args.series {
        Some(path) => {
            let series = read_series_csv(open_input(path)?)?;
            let profiles: Vec<ScenarioProfile> = match &args.profiles {
                Some(p) => load_profiles(p)?,
                None => builtin_profiles(),
            };
            Some(label_scenarios(
                &partition,
                &series,
                &profiles,
                args.threshold,
            )?)
        }
        None => None,
    };
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.graph)?;
    if let Some(path) = &args.series {
        run.input(path)?;
    }
    if let Some(path) = &args.profiles {
        run.input(path)?;
    }
    run.write("partition.csv", |w| {
        write_partition_csv(&partition, labels.as_ref(), w)
    })?;
    println!(
        "communities: {} communities, modularity {:.4}",
        partition.k(),
        partition.modularity()
    );
    run.finish()
}

/// Write the three graph exports plus the partition for a finished
/// pipeline build.
fn write_build_outputs(
    run: &Run,
    graph: &crate::graph::WeightedGraph,
    partition: &crate::community::CommunityPartition,
    labels: Option<&BTreeMap<usize, ScenarioAssignment>>,
) -> Result<()> {
    run.write("graph.json", |w| export(graph, ExportFormat::Json, w))?;
    run.write("graph.graphml", |w| export(graph, ExportFormat::Graphml, w))?;
    run.write("graph.dot", |w| export(graph, ExportFormat::Dot, w))?;
    run.write("partition.csv", |w| write_partition_csv(partition, labels, w))
}

fn cmd_bssn(args: BssnArgs) -> Result<()> {
    let cfg = args.pipeline.effective()?;
    let (flows, flow_report) = parse_flow_csv(open_input(&args.flows)?, args.strict)?;
    note_report("flows", &flow_report);
    let (cells, cell_report) = parse_cells_csv(open_input(&args.cells)?)?;
    note_report("cells", &cell_report);
    let (graph, partition, labels) = build_bssn(&flows, &cells, &cfg)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.flows)?;
    run.input(&args.cells)?;
    run.config(&cfg);
    write_build_outputs(&run, &graph, &partition, Some(&labels))?;
    println!(
        "bssn: {} cells, {} edges, {} communities, modularity {:.4}",
        graph.n(),
        graph.m(),
        partition.k(),
        partition.modularity()
    );
    run.finish()
}

fn cmd_asn(args: AsnArgs) -> Result<()> {
    let cfg = args.pipeline.effective()?;
    let (flows, report) = parse_flow_csv(open_input(&args.flows)?, args.strict)?;
    note_report("flows", &report);
    let (graph, partition) = build_asn(&flows, &cfg)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.flows)?;
    run.config(&cfg);
    write_build_outputs(&run, &graph, &partition, None)?;
    println!(
        "asn: {} apps, {} edges, {} communities, modularity {:.4}",
        graph.n(),
        graph.m(),
        partition.k(),
        partition.modularity()
    );
    run.finish()
}

fn cmd_usn(args: UsnArgs) -> Result<()> {
    let cfg = args.pipeline.effective()?;
    let (calls, report) = parse_call_csv(open_input(&args.calls)?, args.strict)?;
    note_report("calls", &report);
    let (graph, partition) = build_usn(&calls, &cfg)?;
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.calls)?;
    run.config(&cfg);
    write_build_outputs(&run, &graph, &partition, None)?;
    println!(
        "usn: {} users, {} edges, {} communities, modularity {:.4}",
        graph.n(),
        graph.m(),
        partition.k(),
        partition.modularity()
    );
    run.finish()
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let graph = import_json(open_input(&args.graph)?)?;
    let name = match args.format {
        ExportFormat::Graphml => "graph.graphml",
        ExportFormat::Dot => "graph.dot",
        ExportFormat::Json => "graph.json",
    };
    let mut run = Run::new(&args.out.out)?;
    run.input(&args.graph)?;
    run.write(name, |w| export(&graph, args.format, w))?;
    println!("export: wrote {name}");
    run.finish()
}
