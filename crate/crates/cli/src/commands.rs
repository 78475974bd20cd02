//! The five commands: knowledge-graph ingestion, end-to-end generation,
//! optimal-path extraction, evaluation, and pentagon ranking. Commands are
//! plain functions returning summaries so tests can drive them without a
//! process boundary; printing happens in [`crate::run`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use wkforge_core::assembly::{assemble_wfg, attach_terminals, enhance_wfg, WorkflowGraph};
use wkforge_core::evaluation::{
    evaluate_trials, evaluate_workflow, pentagon_area, radar_axes, EvalReport, MatchStrategy,
    MetricReport, ReferenceWorkflow,
};
use wkforge_core::generation::{
    build_prompt, generate_sequence, sequence_to_dag, ChainAnalyzer, GeneratedTask, WorkflowDag,
    WorkflowFile,
};
use wkforge_core::intention::{
    decode_intention, encode_intention, load_bundle_dir, preprocess_bundle, DecodedIntention,
    EmbeddedTextOcr,
};
use wkforge_core::optimizer::{optimal_path, CostWeights, DefaultCosts, PathResult};
use wkforge_core::providers::{ProviderConfig, ProviderSet};
use wkforge_core::retrieval::{
    extract_swkg, route, split_neighborhoods, textualize_swkg, EmbeddingIndex,
};
use wkforge_core::wkg::{WorkKnowledgeGraph, WorkflowImplementationRecord};
use wkforge_core::Error;

use crate::{stage, CliError, RunConfig};

/// File name of the configuration echo written next to generation outputs.
pub const MANIFEST_FILE: &str = "run_manifest.json";
/// File name of the assembled workflow graph.
pub const WFG_FILE: &str = "wfg.json";

fn read_to_string(stage_name: &'static str, path: &Path) -> Result<String, CliError> {
    stage(
        stage_name,
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e)),
    )
}

fn write_string(stage_name: &'static str, path: &Path, text: &str) -> Result<(), CliError> {
    stage(
        stage_name,
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e)),
    )
}

fn to_pretty_json<T: Serialize>(
    stage_name: &'static str,
    path: &Path,
    value: &T,
) -> Result<String, CliError> {
    let mut text = stage(
        stage_name,
        serde_json::to_string_pretty(value)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string())),
    )?;
    text.push('\n');
    Ok(text)
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

/// Counts printed after an ingest run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub records: usize,
    pub nodes: usize,
    pub edges: usize,
    pub total_pair_count: u64,
}

impl fmt::Display for IngestSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "records: {}\nnodes: {}\nedges: {}\ntotal_pair_count: {}",
            self.records, self.nodes, self.edges, self.total_pair_count
        )
    }
}

/// Applies a batch of workflow implementation records to the knowledge
/// graph file in place and reports the resulting graph size.
pub fn cmd_ingest(records_path: &Path, wkg_path: &Path) -> Result<IngestSummary, CliError> {
    let mut graph = stage("load-wkg", WorkKnowledgeGraph::load(wkg_path))?;
    let text = read_to_string("parse-records", records_path)?;
    let records: Vec<WorkflowImplementationRecord> = stage(
        "parse-records",
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(records_path.display().to_string(), e.to_string())),
    )?;
    let record_count = records.len();
    for (index, record) in records.into_iter().enumerate() {
        graph
            .record_workflow_implementation(record)
            .map_err(|source| CliError::Record { index, source })?;
    }
    stage("save-wkg", graph.save(wkg_path))?;
    let stats = graph.edge_stats();
    Ok(IngestSummary {
        records: record_count,
        nodes: graph.len(),
        edges: stats.len(),
        total_pair_count: stats.iter().map(|s| s.pair_count).sum(),
    })
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

/// Where a generation run put its outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateSummary {
    pub neighborhoods: usize,
    pub dag_paths: Vec<PathBuf>,
    pub wfg_path: PathBuf,
    pub manifest_path: PathBuf,
    pub wfg_nodes: usize,
    pub wfg_edges: usize,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "neighborhoods: {}", self.neighborhoods)?;
        for path in &self.dag_paths {
            writeln!(f, "dag: {}", path.display())?;
        }
        writeln!(f, "wfg: {}", self.wfg_path.display())?;
        writeln!(f, "manifest: {}", self.manifest_path.display())?;
        write!(
            f,
            "wfg_nodes: {}\nwfg_edges: {}",
            self.wfg_nodes, self.wfg_edges
        )
    }
}

/// One routed neighborhood taken through extract → textualize → prompt →
/// generate → dag-ify. Runs on a fan-out worker; every step names its stage.
fn neighborhood_to_dag(
    neighborhood: &std::collections::BTreeSet<String>,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    decoded: &DecodedIntention,
    providers: &ProviderSet,
) -> Result<WorkflowDag, CliError> {
    let swkg = stage("extract", extract_swkg(neighborhood, graph))?;
    let swkg_text = stage("textualize", textualize_swkg(&swkg, graph))?;
    let prompt = stage("prompt", build_prompt(decoded, &swkg_text))?;
    let sequence = stage(
        "generate",
        generate_sequence(&prompt, &swkg_text, graph, index, providers),
    )?;
    stage("dagify", sequence_to_dag(&sequence, &ChainAnalyzer))
}

fn dag_to_file(dag: &WorkflowDag) -> WorkflowFile {
    WorkflowFile {
        tasks: dag.nodes.clone(),
        edges: dag.edges.clone(),
        entry_id: None,
        exit_id: None,
    }
}

/// Runs the full pipeline: encode the intention, route it over the knowledge
/// graph, generate one task sequence per neighborhood (fanned out across
/// `max_in_flight` workers), assemble, enhance, attach terminals, and write
/// every DAG, the workflow graph, and the run manifest under `output_dir`.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateSummary, CliError> {
    cfg.validate()?;
    let mut graph = stage("load-wkg", WorkKnowledgeGraph::load(&cfg.wkg_path))?;

    // The run seed is authoritative for the providers, whatever the provider
    // block says; the manifest echoes the synced copy.
    let mut effective = cfg.clone();
    effective.provider.seed = cfg.seed;
    let providers = stage("providers", ProviderSet::from_config(&effective.provider))?;

    let bundle = stage("load-intention", load_bundle_dir(&cfg.intention_dir))?;
    let bundle = stage("preprocess", preprocess_bundle(&bundle, &EmbeddedTextOcr))?;
    let encoded = stage("encode", encode_intention(&bundle, providers.embedder.as_ref()))?;
    let decoded = stage("decode", decode_intention(&bundle, &providers))?;

    let index = stage(
        "index",
        EmbeddingIndex::build(&mut graph, providers.embedder.as_ref()),
    )?;

    // A threshold above 1 can never be reached by a cosine, so the routed
    // set is provably empty without scanning the graph.
    if cfg.routing.similarity_threshold > 1.0 {
        return Err(CliError::EmptyRouting {
            threshold: cfg.routing.similarity_threshold,
        });
    }
    let routed = stage("route", route(&encoded, &graph, &index, &cfg.routing))?;
    if routed.is_empty() {
        return Err(CliError::EmptyRouting {
            threshold: cfg.routing.similarity_threshold,
        });
    }

    let neighborhoods = stage(
        "split",
        split_neighborhoods(&routed, &index, &cfg.routing),
    )?;

    // One worker per neighborhood, bounded by the provider in-flight cap.
    // Results are keyed by neighborhood index, so the collected order (and
    // the first error surfaced) is independent of thread scheduling.
    let worker_count = effective.provider.max_in_flight.max(1).min(neighborhoods.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<WorkflowDag, CliError>>>> =
        Mutex::new((0..neighborhoods.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= neighborhoods.len() {
                    break;
                }
                let outcome =
                    neighborhood_to_dag(&neighborhoods[i], &graph, &index, &decoded, &providers);
                slots.lock().expect("worker slot poisoned")[i] = Some(outcome);
            });
        }
    });
    let mut dags = Vec::with_capacity(neighborhoods.len());
    for slot in slots.into_inner().expect("worker slots poisoned") {
        dags.push(slot.expect("every neighborhood is processed exactly once")?);
    }

    let wfg = stage("assemble", assemble_wfg(&dags, &graph))?;
    let wfg = stage("enhance", enhance_wfg(&wfg, &graph, &index, &cfg.enhance))?;
    let wfg = stage("attach", attach_terminals(&wfg))?;

    stage(
        "write",
        std::fs::create_dir_all(&cfg.output_dir)
            .map_err(|e| Error::io(cfg.output_dir.display().to_string(), e)),
    )?;
    let mut dag_paths = Vec::with_capacity(dags.len());
    for (i, dag) in dags.iter().enumerate() {
        let path = cfg.output_dir.join(format!("dag_{i}.json"));
        stage("write", dag_to_file(dag).save(&path))?;
        dag_paths.push(path);
    }
    let wfg_path = cfg.output_dir.join(WFG_FILE);
    stage("write", wfg.to_file().save(&wfg_path))?;
    let manifest_path = cfg.output_dir.join(MANIFEST_FILE);
    let manifest = to_pretty_json("write", &manifest_path, &effective)?;
    write_string("write", &manifest_path, &manifest)?;

    Ok(GenerateSummary {
        neighborhoods: neighborhoods.len(),
        dag_paths,
        wfg_path,
        manifest_path,
        wfg_nodes: wfg.node_count(),
        wfg_edges: wfg.edge_count(),
    })
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

/// The extracted path plus a rendered task sequence for the terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeSummary {
    pub result: PathResult,
    pub out_path: PathBuf,
    rendered: String,
}

impl fmt::Display for OptimizeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rendered)
    }
}

/// Loads a workflow graph, extracts the minimum-cost entry→exit path under
/// the given weights, and writes the result file.
pub fn cmd_optimize(
    wfg_path: &Path,
    wkg_path: &Path,
    weights: &CostWeights,
    defaults: &DefaultCosts,
    out_path: &Path,
) -> Result<OptimizeSummary, CliError> {
    let file = stage("load-wfg", WorkflowFile::load(wfg_path))?;
    let wfg = stage("load-wfg", WorkflowGraph::from_file(&file))?;
    let graph = stage("load-wkg", WorkKnowledgeGraph::load(wkg_path))?;
    let result = stage("optimize", optimal_path(&wfg, &graph, weights, defaults))?;
    let text = to_pretty_json("write", out_path, &result)?;
    write_string("write", out_path, &text)?;

    let mut rendered = format!("optimal path (total cost {:.6}):\n", result.total_cost);
    let mut costs = result.per_task.iter();
    for id in &result.node_ids {
        let node = stage("render", wfg.require_node(id))?;
        if wfg.is_terminal(id) {
            rendered.push_str(&format!("  {id}\n"));
        } else {
            let cost = costs.next().expect("one per_task entry per interior node");
            rendered.push_str(&format!("  {id}  {}  (cost {:.6})\n", node.title, cost.combined));
        }
    }
    rendered.push_str(&format!("written: {}", out_path.display()));
    Ok(OptimizeSummary {
        result,
        out_path: out_path.to_path_buf(),
        rendered,
    })
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

/// Settings for an evaluation run.
#[derive(Debug, Clone)]
pub struct EvaluateSettings {
    pub provider: ProviderConfig,
    pub strategy: MatchStrategy,
    /// Minimum judge score for a generated/reference pair to match.
    pub match_threshold: f64,
    /// Trials to run when a single generated file is given; several files
    /// count as one trial each.
    pub trials: u32,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        EvaluateSettings {
            provider: ProviderConfig::default(),
            strategy: MatchStrategy::Greedy,
            match_threshold: wkforge_core::evaluation::DEFAULT_MATCH_THRESHOLD,
            trials: 10,
        }
    }
}

/// Interior tasks of a workflow file: the virtual terminals named by
/// `entry_id`/`exit_id` are plumbing, not tasks, and are never scored.
fn interior_tasks(file: &WorkflowFile) -> Vec<GeneratedTask> {
    file.tasks
        .iter()
        .filter(|t| {
            Some(&t.local_id) != file.entry_id.as_ref()
                && Some(&t.local_id) != file.exit_id.as_ref()
        })
        .cloned()
        .collect()
}

/// Scores generated workflow files against a reference and writes the
/// report. Each file is one trial; a single file is scored `trials` times.
pub fn cmd_evaluate(
    generated_paths: &[PathBuf],
    reference_path: &Path,
    settings: &EvaluateSettings,
    out_path: &Path,
) -> Result<EvalReport, CliError> {
    if generated_paths.is_empty() {
        return Err(CliError::Config(
            "at least one generated workflow file is required".to_string(),
        ));
    }
    if settings.trials == 0 {
        return Err(CliError::Config("trials must be >= 1".to_string()));
    }
    let reference_file = stage("load-reference", WorkflowFile::load(reference_path))?;
    let reference = stage(
        "load-reference",
        ReferenceWorkflow::from_workflow_file(&reference_file),
    )?;
    let providers = stage("providers", ProviderSet::from_config(&settings.provider))?;

    let mut trials: Vec<Vec<GeneratedTask>> = Vec::new();
    for path in generated_paths {
        let file = stage("load-generated", WorkflowFile::load(path))?;
        trials.push(interior_tasks(&file));
    }
    if trials.len() == 1 {
        let only = trials[0].clone();
        trials = vec![only; settings.trials as usize];
    }

    let mut per_trial: Vec<MetricReport> = Vec::new();
    let mut matchings = Vec::new();
    for tasks in &trials {
        let (report, matching) = stage(
            "evaluate",
            evaluate_workflow(
                tasks,
                &reference,
                &providers,
                settings.strategy,
                settings.match_threshold,
            ),
        )?;
        per_trial.push(report);
        matchings.push(matching);
    }
    let average = stage("evaluate", evaluate_trials(&per_trial))?;
    let report = EvalReport {
        radar: radar_axes(&average),
        per_trial,
        average,
        matchings,
    };
    stage("write", report.save(out_path))?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

/// One named row of a metrics table, axis order matching the radar pentagon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub name: String,
    pub coverage: f64,
    pub kendall: f64,
    pub dtw: f64,
    pub cosine: f64,
    pub bleu: f64,
}

impl MetricsRow {
    /// Axis values in pentagon order: coverage, kendall, dtw, cosine, bleu.
    pub fn axes(&self) -> [f64; 5] {
        [self.coverage, self.kendall, self.dtw, self.cosine, self.bleu]
    }
}

/// A row with its pentagon area, as ranked by [`cmd_rank`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRow {
    pub name: String,
    pub area: f64,
}

/// Ranks the rows of a metrics table by radar pentagon area, descending;
/// rows with equal areas keep their table order.
pub fn cmd_rank(table_path: &Path) -> Result<Vec<RankedRow>, CliError> {
    let text = read_to_string("parse-table", table_path)?;
    let rows: Vec<MetricsRow> = stage(
        "parse-table",
        serde_json::from_str(&text)
            .map_err(|e| Error::parse(table_path.display().to_string(), e.to_string())),
    )?;
    if rows.is_empty() {
        return Err(CliError::Config("metrics table has no rows".to_string()));
    }
    let mut ranked = Vec::with_capacity(rows.len());
    for row in &rows {
        let area = stage("rank", pentagon_area(&row.axes()))?;
        ranked.push(RankedRow {
            name: row.name.clone(),
            area,
        });
    }
    ranked.sort_by(|a, b| b.area.total_cmp(&a.area));
    Ok(ranked)
}
