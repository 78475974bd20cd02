//! Prompting the generation backend over each extracted sub-graph, parsing
//! its reply into task sequences, and converting sequences into workflow
//! DAGs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intention::DecodedIntention;
use crate::providers::{ProviderSet, TextEmbedder};
use crate::retrieval::{EmbeddingIndex, COSINE_SLACK};
use crate::wkg::WorkKnowledgeGraph;

/// Minimum cosine between a generated task's text and a knowledge-graph
/// node's text for the task to be tagged with that node (after the exact
/// title match has failed).
pub const TAG_SIMILARITY_THRESHOLD: f64 = 0.95;

/// One task produced by the generation backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedTask {
    /// Unique within its sequence; assigned t1, t2, … in parse order.
    /// Serialized as `id` in workflow files.
    #[serde(rename = "id")]
    pub local_id: String,
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub instructions: Vec<String>,
    /// Set when the task matches a knowledge-graph node.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wkg_node_id: Option<String>,
}

impl GeneratedTask {
    /// Text compared against node embeddings when tagging; mirrors the
    /// node-side "title\ndescription\nindustry" shape with no industry.
    fn embedding_text(&self) -> String {
        format!("{}\n{}\n", self.title, self.description)
    }
}

/// Ordered tasks parsed from one generation reply.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSequence {
    pub tasks: Vec<GeneratedTask>,
    /// Identifier of the sub-graph whose prompt produced this sequence.
    pub source_swkg: String,
}

/// One task sequence converted to a DAG.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkflowDag {
    pub nodes: Vec<GeneratedTask>,
    /// Directed (local_id, local_id) dependency edges.
    pub edges: Vec<(String, String)>,
}

impl WorkflowDag {
    /// Checks edge endpoints exist and the edge relation is acyclic.
    pub fn validate(&self) -> Result<()> {
        let ids: BTreeSet<&str> = self.nodes.iter().map(|n| n.local_id.as_str()).collect();
        if ids.len() != self.nodes.len() {
            return Err(Error::invalid_input("duplicate local ids in dag"));
        }
        for (src, dst) in &self.edges {
            if !ids.contains(src.as_str()) || !ids.contains(dst.as_str()) {
                return Err(Error::invalid_input(format!(
                    "dag edge ({src:?}, {dst:?}) references a missing node"
                )));
            }
        }
        if self.has_cycle() {
            return Err(Error::invalid_input("dag contains a cycle"));
        }
        Ok(())
    }

    fn has_cycle(&self) -> bool {
        // Kahn's algorithm: any node left unprocessed sits on a cycle.
        let mut indegree: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .map(|n| (n.local_id.as_str(), 0))
            .collect();
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (src, dst) in &self.edges {
            *indegree.entry(dst.as_str()).or_insert(0) += 1;
            out.entry(src.as_str()).or_default().push(dst.as_str());
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut processed = 0;
        while let Some(id) = ready.pop() {
            processed += 1;
            for &next in out.get(id).into_iter().flatten() {
                let d = indegree.get_mut(next).expect("endpoints validated");
                *d -= 1;
                if *d == 0 {
                    ready.push(next);
                }
            }
        }
        processed != indegree.len()
    }
}

/// Builds the deterministic generation prompt: instruction header, decoded
/// intention, the sub-graph's DFS text verbatim, and the output contract.
/// The framing deliberately never contains the sequence `" | "`, which the
/// offline generation stub treats as a task line.
pub fn build_prompt(dec: &DecodedIntention, swkg_text: &str) -> Result<String> {
    for (label, text) in [
        ("input", &dec.input_description),
        ("output", &dec.output_description),
        ("process", &dec.process_description),
    ] {
        if text.trim().is_empty() {
            return Err(Error::invalid_input(format!(
                "decoded intention has an empty {label} description"
            )));
        }
    }
    if swkg_text.trim().is_empty() {
        return Err(Error::invalid_input("sub-graph text is empty"));
    }
    Ok(format!(
        "Design the sequence of tasks a workflow needs to satisfy the client\n\
         intention below. Prefer tasks from the knowledge excerpt when they fit.\n\
         \n\
         Intention:\n\
         Input: {input}\n\
         Output: {output}\n\
         Process: {process}\n\
         \n\
         Knowledge excerpt (depth-first, one task per line):\n\
         {swkg_text}\n\
         \n\
         Answer with one task per line, formatted `title :: description`,\n\
         in execution order. No other text.\n",
        input = dec.input_description,
        output = dec.output_description,
        process = dec.process_description,
    ))
}

/// Parses a generation reply: one task per line shaped `title :: description`,
/// other lines skipped; local ids assigned t1, t2, … in order.
pub fn parse_sequence(text: &str) -> Vec<GeneratedTask> {
    let mut tasks = Vec::new();
    for line in text.lines() {
        let Some((title, description)) = line.split_once(" :: ") else {
            continue;
        };
        let title = title.trim();
        if title.is_empty() {
            continue;
        }
        tasks.push(GeneratedTask {
            local_id: format!("t{}", tasks.len() + 1),
            title: title.to_string(),
            description: description.trim().to_string(),
            instructions: Vec::new(),
            wkg_node_id: None,
        });
    }
    tasks
}

/// Tags each task with the knowledge-graph node it matches: exact
/// case-insensitive title equality first (ties to the smallest node id),
/// then best embedding cosine at or above [`TAG_SIMILARITY_THRESHOLD`];
/// otherwise the task stays untagged.
pub fn tag_tasks(
    tasks: &mut [GeneratedTask],
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    embedder: &dyn TextEmbedder,
) -> Result<()> {
    let mut by_title: BTreeMap<String, &str> = BTreeMap::new();
    for node in graph.nodes() {
        by_title
            .entry(node.title.to_lowercase())
            .or_insert(node.id.as_str());
    }
    for task in tasks.iter_mut() {
        if let Some(&id) = by_title.get(&task.title.to_lowercase()) {
            task.wkg_node_id = Some(id.to_string());
            continue;
        }
        let vector = embedder.embed_text(&task.embedding_text())?;
        let mut best: Option<(f64, &str)> = None;
        for id in graph.node_ids() {
            let cos = vector.cosine(index.vector(id)?);
            let better = match best {
                None => true,
                Some((best_cos, _)) => cos > best_cos,
            };
            if better {
                best = Some((cos, id));
            }
        }
        if let Some((cos, id)) = best {
            if cos >= TAG_SIMILARITY_THRESHOLD - COSINE_SLACK {
                task.wkg_node_id = Some(id.to_string());
            }
        }
    }
    Ok(())
}

/// Prompts the generation backend and parses + tags its reply.
pub fn generate_sequence(
    prompt: &str,
    source_swkg: &str,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    providers: &ProviderSet,
) -> Result<TaskSequence> {
    let reply = providers.generator.complete(prompt)?;
    let mut tasks = parse_sequence(&reply);
    if tasks.is_empty() {
        return Err(Error::MalformedResponse(format!(
            "no task lines in generation reply: {reply:?}"
        )));
    }
    tag_tasks(&mut tasks, graph, index, providers.embedder.as_ref())?;
    Ok(TaskSequence {
        tasks,
        source_swkg: source_swkg.to_string(),
    })
}

/// Emits dependency edges over a task sequence as (from, to) index pairs.
pub trait DependencyAnalyzer: Send + Sync {
    fn analyze(&self, tasks: &[GeneratedTask]) -> Result<Vec<(usize, usize)>>;
}

/// Default policy: tasks depend in sequence order, t_i → t_{i+1}.
#[derive(Debug, Clone, Copy, Default)]
pub struct ChainAnalyzer;

impl DependencyAnalyzer for ChainAnalyzer {
    fn analyze(&self, tasks: &[GeneratedTask]) -> Result<Vec<(usize, usize)>> {
        Ok((1..tasks.len()).map(|i| (i - 1, i)).collect())
    }
}

/// Converts a sequence into a DAG using the analyzer's dependency edges.
/// The result must be acyclic with every task reachable from the first.
pub fn sequence_to_dag(
    seq: &TaskSequence,
    analyzer: &dyn DependencyAnalyzer,
) -> Result<WorkflowDag> {
    if seq.tasks.is_empty() {
        return Err(Error::invalid_input("cannot convert an empty sequence"));
    }
    let index_edges = analyzer.analyze(&seq.tasks)?;
    let n = seq.tasks.len();
    let mut edges = Vec::with_capacity(index_edges.len());
    for (from, to) in index_edges {
        if from >= n || to >= n {
            return Err(Error::InvalidAnalyzerOutput(format!(
                "edge ({from}, {to}) is out of range for {n} tasks"
            )));
        }
        if from == to {
            return Err(Error::InvalidAnalyzerOutput(format!(
                "self-dependency on task index {from}"
            )));
        }
        edges.push((
            seq.tasks[from].local_id.clone(),
            seq.tasks[to].local_id.clone(),
        ));
    }
    let dag = WorkflowDag {
        nodes: seq.tasks.clone(),
        edges,
    };
    if dag.has_cycle() {
        return Err(Error::InvalidAnalyzerOutput(
            "analyzer emitted a cyclic dependency order".to_string(),
        ));
    }
    // Every task must be reachable from the sequence head.
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (src, dst) in &dag.edges {
        adj.entry(src.as_str()).or_default().push(dst.as_str());
    }
    let start = seq.tasks[0].local_id.as_str();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(id) = stack.pop() {
        for &next in adj.get(id).into_iter().flatten() {
            if seen.insert(next) {
                stack.push(next);
            }
        }
    }
    if seen.len() != n {
        let missing: Vec<&str> = dag
            .nodes
            .iter()
            .map(|t| t.local_id.as_str())
            .filter(|id| !seen.contains(id))
            .collect();
        return Err(Error::InvalidAnalyzerOutput(format!(
            "tasks unreachable from the sequence head: {missing:?}"
        )));
    }
    Ok(dag)
}

/// On-disk workflow document, shared by generation output, assembled
/// workflow graphs (which add the terminals), and evaluation references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowFile {
    pub tasks: Vec<GeneratedTask>,
    /// Directed edges as [src, dst] id pairs.
    pub edges: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_id: Option<String>,
}

impl WorkflowFile {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<WorkflowFile> {
        let path = path.as_ref();
        let context = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(context.clone(), e))?;
        let file: WorkflowFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(context.clone(), e.to_string()))?;
        file.validate(&context)?;
        Ok(file)
    }

    fn validate(&self, context: &str) -> Result<()> {
        let mut ids = BTreeSet::new();
        for task in &self.tasks {
            if task.title.trim().is_empty() {
                return Err(Error::parse(
                    context,
                    format!("task {:?} has an empty title", task.local_id),
                ));
            }
            if !ids.insert(task.local_id.as_str()) {
                return Err(Error::parse(
                    context,
                    format!("duplicate task id {:?}", task.local_id),
                ));
            }
        }
        for (src, dst) in &self.edges {
            if !ids.contains(src.as_str()) || !ids.contains(dst.as_str()) {
                return Err(Error::parse(
                    context,
                    format!("edge ({src:?}, {dst:?}) references an unknown task"),
                ));
            }
        }
        for terminal in [&self.entry_id, &self.exit_id].into_iter().flatten() {
            if !ids.contains(terminal.as_str()) {
                return Err(Error::parse(
                    context,
                    format!("terminal {terminal:?} is not among the tasks"),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use crate::providers::OfflineEmbedder;
    use crate::wkg::TaskNode;

    use super::*;

    /// Frozen from a pre-build run of the offline embedder (seed 7, dim
    /// 256): cosine between the near-duplicate generated task below and its
    /// knowledge-graph counterpart.
    const NEAR_DUPLICATE_COSINE: f64 = 0.9736676403347952;

    fn embedder() -> OfflineEmbedder {
        OfflineEmbedder::new(7, 256)
    }

    fn decoded() -> DecodedIntention {
        DecodedIntention {
            input_description: "patient encounter record".to_string(),
            output_description: "final evaluation code".to_string(),
            process_description: "count data points and classify".to_string(),
        }
    }

    fn fixture_graph() -> WorkKnowledgeGraph {
        let mut g = WorkKnowledgeGraph::new(0.5).unwrap();
        for (id, title, desc) in [
            (
                "identify_data_points",
                "Identify Data Points",
                "locate each data point in the encounter record",
            ),
            (
                "aggregate_data_points",
                "Aggregate data points",
                "count the data points gathered from notes, orders and reports",
            ),
            (
                "classify_data_level",
                "Classify data level",
                "map the aggregated data points to a data level",
            ),
        ] {
            g.upsert_task(TaskNode::new(id, title, desc)).unwrap();
        }
        g
    }

    fn task(local_id: &str, title: &str, description: &str) -> GeneratedTask {
        GeneratedTask {
            local_id: local_id.to_string(),
            title: title.to_string(),
            description: description.to_string(),
            instructions: Vec::new(),
            wkg_node_id: None,
        }
    }

    fn sequence(titles: &[&str]) -> TaskSequence {
        TaskSequence {
            tasks: titles
                .iter()
                .enumerate()
                .map(|(i, t)| task(&format!("t{}", i + 1), t, "does work"))
                .collect(),
            source_swkg: "swkg-0".to_string(),
        }
    }

    #[test]
    fn build_prompt_is_deterministic_and_contains_inputs() {
        let swkg_text = "a | Alpha | first step\n  b | Beta | second step";
        let p1 = build_prompt(&decoded(), swkg_text).unwrap();
        let p2 = build_prompt(&decoded(), swkg_text).unwrap();
        assert_eq!(p1, p2);
        assert!(p1.contains(swkg_text));
        assert!(p1.contains("patient encounter record"));
        assert!(p1.contains("final evaluation code"));
        assert!(p1.contains("count data points and classify"));
    }

    #[test]
    fn build_prompt_rejects_empty_parts() {
        let mut dec = decoded();
        dec.output_description = " ".to_string();
        assert!(matches!(
            build_prompt(&dec, "a | A | step"),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            build_prompt(&decoded(), "  "),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn prompt_framing_never_leaks_into_offline_stub_output() {
        let providers = ProviderSet::offline(7, 64);
        let prompt = build_prompt(&decoded(), "a | Alpha | first\n  b | Beta | second")
            .unwrap();
        let reply = providers.generator.complete(&prompt).unwrap();
        assert_eq!(reply, "Alpha :: first\nBeta :: second");
    }

    #[test]
    fn parse_sequence_reads_lines_in_order() {
        let tasks = parse_sequence("A :: a\nB :: b");
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[0].local_id, "t1");
        assert_eq!(tasks[0].title, "A");
        assert_eq!(tasks[1].description, "b");
    }

    #[test]
    fn parse_sequence_of_empty_text_is_empty() {
        assert!(parse_sequence("").is_empty());
    }

    #[test]
    fn parse_sequence_skips_garbage_lines() {
        let tasks = parse_sequence("A :: a\ngarbage\nB :: b");
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks[1].title, "B");
    }

    #[test]
    fn generate_sequence_tags_stub_output_with_wkg_ids() {
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        let providers = ProviderSet::offline(7, 256);
        let swkg_text = "identify_data_points | Identify Data Points | locate each data point in the encounter record\n\
                         \x20 aggregate_data_points | Aggregate data points | count the data points gathered from notes, orders and reports\n\
                         \x20   classify_data_level | Classify data level | map the aggregated data points to a data level";
        let prompt = build_prompt(&decoded(), swkg_text).unwrap();
        let seq = generate_sequence(&prompt, "swkg-0", &g, &index, &providers).unwrap();
        assert_eq!(seq.tasks.len(), 3);
        let tags: Vec<Option<&str>> = seq
            .tasks
            .iter()
            .map(|t| t.wkg_node_id.as_deref())
            .collect();
        assert_eq!(
            tags,
            vec![
                Some("identify_data_points"),
                Some("aggregate_data_points"),
                Some("classify_data_level"),
            ]
        );
    }

    #[test]
    fn generate_sequence_rejects_taskless_reply() {
        struct Silent;
        impl crate::providers::TextGenerator for Silent {
            fn complete(&self, _prompt: &str) -> Result<String> {
                Ok("nothing useful".to_string())
            }
        }
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        let mut providers = ProviderSet::offline(7, 256);
        providers.generator = std::sync::Arc::new(Silent);
        assert!(matches!(
            generate_sequence("prompt", "swkg-0", &g, &index, &providers),
            Err(Error::MalformedResponse(_))
        ));
    }

    #[test]
    fn tagging_matches_exact_title_case_insensitively() {
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        let mut tasks = vec![task("t1", "IDENTIFY DATA POINTS", "anything at all")];
        tag_tasks(&mut tasks, &g, &index, &embedder()).unwrap();
        assert_eq!(tasks[0].wkg_node_id.as_deref(), Some("identify_data_points"));
    }

    #[test]
    fn tagging_accepts_near_duplicate_by_similarity() {
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        // Title differs (trailing period) so the exact rule misses; the
        // embedding rule must catch it.
        let mut tasks = vec![task(
            "t1",
            "Aggregate data points.",
            "count the data points gathered from notes, orders and reports",
        )];
        let cos = embedder()
            .embed_text(&tasks[0].embedding_text())
            .unwrap()
            .cosine(index.vector("aggregate_data_points").unwrap());
        assert!((cos - NEAR_DUPLICATE_COSINE).abs() < 1e-12, "got {cos}");
        assert!(cos >= TAG_SIMILARITY_THRESHOLD);
        tag_tasks(&mut tasks, &g, &index, &embedder()).unwrap();
        assert_eq!(
            tasks[0].wkg_node_id.as_deref(),
            Some("aggregate_data_points")
        );
    }

    #[test]
    fn tagging_leaves_unrelated_tasks_untagged() {
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        let mut tasks = vec![task("t1", "Brew espresso", "pull a shot of espresso")];
        tag_tasks(&mut tasks, &g, &index, &embedder()).unwrap();
        assert_eq!(tasks[0].wkg_node_id, None);
    }

    #[test]
    fn chain_dag_links_consecutive_tasks() {
        let seq = sequence(&["A", "B", "C"]);
        let dag = sequence_to_dag(&seq, &ChainAnalyzer).unwrap();
        assert_eq!(dag.nodes.len(), 3);
        assert_eq!(
            dag.edges,
            vec![
                ("t1".to_string(), "t2".to_string()),
                ("t2".to_string(), "t3".to_string()),
            ]
        );
        dag.validate().unwrap();
    }

    #[test]
    fn single_task_dag_has_no_edges() {
        let dag = sequence_to_dag(&sequence(&["A"]), &ChainAnalyzer).unwrap();
        assert_eq!(dag.nodes.len(), 1);
        assert!(dag.edges.is_empty());
    }

    struct FixedAnalyzer(Vec<(usize, usize)>);
    impl DependencyAnalyzer for FixedAnalyzer {
        fn analyze(&self, _tasks: &[GeneratedTask]) -> Result<Vec<(usize, usize)>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn analyzer_can_emit_a_diamond() {
        let seq = sequence(&["A", "B", "C", "D"]);
        let analyzer = FixedAnalyzer(vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        let dag = sequence_to_dag(&seq, &analyzer).unwrap();
        assert_eq!(
            dag.edges,
            vec![
                ("t1".to_string(), "t2".to_string()),
                ("t1".to_string(), "t3".to_string()),
                ("t2".to_string(), "t4".to_string()),
                ("t3".to_string(), "t4".to_string()),
            ]
        );
    }

    #[test]
    fn cyclic_analyzer_output_is_rejected() {
        let seq = sequence(&["A", "B"]);
        let analyzer = FixedAnalyzer(vec![(0, 1), (1, 0)]);
        assert!(matches!(
            sequence_to_dag(&seq, &analyzer),
            Err(Error::InvalidAnalyzerOutput(_))
        ));
    }

    #[test]
    fn unreachable_tasks_are_rejected() {
        let seq = sequence(&["A", "B"]);
        let analyzer = FixedAnalyzer(Vec::new());
        assert!(matches!(
            sequence_to_dag(&seq, &analyzer),
            Err(Error::InvalidAnalyzerOutput(_))
        ));
    }

    #[test]
    fn workflow_file_round_trips() {
        let seq = sequence(&["A", "B", "C"]);
        let dag = sequence_to_dag(&seq, &ChainAnalyzer).unwrap();
        let file = WorkflowFile {
            tasks: dag.nodes.clone(),
            edges: dag.edges.clone(),
            entry_id: None,
            exit_id: None,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("workflow.json");
        file.save(&path).unwrap();
        assert_eq!(WorkflowFile::load(&path).unwrap(), file);
    }

    #[test]
    fn workflow_file_load_rejects_unknown_edge_endpoint() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("workflow.json");
        std::fs::write(
            &path,
            r#"{
  "tasks": [{"id": "t1", "title": "A", "description": "a"}],
  "edges": [["t1", "ghost"]]
}"#,
        )
        .unwrap();
        assert!(matches!(
            WorkflowFile::load(&path),
            Err(Error::ParseError { .. })
        ));
    }

    proptest! {
        #[test]
        fn parse_sequence_never_panics(text in ".{0,300}") {
            let _ = parse_sequence(&text);
        }

        #[test]
        fn chain_dags_are_always_valid(n in 1usize..20) {
            let titles: Vec<String> = (0..n).map(|i| format!("T{i}")).collect();
            let refs: Vec<&str> = titles.iter().map(String::as_str).collect();
            let dag = sequence_to_dag(&sequence(&refs), &ChainAnalyzer).unwrap();
            prop_assert!(dag.validate().is_ok());
            prop_assert_eq!(dag.edges.len(), n - 1);
        }

        /// Tagging partition: every task is tagged xor untagged — the tag
        /// is either a real node id or absent, never empty.
        #[test]
        fn tagging_partition_is_exhaustive_and_exclusive(
            titles in prop::collection::vec("[A-Za-z ]{3,24}", 1..6),
        ) {
            let mut g = fixture_graph();
            let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
            let mut tasks: Vec<GeneratedTask> = titles
                .iter()
                .enumerate()
                .map(|(i, t)| task(&format!("t{}", i + 1), t.trim(), "desc"))
                .collect();
            tasks.retain(|t| !t.title.is_empty());
            prop_assume!(!tasks.is_empty());
            tag_tasks(&mut tasks, &g, &index, &embedder()).unwrap();
            for t in &tasks {
                match &t.wkg_node_id {
                    Some(id) => prop_assert!(g.node(id).is_some()),
                    None => prop_assert!(t.wkg_node_id.is_none()),
                }
            }
        }
    }

    /// Prints the frozen similarity at the top of this module. Run with
    /// `cargo test -p wkforge-core print_generation -- --ignored --nocapture`.
    #[test]
    #[ignore]
    fn print_generation_fixture_values() {
        let mut g = fixture_graph();
        let index = EmbeddingIndex::build(&mut g, &embedder()).unwrap();
        let near = task(
            "t1",
            "Aggregate data points.",
            "count the data points gathered from notes, orders and reports",
        );
        let cos = embedder()
            .embed_text(&near.embedding_text())
            .unwrap()
            .cosine(index.vector("aggregate_data_points").unwrap());
        println!("NEAR_DUPLICATE_COSINE = {cos:?}");
    }
}
