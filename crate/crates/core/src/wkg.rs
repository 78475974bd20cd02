//! Weighted Work Knowledge Graph: task nodes, co-occurrence edges whose
//! weights follow γ = 1 − e^(−λ·pair_count), and retained implementation
//! history for cost modeling.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::providers::{EmbeddingVector, TextEmbedder};

/// A task stored in the knowledge graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskNode {
    pub id: String,
    pub title: String,
    pub description: String,
    #[serde(default)]
    pub industry: String,
    #[serde(default)]
    pub implementation_summaries: Vec<String>,
}

impl TaskNode {
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        description: impl Into<String>,
    ) -> TaskNode {
        TaskNode {
            id: id.into(),
            title: title.into(),
            description: description.into(),
            industry: String::new(),
            implementation_summaries: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::invalid_input("task id must be non-empty"));
        }
        if self.title.trim().is_empty() {
            return Err(Error::invalid_input(format!(
                "task {:?} has an empty title",
                self.id
            )));
        }
        if self.description.trim().is_empty() {
            return Err(Error::invalid_input(format!(
                "task {:?} has an empty description",
                self.id
            )));
        }
        Ok(())
    }

    /// Text the embedder sees for this node.
    pub fn embedding_text(&self) -> String {
        format!("{}\n{}\n{}", self.title, self.description, self.industry)
    }
}

/// One directed edge with its co-occurrence count and derived weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeStat {
    pub src: String,
    pub dst: String,
    pub pair_count: u64,
    pub weight: f64,
}

/// One completed run of a workflow, kept for edge counting and cost stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowImplementationRecord {
    pub workflow_id: String,
    pub task_ids: Vec<String>,
    pub cost_compute: f64,
    pub cost_time: f64,
    pub cost_model: f64,
    pub success: bool,
}

impl WorkflowImplementationRecord {
    fn validate(&self) -> Result<()> {
        if self.task_ids.is_empty() {
            return Err(Error::invalid_input(format!(
                "record {:?} has no task ids",
                self.workflow_id
            )));
        }
        for (label, cost) in [
            ("compute", self.cost_compute),
            ("time", self.cost_time),
            ("model", self.cost_model),
        ] {
            if !cost.is_finite() || cost < 0.0 {
                return Err(Error::invalid_input(format!(
                    "record {:?} has a negative or non-finite {label} cost",
                    self.workflow_id
                )));
            }
        }
        Ok(())
    }
}

/// Mean historical costs for one task, averaged over its appearances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskCostStats {
    pub compute: f64,
    pub time: f64,
    pub model: f64,
    /// Number of appearances the means were taken over.
    pub samples: usize,
}

/// Edge-weight law: γ = 1 − e^(−λ·pair_count).
///
/// Mathematically γ < 1 for every finite count, but in f64 the exponential
/// underflows once λ·pair_count exceeds ≈37 and the result saturates to
/// exactly 1.0. Downstream code treats γ = 1.0 as "overwhelming evidence"
/// rather than an error.
pub fn edge_weight(pair_count: u64, lambda: f64) -> Result<f64> {
    validate_lambda(lambda)?;
    Ok(1.0 - (-lambda * pair_count as f64).exp())
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::invalid_input(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// The directed task graph. Weights are always derived from pair counts,
/// never stored, so they cannot drift from the weight law.
#[derive(Debug, Clone, Default)]
pub struct WorkKnowledgeGraph {
    lambda: f64,
    nodes: BTreeMap<String, TaskNode>,
    /// pair_count per ordered (src, dst); weight derived on demand.
    edges: BTreeMap<(String, String), u64>,
    history: Vec<WorkflowImplementationRecord>,
    embedding_cache: BTreeMap<String, EmbeddingVector>,
}

impl PartialEq for WorkKnowledgeGraph {
    /// Structural equality: the embedding cache is derived state and ignored.
    fn eq(&self, other: &Self) -> bool {
        self.lambda == other.lambda
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.history == other.history
    }
}

pub const DEFAULT_LAMBDA: f64 = 0.5;

impl WorkKnowledgeGraph {
    pub fn new(lambda: f64) -> Result<WorkKnowledgeGraph> {
        validate_lambda(lambda)?;
        Ok(WorkKnowledgeGraph {
            lambda,
            ..WorkKnowledgeGraph::default()
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&TaskNode> {
        self.nodes.get(id)
    }

    pub fn require_node(&self, id: &str) -> Result<&TaskNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &TaskNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(String::as_str)
    }

    pub fn pair_count(&self, src: &str, dst: &str) -> u64 {
        self.edges
            .get(&(src.to_string(), dst.to_string()))
            .copied()
            .unwrap_or(0)
    }

    /// Derived weight of the (src, dst) edge; 0 when the edge is absent.
    pub fn weight(&self, src: &str, dst: &str) -> f64 {
        edge_weight(self.pair_count(src, dst), self.lambda)
            .expect("graph lambda validated on construction")
    }

    /// All edges with derived weights, in ascending (src, dst) order.
    pub fn edge_stats(&self) -> Vec<EdgeStat> {
        self.edges
            .iter()
            .map(|((src, dst), &pair_count)| EdgeStat {
                src: src.clone(),
                dst: dst.clone(),
                pair_count,
                weight: edge_weight(pair_count, self.lambda)
                    .expect("graph lambda validated on construction"),
            })
            .collect()
    }

    pub fn has_edge(&self, src: &str, dst: &str) -> bool {
        self.edges
            .contains_key(&(src.to_string(), dst.to_string()))
    }

    pub fn history(&self) -> &[WorkflowImplementationRecord] {
        &self.history
    }

    /// Inserts or replaces a node by id, returning the id. Replacement
    /// invalidates any cached embedding for that id.
    pub fn upsert_task(&mut self, node: TaskNode) -> Result<String> {
        node.validate()?;
        let id = node.id.clone();
        self.embedding_cache.remove(&id);
        self.nodes.insert(id.clone(), node);
        Ok(id)
    }

    /// Counts every consecutive pair of the record into the edge set and
    /// retains the record for cost statistics. Consecutive duplicates are
    /// skipped (no self-loops). Returns the touched edges, deduplicated, in
    /// ascending (src, dst) order.
    pub fn record_workflow_implementation(
        &mut self,
        rec: WorkflowImplementationRecord,
    ) -> Result<Vec<EdgeStat>> {
        rec.validate()?;
        for id in &rec.task_ids {
            if !self.nodes.contains_key(id) {
                return Err(Error::UnknownNode(id.clone()));
            }
        }
        let mut touched = BTreeMap::new();
        for pair in rec.task_ids.windows(2) {
            let (src, dst) = (&pair[0], &pair[1]);
            if src == dst {
                continue;
            }
            let count = self
                .edges
                .entry((src.clone(), dst.clone()))
                .or_insert(0);
            *count += 1;
            touched.insert((src.clone(), dst.clone()), *count);
        }
        self.history.push(rec);
        Ok(touched
            .into_iter()
            .map(|((src, dst), pair_count)| EdgeStat {
                src,
                dst,
                pair_count,
                weight: edge_weight(pair_count, self.lambda)
                    .expect("graph lambda validated on construction"),
            })
            .collect())
    }

    /// Mean costs over every appearance of the task in retained history;
    /// None when the task never appears. A record contributes once per
    /// appearance of the task in its sequence.
    pub fn cost_stats(&self, task_id: &str) -> Option<TaskCostStats> {
        let mut samples = 0usize;
        let (mut compute, mut time, mut model) = (0.0, 0.0, 0.0);
        for rec in &self.history {
            for id in &rec.task_ids {
                if id == task_id {
                    samples += 1;
                    compute += rec.cost_compute;
                    time += rec.cost_time;
                    model += rec.cost_model;
                }
            }
        }
        if samples == 0 {
            return None;
        }
        let n = samples as f64;
        Some(TaskCostStats {
            compute: compute / n,
            time: time / n,
            model: model / n,
            samples,
        })
    }

    /// Embedding of the node's "title\ndescription\nindustry" text, cached
    /// until the node is next upserted.
    pub fn embedding_for(
        &mut self,
        id: &str,
        embedder: &dyn TextEmbedder,
    ) -> Result<EmbeddingVector> {
        if let Some(cached) = self.embedding_cache.get(id) {
            return Ok(cached.clone());
        }
        let node = self.require_node(id)?;
        let vector = embedder.embed_text(&node.embedding_text())?;
        self.embedding_cache.insert(id.to_string(), vector.clone());
        Ok(vector)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = WkgFile {
            lambda: self.lambda,
            tasks: self.nodes.values().cloned().collect(),
            edges: self
                .edges
                .iter()
                .map(|((src, dst), &pair_count)| FileEdge {
                    src: src.clone(),
                    dst: dst.clone(),
                    pair_count,
                })
                .collect(),
            history: self.history.clone(),
        };
        let mut text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<WorkKnowledgeGraph> {
        let path = path.as_ref();
        let context = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(context.clone(), e))?;
        let file: WkgFile = serde_json::from_str(&text)
            .map_err(|e| Error::parse(context.clone(), e.to_string()))?;
        WorkKnowledgeGraph::from_file(file, &context)
    }

    fn from_file(file: WkgFile, context: &str) -> Result<WorkKnowledgeGraph> {
        validate_lambda(file.lambda)
            .map_err(|e| Error::parse(context, e.to_string()))?;
        let mut graph = WorkKnowledgeGraph {
            lambda: file.lambda,
            ..WorkKnowledgeGraph::default()
        };
        for task in file.tasks {
            let id = task.id.clone();
            if graph.nodes.contains_key(&id) {
                return Err(Error::parse(
                    context,
                    format!("duplicate task id {id:?}"),
                ));
            }
            task.validate()
                .map_err(|e| Error::parse(context, e.to_string()))?;
            graph.nodes.insert(id, task);
        }
        for edge in file.edges {
            for endpoint in [&edge.src, &edge.dst] {
                if !graph.nodes.contains_key(endpoint) {
                    return Err(Error::parse(
                        context,
                        format!(
                            "edge ({:?}, {:?}) references unknown task {endpoint:?}",
                            edge.src, edge.dst
                        ),
                    ));
                }
            }
            if edge.src == edge.dst {
                return Err(Error::parse(
                    context,
                    format!("self-loop edge on {:?}", edge.src),
                ));
            }
            let key = (edge.src.clone(), edge.dst.clone());
            if graph.edges.insert(key, edge.pair_count).is_some() {
                return Err(Error::parse(
                    context,
                    format!("duplicate edge ({:?}, {:?})", edge.src, edge.dst),
                ));
            }
        }
        for rec in file.history {
            rec.validate()
                .map_err(|e| Error::parse(context, e.to_string()))?;
            for id in &rec.task_ids {
                if !graph.nodes.contains_key(id) {
                    return Err(Error::parse(
                        context,
                        format!(
                            "history record {:?} references unknown task {id:?}",
                            rec.workflow_id
                        ),
                    ));
                }
            }
            graph.history.push(rec);
        }
        Ok(graph)
    }
}

/// On-disk shape of a knowledge graph. Weights are never written.
#[derive(Serialize, Deserialize)]
struct WkgFile {
    lambda: f64,
    tasks: Vec<TaskNode>,
    #[serde(default)]
    edges: Vec<FileEdge>,
    #[serde(default)]
    history: Vec<WorkflowImplementationRecord>,
}

#[derive(Serialize, Deserialize)]
struct FileEdge {
    src: String,
    dst: String,
    pair_count: u64,
}
