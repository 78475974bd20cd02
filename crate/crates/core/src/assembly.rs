//! Assembles generated DAGs into one Workflow Graph: node/edge union with
//! cross-links picked from the knowledge graph, connectivity enhancement by
//! similarity-scored recommendations, and virtual terminal attachment.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generation::{GeneratedTask, WorkflowDag, WorkflowFile};
use crate::retrieval::{EmbeddingIndex, COSINE_SLACK};
use crate::wkg::WorkKnowledgeGraph;

/// WFG id of the virtual entry terminal.
pub const ENTRY_ID: &str = "I";
/// WFG id of the virtual exit terminal.
pub const EXIT_ID: &str = "O";

/// One workflow-graph node: a generated task, a knowledge-graph task
/// adopted during enhancement, or a virtual terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct WfgNode {
    pub id: String,
    pub title: String,
    pub description: String,
    pub instructions: Vec<String>,
    pub wkg_node_id: Option<String>,
}

/// The assembled Workflow Graph. Tagged tasks from different DAGs share one
/// node (identity = wkg_node_id); untagged tasks are never merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkflowGraph {
    nodes: BTreeMap<String, WfgNode>,
    edges: BTreeSet<(String, String)>,
    pub entry_id: Option<String>,
    pub exit_id: Option<String>,
}

/// Similarity schedule for connectivity enhancement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnhanceConfig {
    pub alpha_start: f64,
    pub delta_alpha: f64,
    pub alpha_floor: f64,
}

impl Default for EnhanceConfig {
    fn default() -> Self {
        EnhanceConfig {
            alpha_start: 1.0,
            delta_alpha: 0.05,
            alpha_floor: 0.0,
        }
    }
}

impl EnhanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_floor >= 0.0
            && self.alpha_floor < self.alpha_start
            && self.alpha_start <= 1.0)
        {
            return Err(Error::invalid_input(format!(
                "need 0 <= alpha_floor < alpha_start <= 1, got floor {} start {}",
                self.alpha_floor, self.alpha_start
            )));
        }
        if self.delta_alpha <= 0.0 {
            return Err(Error::invalid_input("delta_alpha must be positive"));
        }
        Ok(())
    }
}

/// What an enhancement run did, for callers that assert on the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhanceStats {
    /// Loop iterations executed (0 when already connected).
    pub iterations: usize,
    /// α used by the last executed iteration; alpha_start when none ran.
    pub final_alpha: f64,
    /// Knowledge-graph tasks adopted into the WFG.
    pub added_node_ids: BTreeSet<String>,
}

impl WorkflowGraph {
    pub fn node(&self, id: &str) -> Option<&WfgNode> {
        self.nodes.get(id)
    }

    pub fn require_node(&self, id: &str) -> Result<&WfgNode> {
        self.nodes
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl Iterator<Item = &WfgNode> {
        self.nodes.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Edges in ascending (src, dst) order.
    pub fn edges(&self) -> impl Iterator<Item = &(String, String)> {
        self.edges.iter()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, src: &str, dst: &str) -> bool {
        self.edges
            .contains(&(src.to_string(), dst.to_string()))
    }

    pub fn is_terminal(&self, id: &str) -> bool {
        self.entry_id.as_deref() == Some(id) || self.exit_id.as_deref() == Some(id)
    }

    /// Non-terminal node ids in ascending order.
    pub fn interior_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .keys()
            .map(String::as_str)
            .filter(|id| !self.is_terminal(id))
    }

    pub fn successors(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(src, _)| src == id)
            .map(|(_, dst)| dst.as_str())
            .collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<&str> {
        self.edges
            .iter()
            .filter(|(_, dst)| dst == id)
            .map(|(src, _)| src.as_str())
            .collect()
    }

    /// Inserts the node unless the id is already present (first wins).
    fn add_node(&mut self, node: WfgNode) -> bool {
        if self.nodes.contains_key(&node.id) {
            return false;
        }
        self.nodes.insert(node.id.clone(), node);
        true
    }

    fn reaches(&self, from: &str, to: &str) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::from([from]);
        let mut stack = vec![from];
        while let Some(id) = stack.pop() {
            for next in self.successors(id) {
                if next == to {
                    return true;
                }
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        false
    }

    /// Adds the edge unless it is a self-loop, already present, or would
    /// close a cycle. Returns whether the edge was added.
    fn add_edge_if_acyclic(&mut self, src: &str, dst: &str) -> bool {
        debug_assert!(self.nodes.contains_key(src) && self.nodes.contains_key(dst));
        if src == dst || self.has_edge(src, dst) || self.reaches(dst, src) {
            return false;
        }
        self.edges.insert((src.to_string(), dst.to_string()));
        true
    }

    pub fn is_acyclic(&self) -> bool {
        let mut indegree: BTreeMap<&str, usize> =
            self.nodes.keys().map(|id| (id.as_str(), 0)).collect();
        for (_, dst) in &self.edges {
            *indegree.get_mut(dst.as_str()).expect("endpoints exist") += 1;
        }
        let mut ready: Vec<&str> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&id, _)| id)
            .collect();
        let mut processed = 0;
        while let Some(id) = ready.pop() {
            processed += 1;
            for next in self.successors(id) {
                let d = indegree.get_mut(next).expect("endpoints exist");
                *d -= 1;
                if *d == 0 {
                    ready.push(next);
                }
            }
        }
        processed == self.nodes.len()
    }

    /// Weakly-connected components of the non-terminal nodes, each sorted,
    /// ordered by smallest member.
    pub fn weak_components(&self) -> Vec<BTreeSet<String>> {
        let interior: BTreeSet<&str> = self.interior_ids().collect();
        let mut undirected: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (src, dst) in &self.edges {
            let (src, dst) = (src.as_str(), dst.as_str());
            if interior.contains(src) && interior.contains(dst) {
                undirected.entry(src).or_default().insert(dst);
                undirected.entry(dst).or_default().insert(src);
            }
        }
        let mut components = Vec::new();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for &id in &interior {
            if seen.contains(id) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut stack = vec![id];
            seen.insert(id);
            while let Some(node) = stack.pop() {
                component.insert(node.to_string());
                for &next in undirected.get(node).into_iter().flatten() {
                    if seen.insert(next) {
                        stack.push(next);
                    }
                }
            }
            components.push(component);
        }
        components
    }

    /// Interior nodes that do not lie on any entry→exit path. Empty on a
    /// correctly finalized graph.
    pub fn nodes_off_io_path(&self) -> Result<BTreeSet<String>> {
        let (Some(entry), Some(exit)) = (&self.entry_id, &self.exit_id) else {
            return Err(Error::invalid_input(
                "terminals are not attached; no entry/exit path to check",
            ));
        };
        let forward = self.reachable_from(entry);
        let mut reversed = WorkflowGraph::default();
        for node in self.nodes.values() {
            reversed.add_node(node.clone());
        }
        for (src, dst) in &self.edges {
            reversed.edges.insert((dst.clone(), src.clone()));
        }
        let backward = reversed.reachable_from(exit);
        Ok(self
            .interior_ids()
            .filter(|id| !(forward.contains(*id) && backward.contains(*id)))
            .map(str::to_string)
            .collect())
    }

    fn reachable_from(&self, start: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([start.to_string()]);
        let mut stack = vec![start.to_string()];
        while let Some(id) = stack.pop() {
            for next in self.successors(&id) {
                if seen.insert(next.to_string()) {
                    stack.push(next.to_string());
                }
            }
        }
        seen
    }

    /// Serializes to the shared workflow file shape (terminals included).
    pub fn to_file(&self) -> WorkflowFile {
        WorkflowFile {
            tasks: self
                .nodes
                .values()
                .map(|node| GeneratedTask {
                    local_id: node.id.clone(),
                    title: node.title.clone(),
                    description: node.description.clone(),
                    instructions: node.instructions.clone(),
                    wkg_node_id: node.wkg_node_id.clone(),
                })
                .collect(),
            edges: self.edges.iter().cloned().collect(),
            entry_id: self.entry_id.clone(),
            exit_id: self.exit_id.clone(),
        }
    }

    pub fn from_file(file: &WorkflowFile) -> Result<WorkflowGraph> {
        let mut wfg = WorkflowGraph {
            entry_id: file.entry_id.clone(),
            exit_id: file.exit_id.clone(),
            ..WorkflowGraph::default()
        };
        for task in &file.tasks {
            let added = wfg.add_node(WfgNode {
                id: task.local_id.clone(),
                title: task.title.clone(),
                description: task.description.clone(),
                instructions: task.instructions.clone(),
                wkg_node_id: task.wkg_node_id.clone(),
            });
            if !added {
                return Err(Error::invalid_input(format!(
                    "duplicate workflow node id {:?}",
                    task.local_id
                )));
            }
        }
        for (src, dst) in &file.edges {
            wfg.require_node(src)?;
            wfg.require_node(dst)?;
            wfg.edges.insert((src.clone(), dst.clone()));
        }
        if !wfg.is_acyclic() {
            return Err(Error::invalid_input("workflow file contains a cycle"));
        }
        Ok(wfg)
    }
}

/// Stable WFG id for a task: tagged tasks collapse onto their knowledge
/// node, untagged tasks stay distinct per source DAG.
fn wfg_id(dag_index: usize, task: &GeneratedTask) -> String {
    match &task.wkg_node_id {
        Some(wkg_id) => format!("wkg:{wkg_id}"),
        None => format!("d{dag_index}:{}", task.local_id),
    }
}

/// Builds the Workflow Graph from the generated DAGs: node union (tagged
/// tasks merged by knowledge id), edge union, then cross-links between
/// tagged nodes of different DAGs wherever the knowledge graph has that
/// directed edge. Edges that would close a cycle are skipped, processing in
/// (dag index, node id) order.
pub fn assemble_wfg(
    dags: &[WorkflowDag],
    graph: &WorkKnowledgeGraph,
) -> Result<WorkflowGraph> {
    if dags.is_empty() {
        return Err(Error::invalid_input("no dags to assemble"));
    }
    for dag in dags {
        dag.validate()?;
        for task in &dag.nodes {
            if let Some(wkg_id) = &task.wkg_node_id {
                graph.require_node(wkg_id)?;
            }
        }
    }

    let mut wfg = WorkflowGraph::default();
    for (i, dag) in dags.iter().enumerate() {
        for task in &dag.nodes {
            wfg.add_node(WfgNode {
                id: wfg_id(i, task),
                title: task.title.clone(),
                description: task.description.clone(),
                instructions: task.instructions.clone(),
                wkg_node_id: task.wkg_node_id.clone(),
            });
        }
    }
    for (i, dag) in dags.iter().enumerate() {
        let by_local: BTreeMap<&str, &GeneratedTask> = dag
            .nodes
            .iter()
            .map(|t| (t.local_id.as_str(), t))
            .collect();
        for (src, dst) in &dag.edges {
            let src_id = wfg_id(i, by_local[src.as_str()]);
            let dst_id = wfg_id(i, by_local[dst.as_str()]);
            wfg.add_edge_if_acyclic(&src_id, &dst_id);
        }
    }

    // Cross-links: tagged node v of dag_s → tagged node x of any other dag,
    // iff the knowledge graph has the directed edge (v, x).
    let tagged_per_dag: Vec<BTreeMap<String, String>> = dags
        .iter()
        .map(|dag| {
            dag.nodes
                .iter()
                .filter_map(|t| {
                    t.wkg_node_id
                        .as_ref()
                        .map(|wkg| (wkg.clone(), format!("wkg:{wkg}")))
                })
                .collect()
        })
        .collect();
    for (s, tagged) in tagged_per_dag.iter().enumerate() {
        for (v_wkg, v_id) in tagged {
            for (d, other) in tagged_per_dag.iter().enumerate() {
                if d == s {
                    continue;
                }
                for (x_wkg, x_id) in other {
                    if graph.has_edge(v_wkg, x_wkg) {
                        wfg.add_edge_if_acyclic(v_id, x_id);
                    }
                }
            }
        }
    }

    debug_assert!(wfg.is_acyclic());
    Ok(wfg)
}

/// Connectivity-enhancement guard: true iff the undirected view of the
/// non-terminal nodes forms at most one component.
pub fn is_weakly_connected(wfg: &WorkflowGraph) -> bool {
    wfg.weak_components().len() <= 1
}

/// Embedding-similarity recommendation: candidates are WKG tasks outside
/// the WFG that are WKG-adjacent to a present tagged node with embedding
/// cosine ≥ α against that node.
fn recommend_at_alpha(
    wfg: &WorkflowGraph,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    alpha: f64,
) -> Result<BTreeSet<String>> {
    let present: BTreeSet<&str> = wfg
        .nodes()
        .filter_map(|n| n.wkg_node_id.as_deref())
        .collect();
    let mut adopted = BTreeSet::new();
    for candidate in graph.node_ids() {
        if present.contains(candidate) {
            continue;
        }
        for &v in &present {
            if !(graph.has_edge(candidate, v) || graph.has_edge(v, candidate)) {
                continue;
            }
            let cos = index.vector(candidate)?.cosine(index.vector(v)?);
            if cos >= alpha - COSINE_SLACK {
                adopted.insert(candidate.to_string());
                break;
            }
        }
    }
    Ok(adopted)
}

/// Connectivity enhancement with run statistics: lower α by Δα per
/// iteration, adopt qualifying knowledge tasks plus every knowledge edge
/// between tagged nodes now in the WFG (cycle-creating edges skipped,
/// ascending order), until weakly connected or α falls below the floor.
pub fn enhance_wfg_with_stats(
    wfg: &WorkflowGraph,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    cfg: &EnhanceConfig,
) -> Result<(WorkflowGraph, EnhanceStats)> {
    cfg.validate()?;
    let mut wfg = wfg.clone();
    let mut stats = EnhanceStats {
        iterations: 0,
        final_alpha: cfg.alpha_start,
        added_node_ids: BTreeSet::new(),
    };
    while !is_weakly_connected(&wfg) {
        // α_k computed from the iteration count rather than repeated
        // subtraction, so float drift cannot skip the floor.
        let alpha = cfg.alpha_start - (stats.iterations + 1) as f64 * cfg.delta_alpha;
        if alpha < cfg.alpha_floor - COSINE_SLACK {
            return Err(Error::CannotConnect(
                wfg.weak_components().into_iter().map(|c| c.into_iter().collect()).collect(),
            ));
        }
        stats.iterations += 1;
        stats.final_alpha = alpha;

        for wkg_id in recommend_at_alpha(&wfg, graph, index, alpha)? {
            let node = graph.require_node(&wkg_id)?;
            wfg.add_node(WfgNode {
                id: format!("wkg:{wkg_id}"),
                title: node.title.clone(),
                description: node.description.clone(),
                instructions: node.implementation_summaries.clone(),
                wkg_node_id: Some(wkg_id.clone()),
            });
            stats.added_node_ids.insert(wkg_id);
        }

        // All knowledge edges between tagged nodes now present.
        let present: BTreeMap<String, String> = wfg
            .nodes()
            .filter_map(|n| n.wkg_node_id.clone().map(|w| (w, n.id.clone())))
            .collect();
        for stat in graph.edge_stats() {
            if let (Some(src), Some(dst)) = (present.get(&stat.src), present.get(&stat.dst)) {
                let (src, dst) = (src.clone(), dst.clone());
                wfg.add_edge_if_acyclic(&src, &dst);
            }
        }
    }
    debug_assert!(wfg.is_acyclic());
    Ok((wfg, stats))
}

/// [`enhance_wfg_with_stats`] without the statistics.
pub fn enhance_wfg(
    wfg: &WorkflowGraph,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    cfg: &EnhanceConfig,
) -> Result<WorkflowGraph> {
    enhance_wfg_with_stats(wfg, graph, index, cfg).map(|(wfg, _)| wfg)
}

/// Attaches the virtual terminals: entry I feeds every zero-in-degree
/// interior node, every zero-out-degree interior node feeds exit O, and an
/// empty interior yields the direct I→O edge. Re-attachment first strips
/// the previous terminals, so the operation is idempotent.
pub fn attach_terminals(wfg: &WorkflowGraph) -> Result<WorkflowGraph> {
    if !wfg.is_acyclic() {
        return Err(Error::invalid_input(
            "cannot attach terminals to a cyclic graph",
        ));
    }
    let mut out = wfg.clone();
    if let Some(previous) = out.entry_id.take() {
        out.nodes.remove(&previous);
        out.edges.retain(|(src, dst)| src != &previous && dst != &previous);
    }
    if let Some(previous) = out.exit_id.take() {
        out.nodes.remove(&previous);
        out.edges.retain(|(src, dst)| src != &previous && dst != &previous);
    }
    for reserved in [ENTRY_ID, EXIT_ID] {
        if out.nodes.contains_key(reserved) {
            return Err(Error::invalid_input(format!(
                "node id {reserved:?} is reserved for a virtual terminal"
            )));
        }
    }

    let interior: Vec<String> = out.nodes.keys().cloned().collect();
    out.add_node(WfgNode {
        id: ENTRY_ID.to_string(),
        title: "Input".to_string(),
        description: "virtual entry terminal".to_string(),
        instructions: Vec::new(),
        wkg_node_id: None,
    });
    out.add_node(WfgNode {
        id: EXIT_ID.to_string(),
        title: "Output".to_string(),
        description: "virtual exit terminal".to_string(),
        instructions: Vec::new(),
        wkg_node_id: None,
    });
    out.entry_id = Some(ENTRY_ID.to_string());
    out.exit_id = Some(EXIT_ID.to_string());

    if interior.is_empty() {
        out.edges.insert((ENTRY_ID.to_string(), EXIT_ID.to_string()));
        return Ok(out);
    }
    let mut has_in: BTreeSet<&str> = BTreeSet::new();
    let mut has_out: BTreeSet<&str> = BTreeSet::new();
    for (src, dst) in &out.edges {
        has_out.insert(src.as_str());
        has_in.insert(dst.as_str());
    }
    let sources: Vec<String> = interior
        .iter()
        .filter(|id| !has_in.contains(id.as_str()))
        .cloned()
        .collect();
    let sinks: Vec<String> = interior
        .iter()
        .filter(|id| !has_out.contains(id.as_str()))
        .cloned()
        .collect();
    for id in sources {
        out.edges.insert((ENTRY_ID.to_string(), id));
    }
    for id in sinks {
        out.edges.insert((id, EXIT_ID.to_string()));
    }
    debug_assert!(out.is_acyclic());
    Ok(out)
}
