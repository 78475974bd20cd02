//! Per-task cost modeling and minimum-cost path extraction from the
//! Workflow Graph. Node costs are shifted onto incoming edges so an
//! unmodified Dijkstra core finds p* = argmin over entry→exit paths of the
//! summed task costs.

use std::collections::{BinaryHeap, BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::assembly::WorkflowGraph;
use crate::error::{Error, Result};
use crate::retrieval::PathKey;
use crate::wkg::WorkKnowledgeGraph;

/// Weight factors prioritizing the three cost dimensions when combining
/// them into one scalar per task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub w_compute: f64,
    pub w_time: f64,
    pub w_model: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            w_compute: 1.0,
            w_time: 1.0,
            w_model: 1.0,
        }
    }
}

impl CostWeights {
    /// All weights must be finite and non-negative. All-zero weights are
    /// allowed: every path then costs zero and the lexicographic tie-break
    /// alone picks the result.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("w_compute", self.w_compute),
            ("w_time", self.w_time),
            ("w_model", self.w_model),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid_input(format!(
                    "{name} must be finite and >= 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-dimension cost assumed for tasks with no recorded implementation
/// history. Non-zero defaults keep unknown tasks from looking free.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefaultCosts {
    pub compute: f64,
    pub time: f64,
    pub model: f64,
}

impl Default for DefaultCosts {
    fn default() -> Self {
        DefaultCosts {
            compute: 1.0,
            time: 1.0,
            model: 1.0,
        }
    }
}

impl DefaultCosts {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("compute", self.compute),
            ("time", self.time),
            ("model", self.model),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid_input(format!(
                    "default {name} cost must be finite and >= 0, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// One task's cost split by dimension plus the weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskCost {
    pub c_compute: f64,
    pub c_time: f64,
    pub c_model: f64,
    /// w_compute·c_compute + w_time·c_time + w_model·c_model.
    pub combined: f64,
}

impl TaskCost {
    const ZERO: TaskCost = TaskCost {
        c_compute: 0.0,
        c_time: 0.0,
        c_model: 0.0,
        combined: 0.0,
    };
}

/// The minimum-cost entry→exit path and its cost breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    /// Ordered node ids from entry terminal to exit terminal.
    pub node_ids: Vec<String>,
    /// Sum of the combined costs along the path.
    pub total_cost: f64,
    /// Costs of the interior (non-terminal) nodes, in path order. The
    /// terminals always contribute zero and are omitted.
    pub per_task: Vec<TaskCost>,
}

/// Cost of one workflow-graph node: zero for the virtual terminals, the
/// historical per-dimension mean for knowledge-tagged tasks with recorded
/// implementations, and the configured defaults otherwise.
pub fn task_cost(
    wfg: &WorkflowGraph,
    node_id: &str,
    graph: &WorkKnowledgeGraph,
    weights: &CostWeights,
    defaults: &DefaultCosts,
) -> Result<TaskCost> {
    weights.validate()?;
    defaults.validate()?;
    let node = wfg.require_node(node_id)?;
    if wfg.is_terminal(node_id) {
        return Ok(TaskCost::ZERO);
    }
    let stats = node
        .wkg_node_id
        .as_deref()
        .and_then(|wkg_id| graph.cost_stats(wkg_id));
    let (c_compute, c_time, c_model) = match stats {
        Some(stats) => (stats.compute, stats.time, stats.model),
        None => (defaults.compute, defaults.time, defaults.model),
    };
    Ok(TaskCost {
        c_compute,
        c_time,
        c_model,
        combined: weights.w_compute * c_compute
            + weights.w_time * c_time
            + weights.w_model * c_model,
    })
}

fn terminal_ids(wfg: &WorkflowGraph) -> Result<(String, String)> {
    match (&wfg.entry_id, &wfg.exit_id) {
        (Some(entry), Some(exit)) => {
            wfg.require_node(entry)?;
            wfg.require_node(exit)?;
            Ok((entry.clone(), exit.clone()))
        }
        _ => Err(Error::invalid_input(
            "terminals must be attached before path extraction",
        )),
    }
}

fn combined_costs(
    wfg: &WorkflowGraph,
    graph: &WorkKnowledgeGraph,
    weights: &CostWeights,
    defaults: &DefaultCosts,
) -> Result<BTreeMap<String, TaskCost>> {
    wfg.nodes()
        .map(|node| Ok((node.id.clone(), task_cost(wfg, &node.id, graph, weights, defaults)?)))
        .collect()
}

/// Minimum-cost entry→exit path. Each node's combined cost is charged on
/// its incoming edges (the entry's own cost is charged once at the start),
/// then Dijkstra runs with (cost, path) heap keys so cost ties resolve to
/// the lexicographically smallest node-id sequence.
pub fn optimal_path(
    wfg: &WorkflowGraph,
    graph: &WorkKnowledgeGraph,
    weights: &CostWeights,
    defaults: &DefaultCosts,
) -> Result<PathResult> {
    let (entry, exit) = terminal_ids(wfg)?;
    if !wfg.is_acyclic() {
        return Err(Error::invalid_input("workflow graph contains a cycle"));
    }
    let costs = combined_costs(wfg, graph, weights, defaults)?;

    let mut settled: BTreeSet<String> = BTreeSet::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<PathKey>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse(PathKey {
        cost: costs[&entry].combined,
        path: vec![entry.clone()],
    }));
    while let Some(std::cmp::Reverse(PathKey { cost, path })) = heap.pop() {
        let node = path.last().expect("paths are never empty").clone();
        if !settled.insert(node.clone()) {
            continue;
        }
        if node == exit {
            let per_task: Vec<TaskCost> = path
                .iter()
                .filter(|id| !wfg.is_terminal(id))
                .map(|id| costs[id.as_str()])
                .collect();
            return Ok(PathResult {
                node_ids: path,
                total_cost: cost,
                per_task,
            });
        }
        for next in wfg.successors(&node) {
            if settled.contains(next) {
                continue;
            }
            let mut extended = path.clone();
            extended.push(next.to_string());
            heap.push(std::cmp::Reverse(PathKey {
                cost: cost + costs[next].combined,
                path: extended,
            }));
        }
    }
    Err(Error::NoPath)
}

/// Cost of a caller-supplied entry→exit path: the sum of the combined
/// costs of its non-terminal nodes, in path order.
pub fn path_cost(
    wfg: &WorkflowGraph,
    node_ids: &[String],
    graph: &WorkKnowledgeGraph,
    weights: &CostWeights,
    defaults: &DefaultCosts,
) -> Result<f64> {
    let (entry, exit) = terminal_ids(wfg)?;
    if node_ids.first() != Some(&entry) || node_ids.last() != Some(&exit) {
        return Err(Error::InvalidPath(format!(
            "path must run from {entry:?} to {exit:?}"
        )));
    }
    for pair in node_ids.windows(2) {
        if wfg.node(&pair[0]).is_none() || wfg.node(&pair[1]).is_none() {
            return Err(Error::InvalidPath(format!(
                "path references unknown node in {:?}",
                pair
            )));
        }
        if !wfg.has_edge(&pair[0], &pair[1]) {
            return Err(Error::InvalidPath(format!(
                "missing edge {:?} -> {:?}",
                pair[0], pair[1]
            )));
        }
    }
    let mut total = 0.0;
    for id in node_ids {
        if !wfg.is_terminal(id) {
            total += task_cost(wfg, id, graph, weights, defaults)?.combined;
        }
    }
    Ok(total)
}
