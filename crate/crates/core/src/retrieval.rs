//! Routes an encoded intention to relevant knowledge-graph regions: selects
//! nodes by similarity, splits them into k-NN neighborhoods, extracts a
//! Steiner-style spanning sub-graph per neighborhood, and renders each as
//! deterministic DFS text for prompting.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intention::EncodedIntention;
use crate::providers::{EmbeddingVector, TextEmbedder};
use crate::wkg::WorkKnowledgeGraph;

/// Slack for cosine comparisons against configured thresholds, so that a
/// node whose embedding equals Γ (cosine 1 up to rounding) passes a
/// threshold of exactly 1.
pub(crate) const COSINE_SLACK: f64 = 1e-9;

/// Settings for routing and neighborhood splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingConfig {
    /// Minimum cosine between a node embedding and Γ for the node to route.
    pub similarity_threshold: f64,
    /// Neighbor count for the k-NN graph used to split routed nodes.
    pub knn_k: usize,
    /// Keep a k-NN edge only when both endpoints select each other.
    pub mutual_knn: bool,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            similarity_threshold: 0.0,
            knn_k: 5,
            mutual_knn: true,
        }
    }
}

impl RoutingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.similarity_threshold) {
            return Err(Error::invalid_input(format!(
                "similarity threshold must lie in [-1, 1], got {}",
                self.similarity_threshold
            )));
        }
        if self.knn_k == 0 {
            return Err(Error::invalid_input("knn_k must be >= 1"));
        }
        Ok(())
    }
}

/// Connected sub-graph of the WKG spanning one neighborhood of routed nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SubWkg {
    pub node_ids: BTreeSet<String>,
    /// Directed WKG edges retained in the sub-graph, ascending (src, dst).
    pub edge_list: Vec<(String, String)>,
    /// The neighborhood the sub-graph was grown from.
    pub terminals: BTreeSet<String>,
}

impl SubWkg {
    /// True when the undirected view of the sub-graph is one component.
    pub fn is_connected_undirected(&self) -> bool {
        let Some(start) = self.node_ids.iter().next() else {
            return true;
        };
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (src, dst) in &self.edge_list {
            adj.entry(src).or_default().insert(dst);
            adj.entry(dst).or_default().insert(src);
        }
        let mut seen = BTreeSet::from([start.as_str()]);
        let mut stack = vec![start.as_str()];
        while let Some(node) = stack.pop() {
            for &next in adj.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        self.node_ids.iter().all(|id| seen.contains(id.as_str()))
    }
}

/// Precomputed node embeddings, so routing and splitting stay read-only
/// over the graph.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    vectors: BTreeMap<String, EmbeddingVector>,
}

impl EmbeddingIndex {
    /// Embeds every node of the graph (through the graph's lazy cache).
    pub fn build(
        graph: &mut WorkKnowledgeGraph,
        embedder: &dyn TextEmbedder,
    ) -> Result<EmbeddingIndex> {
        let ids: Vec<String> = graph.node_ids().map(str::to_string).collect();
        let mut vectors = BTreeMap::new();
        for id in ids {
            let vector = graph.embedding_for(&id, embedder)?;
            vectors.insert(id, vector);
        }
        Ok(EmbeddingIndex { vectors })
    }

    pub fn vector(&self, id: &str) -> Result<&EmbeddingVector> {
        self.vectors
            .get(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }
}

/// Selects the node set V: every node whose embedding's cosine against Γ
/// clears the configured threshold.
pub fn route(
    enc: &EncodedIntention,
    graph: &WorkKnowledgeGraph,
    index: &EmbeddingIndex,
    cfg: &RoutingConfig,
) -> Result<BTreeSet<String>> {
    cfg.validate()?;
    if graph.is_empty() {
        return Err(Error::invalid_input("cannot route over an empty graph"));
    }
    let mut selected = BTreeSet::new();
    for id in graph.node_ids() {
        let cos = enc.gamma.cosine(index.vector(id)?);
        if cos >= cfg.similarity_threshold - COSINE_SLACK {
            selected.insert(id.to_string());
        }
    }
    Ok(selected)
}

/// Splits V into neighborhoods: connected components of the (mutual) k-NN
/// graph over V's embeddings. Components are returned in ascending order of
/// their smallest member and partition V.
pub fn split_neighborhoods(
    v: &BTreeSet<String>,
    index: &EmbeddingIndex,
    cfg: &RoutingConfig,
) -> Result<Vec<BTreeSet<String>>> {
    cfg.validate()?;
    if v.is_empty() {
        return Err(Error::invalid_input("cannot split an empty node set"));
    }
    let ids: Vec<&str> = v.iter().map(String::as_str).collect();
    let k = cfg.knn_k.min(ids.len().saturating_sub(1));

    // Nearest neighbors per node: descending cosine, ties by ascending id.
    let mut nearest: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for &id in &ids {
        let own = index.vector(id)?;
        let mut scored: Vec<(f64, &str)> = Vec::with_capacity(ids.len() - 1);
        for &other in &ids {
            if other != id {
                scored.push((own.cosine(index.vector(other)?), other));
            }
        }
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        nearest.insert(id, scored.iter().take(k).map(|&(_, other)| other).collect());
    }

    let mut adjacent: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (&id, neighbors) in &nearest {
        for &other in neighbors {
            let keep = !cfg.mutual_knn || nearest[other].contains(id);
            if keep {
                adjacent.entry(id).or_default().insert(other);
                adjacent.entry(other).or_default().insert(id);
            }
        }
    }

    let mut components = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for &id in &ids {
        if seen.contains(id) {
            continue;
        }
        let mut component = BTreeSet::new();
        let mut stack = vec![id];
        seen.insert(id);
        while let Some(node) = stack.pop() {
            component.insert(node.to_string());
            for &next in adjacent.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        components.push(component);
    }
    // Iteration over `ids` is ascending, so components already come out
    // ordered by smallest member.
    Ok(components)
}

/// Undirected projection of the WKG used for sub-graph extraction: each
/// edge carries length 1 − γ (strong historical evidence ⇒ short), taking
/// the higher pair count when both directions exist.
fn undirected_lengths(graph: &WorkKnowledgeGraph) -> BTreeMap<(String, String), f64> {
    let mut best_counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for stat in graph.edge_stats() {
        let key = if stat.src <= stat.dst {
            (stat.src.clone(), stat.dst.clone())
        } else {
            (stat.dst.clone(), stat.src.clone())
        };
        let entry = best_counts.entry(key).or_insert(0);
        *entry = (*entry).max(stat.pair_count);
    }
    best_counts
        .into_iter()
        .map(|(key, count)| {
            let gamma = crate::wkg::edge_weight(count, graph.lambda())
                .expect("graph lambda validated on construction");
            (key, 1.0 - gamma)
        })
        .collect()
}

fn undirected_adjacency(
    lengths: &BTreeMap<(String, String), f64>,
) -> BTreeMap<&str, Vec<(&str, f64)>> {
    let mut adj: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for ((a, b), &len) in lengths {
        adj.entry(a).or_default().push((b, len));
        adj.entry(b).or_default().push((a, len));
    }
    for neighbors in adj.values_mut() {
        neighbors.sort_by(|x, y| x.0.cmp(y.0));
    }
    adj
}

/// Heap key ordering Dijkstra pops by (cost, lexicographic path), so the
/// first settlement of a node carries the lexicographically smallest
/// minimum-cost path.
#[derive(Debug, PartialEq)]
pub(crate) struct PathKey {
    pub(crate) cost: f64,
    pub(crate) path: Vec<String>,
}

impl Eq for PathKey {}

impl Ord for PathKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost
            .partial_cmp(&other.cost)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for PathKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest paths from `source` over the undirected projection; returns
/// (cost, lexicographically smallest minimal path) per reachable node.
fn shortest_paths_from(
    adj: &BTreeMap<&str, Vec<(&str, f64)>>,
    source: &str,
) -> BTreeMap<String, (f64, Vec<String>)> {
    let mut settled: BTreeMap<String, (f64, Vec<String>)> = BTreeMap::new();
    let mut heap: BinaryHeap<std::cmp::Reverse<PathKey>> = BinaryHeap::new();
    heap.push(std::cmp::Reverse(PathKey {
        cost: 0.0,
        path: vec![source.to_string()],
    }));
    while let Some(std::cmp::Reverse(PathKey { cost, path })) = heap.pop() {
        let node = path.last().expect("paths are never empty").clone();
        if settled.contains_key(&node) {
            continue;
        }
        settled.insert(node.clone(), (cost, path.clone()));
        for &(next, len) in adj.get(node.as_str()).into_iter().flatten() {
            if !settled.contains_key(next) {
                let mut next_path = path.clone();
                next_path.push(next.to_string());
                heap.push(std::cmp::Reverse(PathKey {
                    cost: cost + len,
                    path: next_path,
                }));
            }
        }
    }
    settled
}

/// Restores a direction for the undirected step {a, b}: the directed WKG
/// edge with the higher pair count wins; ties fall to the lexicographically
/// smaller (src, dst).
fn restore_direction(graph: &WorkKnowledgeGraph, a: &str, b: &str) -> (String, String) {
    let forward = graph.pair_count(a, b);
    let backward = graph.pair_count(b, a);
    debug_assert!(forward > 0 || backward > 0, "step must come from a WKG edge");
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    match forward.cmp(&backward) {
        Ordering::Greater => (a.to_string(), b.to_string()),
        Ordering::Less => (b.to_string(), a.to_string()),
        Ordering::Equal => (lo.to_string(), hi.to_string()),
    }
}

/// Grows a Steiner-style sub-graph spanning the neighborhood `terminals`:
/// metric-closure approximation (all-pairs shortest paths between terminals,
/// MST of the closure, closure edges expanded into WKG paths, deduplicated).
pub fn extract_swkg(
    terminals: &BTreeSet<String>,
    graph: &WorkKnowledgeGraph,
) -> Result<SubWkg> {
    if terminals.is_empty() {
        return Err(Error::invalid_input(
            "cannot extract a sub-graph for an empty neighborhood",
        ));
    }
    for id in terminals {
        graph.require_node(id)?;
    }
    if terminals.len() == 1 {
        return Ok(SubWkg {
            node_ids: terminals.clone(),
            edge_list: Vec::new(),
            terminals: terminals.clone(),
        });
    }

    let lengths = undirected_lengths(graph);
    let adj = undirected_adjacency(&lengths);
    let ordered: Vec<&str> = terminals.iter().map(String::as_str).collect();

    let mut paths_by_source: BTreeMap<&str, BTreeMap<String, (f64, Vec<String>)>> =
        BTreeMap::new();
    paths_by_source.insert(ordered[0], shortest_paths_from(&adj, ordered[0]));
    let unreachable: Vec<String> = ordered
        .iter()
        .filter(|t| !paths_by_source[ordered[0]].contains_key(**t))
        .map(|t| t.to_string())
        .collect();
    if !unreachable.is_empty() {
        return Err(Error::DisconnectedTerminals(unreachable));
    }
    for &t in ordered.iter().skip(1) {
        paths_by_source.insert(t, shortest_paths_from(&adj, t));
    }

    // Metric closure over terminals; Kruskal with (cost, src, dst) order.
    let mut closure: Vec<(f64, &str, &str)> = Vec::new();
    for (i, &a) in ordered.iter().enumerate() {
        for &b in ordered.iter().skip(i + 1) {
            let (cost, _) = &paths_by_source[a][b];
            closure.push((*cost, a, b));
        }
    }
    closure.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| (x.1, x.2).cmp(&(y.1, y.2)))
    });

    let mut leader: BTreeMap<&str, &str> = ordered.iter().map(|&t| (t, t)).collect();
    fn find<'a>(leader: &mut BTreeMap<&'a str, &'a str>, mut node: &'a str) -> &'a str {
        while leader[node] != node {
            let parent = leader[node];
            let grandparent = leader[parent];
            leader.insert(node, grandparent);
            node = parent;
        }
        node
    }

    let mut node_ids: BTreeSet<String> = terminals.clone();
    let mut undirected_steps: BTreeSet<(String, String)> = BTreeSet::new();
    for (_, a, b) in closure {
        let (ra, rb) = (find(&mut leader, a), find(&mut leader, b));
        if ra == rb {
            continue;
        }
        leader.insert(ra, rb);
        let (_, path) = &paths_by_source[a][b];
        for step in path.windows(2) {
            node_ids.insert(step[0].clone());
            node_ids.insert(step[1].clone());
            let key = if step[0] <= step[1] {
                (step[0].clone(), step[1].clone())
            } else {
                (step[1].clone(), step[0].clone())
            };
            undirected_steps.insert(key);
        }
    }

    let edge_list: Vec<(String, String)> = undirected_steps
        .iter()
        .map(|(a, b)| restore_direction(graph, a, b))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(SubWkg {
        node_ids,
        edge_list,
        terminals: terminals.clone(),
    })
}

/// Renders the sub-graph as deterministic DFS text: traversal starts at the
/// lexicographically smallest node id, neighbors are visited ascending over
/// the undirected view, and each line is indented two spaces per depth as
/// `id | title | description`.
pub fn textualize_swkg(swkg: &SubWkg, graph: &WorkKnowledgeGraph) -> Result<String> {
    let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (src, dst) in &swkg.edge_list {
        adj.entry(src).or_default().insert(dst);
        adj.entry(dst).or_default().insert(src);
    }
    let mut lines: Vec<String> = Vec::with_capacity(swkg.node_ids.len());
    let mut visited: BTreeSet<&str> = BTreeSet::new();
    for root in &swkg.node_ids {
        if visited.contains(root.as_str()) {
            continue;
        }
        let mut stack: Vec<(&str, usize)> = vec![(root, 0)];
        while let Some((id, depth)) = stack.pop() {
            if !visited.insert(id) {
                continue;
            }
            let node = graph.require_node(id)?;
            lines.push(format!(
                "{}{} | {} | {}",
                "  ".repeat(depth),
                node.id,
                node.title,
                node.description
            ));
            // Push descending so neighbors pop in ascending order.
            for &next in adj.get(id).into_iter().flatten().rev() {
                if !visited.contains(next) {
                    stack.push((next, depth + 1));
                }
            }
        }
    }
    Ok(lines.join("\n"))
}
