//! Scores a generated workflow against a reference: exclusive task
//! matching through the judge, coverage ratio, coverage-weighted Kendall
//! tau, coverage-weighted normalized dynamic time warping, BLEU, embedding
//! cosine, trial averaging, and the pentagon-area ranking that combines
//! the five headline values.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generation::{GeneratedTask, WorkflowFile};
use crate::providers::{MatchJudge, ProviderSet, TextEmbedder};
use crate::retrieval::COSINE_SLACK;

/// Judge scores at or above this accept a task pair as matched.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.75;

/// Smoothing constant keeping zero-count n-gram precisions defined.
const BLEU_EPSILON: f64 = 1e-9;

/// One reference task, in reference execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTask {
    pub id: String,
    pub title: String,
    pub description: String,
}

/// The ground-truth workflow generated outputs are scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceWorkflow {
    pub tasks: Vec<ReferenceTask>,
}

impl ReferenceWorkflow {
    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::invalid_input("reference workflow has no tasks"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for task in &self.tasks {
            if !ids.insert(task.id.as_str()) {
                return Err(Error::invalid_input(format!(
                    "duplicate reference task id {:?}",
                    task.id
                )));
            }
        }
        Ok(())
    }

    /// Adopts the task list of a workflow file, in file order.
    pub fn from_workflow_file(file: &WorkflowFile) -> Result<ReferenceWorkflow> {
        let reference = ReferenceWorkflow {
            tasks: file
                .tasks
                .iter()
                .map(|t| ReferenceTask {
                    id: t.local_id.clone(),
                    title: t.title.clone(),
                    description: t.description.clone(),
                })
                .collect(),
        };
        reference.validate()?;
        Ok(reference)
    }
}

/// One accepted generated↔reference pair with its judge score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub generated: usize,
    pub reference: usize,
    pub score: f64,
}

/// Exclusive matching: every generated and reference index appears at most
/// once. Pairs are stored in ascending generated-index order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Matching {
    pub pairs: Vec<MatchPair>,
    pub unmatched_generated: Vec<usize>,
}

impl Matching {
    /// Total generated tasks the matching was computed over.
    pub fn generated_count(&self) -> usize {
        self.pairs.len() + self.unmatched_generated.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut generated = std::collections::BTreeSet::new();
        let mut reference = std::collections::BTreeSet::new();
        for pair in &self.pairs {
            if !generated.insert(pair.generated) {
                return Err(Error::invalid_input(format!(
                    "generated index {} matched twice",
                    pair.generated
                )));
            }
            if !reference.insert(pair.reference) {
                return Err(Error::invalid_input(format!(
                    "reference index {} matched twice",
                    pair.reference
                )));
            }
        }
        for index in &self.unmatched_generated {
            if generated.contains(index) {
                return Err(Error::invalid_input(format!(
                    "generated index {index} both matched and unmatched"
                )));
            }
        }
        Ok(())
    }
}

/// How exclusive pairs are chosen from the judge's score matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchStrategy {
    /// Accept pairs in descending score order, skipping taken indices.
    Greedy,
    /// Maximize the total accepted score (assignment problem).
    Optimal,
}

/// The five headline metrics of one evaluation plus their pentagon area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub coverage: f64,
    pub kendall_raw: f64,
    pub kendall_weighted: f64,
    pub dtw: f64,
    pub bleu: f64,
    pub cosine: f64,
    pub pentagon_area: f64,
    pub trials: u32,
}

/// The averaged axis values the pentagon area is computed from, in ranking
/// axis order, for external radar plotting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarAxes {
    pub coverage: f64,
    pub kendall: f64,
    pub dtw: f64,
    pub cosine: f64,
    pub bleu: f64,
}

/// Full evaluation output: per-trial rows, their average, the matchings
/// behind each trial, and the radar block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_trial: Vec<MetricReport>,
    pub average: MetricReport,
    pub matchings: Vec<Matching>,
    pub radar: RadarAxes,
}

impl EvalReport {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<EvalReport> {
        let path = path.as_ref();
        let context = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(context.clone(), e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(context, e.to_string()))
    }
}

/// Text a task is judged/embedded by: title and description joined.
fn task_text(title: &str, description: &str) -> String {
    format!("{title} {description}")
}

fn generated_text(task: &GeneratedTask) -> String {
    task_text(&task.title, &task.description)
}

fn reference_text(task: &ReferenceTask) -> String {
    task_text(&task.title, &task.description)
}

fn score_matrix(
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    judge: &dyn MatchJudge,
) -> Result<Vec<Vec<f64>>> {
    generated
        .iter()
        .map(|g| {
            let g_text = generated_text(g);
            reference
                .tasks
                .iter()
                .map(|r| judge.judge_match(&g_text, &reference_text(r)))
                .collect()
        })
        .collect()
}

fn matching_from_assignment(
    assigned: BTreeMap<usize, (usize, f64)>,
    generated_count: usize,
) -> Matching {
    let unmatched_generated = (0..generated_count)
        .filter(|g| !assigned.contains_key(g))
        .collect();
    Matching {
        pairs: assigned
            .into_iter()
            .map(|(generated, (reference, score))| MatchPair {
                generated,
                reference,
                score,
            })
            .collect(),
        unmatched_generated,
    }
}

/// Exclusive matching by greedy descending-score assignment: pairs are
/// visited from highest score down (ties by generated then reference
/// index) and accepted when both indices are still free and the score
/// reaches the threshold.
pub fn match_tasks(
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    judge: &dyn MatchJudge,
    threshold: f64,
) -> Result<Matching> {
    if generated.is_empty() {
        return Err(Error::invalid_input("no generated tasks to match"));
    }
    reference.validate()?;
    let scores = score_matrix(generated, reference, judge)?;

    let mut ranked: Vec<(usize, usize)> = (0..generated.len())
        .flat_map(|g| (0..reference.tasks.len()).map(move |r| (g, r)))
        .collect();
    ranked.sort_by(|&(g1, r1), &(g2, r2)| {
        scores[g2][r2]
            .partial_cmp(&scores[g1][r1])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (g1, r1).cmp(&(g2, r2)))
    });

    let mut taken_generated = vec![false; generated.len()];
    let mut taken_reference = vec![false; reference.tasks.len()];
    let mut assigned = BTreeMap::new();
    for (g, r) in ranked {
        let score = scores[g][r];
        if score < threshold - COSINE_SLACK {
            break;
        }
        if taken_generated[g] || taken_reference[r] {
            continue;
        }
        taken_generated[g] = true;
        taken_reference[r] = true;
        assigned.insert(g, (r, score));
    }
    Ok(matching_from_assignment(assigned, generated.len()))
}

/// Minimum-cost assignment over a rectangular cost matrix (rows ≤ cols)
/// via the potentials form of the Hungarian algorithm; returns the column
/// chosen for each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    debug_assert!(n <= m);
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    // p[j] = 1-based row assigned to 1-based column j.
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Exclusive matching that maximizes the summed accepted score instead of
/// assigning greedily; a sensitivity check on the greedy protocol. Pairs
/// under the threshold carry zero benefit and are dropped from the result.
pub fn match_tasks_optimal(
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    judge: &dyn MatchJudge,
    threshold: f64,
) -> Result<Matching> {
    if generated.is_empty() {
        return Err(Error::invalid_input("no generated tasks to match"));
    }
    reference.validate()?;
    let scores = score_matrix(generated, reference, judge)?;
    let n = generated.len();
    let m = reference.tasks.len();
    let side = n.max(m);

    // Square benefit matrix padded with zeros, flipped into costs.
    let benefit = |g: usize, r: usize| -> f64 {
        if g < n && r < m && scores[g][r] >= threshold - COSINE_SLACK {
            scores[g][r]
        } else {
            0.0
        }
    };
    let cost: Vec<Vec<f64>> = (0..side)
        .map(|g| (0..side).map(|r| -benefit(g, r)).collect())
        .collect();
    let row_to_col = min_cost_assignment(&cost);

    let mut assigned = BTreeMap::new();
    for (g, &r) in row_to_col.iter().enumerate().take(n) {
        if r < m && scores[g][r] >= threshold - COSINE_SLACK {
            assigned.insert(g, (r, scores[g][r]));
        }
    }
    Ok(matching_from_assignment(assigned, n))
}

/// Dispatches on the configured matching strategy.
pub fn match_tasks_with(
    strategy: MatchStrategy,
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    judge: &dyn MatchJudge,
    threshold: f64,
) -> Result<Matching> {
    match strategy {
        MatchStrategy::Greedy => match_tasks(generated, reference, judge, threshold),
        MatchStrategy::Optimal => {
            match_tasks_optimal(generated, reference, judge, threshold)
        }
    }
}

/// Proportion of generated tasks that found an exclusive match.
pub fn coverage_ratio(matching: &Matching, generated_count: usize) -> f64 {
    debug_assert!(generated_count >= 1);
    debug_assert_eq!(matching.generated_count(), generated_count);
    if generated_count == 0 {
        return 0.0;
    }
    matching.pairs.len() as f64 / generated_count as f64
}

/// Kendall tau-a over the matched pairs' (generated order, reference
/// order), plus the coverage-weighted variant. Fewer than two pairs give a
/// raw tau of 0.
pub fn kendall_score(matching: &Matching) -> (f64, f64) {
    let mut pairs: Vec<(usize, usize)> = matching
        .pairs
        .iter()
        .map(|p| (p.generated, p.reference))
        .collect();
    pairs.sort();
    let n = pairs.len();
    let raw = if n < 2 {
        0.0
    } else {
        let mut concordant = 0i64;
        let mut discordant = 0i64;
        for i in 0..n {
            for j in (i + 1)..n {
                if pairs[j].1 > pairs[i].1 {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
        (concordant - discordant) as f64 / ((n * (n - 1)) as f64 / 2.0)
    };
    let generated_count = matching.generated_count();
    let coverage = if generated_count == 0 {
        0.0
    } else {
        n as f64 / generated_count as f64
    };
    (raw, raw * coverage)
}

/// Dynamic-time-warping alignment of the matched reference ids in
/// generated order against reference order: local cost 0 for equal ids
/// else 1, symmetric steps, normalized to 1 − cost/path-length (cells on
/// the backtracked path), then coverage-weighted.
pub fn dtw_score(matching: &Matching, generated_count: usize, reference_count: usize) -> f64 {
    debug_assert!(matching
        .pairs
        .iter()
        .all(|p| p.generated < generated_count && p.reference < reference_count));
    if matching.pairs.is_empty() || generated_count == 0 {
        return 0.0;
    }
    let mut by_generated: Vec<(usize, usize)> = matching
        .pairs
        .iter()
        .map(|p| (p.generated, p.reference))
        .collect();
    by_generated.sort();
    let a: Vec<usize> = by_generated.iter().map(|&(_, r)| r).collect();
    let mut b = a.clone();
    b.sort();

    let n = a.len();
    let local = |i: usize, j: usize| -> f64 {
        if a[i] == b[j] {
            0.0
        } else {
            1.0
        }
    };
    let mut table = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            let best_prev = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => table[0][j - 1],
                (_, 0) => table[i - 1][0],
                _ => table[i - 1][j - 1]
                    .min(table[i - 1][j])
                    .min(table[i][j - 1]),
            };
            table[i][j] = local(i, j) + best_prev;
        }
    }

    // Backtrack preferring diagonal, then up, then left on ties; the path
    // length is the number of cells visited.
    let (mut i, mut j) = (n - 1, n - 1);
    let mut path_len = 1usize;
    while i > 0 || j > 0 {
        let (ni, nj) = match (i, j) {
            (0, _) => (0, j - 1),
            (_, 0) => (i - 1, 0),
            _ => {
                let diag = table[i - 1][j - 1];
                let up = table[i - 1][j];
                let left = table[i][j - 1];
                if diag <= up && diag <= left {
                    (i - 1, j - 1)
                } else if up <= left {
                    (i - 1, j)
                } else {
                    (i, j - 1)
                }
            }
        };
        i = ni;
        j = nj;
        path_len += 1;
    }

    let normalized = 1.0 - table[n - 1][n - 1] / path_len as f64;
    let coverage = n as f64 / generated_count as f64;
    normalized * coverage
}

fn ngram_counts(tokens: &[String], n: usize) -> BTreeMap<&[String], u64> {
    let mut counts: BTreeMap<&[String], u64> = BTreeMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// Sentence BLEU with n-grams up to 4, uniform weights, brevity penalty,
/// and additive-ε smoothing so short task texts still score.
fn sentence_bleu(candidate: &str, reference: &str) -> f64 {
    let cand = tokens(candidate);
    let refr = tokens(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=4 {
        let cand_grams = ngram_counts(&cand, n);
        let ref_grams = ngram_counts(&refr, n);
        let total: u64 = cand_grams.values().sum();
        let clipped: u64 = cand_grams
            .iter()
            .map(|(gram, &count)| count.min(ref_grams.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = (clipped as f64 + BLEU_EPSILON) / (total as f64 + BLEU_EPSILON);
        log_sum += 0.25 * precision.ln();
    }
    let brevity = if cand.len() >= refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    brevity * log_sum.exp()
}

/// Mean BLEU over all generated tasks: matched pairs score their texts,
/// unmatched tasks contribute zero.
pub fn bleu_score(
    matching: &Matching,
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
) -> f64 {
    if generated.is_empty() {
        return 0.0;
    }
    let total: f64 = matching
        .pairs
        .iter()
        .map(|p| {
            sentence_bleu(
                &generated_text(&generated[p.generated]),
                &reference_text(&reference.tasks[p.reference]),
            )
        })
        .sum();
    total / generated.len() as f64
}

/// Mean embedding cosine over all generated tasks: matched pairs score
/// their texts (negative cosines clamped to zero), unmatched contribute
/// zero.
pub fn cosine_score(
    matching: &Matching,
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    embedder: &dyn TextEmbedder,
) -> Result<f64> {
    if generated.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for pair in &matching.pairs {
        let g = embedder.embed_text(&generated_text(&generated[pair.generated]))?;
        let r = embedder.embed_text(&reference_text(&reference.tasks[pair.reference]))?;
        total += g.cosine(&r).max(0.0);
    }
    Ok(total / generated.len() as f64)
}

/// Area of the pentagon whose spokes are the five values in ranking axis
/// order (coverage, weighted Kendall, DTW, cosine, BLEU) at equal angles:
/// ½·sin(2π/5)·Σ vᵢ·vᵢ₊₁. Values are clamped to [0, 1] first.
pub fn pentagon_area(values: &[f64]) -> Result<f64> {
    if values.len() != 5 {
        return Err(Error::invalid_input(format!(
            "pentagon needs exactly 5 values, got {}",
            values.len()
        )));
    }
    let v: Vec<f64> = values.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let cross: f64 = (0..5).map(|i| v[i] * v[(i + 1) % 5]).sum();
    Ok(0.5 * (2.0 * std::f64::consts::PI / 5.0).sin() * cross)
}

fn report_with_pentagon(
    coverage: f64,
    kendall_raw: f64,
    kendall_weighted: f64,
    dtw: f64,
    bleu: f64,
    cosine: f64,
    trials: u32,
) -> Result<MetricReport> {
    Ok(MetricReport {
        coverage,
        kendall_raw,
        kendall_weighted,
        dtw,
        bleu,
        cosine,
        pentagon_area: pentagon_area(&[coverage, kendall_weighted, dtw, cosine, bleu])?,
        trials,
    })
}

/// One full evaluation trial of a generated task list against the
/// reference, using the provider set's judge and embedder.
pub fn evaluate_workflow(
    generated: &[GeneratedTask],
    reference: &ReferenceWorkflow,
    providers: &ProviderSet,
    strategy: MatchStrategy,
    threshold: f64,
) -> Result<(MetricReport, Matching)> {
    let matching = match_tasks_with(
        strategy,
        generated,
        reference,
        providers.judge.as_ref(),
        threshold,
    )?;
    let coverage = coverage_ratio(&matching, generated.len());
    let (kendall_raw, kendall_weighted) = kendall_score(&matching);
    let dtw = dtw_score(&matching, generated.len(), reference.tasks.len());
    let bleu = bleu_score(&matching, generated, reference);
    let cosine = cosine_score(&matching, generated, reference, providers.embedder.as_ref())?;
    let report =
        report_with_pentagon(coverage, kendall_raw, kendall_weighted, dtw, bleu, cosine, 1)?;
    Ok((report, matching))
}

/// Arithmetic mean of the per-trial metrics; the pentagon area is
/// recomputed from the averaged axis values rather than averaged itself.
pub fn evaluate_trials(reports: &[MetricReport]) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::invalid_input("no trial reports to average"));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    report_with_pentagon(
        mean(|r| r.coverage),
        mean(|r| r.kendall_raw),
        mean(|r| r.kendall_weighted),
        mean(|r| r.dtw),
        mean(|r| r.bleu),
        mean(|r| r.cosine),
        reports.iter().map(|r| r.trials).sum(),
    )
}

/// Radar axis block for a (typically averaged) report, clamped like the
/// pentagon inputs.
pub fn radar_axes(report: &MetricReport) -> RadarAxes {
    RadarAxes {
        coverage: report.coverage.clamp(0.0, 1.0),
        kendall: report.kendall_weighted.clamp(0.0, 1.0),
        dtw: report.dtw.clamp(0.0, 1.0),
        cosine: report.cosine.clamp(0.0, 1.0),
        bleu: report.bleu.clamp(0.0, 1.0),
    }
}
