//! Shared helpers for the CLI integration tests: the in-code builders for
//! the bundled fixtures (so a test can verify the bundled files never drift
//! from their construction) and small filesystem utilities.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use wkforge_cli::commands::MetricsRow;
use wkforge_core::generation::{GeneratedTask, WorkflowFile};
use wkforge_core::wkg::{TaskNode, WorkKnowledgeGraph, WorkflowImplementationRecord};

/// Directory holding the bundled fixture files.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The 21 medical-coding tasks of the bundled knowledge graph: intake,
/// a data-points stage, a problem-points stage, a risk stage, and the
/// level-selection tail.
pub const MEDICAL_TASKS: [(&str, &str, &str); 21] = [
    (
        "ingest_encounter",
        "Ingest Encounter Record",
        "Load the patient encounter record and attached documents for coding review",
    ),
    (
        "parse_consultation_notes",
        "Parse Consultation Notes",
        "Split the consultation notes of the encounter into structured sections",
    ),
    (
        "extract_orders",
        "Extract Ordered Tests",
        "Extract the ordered tests and procedures from the encounter sections",
    ),
    (
        "extract_lab_results",
        "Extract Lab Results",
        "Collect the laboratory results referenced by the encounter documents",
    ),
    (
        "identify_data_points",
        "Identify Data Points",
        "Identify the data points reviewed during the encounter",
    ),
    (
        "count_unique_tests",
        "Count Unique Tests",
        "Count each unique test ordered or reviewed as one data point",
    ),
    (
        "review_external_notes",
        "Review External Notes",
        "Review the notes from each external source as an additional data point",
    ),
    (
        "aggregate_data_points",
        "Aggregate Data Points",
        "Sum the data points from tests, documents, and external notes",
    ),
    (
        "classify_data_level",
        "Classify Data Level",
        "Map the aggregated data points onto the data complexity level",
    ),
    (
        "list_presenting_problems",
        "List Presenting Problems",
        "List the presenting problems addressed during the encounter",
    ),
    (
        "assess_problem_severity",
        "Assess Problem Severity",
        "Assess the severity and progression of each presenting problem",
    ),
    (
        "score_problem_points",
        "Score Problem Points",
        "Score the problem points for the problems treated at the encounter",
    ),
    (
        "classify_problem_level",
        "Classify Problem Level",
        "Map the problem points onto the problem complexity level",
    ),
    (
        "review_medication_risk",
        "Review Medication Risk",
        "Review prescription drug management for the risk column",
    ),
    (
        "review_procedure_risk",
        "Review Procedure Risk",
        "Review planned procedures and surgery decisions for the risk column",
    ),
    (
        "assess_overall_risk",
        "Assess Overall Risk",
        "Select the highest risk level supported by medications and procedures",
    ),
    (
        "combine_component_levels",
        "Combine Component Levels",
        "Combine the data, problem, and risk levels into the overall complexity",
    ),
    (
        "select_em_level",
        "Select Evaluation Level",
        "Select the evaluation and management level from the combined complexity",
    ),
    (
        "assign_visit_code",
        "Assign Visit Code",
        "Assign the visit code that matches the selected evaluation level",
    ),
    (
        "audit_code_selection",
        "Audit Code Selection",
        "Audit the assigned code against the encounter documentation",
    ),
    (
        "publish_coding_report",
        "Publish Coding Report",
        "Publish the final coding report for the encounter",
    ),
];

/// Historical implementations: two data-stage runs, two problem-stage runs,
/// two risk-stage runs, and one full pass covering every task.
pub fn medical_histories() -> Vec<(&'static str, Vec<&'static str>, [f64; 3])> {
    vec![
        (
            "wf_data_1",
            vec![
                "ingest_encounter",
                "parse_consultation_notes",
                "extract_orders",
                "identify_data_points",
                "count_unique_tests",
                "aggregate_data_points",
                "classify_data_level",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "publish_coding_report",
            ],
            [3.0, 2.0, 1.0],
        ),
        (
            "wf_data_2",
            vec![
                "ingest_encounter",
                "parse_consultation_notes",
                "extract_lab_results",
                "identify_data_points",
                "review_external_notes",
                "aggregate_data_points",
                "classify_data_level",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "audit_code_selection",
                "publish_coding_report",
            ],
            [4.0, 2.5, 1.5],
        ),
        (
            "wf_problem_1",
            vec![
                "ingest_encounter",
                "parse_consultation_notes",
                "list_presenting_problems",
                "assess_problem_severity",
                "score_problem_points",
                "classify_problem_level",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "publish_coding_report",
            ],
            [2.0, 3.0, 1.0],
        ),
        (
            "wf_problem_2",
            vec![
                "ingest_encounter",
                "list_presenting_problems",
                "score_problem_points",
                "classify_problem_level",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "audit_code_selection",
                "publish_coding_report",
            ],
            [2.5, 1.5, 0.5],
        ),
        (
            "wf_risk_1",
            vec![
                "ingest_encounter",
                "parse_consultation_notes",
                "review_medication_risk",
                "assess_overall_risk",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "publish_coding_report",
            ],
            [1.0, 1.0, 2.0],
        ),
        (
            "wf_risk_2",
            vec![
                "ingest_encounter",
                "review_procedure_risk",
                "assess_overall_risk",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "publish_coding_report",
            ],
            [1.5, 2.0, 2.5],
        ),
        (
            "wf_full_1",
            vec![
                "ingest_encounter",
                "parse_consultation_notes",
                "extract_orders",
                "extract_lab_results",
                "identify_data_points",
                "count_unique_tests",
                "review_external_notes",
                "aggregate_data_points",
                "classify_data_level",
                "list_presenting_problems",
                "assess_problem_severity",
                "score_problem_points",
                "classify_problem_level",
                "review_medication_risk",
                "review_procedure_risk",
                "assess_overall_risk",
                "combine_component_levels",
                "select_em_level",
                "assign_visit_code",
                "audit_code_selection",
                "publish_coding_report",
            ],
            [5.0, 4.0, 3.0],
        ),
    ]
}

fn record(
    workflow_id: &str,
    task_ids: &[&str],
    costs: [f64; 3],
) -> WorkflowImplementationRecord {
    WorkflowImplementationRecord {
        workflow_id: workflow_id.to_string(),
        task_ids: task_ids.iter().map(|s| s.to_string()).collect(),
        cost_compute: costs[0],
        cost_time: costs[1],
        cost_model: costs[2],
        success: true,
    }
}

/// Builds the bundled medical knowledge graph from scratch through the
/// library API; `fixtures/wkg_medical.json` must serialize identically.
pub fn build_medical_graph() -> WorkKnowledgeGraph {
    let mut graph = WorkKnowledgeGraph::new(0.5).expect("valid lambda");
    for (id, title, description) in MEDICAL_TASKS {
        let mut node = TaskNode::new(id, title, description);
        node.industry = "medical coding".to_string();
        graph.upsert_task(node).expect("valid task");
    }
    for (workflow_id, path, costs) in medical_histories() {
        graph
            .record_workflow_implementation(record(workflow_id, &path, costs))
            .expect("valid record");
    }
    graph
}

/// Task ids of the bundled reference workflow, in reference order: the
/// canonical spine through intake, the three stages, and the tail.
pub const REFERENCE_SPINE: [&str; 12] = [
    "ingest_encounter",
    "parse_consultation_notes",
    "identify_data_points",
    "aggregate_data_points",
    "classify_data_level",
    "list_presenting_problems",
    "classify_problem_level",
    "assess_overall_risk",
    "combine_component_levels",
    "select_em_level",
    "assign_visit_code",
    "publish_coding_report",
];

/// Builds the bundled reference workflow: the spine tasks with the exact
/// knowledge-graph titles and descriptions, chained in order.
pub fn build_reference_workflow() -> WorkflowFile {
    let by_id: std::collections::BTreeMap<&str, (&str, &str)> = MEDICAL_TASKS
        .iter()
        .map(|(id, title, description)| (*id, (*title, *description)))
        .collect();
    let tasks: Vec<GeneratedTask> = REFERENCE_SPINE
        .iter()
        .map(|id| {
            let (title, description) = by_id[id];
            GeneratedTask {
                local_id: id.to_string(),
                title: title.to_string(),
                description: description.to_string(),
                instructions: Vec::new(),
                wkg_node_id: Some(id.to_string()),
            }
        })
        .collect();
    let edges = REFERENCE_SPINE
        .windows(2)
        .map(|pair| (pair[0].to_string(), pair[1].to_string()))
        .collect();
    WorkflowFile {
        tasks,
        edges,
        entry_id: None,
        exit_id: None,
    }
}

/// Builds the bundled benchmark metrics table: published five-metric rows
/// for seven generation backends, in published order.
pub fn build_metrics_table() -> Vec<MetricsRow> {
    let rows: [(&str, [f64; 5]); 7] = [
        ("appliedai-opus-1alpha-large", [0.721, 0.498, 0.715, 0.485, 0.361]),
        ("appliedai-opus-1alpha-small", [0.746, 0.083, 0.719, 0.546, 0.235]),
        ("anthropic-claude-3.5-sonnet", [0.254, 0.058, 0.250, 0.283, 0.017]),
        ("openai-o1-preview-2024-09-12", [0.271, 0.056, 0.255, 0.202, 0.001]),
        ("openai-gpt-4o-2024-08-06", [0.208, 0.005, 0.195, 0.264, 0.005]),
        ("google-gemini-1.5-flash", [0.083, 0.202, 0.078, 0.209, 0.012]),
        ("google-gemini-1.5-pro", [0.108, 0.102, 0.102, 0.142, 0.011]),
    ];
    rows.iter()
        .map(|(name, [coverage, kendall, dtw, cosine, bleu])| MetricsRow {
            name: name.to_string(),
            coverage: *coverage,
            kendall: *kendall,
            dtw: *dtw,
            cosine: *cosine,
            bleu: *bleu,
        })
        .collect()
}

/// Builds the bundled extra ingest batch: two records that only revisit
/// existing edges plus one that adds the single new edge
/// `publish_coding_report -> ingest_encounter`.
pub fn build_extra_records() -> Vec<WorkflowImplementationRecord> {
    vec![
        record(
            "wf_extra_audit",
            &["audit_code_selection", "publish_coding_report"],
            [1.0, 0.5, 0.25],
        ),
        record(
            "wf_extra_data",
            &["extract_orders", "extract_lab_results", "identify_data_points"],
            [2.0, 1.0, 0.5],
        ),
        record(
            "wf_extra_loop",
            &["publish_coding_report", "ingest_encounter"],
            [0.5, 0.5, 0.5],
        ),
    ]
}

/// Serializes a value the way every bundled JSON fixture is stored:
/// pretty-printed with a trailing newline.
pub fn pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable fixture");
    text.push('\n');
    text
}

/// A bundled sub-graph extraction fixture: a small knowledge graph plus the
/// terminal set to span.
pub struct SteinerFixture {
    pub graph: WorkKnowledgeGraph,
    pub terminals: std::collections::BTreeSet<String>,
}

/// Basenames of the bundled sub-graph extraction fixtures.
pub const STEINER_FIXTURES: [&str; 3] =
    ["steiner_line.json", "steiner_star.json", "steiner_web.json"];

/// Loads one bundled `{"wkg": ..., "terminals": ...}` fixture, taking the
/// embedded graph through the standard file loader.
pub fn load_steiner_fixture(name: &str) -> SteinerFixture {
    let path = fixtures_dir().join(name);
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).expect("fixture parses");
    let dir = tempfile::tempdir().expect("temp dir");
    let wkg_path = dir.path().join("wkg.json");
    std::fs::write(
        &wkg_path,
        serde_json::to_string_pretty(&value["wkg"]).expect("wkg object"),
    )
    .expect("write temp wkg");
    let graph = WorkKnowledgeGraph::load(&wkg_path).expect("fixture graph loads");
    let terminals = value["terminals"]
        .as_array()
        .expect("terminals array")
        .iter()
        .map(|t| t.as_str().expect("terminal id").to_string())
        .collect();
    SteinerFixture { graph, terminals }
}
