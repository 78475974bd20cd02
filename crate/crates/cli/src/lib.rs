//! Command-line front end for the wkforge engine. Wires the pipeline stages
//! exposed by `wkforge-core` into five commands — `ingest`, `generate`,
//! `optimize`, `evaluate`, and `rank` — and records every run's full
//! configuration in a manifest so results can be reproduced byte for byte.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use wkforge_core::assembly::EnhanceConfig;
use wkforge_core::optimizer::CostWeights;
use wkforge_core::providers::ProviderConfig;
use wkforge_core::retrieval::RoutingConfig;

pub mod cli;
pub mod commands;

/// Full configuration of one generation run. Serialized verbatim as the run
/// manifest so a run can be replayed from its outputs alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    /// Knowledge-graph file the run reads (and `ingest` updates).
    pub wkg_path: PathBuf,
    /// Intention bundle directory (`manifest.json` + `input/output/context`).
    pub intention_dir: PathBuf,
    /// Directory receiving the generated DAGs, the workflow graph, and the
    /// run manifest. Created if absent.
    pub output_dir: PathBuf,
    pub provider: ProviderConfig,
    pub routing: RoutingConfig,
    pub enhance: EnhanceConfig,
    pub weights: CostWeights,
    /// Evaluation trials when a single generated file is scored.
    pub trials: u32,
    /// Run seed; drives the deterministic offline providers.
    pub seed: u64,
}

impl RunConfig {
    /// Configuration with library defaults everywhere but the three paths.
    pub fn new(
        wkg_path: impl Into<PathBuf>,
        intention_dir: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
    ) -> RunConfig {
        RunConfig {
            wkg_path: wkg_path.into(),
            intention_dir: intention_dir.into(),
            output_dir: output_dir.into(),
            provider: ProviderConfig::default(),
            routing: RoutingConfig::default(),
            enhance: EnhanceConfig::default(),
            weights: CostWeights::default(),
            trials: 10,
            seed: 0,
        }
    }

    /// Sets the run seed, keeping the provider seed in lockstep so the
    /// manifest echoes exactly what the providers used.
    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.seed = seed;
        self.provider.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.trials == 0 {
            return Err(CliError::Config("trials must be >= 1".to_string()));
        }
        if !self.wkg_path.is_file() {
            return Err(CliError::Config(format!(
                "knowledge graph file not found: {}",
                self.wkg_path.display()
            )));
        }
        if !self.intention_dir.is_dir() {
            return Err(CliError::Config(format!(
                "intention directory not found: {}",
                self.intention_dir.display()
            )));
        }
        Ok(())
    }
}

/// Errors surfaced by the command layer. Every pipeline failure names the
/// stage it happened in; the process exits nonzero iff a command returns one
/// of these.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A pipeline stage failed with an engine error.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: wkforge_core::Error,
    },

    /// A record in an ingest batch failed to apply.
    #[error("stage record: record {index}: {source}")]
    Record {
        index: usize,
        #[source]
        source: wkforge_core::Error,
    },

    /// Routing selected no knowledge-graph node.
    #[error(
        "stage route: EmptyRouting: no knowledge-graph node reaches similarity \
         threshold {threshold}"
    )]
    EmptyRouting { threshold: f64 },

    /// The command line or configuration was unusable.
    #[error("config: {0}")]
    Config(String),
}

/// Tags an engine result with the pipeline stage it belongs to.
pub(crate) fn stage<T>(
    stage: &'static str,
    result: wkforge_core::Result<T>,
) -> Result<T, CliError> {
    result.map_err(|source| CliError::Stage { stage, source })
}

/// Parses arguments into commands, runs them, and prints their summaries.
pub fn run(args: cli::Args) -> Result<(), CliError> {
    match args.command {
        cli::Command::Ingest(a) => {
            let summary = commands::cmd_ingest(&a.records, &a.wkg)?;
            println!("{summary}");
        }
        cli::Command::Generate(a) => {
            let summary = commands::cmd_generate(&a.into_config())?;
            println!("{summary}");
        }
        cli::Command::Optimize(a) => {
            let summary = commands::cmd_optimize(
                &a.wfg,
                &a.wkg,
                &a.weights(),
                &a.default_costs(),
                &a.out,
            )?;
            println!("{summary}");
        }
        cli::Command::Evaluate(a) => {
            let report = commands::cmd_evaluate(
                &a.generated,
                &a.reference,
                &a.settings(),
                &a.out,
            )?;
            let avg = &report.average;
            println!(
                "trials: {}\ncoverage: {:.6}\nkendall_raw: {:.6}\nkendall_weighted: {:.6}\n\
                 dtw: {:.6}\nbleu: {:.6}\ncosine: {:.6}\npentagon_area: {:.6}",
                avg.trials,
                avg.coverage,
                avg.kendall_raw,
                avg.kendall_weighted,
                avg.dtw,
                avg.bleu,
                avg.cosine,
                avg.pentagon_area,
            );
        }
        cli::Command::Rank(a) => {
            let ranking = commands::cmd_rank(&a.table)?;
            for (position, row) in ranking.iter().enumerate() {
                println!("{}. {} area={:.6}", position + 1, row.name, row.area);
            }
        }
    }
    Ok(())
}
