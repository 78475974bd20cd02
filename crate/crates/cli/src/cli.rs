//! Command-line surface: clap argument types and their conversion into the
//! command-layer configuration structs. Flags mirror [`crate::RunConfig`]
//! fields one to one; `WKFORGE_OFFLINE=1` in the environment forces offline
//! providers regardless of `--online`.

use std::path::PathBuf;

use clap::{Args as ClapArgs, Parser, Subcommand};
use wkforge_core::assembly::EnhanceConfig;
use wkforge_core::evaluation::{MatchStrategy, DEFAULT_MATCH_THRESHOLD};
use wkforge_core::optimizer::{CostWeights, DefaultCosts};
use wkforge_core::providers::ProviderConfig;
use wkforge_core::retrieval::RoutingConfig;

use crate::commands::EvaluateSettings;
use crate::RunConfig;

/// Generates, optimizes, and evaluates task workflows over a work knowledge
/// graph.
#[derive(Debug, Parser)]
#[command(name = "wkforge", version, about)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Record workflow implementations into a knowledge graph file.
    Ingest(IngestArgs),
    /// Run the full pipeline: intention -> routing -> generation -> workflow graph.
    Generate(GenerateArgs),
    /// Extract the minimum-cost entry-to-exit path from a workflow graph.
    Optimize(OptimizeArgs),
    /// Score generated workflows against a reference workflow.
    Evaluate(EvaluateArgs),
    /// Rank metrics-table rows by radar pentagon area.
    Rank(RankArgs),
}

#[derive(Debug, ClapArgs)]
pub struct IngestArgs {
    /// JSON array of workflow implementation records.
    pub records: PathBuf,
    /// Knowledge graph file to update in place.
    #[arg(long)]
    pub wkg: PathBuf,
}

/// Flags shared by the provider back ends.
#[derive(Debug, ClapArgs)]
pub struct ProviderArgs {
    /// Call the configured HTTP endpoint instead of the offline providers.
    #[arg(long)]
    pub online: bool,
    /// Endpoint URL for online mode.
    #[arg(long, default_value = "")]
    pub endpoint: String,
    /// Environment variable holding the API key for online mode.
    #[arg(long, default_value = "WKFORGE_API_KEY")]
    pub api_key_env: String,
    /// Request timeout in seconds for online mode.
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Upper bound on concurrent provider requests (and generation workers).
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Embedding dimensionality.
    #[arg(long, default_value_t = 256)]
    pub embedding_dim: usize,
}

impl ProviderArgs {
    pub fn to_config(&self, seed: u64) -> ProviderConfig {
        ProviderConfig {
            endpoint_url: self.endpoint.clone(),
            api_key_env: self.api_key_env.clone(),
            timeout_secs: self.timeout_secs,
            max_in_flight: self.max_in_flight,
            offline_mode: !self.online,
            seed,
            embedding_dim: self.embedding_dim,
            ..ProviderConfig::default()
        }
    }
}

#[derive(Debug, ClapArgs)]
pub struct GenerateArgs {
    /// Knowledge graph file.
    #[arg(long)]
    pub wkg: PathBuf,
    /// Intention bundle directory.
    #[arg(long)]
    pub intention: PathBuf,
    /// Output directory for DAGs, workflow graph, and run manifest.
    #[arg(long)]
    pub output: PathBuf,
    /// Minimum cosine similarity for a node to route.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Neighbor count for the k-NN neighborhood split.
    #[arg(long, default_value_t = 5)]
    pub knn: usize,
    /// Keep k-NN edges that are not mutual.
    #[arg(long)]
    pub no_mutual_knn: bool,
    /// Starting similarity bar for connectivity enhancement.
    #[arg(long, default_value_t = 1.0)]
    pub alpha_start: f64,
    /// Per-iteration decrement of the similarity bar.
    #[arg(long, default_value_t = 0.05)]
    pub alpha_step: f64,
    /// Lowest similarity bar before enhancement gives up.
    #[arg(long, default_value_t = 0.0)]
    pub alpha_floor: f64,
    /// Evaluation trials recorded in the manifest.
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// Run seed; drives the deterministic offline providers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

impl GenerateArgs {
    pub fn into_config(self) -> RunConfig {
        RunConfig {
            wkg_path: self.wkg,
            intention_dir: self.intention,
            output_dir: self.output,
            provider: self.provider.to_config(self.seed),
            routing: RoutingConfig {
                similarity_threshold: self.threshold,
                knn_k: self.knn,
                mutual_knn: !self.no_mutual_knn,
            },
            enhance: EnhanceConfig {
                alpha_start: self.alpha_start,
                delta_alpha: self.alpha_step,
                alpha_floor: self.alpha_floor,
            },
            weights: CostWeights::default(),
            trials: self.trials,
            seed: self.seed,
        }
    }
}

#[derive(Debug, ClapArgs)]
pub struct OptimizeArgs {
    /// Workflow graph file (with terminals attached).
    #[arg(long)]
    pub wfg: PathBuf,
    /// Knowledge graph file supplying historical task costs.
    #[arg(long)]
    pub wkg: PathBuf,
    /// Output file for the extracted path.
    #[arg(long)]
    pub out: PathBuf,
    /// Weight of the compute cost dimension.
    #[arg(long, default_value_t = 1.0)]
    pub w_compute: f64,
    /// Weight of the time cost dimension.
    #[arg(long, default_value_t = 1.0)]
    pub w_time: f64,
    /// Weight of the model cost dimension.
    #[arg(long, default_value_t = 1.0)]
    pub w_model: f64,
    /// Compute cost assumed for tasks without recorded history.
    #[arg(long, default_value_t = 1.0)]
    pub default_compute: f64,
    /// Time cost assumed for tasks without recorded history.
    #[arg(long, default_value_t = 1.0)]
    pub default_time: f64,
    /// Model cost assumed for tasks without recorded history.
    #[arg(long, default_value_t = 1.0)]
    pub default_model: f64,
}

impl OptimizeArgs {
    pub fn weights(&self) -> CostWeights {
        CostWeights {
            w_compute: self.w_compute,
            w_time: self.w_time,
            w_model: self.w_model,
        }
    }

    pub fn default_costs(&self) -> DefaultCosts {
        DefaultCosts {
            compute: self.default_compute,
            time: self.default_time,
            model: self.default_model,
        }
    }
}

#[derive(Debug, ClapArgs)]
pub struct EvaluateArgs {
    /// Generated workflow files; each is one trial, a single file is
    /// scored --trials times.
    #[arg(required = true)]
    pub generated: Vec<PathBuf>,
    /// Reference workflow file.
    #[arg(long)]
    pub reference: PathBuf,
    /// Output file for the evaluation report.
    #[arg(long)]
    pub out: PathBuf,
    /// Trials to run when a single generated file is given.
    #[arg(long, default_value_t = 10)]
    pub trials: u32,
    /// Task matching strategy.
    #[arg(long, value_enum, default_value_t = MatchingArg::Greedy)]
    pub matching: MatchingArg,
    /// Minimum judge score for a generated/reference task pair to match.
    #[arg(long, default_value_t = DEFAULT_MATCH_THRESHOLD)]
    pub match_threshold: f64,
    /// Seed for the deterministic offline providers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub provider: ProviderArgs,
}

/// Matching strategy flag, mapped onto the library's strategy enum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MatchingArg {
    Greedy,
    Optimal,
}

impl From<MatchingArg> for MatchStrategy {
    fn from(value: MatchingArg) -> MatchStrategy {
        match value {
            MatchingArg::Greedy => MatchStrategy::Greedy,
            MatchingArg::Optimal => MatchStrategy::Optimal,
        }
    }
}

impl EvaluateArgs {
    pub fn settings(&self) -> EvaluateSettings {
        EvaluateSettings {
            provider: self.provider.to_config(self.seed),
            strategy: self.matching.into(),
            match_threshold: self.match_threshold,
            trials: self.trials,
        }
    }
}

#[derive(Debug, ClapArgs)]
pub struct RankArgs {
    /// JSON metrics table: an array of named five-metric rows.
    pub table: PathBuf,
}
