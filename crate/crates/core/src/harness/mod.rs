//! Budget-constrained batch evaluation of depth policies.

mod external;
mod metrics;
mod policy;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::episode::{run_episode, EpisodeTranscript};
use crate::mdp::{Budget, BudgetSpec, DepthSet, Environment, Instance};
use crate::oracle::DistanceOracle;
use crate::sha256_hex;

pub use external::{
    parse_commit, ExternalConfig, ExternalPolicy, HarnessMessage, PolicyMessage, DEFAULT_TIMEOUT,
    PROTOCOL_VERSION,
};
pub use metrics::{
    diagnostics, dominates_point, pareto_dominates, DiagnosticsSplit, DiagnosticsSummary,
    MetricsSummary, OutcomeFilter, UNSOLVED_CONVENTION,
};
pub use policy::{episode_seed, DepthSource, PolicyKind, PolicySpec, SolverPolicy};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HarnessError {
    #[error("instance pool is empty")]
    EmptyPool,
    #[error("decision budget must be positive")]
    ZeroBudget,
    #[error("summaries come from different instance pools")]
    IncomparablePools,
    #[error("invalid depth configuration: {0}")]
    Depths(String),
    #[error("worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub workers: usize,
    pub external: ExternalConfig,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            workers: 1,
            external: ExternalConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub summary: MetricsSummary,
    /// In pool order.
    pub transcripts: Vec<EpisodeTranscript>,
}

/// Digest of the serialized pool, order-sensitive.
pub fn pool_fingerprint(instances: &[Instance]) -> String {
    let mut text = String::new();
    for inst in instances {
        text.push_str(&serde_json::to_string(inst).expect("instances serialize"));
        text.push('\n');
    }
    sha256_hex(text.as_bytes())
}

/// One episode per instance on `options.workers` threads. Results do not
/// depend on the worker count.
pub fn evaluate(
    spec: &PolicySpec,
    instances: &[Instance],
    budget: BudgetSpec,
    depths: &DepthSet,
    options: &EvalOptions,
) -> Result<EvalRun, HarnessError> {
    evaluate_with_oracle(
        spec,
        instances,
        budget,
        depths,
        options,
        &Arc::new(DistanceOracle::new()),
    )
}

pub fn evaluate_with_oracle(
    spec: &PolicySpec,
    instances: &[Instance],
    budget: BudgetSpec,
    depths: &DepthSet,
    options: &EvalOptions,
    oracle: &Arc<DistanceOracle>,
) -> Result<EvalRun, HarnessError> {
    if instances.is_empty() {
        return Err(HarnessError::EmptyPool);
    }
    if budget == BudgetSpec::Limit(0) {
        return Err(HarnessError::ZeroBudget);
    }
    let run_depths = spec
        .run_depths(depths)
        .map_err(|e| HarnessError::Depths(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .map_err(|e| HarnessError::Workers(e.to_string()))?;
    let transcripts: Vec<EpisodeTranscript> = pool.install(|| {
        instances
            .par_iter()
            .map(|inst| {
                let mut policy = spec.instantiate(inst, oracle, &options.external);
                let limit = budget.limit(inst.task());
                run_episode(
                    inst,
                    policy.as_mut(),
                    Budget::new(limit),
                    &run_depths,
                    oracle,
                )
            })
            .collect()
    });
    let summary = MetricsSummary::aggregate(
        spec.kind.to_string(),
        spec.seed,
        budget,
        run_depths,
        pool_fingerprint(instances),
        &transcripts,
    );
    Ok(EvalRun {
        summary,
        transcripts,
    })
}
