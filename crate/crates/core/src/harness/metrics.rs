//! Batch metrics, efficiency diagnostics and Pareto comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::episode::EpisodeTranscript;
use crate::mdp::{BudgetSpec, DepthSet};

/// Unsolved episodes keep deciding until the budget runs out, and their
/// actions count toward `mean_actions`.
pub const UNSOLVED_CONVENTION: &str =
    "unsolved episodes run to budget exhaustion; their actions are included in mean_actions";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeFilter {
    All,
    Solved,
    Unsolved,
}

impl OutcomeFilter {
    fn keeps(self, t: &EpisodeTranscript) -> bool {
        match self {
            OutcomeFilter::All => true,
            OutcomeFilter::Solved => t.solved,
            OutcomeFilter::Unsolved => !t.solved,
        }
    }
}

/// Per-episode means of step-level progress counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSummary {
    pub episodes: usize,
    /// Steps with `Δd = 0`.
    pub wasted_per_episode: f64,
    /// Steps with `Δd < 0`.
    pub backward_per_episode: f64,
    /// Mean over episodes of the episode's mean `Δd`; episodes without any
    /// executed step are left out of this average.
    pub progress_per_action: f64,
}

pub fn diagnostics(transcripts: &[EpisodeTranscript], filter: OutcomeFilter) -> DiagnosticsSummary {
    let (mut episodes, mut wasted, mut backward) = (0usize, 0u64, 0u64);
    let (mut progress_sum, mut progress_episodes) = (0.0, 0usize);
    for t in transcripts.iter().filter(|t| filter.keeps(t)) {
        let deltas = t.deltas();
        episodes += 1;
        wasted += deltas.iter().filter(|&&d| d == 0).count() as u64;
        backward += deltas.iter().filter(|&&d| d < 0).count() as u64;
        if !deltas.is_empty() {
            progress_sum += deltas.iter().sum::<i64>() as f64 / deltas.len() as f64;
            progress_episodes += 1;
        }
    }
    let mean = |x: f64, n: usize| if n == 0 { 0.0 } else { x / n as f64 };
    DiagnosticsSummary {
        episodes,
        wasted_per_episode: mean(wasted as f64, episodes),
        backward_per_episode: mean(backward as f64, episodes),
        progress_per_action: mean(progress_sum, progress_episodes),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSplit {
    pub all: DiagnosticsSummary,
    pub solved: DiagnosticsSummary,
    pub unsolved: DiagnosticsSummary,
}

impl DiagnosticsSplit {
    pub fn of(transcripts: &[EpisodeTranscript]) -> Self {
        DiagnosticsSplit {
            all: diagnostics(transcripts, OutcomeFilter::All),
            solved: diagnostics(transcripts, OutcomeFilter::Solved),
            unsolved: diagnostics(transcripts, OutcomeFilter::Unsolved),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub policy: String,
    pub seed: u64,
    pub budget: BudgetSpec,
    pub depths: DepthSet,
    /// Digest of the instance pool; summaries are comparable only when equal.
    pub pool_fingerprint: String,
    pub episodes: usize,
    pub solved: usize,
    pub solve_rate: f64,
    /// Primitive actions per episode.
    pub mean_actions: f64,
    /// Executed decisions per episode.
    pub mean_decisions: f64,
    /// Episodes cut short by a policy or protocol failure.
    pub failed_episodes: usize,
    pub per_h_histogram: BTreeMap<u32, u64>,
    pub diagnostics: DiagnosticsSplit,
    pub unsolved_convention: String,
}

impl MetricsSummary {
    pub fn aggregate(
        policy: String,
        seed: u64,
        budget: BudgetSpec,
        depths: DepthSet,
        pool_fingerprint: String,
        transcripts: &[EpisodeTranscript],
    ) -> Self {
        let episodes = transcripts.len();
        let solved = transcripts.iter().filter(|t| t.solved).count();
        let actions: u64 = transcripts.iter().map(|t| t.actions()).sum();
        let decisions: usize = transcripts.iter().map(|t| t.decisions.len()).sum();
        let mut per_h_histogram: BTreeMap<u32, u64> =
            depths.depths().iter().map(|&h| (h, 0)).collect();
        for h in transcripts.iter().flat_map(|t| t.depths_used()) {
            *per_h_histogram.entry(h).or_insert(0) += 1;
        }
        let per = |x: f64| {
            if episodes == 0 {
                0.0
            } else {
                x / episodes as f64
            }
        };
        MetricsSummary {
            policy,
            seed,
            budget,
            depths,
            pool_fingerprint,
            episodes,
            solved,
            solve_rate: per(solved as f64),
            mean_actions: per(actions as f64),
            mean_decisions: per(decisions as f64),
            failed_episodes: transcripts.iter().filter(|t| t.failure.is_some()).count(),
            per_h_histogram,
            diagnostics: DiagnosticsSplit::of(transcripts),
            unsolved_convention: UNSOLVED_CONVENTION.into(),
        }
    }

    pub fn csv_header() -> &'static str {
        "policy,seed,budget,episodes,solved,solve_rate,mean_actions,mean_decisions,failed_episodes,\
wasted_per_episode,backward_per_episode,progress_per_action"
    }

    pub fn csv_row(&self) -> String {
        let d = &self.diagnostics.all;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.policy.replace(',', ";"),
            self.seed,
            self.budget,
            self.episodes,
            self.solved,
            self.solve_rate,
            self.mean_actions,
            self.mean_decisions,
            self.failed_episodes,
            d.wasted_per_episode,
            d.backward_per_episode,
            d.progress_per_action
        )
    }
}

/// `a` is at least as good on both axes and strictly better on one: higher
/// solve rate, fewer actions.
pub fn dominates_point(a: (f64, f64), b: (f64, f64)) -> bool {
    let (a_rate, a_actions) = a;
    let (b_rate, b_actions) = b;
    a_rate >= b_rate && a_actions <= b_actions && (a_rate > b_rate || a_actions < b_actions)
}

pub fn pareto_dominates(a: &MetricsSummary, b: &MetricsSummary) -> Result<bool, HarnessError> {
    if a.pool_fingerprint != b.pool_fingerprint {
        return Err(HarnessError::IncomparablePools);
    }
    Ok(dominates_point(
        (a.solve_rate, a.mean_actions),
        (b.solve_rate, b.mean_actions),
    ))
}
