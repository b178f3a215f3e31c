//! Commitment-level success model.
//!
//! A commitment of depth `h` fails with probability `q(h) = c·h^α`, so a
//! fixed-depth policy over a primitive horizon `T` succeeds with probability
//! `P(h; T) = p0·(1 - c·h^α)^(T/h)`. With `u = c·h^α`, the first-order
//! condition of `log P` reduces to `F(u) = α` where
//! `F(u) = (1 - u)(-log(1 - u)) / u` is a strictly decreasing bijection of
//! `(0, 1)`; hence an interior optimum exists iff `α < 1`, at
//! `h* = (u*/c)^(1/α)`. Otherwise replanning every step (`h = 1`) is best.
//!
//! When `c` and `α` vary by state, each state has its own best depth within
//! the depth set, and a schedule that follows those local optima beats every
//! constant depth as soon as two visited states disagree.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::DepthSet;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DomainError {
    #[error("{0}")]
    Invalid(String),
    #[error("c·h^α = {0} is outside (0, 1)")]
    ErrorProbability(f64),
    #[error("bisection did not reach tolerance {0}")]
    NoConvergence(f64),
}

fn invalid(msg: impl Into<String>) -> DomainError {
    DomainError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub p0: f64,
    pub c: f64,
    pub alpha: f64,
    pub horizon: u32,
}

impl PowerLawParams {
    pub fn new(p0: f64, c: f64, alpha: f64, horizon: u32) -> Result<Self, DomainError> {
        if !(p0 > 0.0 && p0 <= 1.0) {
            return Err(invalid(format!("p0 = {p0} outside (0, 1]")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid(format!("c = {c} must be positive")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha = {alpha} must be positive")));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        Ok(PowerLawParams {
            p0,
            c,
            alpha,
            horizon,
        })
    }

    /// Commitment failure probability `q(h) = c·h^α`, checked to lie in (0, 1).
    pub fn failure_probability(&self, h: f64) -> Result<f64, DomainError> {
        commitment_error(self.c, self.alpha, h)
    }
}

fn commitment_error(c: f64, alpha: f64, h: f64) -> Result<f64, DomainError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid(format!("depth h = {h} must be positive")));
    }
    let u = c * h.powf(alpha);
    if u > 0.0 && u < 1.0 {
        Ok(u)
    } else {
        Err(DomainError::ErrorProbability(u))
    }
}

/// `log P(h; T)`; the exponent `T/h` need not be an integer.
pub fn log_success_fixed(h: f64, params: &PowerLawParams) -> Result<f64, DomainError> {
    let u = params.failure_probability(h)?;
    Ok(params.p0.ln() + params.horizon as f64 / h * (-u).ln_1p())
}

pub fn success_fixed(h: f64, params: &PowerLawParams) -> Result<f64, DomainError> {
    log_success_fixed(h, params).map(f64::exp)
}

/// Analytic `d/dh log P(h; T) = (T/h²)·[-log(1-u) - α·u/(1-u)]`.
pub fn dlog_success_dh(h: f64, params: &PowerLawParams) -> Result<f64, DomainError> {
    let u = params.failure_probability(h)?;
    Ok(params.horizon as f64 / (h * h) * foc_bracket(u, params.alpha))
}

/// The bracketed first-order term; zero exactly at `u = u*(α)`.
pub fn foc_bracket(u: f64, alpha: f64) -> f64 {
    -(-u).ln_1p() - alpha * u / (1.0 - u)
}

/// `F(u) = (1 - u)(-log(1 - u)) / u` on `(0, 1)`.
pub fn f_transform(u: f64) -> Result<f64, DomainError> {
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid(format!("F(u) needs u in (0, 1), got {u}")));
    }
    Ok((1.0 - u) * -(-u).ln_1p() / u)
}

/// Root of `F(u) = α` by bisection, to `|F(u*) - α| <= tol`.
pub fn solve_ustar(alpha: f64, tol: f64) -> Result<f64, DomainError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!(
            "no interior root: alpha = {alpha} outside (0, 1)"
        )));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f = f_transform(mid)?;
        if (f - alpha).abs() <= tol {
            return Ok(mid);
        }
        // F is decreasing: too large a value means the root lies to the right
        if f > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(DomainError::NoConvergence(tol))
}

/// Continuous optimal fixed depth `(u*(α)/c)^(1/α)` for `α ∈ (0, 1)`.
pub fn hstar_continuous(alpha: f64, c: f64) -> Result<f64, DomainError> {
    if !(c > 0.0) {
        return Err(invalid(format!("c = {c} must be positive")));
    }
    let u = solve_ustar(alpha, DEFAULT_TOLERANCE)?;
    Ok((u / c).powf(1.0 / alpha))
}

/// Per-primitive-action log success of depth `h` at a state,
/// `log(1 - c·h^α) / h`.
pub fn per_step_log_success(c: f64, alpha: f64, h: u32) -> Result<f64, DomainError> {
    let u = commitment_error(c, alpha, h as f64)?;
    Ok((-u).ln_1p() / h as f64)
}

/// Depth in the set maximizing `(1 - c·h^α)^(1/h)`; ties go to the larger depth.
pub fn local_hstar(c: f64, alpha: f64, depths: &DepthSet) -> Result<u32, DomainError> {
    let mut best: Option<(u32, f64)> = None;
    for &h in depths.depths() {
        let v = per_step_log_success(c, alpha, h)?;
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((h, v));
        }
    }
    Ok(best.expect("depth set is non-empty").0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalDifficulty {
    pub c: f64,
    pub alpha: f64,
}

/// States with their own `(c, α)`, visited in a fixed order at decision times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateModel {
    #[serde(default = "one")]
    pub p0: f64,
    pub states: Vec<LocalDifficulty>,
    pub visit_sequence: Vec<usize>,
}

fn one() -> f64 {
    1.0
}

impl StateModel {
    pub fn new(
        states: Vec<LocalDifficulty>,
        visit_sequence: Vec<usize>,
    ) -> Result<Self, DomainError> {
        let model = StateModel {
            p0: 1.0,
            states,
            visit_sequence,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), DomainError> {
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(invalid(format!("p0 = {} outside (0, 1]", self.p0)));
        }
        for (i, s) in self.states.iter().enumerate() {
            if !(s.c > 0.0) || !(s.alpha > 0.0 && s.alpha < 1.0) {
                return Err(invalid(format!(
                    "state {i}: need c > 0 and alpha in (0, 1)"
                )));
            }
        }
        if let Some(&bad) = self
            .visit_sequence
            .iter()
            .find(|&&i| i >= self.states.len())
        {
            return Err(invalid(format!("visit to unknown state {bad}")));
        }
        Ok(())
    }

    fn visited(&self) -> impl Iterator<Item = &LocalDifficulty> {
        self.visit_sequence.iter().map(move |&i| &self.states[i])
    }
}

/// `p0·Π_k (1 - c(s_k)·h_k^α(s_k))` over the visit sequence.
pub fn success_adaptive(model: &StateModel, depths: &[f64]) -> Result<f64, DomainError> {
    model.validate()?;
    if depths.len() != model.visit_sequence.len() {
        return Err(invalid(format!(
            "{} depths for {} decisions",
            depths.len(),
            model.visit_sequence.len()
        )));
    }
    let mut log_p = model.p0.ln();
    for (s, &h) in model.visited().zip(depths) {
        log_p += (-commitment_error(s.c, s.alpha, h)?).ln_1p();
    }
    Ok(log_p.exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Local optimum chosen at each visited decision.
    pub adaptive_depths: Vec<u32>,
    pub adaptive_log: f64,
    pub best_fixed_h: u32,
    pub best_fixed_log: f64,
    /// Objective of every constant depth in the set, in set order.
    pub fixed: Vec<(u32, f64)>,
    pub gap: f64,
    pub strict: bool,
}

/// Compares the state-conditioned schedule against every constant depth.
///
/// Each visited decision contributes its per-primitive-action log success
/// `log(1 - c·h^α)/h`, i.e. the log success of covering one unit of primitive
/// horizon at that state. Under this objective the local optimum is the
/// per-state maximizer, so the gap is zero when all visited states share a
/// local optimum and positive otherwise.
pub fn dominance_check(
    model: &StateModel,
    depths: &DepthSet,
) -> Result<DominanceReport, DomainError> {
    model.validate()?;
    let log_p0 = model.p0.ln();
    let mut adaptive_depths = Vec::with_capacity(model.visit_sequence.len());
    let mut adaptive_log = log_p0;
    for s in model.visited() {
        let h = local_hstar(s.c, s.alpha, depths)?;
        adaptive_log += per_step_log_success(s.c, s.alpha, h)?;
        adaptive_depths.push(h);
    }
    let mut fixed = Vec::with_capacity(depths.len());
    for &h in depths.depths() {
        let mut total = log_p0;
        for s in model.visited() {
            total += per_step_log_success(s.c, s.alpha, h)?;
        }
        fixed.push((h, total));
    }
    let &(best_fixed_h, best_fixed_log) = fixed
        .iter()
        .fold(None, |best: Option<&(u32, f64)>, cand| match best {
            Some(b) if b.1 > cand.1 => Some(b),
            _ => Some(cand),
        })
        .expect("depth set is non-empty");
    let gap = adaptive_log - best_fixed_log;
    Ok(DominanceReport {
        adaptive_depths,
        adaptive_log,
        best_fixed_h,
        best_fixed_log,
        fixed,
        gap,
        strict: gap > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Optimum at the smallest grid depth.
    Boundary,
    /// Optimum strictly inside the feasible grid.
    Interior,
    /// Optimum at the largest feasible grid depth; the grid is too short.
    Edge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub alpha: f64,
    pub argmax_h: f64,
    pub log_success: f64,
    pub regime: Regime,
    /// Continuous optimum, only for `α < 1`.
    pub hstar: Option<f64>,
    /// Grid neighbours of the argmax, `(below, above)`.
    pub bracket: (f64, f64),
    /// Number of grid depths with `c·h^α < 1`.
    pub feasible_points: usize,
}

impl PhaseRow {
    /// True when this row agrees with the phase transition: boundary optimum
    /// for `α >= 1`; for `α < 1`, when `h*` lies inside the scanned range, an
    /// interior argmax within one grid step of `h*`.
    pub fn matches_theory(&self) -> bool {
        match self.hstar {
            None => self.regime == Regime::Boundary,
            Some(h) => {
                let (lo, hi) = self.bracket;
                self.regime == Regime::Interior && lo <= h && h <= hi
            }
        }
    }
}

/// For each `α`, the grid depth maximizing `P(h; T)` over the feasible part
/// of `h_grid` (points with `c·h^α >= 1` are skipped).
pub fn phase_scan(
    alpha_grid: &[f64],
    c: f64,
    horizon: u32,
    h_grid: &[f64],
) -> Result<Vec<PhaseRow>, DomainError> {
    if alpha_grid.is_empty() || h_grid.is_empty() {
        return Err(invalid("phase scan needs non-empty grids"));
    }
    if h_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("depth grid must be strictly increasing"));
    }
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let params = PowerLawParams::new(1.0, c, alpha, horizon)?;
        let feasible: Vec<(f64, f64)> = h_grid
            .iter()
            .filter_map(|&h| log_success_fixed(h, &params).ok().map(|l| (h, l)))
            .collect();
        if feasible.is_empty() {
            return Err(invalid(format!("no feasible depth for alpha = {alpha}")));
        }
        let (best, &(argmax_h, log_success)) = feasible
            .iter()
            .enumerate()
            .fold(
                None,
                |acc: Option<(usize, &(f64, f64))>, (i, p)| match acc {
                    Some((j, b)) if b.1 >= p.1 => Some((j, b)),
                    _ => Some((i, p)),
                },
            )
            .expect("non-empty");
        let regime = if best == 0 {
            Regime::Boundary
        } else if best + 1 == feasible.len() {
            Regime::Edge
        } else {
            Regime::Interior
        };
        let below = feasible[best.saturating_sub(1)].0;
        let above = feasible[(best + 1).min(feasible.len() - 1)].0;
        let hstar = if alpha < 1.0 {
            Some(hstar_continuous(alpha, c)?)
        } else {
            None
        };
        rows.push(PhaseRow {
            alpha,
            argmax_h,
            log_success,
            regime,
            hstar,
            bracket: (below, above),
            feasible_points: feasible.len(),
        });
    }
    Ok(rows)
}

/// Geometric grid `1, r, r², …` up to and including the first point `>= max`.
pub fn geometric_grid(max: f64, ratio: f64) -> Vec<f64> {
    assert!(ratio > 1.0 && max >= 1.0);
    let mut grid = vec![1.0];
    let mut h: f64 = 1.0;
    while h < max {
        h *= ratio;
        grid.push(h);
    }
    grid
}

pub fn phase_rows_to_csv(rows: &[PhaseRow]) -> String {
    let mut out = String::from(
        "alpha,argmax_h,log_success,regime,hstar,bracket_lo,bracket_hi,feasible_points\n",
    );
    for r in rows {
        let regime = match r.regime {
            Regime::Boundary => "boundary",
            Regime::Interior => "interior",
            Regime::Edge => "edge",
        };
        let hstar = r.hstar.map(|h| h.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.alpha,
            r.argmax_h,
            r.log_success,
            regime,
            hstar,
            r.bracket.0,
            r.bracket.1,
            r.feasible_points
        ));
    }
    out
}

pub fn dominance_to_csv(report: &DominanceReport) -> String {
    let mut out = String::from("policy,h,log_success\n");
    out.push_str(&format!("adaptive,,{}\n", report.adaptive_log));
    for (h, l) in &report.fixed {
        out.push_str(&format!("fixed,{h},{l}\n"));
    }
    out
}
