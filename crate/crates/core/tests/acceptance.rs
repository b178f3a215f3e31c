//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use commitgym::datagen::{
    episode_reward, expand_counterfactual, export_jsonl, group_advantage, RewardParams,
};
use commitgym::episode::{run_episode, Observation, Policy, PolicyError};
use commitgym::harness::{evaluate, evaluate_with_oracle, EvalOptions, PolicyKind, PolicySpec};
use commitgym::mdp::{
    Action, Budget, BudgetPreset, BudgetSpec, Commitment, DepthSet, Environment, Instance,
    PuzzleState,
};
use commitgym::oracle::{oracle_depth_sequence, oracle_policy, DistanceOracle};
use commitgym::sliding::{sliding_generate, sliding_goal, sliding_solve, SlidingState};
use commitgym::sokoban::{
    sokoban_deadlock, sokoban_generate, sokoban_generate_with, sokoban_solve, GenConfig,
    SokobanState,
};
use commitgym::theory::{
    dominance_check, f_transform, geometric_grid, phase_scan, solve_ustar, LocalDifficulty, Regime,
    StateModel, DEFAULT_TOLERANCE,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match (outcome, limit) {
        (Ok(d), Some(l)) if elapsed > l => (false, format!("{d}; too slow, limit {l:?}")),
        (Ok(d), _) => (true, d),
        (Err(e), _) => (false, e),
    };
    println!(
        "{} {name} ({:.2?}): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed
    );
    pass
}

fn phase_transition() -> Check {
    let alphas = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
    let grid = geometric_grid(1e8, 1.01);
    let rows = phase_scan(&alphas, 0.01, 100, &grid).map_err(|e| e.to_string())?;
    for r in &rows {
        if r.alpha >= 1.0 {
            ensure(r.argmax_h == 1.0 && r.regime == Regime::Boundary, || {
                format!("alpha {} has argmax {}", r.alpha, r.argmax_h)
            })?;
        } else {
            let h = r.hstar.unwrap();
            ensure(r.regime == Regime::Interior && r.matches_theory(), || {
                format!(
                    "alpha {}: argmax {} vs h* {h}, bracket {:?}",
                    r.alpha, r.argmax_h, r.bracket
                )
            })?;
        }
    }
    let interior: Vec<String> = rows
        .iter()
        .filter(|r| r.alpha < 1.0)
        .map(|r| format!("a={} h={:.4e}", r.alpha, r.argmax_h))
        .collect();
    Ok(format!(
        "{} rows; interior {}",
        rows.len(),
        interior.join(", ")
    ))
}

/// Maximizes `log(1 - u) / u^(1/α)`, the fixed-depth log success in terms of
/// `u = c·h^α` up to a positive constant, by golden-section search.
fn ustar_by_direct_maximization(alpha: f64) -> f64 {
    let objective = |u: f64| (1.0 - u).ln() / u.powf(1.0 / alpha);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-12, 1.0 - 1e-12);
    for _ in 0..300 {
        let x1 = b - phi * (b - a);
        let x2 = a + phi * (b - a);
        if objective(x1) < objective(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    (a + b) / 2.0
}

fn f_root() -> Check {
    let u = solve_ustar(0.5, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
    let independent = ustar_by_direct_maximization(0.5);
    ensure((u - independent).abs() < 1e-3, || {
        format!("u* {u} vs independent {independent}")
    })?;
    ensure((u - 0.7153).abs() < 1e-3, || {
        format!("u* {u} far from 0.7153")
    })?;
    let mut worst: f64 = 0.0;
    for i in 1..100 {
        let alpha = i as f64 / 100.0;
        let u = solve_ustar(alpha, DEFAULT_TOLERANCE).map_err(|e| e.to_string())?;
        let residual = (f_transform(u).unwrap() - alpha).abs();
        ensure(residual <= 1e-10, || {
            format!("alpha {alpha}: residual {residual}")
        })?;
        worst = worst.max(residual);
    }
    Ok(format!(
        "u*(0.5) = {u:.6}, independent {independent:.6}, worst residual {worst:.1e}"
    ))
}

fn dominance() -> Check {
    let h = DepthSet::default();
    let model = StateModel::new(
        vec![
            LocalDifficulty {
                c: 0.001,
                alpha: 0.5,
            },
            LocalDifficulty {
                c: 0.34,
                alpha: 0.5,
            },
        ],
        (0..8).map(|k| k % 2).collect(),
    )
    .map_err(|e| e.to_string())?;
    let r = dominance_check(&model, &h).map_err(|e| e.to_string())?;
    for &(h0, l) in &r.fixed {
        ensure(r.adaptive_log > l, || {
            format!("fixed h={h0} reaches {l} >= adaptive {}", r.adaptive_log)
        })?;
    }
    let same = StateModel::new(
        vec![
            LocalDifficulty {
                c: 0.34,
                alpha: 0.5
            };
            2
        ],
        (0..8).map(|k| k % 2).collect(),
    )
    .map_err(|e| e.to_string())?;
    let d = dominance_check(&same, &h).map_err(|e| e.to_string())?;
    ensure(d.gap == 0.0 && !d.strict, || {
        format!("degenerate gap {}", d.gap)
    })?;
    Ok(format!(
        "adaptive {:.4} vs best fixed h={} {:.4}, gap {:.4}; degenerate gap 0",
        r.adaptive_log, r.best_fixed_h, r.best_fixed_log, r.gap
    ))
}

fn solver_equivalence() -> Check {
    for seed in 0..500u64 {
        let depth = 1 + (seed % 12) as u32;
        let inst = sliding_generate(3, depth, seed).map_err(|e| e.to_string())?;
        let astar = sliding_solve(&inst.start).map_err(|e| e.to_string())?.len() as u32;
        let bfs = common::sliding3_distance(&inst.start).unwrap();
        ensure(astar == bfs, || {
            format!("sliding seed {seed}: A* {astar} vs BFS {bfs}")
        })?;
    }
    let shapes = [(5, 5, 1), (6, 5, 1), (5, 6, 2), (6, 6, 1), (6, 6, 2)];
    let mut lengths = Vec::new();
    for seed in 0..100u64 {
        let (w, h, b) = shapes[(seed % 5) as usize];
        let inst = sokoban_generate(w, h, b, 1000 + seed).map_err(|e| e.to_string())?;
        let ida = sokoban_solve(&inst.start).map_err(|e| e.to_string())?.len() as u32;
        let bfs = common::sokoban_bfs(&inst.start).ok_or("generated level has no BFS solution")?;
        ensure(ida == bfs, || {
            format!("sokoban seed {seed}: IDA* {ida} vs BFS {bfs}")
        })?;
        lengths.push(ida);
    }
    lengths.sort_unstable();
    Ok(format!(
        "500 sliding, 100 sokoban (median length {}) agree",
        lengths[50]
    ))
}

fn deadlock_soundness() -> Check {
    let (mut states, mut flagged, mut unsolvable) = (0u64, 0u64, 0u64);
    for ih in 1..=3usize {
        for iw in 1..=3usize {
            let (w, h) = (iw + 2, ih + 2);
            let interior: Vec<usize> = (1..=ih)
                .flat_map(|y| (1..=iw).map(move |x| y * w + x))
                .collect();
            for mask in 0u32..(1 << interior.len()) {
                let mut walls = vec![true; w * h];
                for (i, &c) in interior.iter().enumerate() {
                    walls[c] = mask & (1 << i) != 0;
                }
                let floor: Vec<usize> = interior.iter().copied().filter(|&c| !walls[c]).collect();
                for &goal in &floor {
                    for &b in &floor {
                        for &player in floor.iter().filter(|&&p| p != b) {
                            let s =
                                SokobanState::new(w, h, walls.clone(), vec![goal], vec![b], player)
                                    .map_err(|e| e.to_string())?;
                            states += 1;
                            let solvable = common::sokoban_bfs(&s).is_some();
                            unsolvable += !solvable as u64;
                            if sokoban_deadlock(&s) {
                                flagged += 1;
                                ensure(!solvable, || {
                                    format!("false positive on\n{}", s.to_ascii())
                                })?;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(format!(
        "{states} states, {flagged} flagged dead, {unsolvable} unsolvable, 0 false positives"
    ))
}

fn generator_contracts() -> Check {
    for i in 0..1000u64 {
        let (n, depth) = if i < 800 {
            (3, 1 + (i % 24) as u32)
        } else {
            (4, 1 + (i % 30) as u32)
        };
        let inst = sliding_generate(n, depth, i).map_err(|e| e.to_string())?;
        ensure(common::sliding_parity_ok(&inst.start), || {
            format!("seed {i}: odd parity")
        })?;
        ensure(!inst.start.is_goal(), || format!("seed {i}: goal emitted"))?;
        let d = if n == 3 {
            common::sliding3_distance(&inst.start).unwrap()
        } else {
            sliding_solve(&inst.start).map_err(|e| e.to_string())?.len() as u32
        };
        ensure(d == depth, || {
            format!("seed {i}: depth {d} != requested {depth}")
        })?;
    }
    let mut max_len = 0;
    for i in 0..200u64 {
        let (w, h) = (5 + (i % 3) as usize, 5 + (i / 3 % 3) as usize);
        let boxes = 1 + (i % 3) as usize;
        let inst = sokoban_generate(w, h, boxes, i).map_err(|e| format!("seed {i}: {e}"))?;
        let len = sokoban_solve(&inst.start)
            .map_err(|e| format!("seed {i}: {e}"))?
            .len() as u32;
        ensure(len == inst.optimal_length && len > 0, || {
            format!("seed {i}: solver {len} vs recorded {}", inst.optimal_length)
        })?;
        ensure(!sokoban_deadlock(&inst.start), || {
            format!("seed {i}: deadlocked start")
        })?;
        max_len = max_len.max(len);
    }
    Ok(format!(
        "1000 sliding, 200 sokoban verified (longest sokoban {max_len})"
    ))
}

fn greedy_count(mut r: u32, hs: &[u32]) -> usize {
    let mut n = 0;
    for &h in hs.iter().rev() {
        n += (r / h) as usize;
        r %= h;
    }
    n
}

fn dp_count(r: u32, hs: &[u32]) -> usize {
    let mut best = vec![usize::MAX; r as usize + 1];
    best[0] = 0;
    for x in 1..=r as usize {
        for &h in hs {
            let h = h as usize;
            if h <= x && best[x - h] != usize::MAX {
                best[x] = best[x].min(best[x - h] + 1);
            }
        }
    }
    best[r as usize]
}

fn mixed_pool() -> Vec<Instance> {
    let mut pool: Vec<Instance> = (0..40u64)
        .map(|i| Instance::Sliding(sliding_generate(3, 4 + (i % 27) as u32, 500 + i).unwrap()))
        .collect();
    pool.extend(
        (0..10u64).map(|i| Instance::Sliding(sliding_generate(4, 20 + i as u32, 600 + i).unwrap())),
    );
    let config = GenConfig {
        min_length: 8,
        ..GenConfig::default()
    };
    pool.extend((0..20u64).map(|i| {
        let (w, h, b) = [(6, 6, 2), (7, 7, 2), (7, 6, 3), (6, 7, 1)][(i % 4) as usize];
        Instance::Sokoban(sokoban_generate_with(w, h, b, 700 + i, &config).unwrap())
    }));
    pool
}

fn oracle_decomposition() -> Check {
    let h = DepthSet::default();
    for r in 1..=200 {
        let (g, dp) = (greedy_count(r, h.depths()), dp_count(r, h.depths()));
        let lib = oracle_depth_sequence(r, &h);
        ensure(
            g == dp && lib.len() == dp && lib.iter().sum::<u32>() == r,
            || format!("r={r}: greedy {g}, dp {dp}, library {lib:?}"),
        )?;
    }
    let pool = mixed_pool();
    let spec = PolicySpec::new(PolicyKind::Oracle, 0);
    let run = evaluate(
        &spec,
        &pool,
        BudgetSpec::Preset(BudgetPreset::Loose),
        &h,
        &EvalOptions {
            workers: 8,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    ensure(run.summary.solve_rate == 1.0, || {
        let missed: Vec<String> = run
            .transcripts
            .iter()
            .zip(&pool)
            .filter(|(t, _)| !t.solved)
            .map(|(_, i)| format!("{} (d={})", i.id(), i.optimal_length()))
            .collect();
        format!("unsolved: {}", missed.join(", "))
    })?;
    for (t, inst) in run.transcripts.iter().zip(&pool) {
        let expected = oracle_depth_sequence(inst.optimal_length(), &h);
        ensure(t.depths_used() == expected, || {
            format!(
                "{}: used {:?}, expected {expected:?}",
                inst.id(),
                t.depths_used()
            )
        })?;
    }
    let oracle = DistanceOracle::new();
    let mut decisions = Vec::new();
    for seed in 0..21u64 {
        let n = if seed % 3 == 0 { 4 } else { 3 };
        let inst =
            Instance::Sliding(sliding_generate(n, 20, 900 + seed).map_err(|e| e.to_string())?);
        let first = oracle_policy(&inst.reset(), &h, &oracle).map_err(|e| e.to_string())?;
        ensure(first.h == 8, || format!("first depth {} at d=20", first.h))?;
        let mut p = commitgym::oracle::OraclePolicy::new(Arc::new(DistanceOracle::new()));
        let t = run_episode(&inst, &mut p, Budget::new(15), &h, &oracle);
        ensure(t.solved, || "depth-20 instance unsolved".into())?;
        decisions.push(t.decisions.len());
    }
    decisions.sort_unstable();
    let median = decisions[decisions.len() / 2];
    ensure(median == 3, || format!("median decisions {median}"))?;
    Ok(format!(
        "r in 1..=200 canonical; {} mixed instances solved; depth-20 median decisions {median}",
        pool.len()
    ))
}

fn fixed_depth_law() -> Check {
    // 3×3 has only a handful of states beyond distance 28
    let mut pool: Vec<Instance> = (4..=28u32)
        .map(|d| Instance::Sliding(sliding_generate(3, d, d as u64).unwrap()))
        .collect();
    pool.extend(
        (24..=32u32).map(|d| Instance::Sliding(sliding_generate(4, d, 40 + d as u64).unwrap())),
    );
    for (i, (lo, hi)) in [(4, 8), (9, 14), (15, 20), (21, 32)]
        .into_iter()
        .enumerate()
    {
        let config = GenConfig {
            min_length: lo,
            max_length: hi,
            scramble_max: 40,
            ..GenConfig::default()
        };
        for j in 0..3u64 {
            let (w, h, b) = [(6, 6, 2), (7, 7, 2), (7, 7, 3)][j as usize];
            let inst = sokoban_generate_with(w, h, b, 100 * i as u64 + j, &config)
                .map_err(|e| e.to_string())?;
            pool.push(Instance::Sokoban(inst));
        }
    }
    let range = pool.iter().map(Instance::optimal_length);
    let (lo, hi) = (range.clone().min().unwrap(), range.max().unwrap());
    ensure(lo >= 4 && hi == 32, || {
        format!("pool depths span {lo}..{hi}")
    })?;
    let depths = DepthSet::default();
    let oracle = Arc::new(DistanceOracle::new());
    let mut checked = 0;
    for preset in [BudgetPreset::Loose, BudgetPreset::Tight] {
        for h in [1u32, 2, 4, 8] {
            let spec = PolicySpec::new(PolicyKind::FixedDepth(h), 0);
            let opts = EvalOptions {
                workers: 8,
                ..Default::default()
            };
            let run = evaluate_with_oracle(
                &spec,
                &pool,
                BudgetSpec::Preset(preset),
                &depths,
                &opts,
                &oracle,
            )
            .map_err(|e| e.to_string())?;
            for (t, inst) in run.transcripts.iter().zip(&pool) {
                let k = preset.limit(inst.task());
                let expected = inst.optimal_length().div_ceil(h) <= k;
                ensure(t.solved == expected, || {
                    format!(
                        "{} d={} h={h} K={k}: solved={}",
                        inst.id(),
                        inst.optimal_length(),
                        t.solved
                    )
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!(
        "{} instances, d in [{lo}, {hi}], {checked} (instance, h, K) cases",
        pool.len()
    ))
}

/// Commits `[a, a⁻¹]` detours on the first `detours` decisions, then follows the oracle.
struct Detour {
    detours: usize,
    oracle: Arc<DistanceOracle>,
}

impl Policy for Detour {
    fn commit(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError> {
        if self.detours > 0 {
            self.detours -= 1;
            // one of the two moves raises the distance, whichever comes first
            let away = Action::ALL
                .into_iter()
                .find(|&a| {
                    let (t, moved) = obs.state.step(a);
                    moved && !t.is_goal()
                })
                .expect("a legal move off the goal");
            return Ok(Commitment::new(vec![away, away.inverse()]));
        }
        oracle_policy(obs.state, obs.depths, &self.oracle)
            .map_err(|e| PolicyError::Solver(e.to_string()))
    }
}

fn diagnostics_calibration() -> Check {
    let h = DepthSet::default();
    let pool: Vec<Instance> = (0..30u64)
        .map(|i| Instance::Sliding(sliding_generate(3, 3 + (i % 25) as u32, 3000 + i).unwrap()))
        .collect();
    let spec = PolicySpec::new(PolicyKind::Oracle, 0);
    let run = evaluate(
        &spec,
        &pool,
        BudgetSpec::Limit(64),
        &h,
        &EvalOptions::default(),
    )
    .map_err(|e| e.to_string())?;
    let d = run.summary.diagnostics.solved;
    ensure(
        d.wasted_per_episode == 0.0
            && d.backward_per_episode == 0.0
            && d.progress_per_action == 1.0,
        || format!("optimal transcripts gave {d:?}"),
    )?;

    let oracle = Arc::new(DistanceOracle::new());
    let mut transcripts = Vec::new();
    let mut injected = 0usize;
    for (i, inst) in pool.iter().enumerate() {
        let detours = i % 4;
        injected += detours;
        let mut p = Detour {
            detours,
            oracle: Arc::clone(&oracle),
        };
        transcripts.push(run_episode(inst, &mut p, Budget::new(64), &h, &oracle));
    }
    let all = commitgym::harness::diagnostics(&transcripts, commitgym::harness::OutcomeFilter::All);
    let backward = (all.backward_per_episode * all.episodes as f64).round() as usize;
    ensure(backward == injected, || {
        format!("backward {backward} vs injected {injected}")
    })?;
    ensure(all.wasted_per_episode == 0.0, || {
        format!("wasted {}", all.wasted_per_episode)
    })?;
    ensure(all.progress_per_action < 1.0, || {
        "detours left progress at 1".into()
    })?;
    Ok(format!(
        "optimal: 0/0/1.0; {injected} injected detours counted as {backward} backward steps"
    ))
}

fn reward_formula() -> Check {
    let depths = DepthSet::default();
    let oracle = Arc::new(DistanceOracle::new());
    let params = RewardParams::default();
    let mut rewards = Vec::with_capacity(1000);
    let policies = [
        "greedy:random:0.3",
        "greedy:random:1",
        "greedy:oracle:0.1",
        "random",
        "fixed:8",
        "greedy:2:0.6",
    ];
    for i in 0..1000u64 {
        let inst = Instance::Sliding(sliding_generate(3, 2 + (i % 20) as u32, i).unwrap());
        let spec = PolicySpec::new(policies[(i % 6) as usize].parse().unwrap(), i);
        let mut p = spec.instantiate(&inst, &oracle, &Default::default());
        let budget = Budget::new(1 + (i % 12) as u32);
        let t = run_episode(&inst, p.as_mut(), budget, &depths, &oracle);

        // independent progress signal from the exhaustive distance table
        let mut prev = common::sliding3_distance(match &inst.reset() {
            PuzzleState::Sliding(s) => s,
            _ => unreachable!(),
        })
        .unwrap() as i64;
        let mut deltas = Vec::new();
        for step in t.steps() {
            let PuzzleState::Sliding(s) = &step.state_after else {
                unreachable!()
            };
            let d = common::sliding3_distance(s).unwrap() as i64;
            deltas.push(prev - d);
            prev = d;
        }
        let mean = if deltas.is_empty() {
            0.0
        } else {
            deltas.iter().sum::<i64>() as f64 / deltas.len() as f64
        };
        let expected = t.solved as u8 as f64 + 0.2 * mean.tanh();
        let r = episode_reward(&t, params);
        ensure((r.total - expected).abs() <= 1e-12, || {
            format!("episode {i}: {} vs {expected}", r.total)
        })?;
        ensure(r.total > -0.2 && r.total <= 1.2, || {
            format!("episode {i}: {} out of bounds", r.total)
        })?;
        rewards.push(r.total);
    }
    let mut worst: f64 = 0.0;
    for group in rewards.chunks(4) {
        let a = group_advantage(group).map_err(|e| e.to_string())?;
        worst = worst.max((a.iter().sum::<f64>() / a.len() as f64).abs());
    }
    ensure(worst <= 1e-12, || format!("advantage mean {worst}"))?;
    let example = group_advantage(&[1.0, 0.0, 0.0, 1.0]).unwrap();
    ensure(example == vec![1.0, -1.0, -1.0, 1.0], || {
        format!("[1,0,0,1] -> {example:?}")
    })?;
    let solved = rewards.iter().filter(|&&r| r >= 1.0 - 0.2).count();
    Ok(format!(
        "1000 transcripts ({solved} solved) match; worst group mean {worst:.1e}"
    ))
}

fn expert_path(n: usize, seed: u64) -> (PuzzleState, Vec<Action>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s: SlidingState = sliding_goal(4).unwrap();
    let mut walk = Vec::new();
    while walk.len() < n {
        let a = *Action::ALL.choose(&mut rng).unwrap();
        let (t, moved) = s.step(a);
        if moved {
            walk.push(a);
            s = t;
        }
    }
    (
        PuzzleState::Sliding(s),
        walk.iter().rev().map(|a| a.inverse()).collect(),
    )
}

fn sft_expansion() -> Check {
    let h = DepthSet::default();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut total = 0;
    for n in 1..=64usize {
        let (start, expert) = expert_path(n, n as u64);
        let samples = expand_counterfactual(&format!("path-{n}"), &expert, &start, &h)
            .map_err(|e| e.to_string())?;
        let mut enumerated = 0;
        for t in 0..n {
            for &d in h.depths() {
                if t + d as usize <= n {
                    enumerated += 1;
                }
            }
        }
        ensure(samples.len() == enumerated, || {
            format!("N={n}: {} samples vs {enumerated}", samples.len())
        })?;
        let mut path = vec![start.clone()];
        for a in &expert {
            let next = path.last().unwrap().step(*a).0;
            path.push(next);
        }
        for s in &samples {
            let end = s
                .actions
                .iter()
                .fold(s.state.clone(), |st, a| st.step(*a).0);
            ensure(
                s.state == path[s.t] && end == path[s.t + s.h as usize],
                || format!("N={n}: sample t={} h={} leaves the path", s.t, s.h),
            )?;
        }
        let file = dir.path().join(format!("n{n}.jsonl"));
        let render = n % 16 == 0;
        let first = export_jsonl(&samples, &file, render).map_err(|e| e.to_string())?;
        let bytes = std::fs::read(&file).map_err(|e| e.to_string())?;
        let second = export_jsonl(&samples, &file, render).map_err(|e| e.to_string())?;
        ensure(
            first == second && bytes == std::fs::read(&file).map_err(|e| e.to_string())?,
            || format!("N={n}: re-export differs"),
        )?;
        total += samples.len();
    }
    Ok(format!(
        "N = 1..64, {total} samples, exports byte-identical"
    ))
}

fn determinism() -> Check {
    let pool = mixed_pool();
    let h = DepthSet::default();
    let mut summaries = BTreeMap::new();
    for policy in ["oracle", "random", "fixed:4", "greedy:random:0.25"] {
        let spec = PolicySpec::new(policy.parse().unwrap(), 17);
        let json = |workers| {
            let run = evaluate(
                &spec,
                &pool,
                BudgetSpec::Preset(BudgetPreset::Loose),
                &h,
                &EvalOptions {
                    workers,
                    ..Default::default()
                },
            )
            .map_err(|e| e.to_string())?;
            serde_json::to_string(&run.summary).map_err(|e| e.to_string())
        };
        let (one, eight) = (json(1)?, json(8)?);
        ensure(one == eight, || {
            format!("{policy}: summaries differ between 1 and 8 workers")
        })?;
        summaries.insert(policy, one.len());
    }
    Ok(format!(
        "{} policies identical across 1 and 8 workers",
        summaries.len()
    ))
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run(
            "phase transition at alpha = 1",
            Some(secs(1)),
            phase_transition,
        ),
        run("root of F(u) = alpha", Some(secs(1)), f_root),
        run(
            "adaptive depth strictly dominates fixed",
            Some(secs(1)),
            dominance,
        ),
        run(
            "solvers agree with breadth-first search",
            Some(secs(120)),
            solver_equivalence,
        ),
        run(
            "deadlock detection has no false positives",
            Some(secs(120)),
            deadlock_soundness,
        ),
        run("generator contracts", Some(secs(300)), generator_contracts),
        run("oracle depth decomposition", None, oracle_decomposition),
        run("fixed-depth solvability law", None, fixed_depth_law),
        run("diagnostics calibration", None, diagnostics_calibration),
        run("reward and advantage formula", None, reward_formula),
        run("counterfactual sample expansion", None, sft_expansion),
        run(
            "evaluation is independent of worker count",
            None,
            determinism,
        ),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
