//! Subcommand arguments and their implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;

use commitgym::datagen::{expand_counterfactual, export_jsonl, render_state};
use commitgym::harness::{
    evaluate_with_oracle, DiagnosticsSplit, DiagnosticsSummary, EvalOptions, ExternalConfig,
    MetricsSummary, PolicyKind, PolicySpec,
};
use commitgym::mdp::actions_to_string;
use commitgym::oracle::{oracle_distribution, DepthHistogram};
use commitgym::sliding::sliding_generate;
use commitgym::sokoban::{sokoban_generate_with, GenConfig};
use commitgym::theory::{
    dominance_check, dominance_to_csv, geometric_grid, phase_rows_to_csv, phase_scan,
    LocalDifficulty, StateModel,
};
use commitgym::{
    BudgetPreset, BudgetSpec, DepthSet, Distance, DistanceOracle, EpisodeTranscript, Instance,
    PuzzleState, Task,
};

use crate::config::{json_lines, pretty, resolve, usage, CliResult, Common, Format, Run};

/// Stdout mirrors files already written, so a closed pipe is not an error.
fn print_line(value: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout().lock(), "{value}");
}

fn parse_instances(text: &str, source: &Path) -> CliResult<Vec<Instance>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: invalid instance", source.display(), i + 1))
        })
        .collect::<Result<_, _>>()
        .map_err(Into::into)
}

fn load_instances(run: &mut Run, path: Option<&PathBuf>) -> CliResult<Vec<Instance>> {
    let path = path.ok_or_else(|| usage("--instances is required"))?;
    let text = run.read_input(path)?;
    parse_instances(&text, path)
}

fn depth_set(depths: &Option<DepthSet>) -> DepthSet {
    depths.clone().unwrap_or_default()
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GenArgs {
    #[arg(long)]
    pub task: Option<Task>,
    /// Number of instances; instance i uses seed + i
    #[arg(long)]
    pub count: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sliding puzzle side length [default: 3]
    #[arg(long)]
    pub n: Option<usize>,
    /// Exact optimal solution length of every sliding instance
    #[arg(long)]
    pub depth: Option<u32>,
    /// Sliding depth range, cycled across instances
    #[arg(long)]
    pub depth_min: Option<u32>,
    #[arg(long)]
    pub depth_max: Option<u32>,
    /// Sokoban grid width including walls [default: 6]
    #[arg(long)]
    pub width: Option<usize>,
    /// Sokoban grid height including walls [default: 6]
    #[arg(long)]
    pub height: Option<usize>,
    /// Sokoban box count [default: 2]
    #[arg(long)]
    pub boxes: Option<usize>,
    /// Accepted range of Sokoban optimal solution lengths
    #[arg(long)]
    pub min_length: Option<u32>,
    #[arg(long)]
    pub max_length: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn gen(flags: GenArgs) -> CliResult<()> {
    let (args, config) = resolve("gen", &flags, flags.common.config.as_deref())?;
    let task = args.task.ok_or_else(|| usage("--task is required"))?;
    let count = args.count.unwrap_or(1);
    let seed = args.seed.unwrap_or(0);
    let mut instances = Vec::with_capacity(count as usize);
    match task {
        Task::Sliding => {
            let n = args.n.unwrap_or(3);
            let (lo, hi) = match (args.depth, args.depth_min, args.depth_max) {
                (Some(d), None, None) => (d, d),
                (None, Some(lo), Some(hi)) if lo <= hi => (lo, hi),
                (None, Some(_), Some(_)) => {
                    return Err(usage("--depth-min must not exceed --depth-max"))
                }
                _ => {
                    return Err(usage(
                        "sliding needs --depth or both --depth-min and --depth-max",
                    ))
                }
            };
            if lo == 0 {
                return Err(usage("depth must be positive"));
            }
            let span = u64::from(hi - lo) + 1;
            for i in 0..count {
                let depth = lo + (i % span) as u32;
                let inst = sliding_generate(n, depth, seed.wrapping_add(i))
                    .with_context(|| format!("instance {i} (depth {depth})"))?;
                instances.push(Instance::Sliding(inst));
            }
        }
        Task::Sokoban => {
            let (w, h, b) = (
                args.width.unwrap_or(6),
                args.height.unwrap_or(6),
                args.boxes.unwrap_or(2),
            );
            let cfg = GenConfig {
                min_length: args.min_length.unwrap_or(1),
                max_length: args.max_length.unwrap_or(u32::MAX),
                ..GenConfig::default()
            };
            if cfg.min_length > cfg.max_length {
                return Err(usage("--min-length must not exceed --max-length"));
            }
            for i in 0..count {
                let inst = sokoban_generate_with(w, h, b, seed.wrapping_add(i), &cfg)
                    .with_context(|| format!("instance {i}"))?;
                instances.push(Instance::Sokoban(inst));
            }
        }
    }
    let mut run = Run::new("gen", config, args.common.out_dir())?;
    let path = run.write("instances.jsonl", json_lines(&instances).as_bytes())?;
    run.finish()?;
    print_line(json!({"instances": instances.len(), "path": path}));
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveArgs {
    /// Instance JSONL file
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// A single state as JSON, instead of an instance file
    #[arg(long)]
    pub state: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Serialize)]
struct Solution {
    instance_id: String,
    d: Distance,
    actions: Option<String>,
}

pub fn solve(flags: SolveArgs) -> CliResult<()> {
    let (args, config) = resolve("solve", &flags, flags.common.config.as_deref())?;
    let mut run = Run::new("solve", config, args.common.out_dir())?;
    let states: Vec<(String, PuzzleState)> = match (&args.instances, &args.state) {
        (Some(_), Some(_)) => return Err(usage("give either --instances or --state")),
        (None, Some(s)) => {
            let state: PuzzleState =
                serde_json::from_str(s).map_err(|e| usage(format!("invalid --state: {e}")))?;
            vec![("state".into(), state)]
        }
        (path, None) => load_instances(&mut run, path.as_ref())?
            .into_iter()
            .map(|i| (i.id(), i.start()))
            .collect(),
    };
    let oracle = DistanceOracle::new();
    let mut solutions = Vec::with_capacity(states.len());
    for (id, state) in states {
        let path = oracle
            .solution(&state)
            .with_context(|| format!("solving {id}"))?;
        let sol = Solution {
            instance_id: id,
            d: path
                .as_ref()
                .map_or(Distance::Infinite, |p| Distance::Finite(p.len() as u32)),
            actions: path.map(|p| actions_to_string(&p)),
        };
        print_line(serde_json::to_string(&sol).expect("solutions serialize"));
        solutions.push(sol);
    }
    match args.common.format() {
        Format::Json => run.write("solutions.jsonl", json_lines(&solutions).as_bytes())?,
        Format::Csv => {
            let mut csv = String::from("instance_id,d,actions\n");
            for s in &solutions {
                let d = s.d.finite().map_or("inf".to_string(), |d| d.to_string());
                csv.push_str(&format!(
                    "{},{},{}\n",
                    s.instance_id,
                    d,
                    s.actions.as_deref().unwrap_or("")
                ));
            }
            run.write("solutions.csv", csv.as_bytes())?
        }
    };
    run.finish()
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// fixed:H, random, oracle, greedy:SRC:NOISE or external:CMD ARGS
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// tight, loose or a decision count [default: loose]
    #[arg(long)]
    pub budget: Option<BudgetSpec>,
    /// Comma-separated depth set [default: 1,2,4,8]
    #[arg(long)]
    pub depths: Option<DepthSet>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seconds an external policy may take per reply [default: 60]
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Attach a rendered image to every external observation
    #[arg(long)]
    pub render_observations: bool,
    /// Also write every episode transcript
    #[arg(long)]
    pub transcripts: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn eval(flags: EvalArgs) -> CliResult<()> {
    let (args, config) = resolve("eval", &flags, flags.common.config.as_deref())?;
    let policy = args
        .policy
        .as_deref()
        .ok_or_else(|| usage("--policy is required"))?;
    let kind: PolicyKind = policy.parse().map_err(usage)?;
    let spec = PolicySpec::new(kind, args.seed.unwrap_or(0));
    let timeout = args.timeout.unwrap_or(60.0);
    if !(timeout.is_finite() && timeout > 0.0) {
        return Err(usage("--timeout must be a positive number of seconds"));
    }
    let workers = args.workers.unwrap_or(1);
    if workers == 0 {
        return Err(usage("--workers must be positive"));
    }
    let options = EvalOptions {
        workers,
        external: ExternalConfig {
            timeout: Duration::from_secs_f64(timeout),
            render: args.render_observations,
        },
    };
    let mut run = Run::new("eval", config, args.common.out_dir())?;
    let instances = load_instances(&mut run, args.instances.as_ref())?;
    let budget = args
        .budget
        .unwrap_or(BudgetSpec::Preset(BudgetPreset::Loose));
    let oracle = Arc::new(DistanceOracle::new());
    let result = evaluate_with_oracle(
        &spec,
        &instances,
        budget,
        &depth_set(&args.depths),
        &options,
        &oracle,
    )?;
    let summary = &result.summary;
    match args.common.format() {
        Format::Json => run.write("summary.json", pretty(summary).as_bytes())?,
        Format::Csv => {
            let csv = format!("{}\n{}\n", MetricsSummary::csv_header(), summary.csv_row());
            run.write("summary.csv", csv.as_bytes())?
        }
    };
    if args.transcripts {
        run.write(
            "transcripts.jsonl",
            json_lines(&result.transcripts).as_bytes(),
        )?;
    }
    run.finish()?;
    print_line(serde_json::to_string(summary).expect("summary serializes"));
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// tight, loose or a decision count [default: loose]
    #[arg(long)]
    pub budget: Option<BudgetSpec>,
    /// Comma-separated depth set [default: 1,2,4,8]
    #[arg(long)]
    pub depths: Option<DepthSet>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn histogram_csv(hist: &DepthHistogram) -> String {
    let mut csv = String::from("h,count,freq\n");
    for ((h, c), f) in hist.h.iter().zip(&hist.counts).zip(&hist.freq) {
        csv.push_str(&format!("{h},{c},{f}\n"));
    }
    csv
}

pub fn oracle(flags: OracleArgs) -> CliResult<()> {
    let (args, config) = resolve("oracle", &flags, flags.common.config.as_deref())?;
    let mut run = Run::new("oracle", config, args.common.out_dir())?;
    let instances = load_instances(&mut run, args.instances.as_ref())?;
    let budget = args
        .budget
        .unwrap_or(BudgetSpec::Preset(BudgetPreset::Loose));
    let hist = oracle_distribution(
        &instances,
        budget,
        &depth_set(&args.depths),
        &Arc::new(DistanceOracle::new()),
    );
    match args.common.format() {
        Format::Json => run.write("histogram.json", pretty(&hist).as_bytes())?,
        Format::Csv => run.write("histogram.csv", histogram_csv(&hist).as_bytes())?,
    };
    run.finish()?;
    print_line(serde_json::to_string(&hist).expect("histogram serializes"));
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SftArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Comma-separated depth set [default: 1,2,4,8]
    #[arg(long)]
    pub depths: Option<DepthSet>,
    /// Write one PPM per expert state and reference it from each sample
    #[arg(long)]
    pub render: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn sft_export(flags: SftArgs) -> CliResult<()> {
    let (args, config) = resolve("sft-export", &flags, flags.common.config.as_deref())?;
    let mut run = Run::new("sft-export", config, args.common.out_dir())?;
    let instances = load_instances(&mut run, args.instances.as_ref())?;
    let depths = depth_set(&args.depths);
    let oracle = DistanceOracle::new();
    let mut samples = Vec::new();
    for inst in &instances {
        let start = inst.start();
        let expert = oracle
            .solution(&start)
            .with_context(|| format!("solving {}", inst.id()))?
            .ok_or_else(|| anyhow!("{} has no solution", inst.id()))?;
        samples.extend(expand_counterfactual(&inst.id(), &expert, &start, &depths)?);
    }
    let report = export_jsonl(&samples, &run.path("dataset.jsonl"), args.render)?;
    run.record_digest(&report.dataset.path, &report.dataset.sha256);
    for image in &report.images {
        run.record_digest(&image.path, &image.sha256);
    }
    run.finish()?;
    print_line(json!({"samples": report.count, "images": report.images.len()}));
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryArgs {
    /// Scan the fixed-depth optimum over a range of exponents
    #[arg(long)]
    pub phase_scan: bool,
    /// Compare state-conditioned depths with every constant depth
    #[arg(long)]
    pub dominance: bool,
    /// Exponent grid START:END:STEP, inclusive [default: 0.25:1.5:0.25]
    #[arg(long)]
    pub alpha: Option<String>,
    /// Error scale of the power law [default: 0.01]
    #[arg(long)]
    pub c: Option<f64>,
    /// Primitive horizon [default: 100]
    #[arg(long)]
    pub horizon: Option<u32>,
    /// Largest scanned depth [default: 1e8]
    #[arg(long)]
    pub h_max: Option<f64>,
    /// Ratio between consecutive scanned depths [default: 1.01]
    #[arg(long)]
    pub ratio: Option<f64>,
    /// State difficulties C:ALPHA,... [default: 0.001:0.5,0.34:0.5]
    #[arg(long)]
    pub states: Option<String>,
    /// Visited state indices, comma-separated [default: alternate over 8 decisions]
    #[arg(long)]
    pub visits: Option<String>,
    /// Comma-separated depth set [default: 1,2,4,8]
    #[arg(long)]
    pub depths: Option<DepthSet>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn parse_range(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad range {s:?}; expected START:END:STEP")))?;
    let [start, end, step] = parts[..] else {
        return Err(usage(format!("bad range {s:?}; expected START:END:STEP")));
    };
    if step.is_nan() || step <= 0.0 || end < start {
        return Err(usage(format!("bad range {s:?}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

fn parse_states(s: &str) -> CliResult<Vec<LocalDifficulty>> {
    s.split(',')
        .map(|item| {
            let (c, alpha) = item
                .split_once(':')
                .ok_or_else(|| usage(format!("bad state {item:?}; expected C:ALPHA")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("bad number {v:?}")))
            };
            Ok(LocalDifficulty {
                c: num(c)?,
                alpha: num(alpha)?,
            })
        })
        .collect()
}

fn parse_visits(s: &str) -> CliResult<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| usage(format!("bad state index {v:?}")))
        })
        .collect()
}

pub fn theory(flags: TheoryArgs) -> CliResult<()> {
    let (args, config) = resolve("theory", &flags, flags.common.config.as_deref())?;
    let (scan, dominance) = match (args.phase_scan, args.dominance) {
        (false, false) => (true, true),
        given => given,
    };
    let format = args.common.format();
    let mut run = Run::new("theory", config, args.common.out_dir())?;
    if scan {
        let alphas = parse_range(args.alpha.as_deref().unwrap_or("0.25:1.5:0.25"))?;
        let (h_max, ratio) = (args.h_max.unwrap_or(1e8), args.ratio.unwrap_or(1.01));
        if !(h_max >= 1.0 && ratio > 1.0) {
            return Err(usage("need --h-max >= 1 and --ratio > 1"));
        }
        let rows = phase_scan(
            &alphas,
            args.c.unwrap_or(0.01),
            args.horizon.unwrap_or(100),
            &geometric_grid(h_max, ratio),
        )
        .map_err(|e| usage(e.to_string()))?;
        match format {
            Format::Json => run.write("phase_scan.json", pretty(&rows).as_bytes())?,
            Format::Csv => run.write("phase_scan.csv", phase_rows_to_csv(&rows).as_bytes())?,
        };
        for r in &rows {
            print_line(serde_json::to_string(r).expect("rows serialize"));
        }
    }
    if dominance {
        let states = parse_states(args.states.as_deref().unwrap_or("0.001:0.5,0.34:0.5"))?;
        let visits = match &args.visits {
            Some(v) => parse_visits(v)?,
            None => (0..8).map(|k| k % states.len()).collect(),
        };
        let model = StateModel::new(states, visits).map_err(|e| usage(e.to_string()))?;
        let report =
            dominance_check(&model, &depth_set(&args.depths)).map_err(|e| usage(e.to_string()))?;
        match format {
            Format::Json => run.write("dominance.json", pretty(&report).as_bytes())?,
            Format::Csv => run.write("dominance.csv", dominance_to_csv(&report).as_bytes())?,
        };
        print_line(serde_json::to_string(&report).expect("report serializes"));
    }
    run.finish()
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Render only the instance at this position
    #[arg(long)]
    pub index: Option<usize>,
    /// A single state as JSON, instead of an instance file
    #[arg(long)]
    pub state: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

pub fn render(flags: RenderArgs) -> CliResult<()> {
    let (args, config) = resolve("render", &flags, flags.common.config.as_deref())?;
    let mut run = Run::new("render", config, args.common.out_dir())?;
    let states: Vec<(String, PuzzleState)> = match (&args.instances, &args.state) {
        (Some(_), Some(_)) => return Err(usage("give either --instances or --state")),
        (None, Some(s)) => {
            let state: PuzzleState =
                serde_json::from_str(s).map_err(|e| usage(format!("invalid --state: {e}")))?;
            vec![("state".into(), state)]
        }
        (path, None) => {
            let all = load_instances(&mut run, path.as_ref())?;
            let picked: Vec<&Instance> = match args.index {
                Some(i) => vec![all.get(i).ok_or_else(|| {
                    usage(format!(
                        "--index {i} out of range for {} instances",
                        all.len()
                    ))
                })?],
                None => all.iter().collect(),
            };
            picked.into_iter().map(|i| (i.id(), i.start())).collect()
        }
    };
    let mut written = Vec::new();
    for (id, state) in &states {
        let name = format!("{id}.ppm");
        written.push(run.write(&name, &render_state(state))?);
    }
    run.finish()?;
    print_line(json!({"images": written}));
    Ok(())
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DiagArgs {
    /// Transcript JSONL written by eval --transcripts
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

fn diagnostics_csv(split: &DiagnosticsSplit) -> String {
    let mut csv = String::from(
        "outcome,episodes,wasted_per_episode,backward_per_episode,progress_per_action\n",
    );
    let row = |name: &str, d: &DiagnosticsSummary| {
        format!(
            "{name},{},{},{},{}\n",
            d.episodes, d.wasted_per_episode, d.backward_per_episode, d.progress_per_action
        )
    };
    csv.push_str(&row("all", &split.all));
    csv.push_str(&row("solved", &split.solved));
    csv.push_str(&row("unsolved", &split.unsolved));
    csv
}

pub fn diag(flags: DiagArgs) -> CliResult<()> {
    let (args, config) = resolve("diag", &flags, flags.common.config.as_deref())?;
    let path = args
        .transcripts
        .clone()
        .ok_or_else(|| usage("--transcripts is required"))?;
    let mut run = Run::new("diag", config, args.common.out_dir())?;
    let text = run.read_input(&path)?;
    let transcripts: Vec<EpisodeTranscript> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: invalid transcript", path.display(), i + 1))
        })
        .collect::<Result<_, _>>()?;
    let split = DiagnosticsSplit::of(&transcripts);
    match args.common.format() {
        Format::Json => run.write("diagnostics.json", pretty(&split).as_bytes())?,
        Format::Csv => run.write("diagnostics.csv", diagnostics_csv(&split).as_bytes())?,
    };
    run.finish()?;
    print_line(serde_json::to_string(&split).expect("diagnostics serialize"));
    Ok(())
}
