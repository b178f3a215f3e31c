//! Reference external policy speaking the wire protocol on stdin/stdout.
//!
//! Depth choices reproduce the built-in baselines bit for bit, so a run
//! through the subprocess boundary can be compared with the in-process one.

use std::io::{self, BufRead, Write};

use anyhow::{anyhow, Context};
use clap::Args;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use commitgym::harness::{HarnessMessage, PolicyMessage, PROTOCOL_VERSION};
use commitgym::oracle::{oracle_depth_sequence, solver_prefix};
use commitgym::{DepthSet, DistanceOracle};

use crate::config::{usage, CliResult};

#[derive(Args, Debug, Clone)]
pub struct RefPolicyArgs {
    /// random, oracle or fixed:H
    #[arg(long, default_value = "random")]
    pub mode: String,
}

enum Mode {
    Random,
    Oracle,
    Fixed(u32),
}

fn parse_mode(s: &str) -> CliResult<Mode> {
    match s.split_once(':') {
        None if s == "random" => Ok(Mode::Random),
        None if s == "oracle" => Ok(Mode::Oracle),
        Some(("fixed", h)) => h
            .parse()
            .map(Mode::Fixed)
            .map_err(|_| usage(format!("bad depth {h:?}"))),
        _ => Err(usage(format!("unknown mode {s:?}"))),
    }
}

fn send(out: &mut impl Write, msg: &PolicyMessage) -> anyhow::Result<()> {
    writeln!(out, "{}", serde_json::to_string(msg)?)?;
    out.flush()?;
    Ok(())
}

pub fn ref_policy(args: RefPolicyArgs) -> CliResult<()> {
    let mode = parse_mode(&args.mode)?;
    let oracle = DistanceOracle::new();
    let mut session: Option<(DepthSet, SplitMix64)> = None;
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line.context("reading from harness")?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: HarnessMessage =
            serde_json::from_str(&line).with_context(|| format!("bad message {line:?}"))?;
        match msg {
            HarnessMessage::Hello {
                version,
                depths,
                seed,
                ..
            } => {
                if version != PROTOCOL_VERSION {
                    return Err(anyhow!("unsupported protocol version {version:?}").into());
                }
                session = Some((depths, SplitMix64::seed_from_u64(seed)));
                send(
                    &mut out,
                    &PolicyMessage::Ready {
                        version: PROTOCOL_VERSION.into(),
                    },
                )?;
            }
            HarnessMessage::Observe { state, .. } => {
                let Some((depths, rng)) = session.as_mut() else {
                    return Err(anyhow!("observe before hello").into());
                };
                let path = oracle
                    .solution(&state)
                    .context("solving observed state")?
                    .context("observed state has no solution")?;
                let h = match mode {
                    Mode::Fixed(h) => h,
                    Mode::Random => {
                        let hs = depths.depths();
                        hs[(rng.next_u64() % hs.len() as u64) as usize]
                    }
                    Mode::Oracle => *oracle_depth_sequence(path.len() as u32, depths)
                        .first()
                        .context("observed state is already solved")?,
                };
                send(
                    &mut out,
                    &PolicyMessage::Commit {
                        h,
                        actions: solver_prefix(&path, h),
                    },
                )?;
            }
            HarnessMessage::End { .. } => break,
        }
    }
    Ok(())
}
