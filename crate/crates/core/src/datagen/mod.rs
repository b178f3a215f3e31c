//! Counterfactual macro-action samples for supervised fine-tuning, plus the
//! reward and advantage scoring used by external trainers.
//!
//! Every state `s_t` on an expert path of length `N` yields one sample per
//! depth `h` with `h <= N - t`, labelled with the next `h` expert actions.

mod render;
mod reward;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{Action, DepthSet, PuzzleState, Task};
use crate::sha256_hex;

pub use render::{render_state, CELL};
pub use reward::{
    episode_reward, group_advantage, reward_from_deltas, RewardParams, RewardResult,
    DEFAULT_LAMBDA, STD_FLOOR,
};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("expert path of {len} actions does not reach the goal")]
    InvalidExpert { len: usize },
    #[error("advantage group needs at least 2 rewards, got {0}")]
    GroupTooSmall(usize),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl PartialEq for DatagenError {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (DatagenError::InvalidExpert { len: a }, DatagenError::InvalidExpert { len: b }) => {
                a == b
            }
            (DatagenError::GroupTooSmall(a), DatagenError::GroupTooSmall(b)) => a == b,
            _ => false,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatagenError + '_ {
    move |source| DatagenError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Field order is part of the dataset format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftSample {
    pub task: Task,
    pub instance_id: String,
    pub t: usize,
    pub h: u32,
    pub actions: Vec<Action>,
    pub state: PuzzleState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

/// One sample per (path state, fitting depth), in path order then depth order.
pub fn expand_counterfactual(
    instance_id: &str,
    expert: &[Action],
    start: &PuzzleState,
    depths: &DepthSet,
) -> Result<Vec<SftSample>, DatagenError> {
    let mut states = Vec::with_capacity(expert.len() + 1);
    states.push(start.clone());
    for &a in expert {
        let next = states.last().expect("non-empty").step(a).0;
        states.push(next);
    }
    if !states.last().expect("non-empty").is_goal() {
        return Err(DatagenError::InvalidExpert { len: expert.len() });
    }
    let n = expert.len();
    let mut samples = Vec::new();
    for (t, state) in states.iter().take(n).enumerate() {
        for &h in depths.depths().iter().filter(|&&h| h as usize <= n - t) {
            samples.push(SftSample {
                task: state.task(),
                instance_id: instance_id.to_string(),
                t,
                h,
                actions: expert[t..t + h as usize].to_vec(),
                state: state.clone(),
                image: None,
            });
        }
    }
    Ok(samples)
}

/// Number of samples [`expand_counterfactual`] yields for a path of length `n`.
pub fn expected_sample_count(n: usize, depths: &DepthSet) -> usize {
    (0..n)
        .map(|t| {
            depths
                .depths()
                .iter()
                .filter(|&&h| h as usize <= n - t)
                .count()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportedFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportReport {
    pub count: usize,
    pub dataset: ExportedFile,
    pub images: Vec<ExportedFile>,
}

fn image_name(sample: &SftSample) -> String {
    let id: String = sample
        .instance_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("images/{id}-t{}.ppm", sample.t)
}

/// Writes one JSON object per line. With `render`, also writes one PPM per
/// distinct (instance, t) under `images/` next to the dataset and records
/// its relative path in each sample.
pub fn export_jsonl(
    samples: &[SftSample],
    path: &Path,
    render: bool,
) -> Result<ExportReport, DatagenError> {
    let root = path.parent().unwrap_or(Path::new("."));
    let mut images = Vec::new();
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    for sample in samples {
        let mut sample = sample.clone();
        if render {
            let rel = image_name(&sample);
            if images.last().is_none_or(|f: &ExportedFile| f.path != rel) {
                let bytes = render_state(&sample.state);
                let full = root.join(&rel);
                if let Some(dir) = full.parent() {
                    fs::create_dir_all(dir).map_err(io_err(dir))?;
                }
                fs::write(&full, &bytes).map_err(io_err(&full))?;
                images.push(ExportedFile {
                    path: rel.clone(),
                    sha256: sha256_hex(&bytes),
                });
            }
            sample.image = Some(rel);
        }
        let line = serde_json::to_string(&sample).expect("samples serialize");
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    drop(out);
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(ExportReport {
        count: samples.len(),
        dataset: ExportedFile {
            path: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(&bytes),
        },
        images,
    })
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SftSample>, DatagenError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| DatagenError::Io {
                path: path.to_path_buf(),
                source: io::Error::new(io::ErrorKind::InvalidData, e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::solve;
    use crate::sliding::sliding_goal;
    use Action::*;

    fn path_instance(walk: &[Action]) -> (PuzzleState, Vec<Action>) {
        let start = walk
            .iter()
            .fold(PuzzleState::Sliding(sliding_goal(3).unwrap()), |s, &a| {
                s.step(a).0
            });
        let expert = solve(&start).unwrap();
        (start, expert)
    }

    #[test]
    fn nine_step_path_gives_25_samples() {
        let (start, expert) = path_instance(&[Up, Up, Left, Down, Left, Up, Right, Down, Down]);
        assert_eq!(expert.len(), 9);
        let samples = expand_counterfactual("x", &expert, &start, &DepthSet::default()).unwrap();
        assert_eq!(samples.len(), 25);
        assert_eq!(expected_sample_count(9, &DepthSet::default()), 25);
    }

    #[test]
    fn short_paths() {
        let (start, expert) = path_instance(&[Up]);
        let samples = expand_counterfactual("x", &expert, &start, &DepthSet::default()).unwrap();
        assert_eq!(samples.len(), 1);
        assert_eq!((samples[0].t, samples[0].h), (0, 1));

        let (start, expert) = path_instance(&[Up, Up, Left, Down, Left, Up, Right, Down]);
        assert_eq!(expert.len(), 8);
        let samples = expand_counterfactual("x", &expert, &start, &DepthSet::default()).unwrap();
        let eights: Vec<_> = samples.iter().filter(|s| s.h == 8).collect();
        assert_eq!(eights.len(), 1);
        assert_eq!(eights[0].t, 0);
    }

    #[test]
    fn invalid_expert() {
        let (start, mut expert) = path_instance(&[Up, Left]);
        expert.pop();
        assert_eq!(
            expand_counterfactual("x", &expert, &start, &DepthSet::default()),
            Err(DatagenError::InvalidExpert { len: 1 })
        );
    }

    #[test]
    fn export_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let (start, expert) = path_instance(&[Up, Up, Left, Down, Left, Up, Right, Down, Down]);
        let samples =
            expand_counterfactual("sliding-n3-d9-s0", &expert, &start, &DepthSet::default())
                .unwrap();
        let a = dir.path().join("a.jsonl");
        let report = export_jsonl(&samples, &a, true).unwrap();
        assert_eq!(report.count, 25);
        assert_eq!(report.images.len(), 9);
        let first = fs::read(&a).unwrap();
        export_jsonl(&samples, &a, true).unwrap();
        assert_eq!(first, fs::read(&a).unwrap());
        assert_eq!(String::from_utf8(first).unwrap().lines().count(), 25);
        let back = read_jsonl(&a).unwrap();
        assert_eq!(
            back[4].image.as_deref(),
            Some("images/sliding-n3-d9-s0-t1.ppm")
        );

        let empty = dir.path().join("e.jsonl");
        assert_eq!(export_jsonl(&[], &empty, false).unwrap().count, 0);
        assert!(fs::read(&empty).unwrap().is_empty());
    }

    #[test]
    fn field_order() {
        let (start, expert) = path_instance(&[Up]);
        let samples = expand_counterfactual("x", &expert, &start, &DepthSet::default()).unwrap();
        let line = serde_json::to_string(&samples[0]).unwrap();
        assert!(line.starts_with(
            r#"{"task":"sliding","instance_id":"x","t":0,"h":1,"actions":["D"],"state":{"#
        ));
    }
}
