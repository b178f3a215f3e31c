//! External policies over JSON lines on a subprocess's standard streams.
//!
//! One subprocess serves one episode. The harness opens with a `hello`
//! carrying the protocol version and the episode's fixed parameters and
//! waits for `ready`; after that every decision is one `observe` answered by
//! one `commit`, and the episode closes with `end`.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::datagen::render_state;
use crate::episode::{Observation, Policy, PolicyError};
use crate::mdp::{Action, Commitment, DepthSet, PuzzleState, Task};

pub const PROTOCOL_VERSION: &str = "v1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalConfig {
    /// Per-reply deadline.
    pub timeout: Duration,
    /// Attach a base64 PPM of the state to every observation.
    pub render: bool,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            timeout: DEFAULT_TIMEOUT,
            render: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum HarnessMessage {
    Hello {
        version: String,
        task: Task,
        depths: DepthSet,
        budget: u32,
        instance_id: String,
        seed: u64,
    },
    Observe {
        k: u32,
        remaining_budget: u32,
        task: Task,
        state: PuzzleState,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        render: Option<String>,
    },
    End {
        solved: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PolicyMessage {
    Ready { version: String },
    Commit { h: u32, actions: Vec<Action> },
}

/// Parses one reply line and checks a commitment against the depth set.
pub fn parse_commit(line: &str, depths: &DepthSet) -> Result<Commitment, PolicyError> {
    match serde_json::from_str::<PolicyMessage>(line) {
        Ok(PolicyMessage::Commit { h, actions }) => {
            let c = Commitment { h, actions };
            c.validate(depths)
                .map_err(|e| PolicyError::Protocol(e.to_string()))?;
            Ok(c)
        }
        Ok(other) => Err(PolicyError::Protocol(format!(
            "expected commit, got {other:?}"
        ))),
        Err(e) => Err(PolicyError::Protocol(format!(
            "malformed reply {line:?}: {e}"
        ))),
    }
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
}

impl Session {
    fn spawn(command: &str, args: &[String]) -> Result<Session, PolicyError> {
        let mut child = Command::new(command)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Protocol(format!("cannot start {command:?}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(Session {
            child,
            stdin,
            lines,
        })
    }

    fn send(&mut self, msg: &HarnessMessage) -> Result<(), PolicyError> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| PolicyError::Protocol("policy input already closed".into()))?;
        let mut line = serde_json::to_string(msg).expect("messages serialize");
        line.push('\n');
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| PolicyError::Protocol(format!("write to policy failed: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<String, PolicyError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(PolicyError::Protocol(format!(
                "read from policy failed: {e}"
            ))),
            Err(RecvTimeoutError::Timeout) => Err(PolicyError::Protocol(format!(
                "no reply within {:.3} s",
                timeout.as_secs_f64()
            ))),
            Err(RecvTimeoutError::Disconnected) => {
                Err(PolicyError::Protocol("policy closed its output".into()))
            }
        }
    }

    fn close(&mut self, grace: Duration) {
        self.stdin = None;
        let deadline = Instant::now() + grace;
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

/// [`Policy`] backed by a subprocess, started lazily at the first decision.
pub struct ExternalPolicy {
    command: String,
    args: Vec<String>,
    seed: u64,
    config: ExternalConfig,
    session: Option<Session>,
    broken: bool,
}

impl ExternalPolicy {
    pub fn new(command: String, args: Vec<String>, seed: u64, config: ExternalConfig) -> Self {
        ExternalPolicy {
            command,
            args,
            seed,
            config,
            session: None,
            broken: false,
        }
    }

    fn handshake(&mut self, obs: &Observation<'_>) -> Result<(), PolicyError> {
        let mut session = Session::spawn(&self.command, &self.args)?;
        session.send(&HarnessMessage::Hello {
            version: PROTOCOL_VERSION.into(),
            task: obs.task,
            depths: obs.depths.clone(),
            budget: obs.remaining_budget + obs.k,
            instance_id: obs.instance_id.to_string(),
            seed: self.seed,
        })?;
        let line = session.recv(self.config.timeout)?;
        match serde_json::from_str::<PolicyMessage>(&line) {
            Ok(PolicyMessage::Ready { version }) if version == PROTOCOL_VERSION => {}
            Ok(PolicyMessage::Ready { version }) => {
                return Err(PolicyError::Protocol(format!(
                    "unsupported protocol version {version:?}"
                )))
            }
            _ => {
                return Err(PolicyError::Protocol(format!(
                    "expected ready, got {line:?}"
                )))
            }
        }
        self.session = Some(session);
        Ok(())
    }

    fn exchange(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError> {
        if self.session.is_none() {
            self.handshake(obs)?;
        }
        let render = self
            .config
            .render
            .then(|| base64::engine::general_purpose::STANDARD.encode(render_state(obs.state)));
        let timeout = self.config.timeout;
        let session = self.session.as_mut().expect("session started");
        session.send(&HarnessMessage::Observe {
            k: obs.k,
            remaining_budget: obs.remaining_budget,
            task: obs.task,
            state: obs.state.clone(),
            render,
        })?;
        let line = session.recv(timeout)?;
        parse_commit(&line, obs.depths)
    }
}

impl Policy for ExternalPolicy {
    fn commit(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError> {
        if self.broken {
            return Err(PolicyError::Protocol(
                "policy session already failed".into(),
            ));
        }
        let result = self.exchange(obs);
        self.broken = result.is_err();
        result
    }

    fn finish(&mut self, solved: bool) {
        if let Some(mut session) = self.session.take() {
            if !self.broken {
                let _ = session.send(&HarnessMessage::End { solved });
                session.close(Duration::from_secs(2));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sliding::sliding_goal;

    #[test]
    fn commit_validation() {
        let h = DepthSet::default();
        assert_eq!(
            parse_commit(r#"{"type":"commit","h":1,"actions":["U"]}"#, &h).unwrap(),
            Commitment::new(vec![Action::Up])
        );
        for bad in [
            r#"{"type":"commit","h":3,"actions":["U","U","U"]}"#,
            r#"{"type":"commit","h":4,"actions":["U","U","U"]}"#,
            r#"{"type":"commit","h":1,"actions":["X"]}"#,
            r#"{"type":"ready","version":"v1"}"#,
            "not json",
        ] {
            assert!(
                matches!(parse_commit(bad, &h), Err(PolicyError::Protocol(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn message_shapes() {
        let observe = HarnessMessage::Observe {
            k: 2,
            remaining_budget: 13,
            task: Task::Sliding,
            state: PuzzleState::Sliding(sliding_goal(2).unwrap()),
            render: None,
        };
        assert_eq!(
            serde_json::to_string(&observe).unwrap(),
            r#"{"type":"observe","k":2,"remaining_budget":13,"task":"sliding","state":{"task":"sliding","n":2,"tiles":[1,2,3,0]}}"#
        );
        let hello = HarnessMessage::Hello {
            version: PROTOCOL_VERSION.into(),
            task: Task::Sokoban,
            depths: DepthSet::default(),
            budget: 6,
            instance_id: "x".into(),
            seed: 9,
        };
        let text = serde_json::to_string(&hello).unwrap();
        assert_eq!(
            text,
            r#"{"type":"hello","version":"v1","task":"sokoban","depths":[1,2,4,8],"budget":6,"instance_id":"x","seed":9}"#
        );
        assert_eq!(
            serde_json::from_str::<HarnessMessage>(&text).unwrap(),
            hello
        );
    }
}
