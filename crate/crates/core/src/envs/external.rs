//! Adapter for environments running in a child process.
//!
//! Requests are single lines on the child's stdin; every request gets exactly
//! one JSON object line on stdout:
//!
//! ```text
//! hello          -> {"name": str, "h": int, "w": int, "actions": int, "max_frames": int, "floor": number?}
//! reset <seed>   -> {"frame": base64}
//! step <action>  -> {"frame": base64, "reward": number, "done": bool}
//! ```
//!
//! `seed` is a decimal u64, `action` a decimal index. Frames are standard
//! base64 (with padding) of `h·w·3` row-major RGB bytes. `floor` defaults to
//! `0`.

use super::{EnvError, EnvFactory, EnvSpec, Environment, StepResult};
use crate::{Frame, Seed};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde_json::{Map, Value};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

pub const DEFAULT_STEP_TIMEOUT: Duration = Duration::from_secs(10);

struct Process {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<String>,
}

impl Process {
    fn spawn(command: &[String]) -> Result<Self, EnvError> {
        let (program, args) = command.split_first().ok_or_else(|| EnvError::Io("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EnvError::Io(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let Ok(l) = line else { break };
                if tx.send(l).is_err() {
                    break;
                }
            }
        });
        Ok(Process { child, stdin, lines })
    }

    fn request(&mut self, line: &str, timeout: Duration) -> Result<Map<String, Value>, EnvError> {
        if writeln!(self.stdin, "{line}").and_then(|_| self.stdin.flush()).is_err() {
            return Err(EnvError::ChildExited);
        }
        let reply = match self.lines.recv_timeout(timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => return Err(EnvError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(EnvError::ChildExited),
        };
        match serde_json::from_str::<Value>(&reply) {
            Ok(Value::Object(m)) => Ok(m),
            Ok(_) => Err(EnvError::Protocol(format!("reply to `{line}` is not a JSON object"))),
            Err(e) => Err(EnvError::Protocol(format!("reply to `{line}` is not valid JSON: {e}"))),
        }
    }
}

impl Drop for Process {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn field<'a>(m: &'a Map<String, Value>, name: &str) -> Result<&'a Value, EnvError> {
    m.get(name).ok_or_else(|| EnvError::Protocol(format!("field `{name}` missing")))
}

fn uint_field(m: &Map<String, Value>, name: &str) -> Result<usize, EnvError> {
    field(m, name)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| EnvError::Protocol(format!("field `{name}` must be a nonnegative integer")))
}

fn number_field(m: &Map<String, Value>, name: &str) -> Result<f64, EnvError> {
    field(m, name)?
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EnvError::Protocol(format!("field `{name}` must be a finite number")))
}

fn bool_field(m: &Map<String, Value>, name: &str) -> Result<bool, EnvError> {
    field(m, name)?.as_bool().ok_or_else(|| EnvError::Protocol(format!("field `{name}` must be a boolean")))
}

fn frame_field(m: &Map<String, Value>, spec: &EnvSpec) -> Result<Frame, EnvError> {
    let text = field(m, "frame")?.as_str().ok_or_else(|| EnvError::Protocol("field `frame` must be a string".into()))?;
    let bytes = STANDARD.decode(text).map_err(|e| EnvError::Protocol(format!("field `frame` is not base64: {e}")))?;
    let want = spec.height * spec.width * Frame::CHANNELS;
    let got = bytes.len();
    Frame::new(spec.height, spec.width, bytes)
        .ok_or_else(|| EnvError::Protocol(format!("field `frame` has {got} bytes, expected {want}")))
}

fn parse_spec(m: &Map<String, Value>) -> Result<EnvSpec, EnvError> {
    let name = field(m, "name")?.as_str().ok_or_else(|| EnvError::Protocol("field `name` must be a string".into()))?;
    let score_floor = if m.contains_key("floor") { number_field(m, "floor")? } else { 0.0 };
    let spec = EnvSpec {
        name: name.to_string(),
        height: uint_field(m, "h")?,
        width: uint_field(m, "w")?,
        actions: uint_field(m, "actions")?,
        max_frames: uint_field(m, "max_frames")?,
        score_floor,
    };
    spec.validate().map_err(|e| EnvError::Protocol(e.to_string()))?;
    Ok(spec)
}

/// Performs the `hello` handshake with a fresh child and returns its spec.
pub fn handshake(command: &[String], timeout: Duration) -> Result<EnvSpec, EnvError> {
    let mut p = Process::spawn(command)?;
    parse_spec(&p.request("hello", timeout)?)
}

/// Environment proxied to a child process. If the child dies it is
/// restarted on the next `reset`.
pub struct ExternalEnv {
    command: Vec<String>,
    timeout: Duration,
    spec: EnvSpec,
    process: Option<Process>,
    in_episode: bool,
}

impl ExternalEnv {
    pub fn spawn(command: Vec<String>, timeout: Duration) -> Result<Self, EnvError> {
        let mut process = Process::spawn(&command)?;
        let spec = parse_spec(&process.request("hello", timeout)?)?;
        Ok(ExternalEnv { command, timeout, spec, process: Some(process), in_episode: false })
    }

    fn call(&mut self, line: &str) -> Result<Map<String, Value>, EnvError> {
        let p = self.process.as_mut().ok_or(EnvError::ChildExited)?;
        let r = p.request(line, self.timeout);
        if matches!(r, Err(EnvError::ChildExited | EnvError::Timeout(_))) {
            self.process = None;
            self.in_episode = false;
        }
        r
    }
}

impl Environment for ExternalEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, seed: Seed) -> Result<Frame, EnvError> {
        if self.process.is_none() {
            let mut p = Process::spawn(&self.command)?;
            let spec = parse_spec(&p.request("hello", self.timeout)?)?;
            if spec != self.spec {
                return Err(EnvError::Protocol("restarted environment reported a different spec".into()));
            }
            self.process = Some(p);
        }
        let reply = self.call(&format!("reset {}", seed.0))?;
        let frame = frame_field(&reply, &self.spec)?;
        self.in_episode = true;
        Ok(frame)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if action >= self.spec.actions {
            return Err(EnvError::BadAction { action, actions: self.spec.actions });
        }
        if !self.in_episode {
            return Err(if self.process.is_some() { EnvError::EpisodeOver } else { EnvError::NotReset });
        }
        let reply = self.call(&format!("step {action}"))?;
        let frame = frame_field(&reply, &self.spec)?;
        let reward = number_field(&reply, "reward")?;
        let done = bool_field(&reply, "done")?;
        if done {
            self.in_episode = false;
        }
        Ok(StepResult { frame, reward, done })
    }
}

/// Spawns one child per environment instance.
#[derive(Clone, Debug)]
pub struct ExternalFactory {
    command: Vec<String>,
    timeout: Duration,
    spec: EnvSpec,
}

impl ExternalFactory {
    /// Handshakes once to learn the spec.
    pub fn new(command: Vec<String>, timeout: Duration) -> Result<Self, EnvError> {
        let spec = handshake(&command, timeout)?;
        Ok(ExternalFactory { command, timeout, spec })
    }
}

impl EnvFactory for ExternalFactory {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn create(&self) -> Result<Box<dyn Environment>, EnvError> {
        let env = ExternalEnv::spawn(self.command.clone(), self.timeout)?;
        if env.spec != self.spec {
            return Err(EnvError::Protocol("environment reported a different spec".into()));
        }
        Ok(Box::new(env))
    }
}
