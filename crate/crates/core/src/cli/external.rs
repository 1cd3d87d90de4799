//! Subprocess simulators speaking a one-line JSON protocol: the child
//! receives `{"theta": [...], "seed": n}` (on stdin or as its final
//! argument) and must print a single line `{"data": [...]}` on stdout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::RngCore;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{Dataset, ParameterBox, ParameterPoint, SimulatorModel};

/// How the request line reaches the child process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExternalProtocol {
    #[default]
    Stdin,
    /// Request appended as the final command-line argument.
    Arg,
}

/// A command template plus protocol and timeout.
#[derive(Debug, Clone)]
pub struct ExternalSimulator {
    pub command: Vec<String>,
    pub protocol: ExternalProtocol,
    pub timeout: Duration,
}

#[derive(Deserialize)]
struct SimulatorReply {
    data: Vec<f64>,
}

impl ExternalSimulator {
    pub fn new(command: Vec<String>, protocol: ExternalProtocol, timeout: Duration) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::Config("external simulator command is empty".into()));
        }
        Ok(Self {
            command,
            protocol,
            timeout,
        })
    }

    /// One simulator call: spawn, hand over `(theta, seed)`, parse the
    /// reply. Nonzero exit, malformed output and timeouts surface as
    /// simulation errors with captured stderr.
    pub fn run(&self, theta: &ParameterPoint, seed: u64) -> Result<Dataset> {
        let request = serde_json::json!({ "theta": theta.values(), "seed": seed }).to_string();
        let mut cmd = Command::new(&self.command[0]);
        cmd.args(&self.command[1..]);
        if self.protocol == ExternalProtocol::Arg {
            cmd.arg(&request);
        }
        cmd.stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        let mut child = cmd
            .spawn()
            .map_err(|e| Error::Simulation(format!("cannot spawn {:?}: {e}", self.command[0])))?;

        if self.protocol == ExternalProtocol::Stdin {
            let mut stdin = child.stdin.take().expect("piped stdin");
            stdin
                .write_all(request.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .map_err(|e| Error::Simulation(format!("writing request to simulator: {e}")))?;
            // drop closes the pipe so line-oriented children see EOF
        } else {
            drop(child.stdin.take());
        }

        let start = Instant::now();
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) => {
                    if start.elapsed() > self.timeout {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(Error::Simulation(format!(
                            "simulator timed out after {:.1}s",
                            self.timeout.as_secs_f64()
                        )));
                    }
                    std::thread::sleep(Duration::from_millis(2));
                }
                Err(e) => return Err(Error::Simulation(format!("waiting for simulator: {e}"))),
            }
        };

        let mut stdout = String::new();
        if let Some(mut out) = child.stdout.take() {
            let _ = out.read_to_string(&mut stdout);
        }
        let mut stderr = String::new();
        if let Some(mut err) = child.stderr.take() {
            let _ = err.read_to_string(&mut stderr);
        }
        if !status.success() {
            return Err(Error::Simulation(format!(
                "simulator exited with {status}; stderr: {}",
                stderr.trim()
            )));
        }
        let line = stdout
            .lines()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| {
                Error::Simulation(format!(
                    "simulator printed no output; stderr: {}",
                    stderr.trim()
                ))
            })?;
        let reply: SimulatorReply = serde_json::from_str(line).map_err(|e| {
            Error::Simulation(format!(
                "malformed simulator reply {line:?}: {e}; stderr: {}",
                stderr.trim()
            ))
        })?;
        if reply.data.is_empty() || reply.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Simulation(
                "simulator reply must carry a non-empty finite data vector".into(),
            ));
        }
        Ok(Dataset(reply.data))
    }
}

/// Named discrepancy functions available to external models.
pub fn named_discrepancy(
    name: &str,
) -> Result<Arc<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync>> {
    match name {
        "abs" => Ok(Arc::new(|o: &Dataset, x: &Dataset| {
            (o.values()[0] - x.values()[0]).abs()
        })),
        "euclidean" => Ok(Arc::new(|o: &Dataset, x: &Dataset| {
            o.values()
                .iter()
                .zip(x.values())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })),
        "manhattan" => Ok(Arc::new(|o: &Dataset, x: &Dataset| {
            o.values()
                .iter()
                .zip(x.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })),
        other => Err(Error::Config(format!(
            "unknown discrepancy \"{other}\" (available: abs, euclidean, manhattan)"
        ))),
    }
}

/// Wrap an external simulator as a [`SimulatorModel`] with a uniform prior.
/// Each simulate call derives the child's seed from the caller's stream,
/// so the subprocess inherits the crate's reproducibility contract.
///
/// Subprocess failures cannot cross the simulate signature directly; they
/// are parked in the returned error slot and surface as a non-finite
/// discrepancy, which every estimator turns into an error. Callers that
/// see one should consult the slot for the child's stderr.
pub fn external_model(
    simulator: ExternalSimulator,
    observed: Dataset,
    prior: ParameterBox,
    discrepancy: Arc<dyn Fn(&Dataset, &Dataset) -> f64 + Send + Sync>,
) -> (SimulatorModel, Arc<Mutex<Option<String>>>) {
    let last_error: Arc<Mutex<Option<String>>> = Arc::new(Mutex::new(None));
    let error_slot = Arc::clone(&last_error);
    let dim = prior.dim();
    let prior_sample = prior.clone();
    let neg_log_volume = -prior.log_volume();
    let prior_contains = prior;
    let disc = Arc::clone(&discrepancy);
    let model = SimulatorModel::new(
        dim,
        move |theta: &ParameterPoint| {
            if prior_contains.contains(theta) {
                neg_log_volume
            } else {
                f64::NEG_INFINITY
            }
        },
        move |rng: &mut rand_chacha::ChaCha8Rng| prior_sample.sample(rng),
        move |theta: &ParameterPoint, rng: &mut rand_chacha::ChaCha8Rng| {
            let seed = rng.next_u64();
            match simulator.run(theta, seed) {
                Ok(data) => data,
                Err(e) => {
                    *error_slot.lock().unwrap() = Some(e.to_string());
                    Dataset(vec![f64::NAN])
                }
            }
        },
        move |o: &Dataset, x: &Dataset| {
            if x.values().iter().any(|v| !v.is_finite()) {
                return f64::NAN;
            }
            disc(o, x)
        },
        observed,
    );
    (model, last_error)
}

/// Probe the child's determinism contract: run the same `(theta, seed)`
/// twice and compare. Returns `Ok(true)` when the replies are identical.
pub fn determinism_probe(
    simulator: &ExternalSimulator,
    theta: &ParameterPoint,
    seed: u64,
) -> Result<bool> {
    let a = simulator.run(theta, seed)?;
    let b = simulator.run(theta, seed)?;
    Ok(a == b)
}
