//! One deep Q-learning agent per feature.
//!
//! Each agent owns a two-layer perceptron (state -> hidden ReLU -> 2 Q-values),
//! Adam moments, a bounded replay memory and its own random stream seeded from
//! `(run_seed, agent_index)`. Action 0 deselects the feature, action 1 selects it.

use std::collections::VecDeque;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N_ACTIONS: usize = 2;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("at least one agent is required")]
    NoAgents,
    #[error("state has dimension {found}, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("replay memory is empty")]
    EmptyReplay,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("discount {0} outside [0, 1)")]
    BadDiscount(f64),
    #[error("checkpoint i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint does not match: {0}")]
    Checkpoint(String),
}

/// Shape parameters shared by every agent of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub state_dim: usize,
    pub hidden: usize,
    pub memory_capacity: usize,
    pub seed: u64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            state_dim: 8,
            hidden: 128,
            memory_capacity: 2000,
            seed: 0,
        }
    }
}

/// Encoded environment state, shared by all agents at a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector(pub Vec<f64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: StateVector,
    pub action: bool,
    pub reward: f64,
    pub next_state: StateVector,
}

/// Flat-parameter MLP: `[w1 (hidden x input) | b1 | w2 (2 x hidden) | b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    input: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl QNetwork {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let mut net = QNetwork {
            input,
            hidden,
            params: vec![0.0; hidden * input + hidden + N_ACTIONS * hidden + N_ACTIONS],
        };
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let split = hidden * input + hidden;
        for (i, p) in net.params.iter_mut().enumerate() {
            let bound = if i < split { b1 } else { b2 };
            *p = rng.gen_range(-bound..=bound);
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1 = self.hidden * self.input;
        let b1 = w1 + self.hidden;
        let w2 = b1 + N_ACTIONS * self.hidden;
        (w1, b1, w2)
    }

    /// Named layer slices in storage order with their shapes.
    pub fn layers(&self) -> Vec<(&'static str, Vec<usize>, &[f64])> {
        let (o_b1, o_w2, o_b2) = self.offsets();
        vec![
            ("w1", vec![self.hidden, self.input], &self.params[..o_b1]),
            ("b1", vec![self.hidden], &self.params[o_b1..o_w2]),
            ("w2", vec![N_ACTIONS, self.hidden], &self.params[o_w2..o_b2]),
            ("b2", vec![N_ACTIONS], &self.params[o_b2..]),
        ]
    }

    fn check_dim(&self, state: &[f64]) -> Result<(), AgentError> {
        if state.len() != self.input {
            return Err(AgentError::DimensionMismatch {
                expected: self.input,
                found: state.len(),
            });
        }
        Ok(())
    }

    /// Q-values with hidden pre-activations written into `z`.
    fn forward_into(&self, state: &[f64], z: &mut [f64]) -> [f64; N_ACTIONS] {
        let (o_b1, o_w2, o_b2) = self.offsets();
        let p = &self.params;
        for j in 0..self.hidden {
            let row = &p[j * self.input..(j + 1) * self.input];
            z[j] = p[o_b1 + j] + row.iter().zip(state).map(|(w, x)| w * x).sum::<f64>();
        }
        let mut q = [p[o_b2], p[o_b2 + 1]];
        for (a, qa) in q.iter_mut().enumerate() {
            let row = &p[o_w2 + a * self.hidden..o_w2 + (a + 1) * self.hidden];
            *qa += row.iter().zip(z.iter()).map(|(w, &h)| w * h.max(0.0)).sum::<f64>();
        }
        q
    }

    pub fn forward(&self, state: &[f64]) -> Result<[f64; N_ACTIONS], AgentError> {
        self.check_dim(state)?;
        let mut z = vec![0.0; self.hidden];
        Ok(self.forward_into(state, &mut z))
    }

    /// Mean squared error between `Q(state, action)` and fixed targets, and its
    /// gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, samples: &[(&[f64], usize, f64)]) -> Result<(f64, Vec<f64>), AgentError> {
        if samples.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        let (o_b1, o_w2, o_b2) = self.offsets();
        let mut grad = vec![0.0; self.params.len()];
        let mut z = vec![0.0; self.hidden];
        let scale = 1.0 / samples.len() as f64;
        let mut loss = 0.0;
        for &(state, action, target) in samples {
            self.check_dim(state)?;
            let q = self.forward_into(state, &mut z);
            let err = q[action] - target;
            loss += err * err * scale;
            let g = 2.0 * err * scale;
            grad[o_b2 + action] += g;
            let w2_row = o_w2 + action * self.hidden;
            for j in 0..self.hidden {
                if z[j] > 0.0 {
                    grad[w2_row + j] += g * z[j];
                    let dz = g * self.params[w2_row + j];
                    grad[o_b1 + j] += dz;
                    let w1_row = &mut grad[j * self.input..(j + 1) * self.input];
                    for (gw, x) in w1_row.iter_mut().zip(state) {
                        *gw += dz * x;
                    }
                }
            }
        }
        Ok((loss, grad))
    }
}

/// Adam moments for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n_params: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Bounded FIFO of transitions; the oldest entry is evicted first.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    buf: VecDeque<Transition>,
}

impl ReplayMemory {
    pub fn new(capacity: usize) -> Self {
        ReplayMemory {
            capacity: capacity.max(1),
            buf: VecDeque::with_capacity(capacity.max(1)),
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: Transition) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(t);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.buf.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng>(&self, size: usize, rng: &mut R) -> Vec<Transition> {
        (0..size)
            .map(|_| self.buf[rng.gen_range(0..self.buf.len())].clone())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct AgentPolicy {
    pub index: usize,
    pub network: QNetwork,
    pub adam: Adam,
    pub replay: ReplayMemory,
    rng: ChaCha8Rng,
}

/// Creates `n` agents with independent weights and random streams.
pub fn init_agents(n: usize, config: &AgentConfig) -> Result<Vec<AgentPolicy>, AgentError> {
    if n == 0 {
        return Err(AgentError::NoAgents);
    }
    Ok((0..n).map(|i| AgentPolicy::new(i, config)).collect())
}

impl AgentPolicy {
    pub fn new(index: usize, config: &AgentConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(index as u64);
        let network = QNetwork::new(config.state_dim, config.hidden, &mut rng);
        AgentPolicy {
            index,
            adam: Adam::new(network.params().len()),
            network,
            replay: ReplayMemory::new(config.memory_capacity),
            rng,
        }
    }

    pub fn q_values(&self, state: &StateVector) -> Result<[f64; N_ACTIONS], AgentError> {
        self.network.forward(state.as_slice())
    }

    /// Greedy action with probability `exploit_prob`, otherwise a fair coin.
    /// Equal Q-values resolve to select.
    pub fn act(&mut self, state: &StateVector, exploit_prob: f64) -> Result<bool, AgentError> {
        if !(0.0..=1.0).contains(&exploit_prob) {
            return Err(AgentError::BadProbability(exploit_prob));
        }
        let q = self.q_values(state)?;
        if self.rng.gen::<f64>() < exploit_prob {
            Ok(q[1] >= q[0])
        } else {
            Ok(self.rng.gen_bool(0.5))
        }
    }

    pub fn store(&mut self, transition: Transition) -> Result<(), AgentError> {
        let d = self.network.input_dim();
        for s in [&transition.state, &transition.next_state] {
            if s.dim() != d {
                return Err(AgentError::DimensionMismatch {
                    expected: d,
                    found: s.dim(),
                });
            }
        }
        self.replay.push(transition);
        Ok(())
    }

    pub fn sample_batch(&mut self, size: usize) -> Result<Vec<Transition>, AgentError> {
        if self.replay.is_empty() {
            return Err(AgentError::EmptyReplay);
        }
        Ok(self.replay.sample(size, &mut self.rng))
    }

    /// One Adam step on the Bellman residual `Q(s, a) - (r + gamma * max Q(s', .))`.
    /// Targets come from the current network and are held fixed for the step.
    pub fn train_step(&mut self, batch: &[Transition], gamma: f64, lr: f64) -> Result<f64, AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(AgentError::BadDiscount(gamma));
        }
        let mut samples = Vec::with_capacity(batch.len());
        for t in batch {
            let next = self.network.forward(t.next_state.as_slice())?;
            let target = t.reward + gamma * next[0].max(next[1]);
            samples.push((t.state.as_slice(), t.action as usize, target));
        }
        let (loss, grad) = self.network.loss_and_gradient(&samples)?;
        self.adam.step(self.network.params_mut(), &grad, lr);
        Ok(loss)
    }

    /// Samples a batch from replay and trains on it.
    pub fn learn(&mut self, batch_size: usize, gamma: f64, lr: f64) -> Result<f64, AgentError> {
        let batch = self.sample_batch(batch_size)?;
        self.train_step(&batch, gamma, lr)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerEntry {
    name: String,
    shape: Vec<usize>,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    format: String,
    agents: Vec<Vec<LayerEntry>>,
}

const CHECKPOINT_FORMAT: &str = "f64-le";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AgentError + '_ {
    move |source| AgentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes each layer of every agent as a flat little-endian f64 file plus a
/// `manifest.json` recording the shapes.
pub fn save_checkpoint(agents: &[AgentPolicy], dir: impl AsRef<Path>) -> Result<(), AgentError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = CheckpointManifest {
        format: CHECKPOINT_FORMAT.into(),
        agents: Vec::with_capacity(agents.len()),
    };
    for agent in agents {
        let mut entries = Vec::new();
        for (name, shape, values) in agent.network.layers() {
            let file = format!("agent{}.{}.bin", agent.index, name);
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            let path = dir.join(&file);
            fs::write(&path, bytes).map_err(io_err(&path))?;
            entries.push(LayerEntry {
                name: name.into(),
                shape,
                file,
            });
        }
        manifest.agents.push(entries);
    }
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(())
}

/// Loads weights saved by [`save_checkpoint`] into existing agents of the same shape.
pub fn load_checkpoint(agents: &mut [AgentPolicy], dir: impl AsRef<Path>) -> Result<(), AgentError> {
    let dir = dir.as_ref();
    let path = dir.join("manifest.json");
    let manifest: CheckpointManifest = serde_json::from_slice(&fs::read(&path).map_err(io_err(&path))?)?;
    if manifest.format != CHECKPOINT_FORMAT {
        return Err(AgentError::Checkpoint(format!("unknown format {}", manifest.format)));
    }
    if manifest.agents.len() != agents.len() {
        return Err(AgentError::Checkpoint(format!(
            "{} agents in checkpoint, {} given",
            manifest.agents.len(),
            agents.len()
        )));
    }
    for (agent, entries) in agents.iter_mut().zip(&manifest.agents) {
        let mut flat = Vec::with_capacity(agent.network.params().len());
        for ((name, shape, _), entry) in agent.network.layers().into_iter().zip(entries) {
            if entry.name != name || entry.shape != shape {
                return Err(AgentError::Checkpoint(format!(
                    "layer {} {:?} does not match {} {:?}",
                    entry.name, entry.shape, name, shape
                )));
            }
            let path = dir.join(&entry.file);
            let bytes = fs::read(&path).map_err(io_err(&path))?;
            let expected: usize = shape.iter().product();
            if bytes.len() != expected * 8 {
                return Err(AgentError::Checkpoint(format!("{} has {} bytes", entry.file, bytes.len())));
            }
            flat.extend(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())));
        }
        if flat.len() != agent.network.params().len() {
            return Err(AgentError::Checkpoint("parameter count mismatch".into()));
        }
        agent.network.params_mut().copy_from_slice(&flat);
    }
    Ok(())
}
