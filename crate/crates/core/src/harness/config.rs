use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::advisor::{Trainer, TrainerMode};
use crate::agents::AgentConfig;
use crate::reward::{EqualShare, RewardScheme};
use crate::staterep::{StateMethod, DESCRIPTOR_DIM};

/// Every knob of an exploration run. Missing JSON fields take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationConfig {
    /// Number of exploration steps `L`.
    pub steps: usize,
    /// Hybrid transfer point `T`.
    pub transfer_point: usize,
    pub gamma: f64,
    /// Probability of acting greedily.
    pub exploit_prob: f64,
    /// When set, the exploit probability ramps linearly from this value to
    /// `exploit_prob` over `exploit_ramp_steps` steps.
    pub exploit_prob_start: Option<f64>,
    pub exploit_ramp_steps: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub hidden: usize,
    pub memory_capacity: usize,
    pub lambda: f64,
    pub beta: f64,
    pub state_method: StateMethod,
    pub reward_scheme: RewardScheme,
    pub equal_share: EqualShare,
    pub trainer: TrainerMode,
    pub hybrid_order: [Trainer; 2],
    pub descriptor_dim: usize,
    pub seed: u64,
}

impl Default for ExplorationConfig {
    fn default() -> Self {
        ExplorationConfig {
            steps: 1000,
            transfer_point: 250,
            gamma: 0.9,
            exploit_prob: 0.9,
            exploit_prob_start: None,
            exploit_ramp_steps: 0,
            lr: 0.01,
            batch_size: 16,
            hidden: 128,
            memory_capacity: 2000,
            lambda: 0.5,
            beta: 0.1,
            state_method: StateMethod::ImportanceWeighted,
            reward_scheme: RewardScheme::Prs1,
            equal_share: EqualShare::Divided,
            trainer: TrainerMode::Hybrid,
            hybrid_order: [Trainer::KBest, Trainer::DTree],
            descriptor_dim: DESCRIPTOR_DIM,
            seed: 0,
        }
    }
}

impl ExplorationConfig {
    /// The trainer-free, equal-reward configuration.
    pub fn marlfs() -> Self {
        ExplorationConfig {
            trainer: TrainerMode::None,
            reward_scheme: RewardScheme::Equal,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        let unit = |name: &str, v: f64| -> Result<(), HarnessError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("{name} = {v} outside [0, 1]")))
            }
        };
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if self.transfer_point == 0 {
            return bad("transfer_point must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma = {} outside [0, 1)", self.gamma));
        }
        unit("exploit_prob", self.exploit_prob)?;
        if let Some(p) = self.exploit_prob_start {
            unit("exploit_prob_start", p)?;
        }
        unit("lambda", self.lambda)?;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr = {} must be positive", self.lr));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be nonnegative", self.beta));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.memory_capacity == 0 {
            return bad("batch_size, hidden and memory_capacity must be positive".into());
        }
        if self.descriptor_dim != DESCRIPTOR_DIM {
            return bad(format!(
                "descriptor_dim must be {DESCRIPTOR_DIM}, got {}",
                self.descriptor_dim
            ));
        }
        if self.trainer == TrainerMode::Hybrid && 2 * self.transfer_point > self.steps {
            log::warn!(
                "transfer point {} leaves no self-exploration phase in {} steps",
                self.transfer_point,
                self.steps
            );
        }
        Ok(())
    }

    pub fn exploit_prob_at(&self, t: usize) -> f64 {
        match self.exploit_prob_start {
            Some(start) if self.exploit_ramp_steps > 0 && t < self.exploit_ramp_steps => {
                start + (self.exploit_prob - start) * t as f64 / self.exploit_ramp_steps as f64
            }
            _ => self.exploit_prob,
        }
    }

    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            state_dim: self.descriptor_dim,
            hidden: self.hidden,
            memory_capacity: self.memory_capacity,
            seed: self.seed,
        }
    }
}
