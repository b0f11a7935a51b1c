//! Exploration loop, metrics, baselines and run artifacts.

mod baselines;
mod config;
mod metrics;
mod report;

pub use baselines::{
    baseline_dt_rfe, baseline_kbest, baseline_mrmr, default_k, run_baselines, subset_accuracy,
    BaselineMethod, BaselineResult,
};
pub use config::ExplorationConfig;
pub use metrics::{ave_acc, best_acc, summarize_windows, WindowStat, DEFAULT_WINDOW};
pub use report::{
    read_metrics_csv, read_summary, render_svg, write_metrics_csv, write_run, write_summary,
    MetricsRow, RunSummary, METRICS_FILE, SUMMARY_FILE, SVG_FILE,
};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::advisor::{
    apply_advice, dtree_advise_with_importances, identify_groups, kbest_advise_scored, AdviceError,
    Trainer, TrainerAdvice,
};
use crate::agents::{init_agents, AgentError, AgentPolicy, StateVector, Transition};
use crate::dataio::{DataError, Dataset};
use crate::mlkit::{accuracy, fit_tree_presorted, mi_scores, presort, CorrelationMatrix, DecisionTreeModel, MlError, TreeParams, DEFAULT_MI_BINS};
use crate::reward::{
    feature_correlation_cached, reward_equal, reward_prs1, reward_prs2, RewardError, RewardLedger,
    RewardScheme,
};
use crate::staterep::{StateEncoder, StateError};
use crate::{selected_indices, ActionVector};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("window [{start}, {start}+{len}) does not fit a series of {total}")]
    Window { start: usize, len: usize, total: usize },
    #[error("k = {k} outside 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed metrics file {path}: {message}")]
    Metrics { path: PathBuf, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Ml(#[from] MlError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Advice(#[from] AdviceError),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

/// Everything observed at one exploration step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Final actions after advice.
    pub actions: ActionVector,
    pub n_selected: usize,
    pub acc: f64,
    /// Feature correlation `R` of the selected subset, 0 when empty.
    pub corr: f64,
    pub rewards: Vec<f64>,
    pub trainer: Option<Trainer>,
    pub advised_flips: Vec<usize>,
    /// FNV-1a hash of the bits of the next state.
    pub state_checksum: u64,
}

impl StepRecord {
    pub fn reward_sum(&self) -> f64 {
        self.rewards.iter().sum()
    }

    pub fn advised_flip_count(&self) -> usize {
        self.advised_flips.len()
    }

    /// Shared base `acc - beta * R`, or 0 for an empty subset.
    pub fn base(&self, beta: f64) -> f64 {
        if self.n_selected == 0 {
            0.0
        } else {
            self.acc - beta * self.corr
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExplorationRun {
    pub config: ExplorationConfig,
    pub records: Vec<StepRecord>,
    pub agents: Vec<AgentPolicy>,
    pub ledger: RewardLedger,
}

impl ExplorationRun {
    pub fn acc_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.acc).collect()
    }
}

/// FNV-1a over the little-endian bytes of every component.
pub fn state_checksum(state: &StateVector) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in state.as_slice() {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Per-feature importances of a tree fitted on `selected`, zero elsewhere.
pub fn full_importances(model: &DecisionTreeModel, selected: &[usize], n_features: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_features];
    for (pos, &f) in selected.iter().enumerate() {
        out[f] = model.feature_importances[pos];
    }
    out
}

struct Evaluation {
    acc: f64,
    corr: f64,
    importances: Vec<f64>,
    state: StateVector,
}

struct Context<'a> {
    dataset: &'a Dataset,
    corr: CorrelationMatrix,
    encoder: StateEncoder,
    /// Presorted row order of every training column.
    sorted: Vec<Vec<u32>>,
}

impl Context<'_> {
    fn evaluate(&self, selected: &[usize]) -> Result<Evaluation, HarnessError> {
        let n = self.dataset.n_features();
        if selected.is_empty() {
            return Ok(Evaluation {
                acc: 0.0,
                corr: 0.0,
                importances: vec![0.0; n],
                state: StateVector::zeros(self.encoder.dim()),
            });
        }
        let train = self.dataset.train()?;
        let test = self.dataset.test()?;
        let sorted = selected.iter().map(|&f| self.sorted[f].clone()).collect();
        let model = fit_tree_presorted(&train.select(selected), train.labels(), sorted, TreeParams::default())?;
        let acc = accuracy(&model, &test.select(selected), test.labels())?;
        let corr = feature_correlation_cached(&self.corr, selected)?;
        let state = self.encoder.encode(&self.corr, selected, Some(&model))?;
        let importances = full_importances(&model, selected, n);
        Ok(Evaluation {
            acc,
            corr,
            importances,
            state,
        })
    }
}

/// Runs `config.steps` steps of multi-agent exploration on a split dataset.
///
/// The step before the first one is treated as having selected every feature,
/// so the initial state and the first tree-trainer advice use the full set.
pub fn run_exploration(dataset: &Dataset, config: &ExplorationConfig) -> Result<ExplorationRun, HarnessError> {
    config.validate()?;
    let n = dataset.n_features();
    let ctx = Context {
        dataset,
        corr: CorrelationMatrix::from_dataset(dataset)?,
        encoder: StateEncoder::new(dataset, config.lambda, config.state_method)?,
        sorted: {
            let train = dataset.train()?;
            (0..n).map(|f| presort(train.column(f))).collect()
        },
    };
    let scores = if config.trainer == crate::advisor::TrainerMode::None {
        Vec::new()
    } else {
        mi_scores(dataset, DEFAULT_MI_BINS)?
    };
    let mut agents = init_agents(n, &config.agent_config())?;
    let mut ledger = RewardLedger::new(n, config.beta);
    let mut records = Vec::with_capacity(config.steps);

    let mut prev: ActionVector = vec![true; n];
    let start = ctx.evaluate(&selected_indices(&prev))?;
    let mut state = start.state;
    let mut prev_importances = start.importances;

    for t in 0..config.steps {
        let p = config.exploit_prob_at(t);
        let initial = agents
            .iter_mut()
            .map(|a| a.act(&state, p))
            .collect::<Result<Vec<_>, _>>()?;
        let groups = identify_groups(&prev, &initial)?;
        let trainer = config.trainer.trainer_at(t, config.transfer_point, config.hybrid_order);
        let advice = match trainer {
            Some(Trainer::KBest) => kbest_advise_scored(&groups, &scores),
            // The tree on F_p was fitted at the previous step.
            Some(Trainer::DTree) => dtree_advise_with_importances(&groups, &prev_importances),
            None => TrainerAdvice::none(),
        };
        let actions = apply_advice(&initial, &advice)?;
        let selected = selected_indices(&actions);
        let eval = ctx.evaluate(&selected)?;

        ledger.record(&actions)?;
        ledger.last_acc = eval.acc;
        ledger.last_corr = eval.corr;
        let rewards = if selected.is_empty() {
            vec![0.0; n]
        } else {
            match config.reward_scheme {
                RewardScheme::Equal => reward_equal(eval.acc, eval.corr, &actions, config.beta, config.equal_share),
                RewardScheme::Prs1 => reward_prs1(eval.acc, eval.corr, &eval.importances, &actions, config.beta)?,
                RewardScheme::Prs2 => reward_prs2(eval.acc, eval.corr, &ledger, &actions, config.beta)?,
            }
        };

        for (i, agent) in agents.iter_mut().enumerate() {
            agent.store(Transition {
                state: state.clone(),
                action: actions[i],
                reward: rewards[i],
                next_state: eval.state.clone(),
            })?;
            if agent.replay.len() >= config.batch_size {
                agent.learn(config.batch_size, config.gamma, config.lr)?;
            }
        }

        log::debug!(
            "step {t}: {} selected, acc {:.4}, {} flips",
            selected.len(),
            eval.acc,
            advice.len()
        );
        records.push(StepRecord {
            step: t,
            n_selected: selected.len(),
            actions: actions.clone(),
            acc: eval.acc,
            corr: eval.corr,
            rewards,
            trainer,
            advised_flips: advice.flip_indices,
            state_checksum: state_checksum(&eval.state),
        });
        state = eval.state;
        prev = actions;
        prev_importances = eval.importances;
    }

    Ok(ExplorationRun {
        config: config.clone(),
        records,
        agents,
        ledger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisor::TrainerMode;
    use crate::dataio::planted_dataset;

    fn planted() -> Dataset {
        planted_dataset(200, 3).unwrap().split(0.8, 3).unwrap()
    }

    fn small(trainer: TrainerMode, steps: usize) -> ExplorationConfig {
        ExplorationConfig {
            steps,
            transfer_point: 2,
            hidden: 16,
            trainer,
            seed: 11,
            ..Default::default()
        }
    }

    #[test]
    fn one_record_per_step() {
        let run = run_exploration(&planted(), &small(TrainerMode::Hybrid, 5)).unwrap();
        assert_eq!(run.records.len(), 5);
        for (t, r) in run.records.iter().enumerate() {
            assert_eq!(r.step, t);
            assert_eq!(r.actions.len(), 6);
            assert_eq!(r.n_selected, r.actions.iter().filter(|&&a| a).count());
            assert!((0.0..=1.0).contains(&r.acc));
        }
        assert_eq!(run.ledger.steps(), 5);
    }

    #[test]
    fn same_seed_same_records() {
        let d = planted();
        let a = run_exploration(&d, &small(TrainerMode::DTree, 30)).unwrap();
        let b = run_exploration(&d, &small(TrainerMode::DTree, 30)).unwrap();
        assert_eq!(a.records, b.records);
        let mut other = small(TrainerMode::DTree, 30);
        other.seed = 12;
        let c = run_exploration(&d, &other).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn no_trainer_means_no_flips() {
        let run = run_exploration(&planted(), &small(TrainerMode::None, 20)).unwrap();
        assert!(run.records.iter().all(|r| r.advised_flips.is_empty() && r.trainer.is_none()));
    }

    #[test]
    fn hybrid_phases_follow_schedule() {
        let run = run_exploration(&planted(), &small(TrainerMode::Hybrid, 6)).unwrap();
        let trainers: Vec<_> = run.records.iter().map(|r| r.trainer).collect();
        assert_eq!(
            trainers,
            vec![
                Some(Trainer::KBest),
                Some(Trainer::KBest),
                Some(Trainer::DTree),
                Some(Trainer::DTree),
                None,
                None
            ]
        );
    }

    #[test]
    fn flips_only_select() {
        let run = run_exploration(&planted(), &small(TrainerMode::KBest, 40)).unwrap();
        for r in &run.records {
            for &f in &r.advised_flips {
                assert!(r.actions[f]);
            }
        }
    }

    #[test]
    fn equal_rewards_sum_to_base() {
        let mut c = small(TrainerMode::None, 25);
        c.reward_scheme = RewardScheme::Equal;
        let run = run_exploration(&planted(), &c).unwrap();
        for r in &run.records {
            assert!((r.reward_sum() - r.base(c.beta)).abs() < 1e-12);
        }
    }

    #[test]
    fn ledger_matches_records() {
        let mut c = small(TrainerMode::None, 15);
        c.reward_scheme = RewardScheme::Prs2;
        let run = run_exploration(&planted(), &c).unwrap();
        for f in 0..6 {
            let count = run.records.iter().filter(|r| r.actions[f]).count() as u64;
            assert_eq!(run.ledger.cumulative_selections[f], count);
        }
    }

    #[test]
    fn checksum_distinguishes_states() {
        let a = StateVector(vec![0.0, 1.0]);
        let b = StateVector(vec![1.0, 0.0]);
        assert_ne!(state_checksum(&a), state_checksum(&b));
        assert_eq!(state_checksum(&a), state_checksum(&a.clone()));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let c = ExplorationConfig { steps: 0, ..Default::default() };
        assert!(matches!(run_exploration(&planted(), &c), Err(HarnessError::Config(_))));
    }
}
