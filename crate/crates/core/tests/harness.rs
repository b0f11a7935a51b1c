mod common;

use irfs_core::advisor::TrainerMode;
use irfs_core::dataio::planted_dataset;
use irfs_core::harness::{
    baseline_dt_rfe, baseline_kbest, baseline_mrmr, best_acc, read_metrics_csv, read_summary,
    run_exploration, subset_accuracy, write_run, ExplorationConfig, METRICS_FILE,
};
use irfs_core::mlkit::{mi_scores, mutual_information_between, DEFAULT_MI_BINS};
use irfs_core::Dataset;

fn planted(seed: u64) -> Dataset {
    planted_dataset(200, seed).unwrap().split(0.8, seed).unwrap()
}

fn toy(columns: Vec<Vec<f64>>, labels: Vec<usize>, ratio: f64) -> Dataset {
    let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
    Dataset::from_columns(names, columns, &labels).unwrap().split(ratio, 1).unwrap()
}

#[test]
fn five_step_run_writes_five_rows() {
    let d = planted(0);
    let config = ExplorationConfig { steps: 5, transfer_point: 2, ..Default::default() };
    let run = run_exploration(&d, &config).unwrap();
    assert_eq!(run.records.len(), 5);
    let dir = tempfile::tempdir().unwrap();
    let summary = write_run(dir.path(), &run, Some("planted"), Vec::new(), true).unwrap();
    let text = std::fs::read_to_string(dir.path().join(METRICS_FILE)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[0], "t,acc,n_selected,reward_sum,advised_flips");
    assert!(dir.path().join("accuracy.svg").exists());

    let rows = read_metrics_csv(dir.path().join(METRICS_FILE)).unwrap();
    let max = rows.iter().map(|r| r.acc).fold(f64::MIN, f64::max);
    assert_eq!(summary.best_acc, max);
    assert_eq!(summary.flips_histogram.values().sum::<usize>(), 5);
    assert_eq!(read_summary(dir.path()).unwrap(), summary);
}

#[test]
fn records_respect_step_invariants() {
    let d = planted(1);
    let config = ExplorationConfig { steps: 60, transfer_point: 20, ..Default::default() };
    let run = run_exploration(&d, &config).unwrap();
    for r in &run.records {
        assert_eq!(r.n_selected, r.actions.iter().filter(|&&a| a).count());
        assert!(r.advised_flip_count() <= r.n_selected);
    }
    let acc = run.acc_series();
    for start in 0..acc.len() {
        for len in 1..=(acc.len() - start).min(10) {
            assert!(irfs_core::harness::ave_acc(&acc, start, len).unwrap() <= best_acc(&acc, start, len).unwrap());
        }
    }
}

#[test]
fn planted_pair_is_the_brute_force_optimum_and_is_found() {
    let d = planted(2);
    let mut best = (0.0, 0u32);
    for mask in 1u32..64 {
        let subset: Vec<usize> = (0..6).filter(|i| mask >> i & 1 == 1).collect();
        let acc = subset_accuracy(&d, &subset).unwrap();
        if acc > best.0 {
            best = (acc, mask);
        }
    }
    assert_eq!(best.0, 1.0);
    assert_eq!(subset_accuracy(&d, &[0, 1]).unwrap(), 1.0);
    let config = ExplorationConfig { steps: 200, transfer_point: 50, trainer: TrainerMode::Hybrid, seed: 2, ..Default::default() };
    let run = run_exploration(&d, &config).unwrap();
    assert_eq!(best_acc(&run.acc_series(), 0, 200).unwrap(), 1.0);
}

#[test]
fn dt_rfe_matches_hand_trace() {
    // y = f2 exactly; f0 is constant, f1 and f3 are unrelated to y.
    let pattern = [
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 1.0, 1.0],
        [0.0, 1.0, 1.0, 0.0],
    ];
    let rows: Vec<[f64; 4]> = pattern.iter().cycle().take(32).copied().collect();
    let columns = (0..4).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let labels = rows.iter().map(|r| r[2] as usize).collect();
    let d = toy(columns, labels, 0.75);
    // Every round the root splits on f2 and ends in pure leaves, so all other
    // importances are 0 and the highest-index zero goes first: f3, then f1, then f0.
    let r = baseline_dt_rfe(&d, 1).unwrap();
    assert_eq!(r.order, vec![3, 1, 0]);
    assert_eq!(r.selected, vec![2]);
    assert_eq!(r.acc, 1.0);
    assert_eq!(baseline_dt_rfe(&d, 4).unwrap().selected, vec![0, 1, 2, 3]);
}

#[test]
fn mrmr_matches_exhaustive_greedy_oracle() {
    let n = 120;
    let mut state = 17u64;
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 33) as f64 / (1u64 << 31) as f64
    };
    let base: Vec<f64> = (0..n).map(|_| next()).collect();
    let labels: Vec<usize> = base.iter().map(|&v| (v * 3.0) as usize).collect();
    let columns = vec![
        base.iter().map(|v| v + 0.1 * next()).collect(),
        base.iter().map(|v| v + 0.1 * next()).collect(),
        (0..n).map(|_| next()).collect(),
        base.iter().map(|v| (v * 7.0).sin() + 0.3 * next()).collect(),
        labels.iter().map(|&y| y as f64 + next()).collect::<Vec<f64>>(),
    ];
    let d = toy(columns, labels, 0.8);
    let train = d.train().unwrap();
    let relevance = mi_scores(&d, DEFAULT_MI_BINS).unwrap();
    let pair: Vec<Vec<f64>> = (0..5)
        .map(|f| {
            (0..5)
                .map(|s| mutual_information_between(train.column(f), train.column(s), DEFAULT_MI_BINS).unwrap())
                .collect()
        })
        .collect();
    for k in 1..=5 {
        let r = baseline_mrmr(&d, k).unwrap();
        assert_eq!(r.order, common::mrmr_oracle(&relevance, &pair, k), "k = {k}");
    }
    let top = relevance
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > relevance[b] { i } else { b });
    assert_eq!(baseline_mrmr(&d, 1).unwrap().selected, vec![top]);
}

#[test]
fn kbest_baseline_examples() {
    let columns: Vec<Vec<f64>> = (0..16)
        .map(|j| (0..60).map(|i| ((i * (j + 3)) % 11) as f64).collect())
        .collect();
    let labels: Vec<usize> = (0..60).map(|i| i % 2).collect();
    let d = toy(columns, labels, 0.7);
    let r = baseline_kbest(&d, irfs_core::harness::default_k(16)).unwrap();
    assert_eq!(r.selected.len(), 8);
    let all: Vec<usize> = (0..16).collect();
    assert_eq!(baseline_kbest(&d, 16).unwrap().acc, subset_accuracy(&d, &all).unwrap());
    assert_eq!(baseline_kbest(&d, 8).unwrap(), r);
}
