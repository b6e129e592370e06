mod common;

use std::sync::Arc;

use common::*;
use p2pgnn::learn::{ClassifierKind, TrainConfig};
use p2pgnn::oracle::DiffusionParams;
use p2pgnn::p2p::{message_len, DeviceHyper};
use p2pgnn::sim::{
    build_schedule, build_schedule_in_range, read_metrics_csv, run, write_metrics_csv,
    ExperimentConfig, Simulation, TrainingMode,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn simulation(seed: u64, beta: f64, s: f64) -> (Simulation, p2pgnn::PredictionTable) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = connected_graph(&mut rng, 30, 0.08);
    let ds = random_dataset(&mut rng, g, 3, 2, 8);
    let base = random_rows(&mut rng, 30, 3);
    let targets = ds.data.label_table(Some(&ds.splits.train));
    let want = dense_fdiff(&ds.graph, &base, &targets, &ds.splits.train, beta, s);
    let graph = Arc::new(ds.graph.clone());
    let schedule = build_schedule_in_range(&graph, 0.2, 0.5, seed).unwrap();
    let hyper = DeviceHyper::for_diffusion(&DiffusionParams { beta, s });
    let sim = Simulation::new(graph, &base, &targets, hyper, schedule, seed).unwrap();
    (sim, want)
}

#[test]
fn devices_converge_to_dense_fdiff() {
    for (seed, beta, s) in [(1, 0.9, 1.0), (2, 0.7, 0.5), (3, 0.9, -1.5)] {
        let (mut sim, want) = simulation(seed, beta, s);
        let start = linf(&sim.predictions(), &want);
        for _ in 0..4000 {
            sim.step().unwrap();
        }
        let end = linf(&sim.predictions(), &want);
        assert!(end < 1e-8 && end < start, "seed {seed}: {start} -> {end}");
    }
}

#[test]
fn a_device_joins_at_most_one_exchange_per_step() {
    let (mut sim, _) = simulation(4, 0.9, 1.0);
    let mut total = 0;
    for _ in 0..200 {
        let events = sim.step().unwrap();
        let mut seen = std::collections::HashSet::new();
        for e in &events {
            assert!(sim.graph().has_edge(e.initiator, e.responder));
            assert!(seen.insert(e.initiator) && seen.insert(e.responder));
        }
        total += events.len();
    }
    assert_eq!(sim.bytes_diffusion(), (2 * total * message_len(3)) as u64);
    assert_eq!(sim.bytes_training(), 0);
}

#[test]
fn identical_seeds_replay_identically() {
    let (mut a, _) = simulation(6, 0.9, 1.0);
    let (mut b, _) = simulation(6, 0.9, 1.0);
    for _ in 0..100 {
        assert_eq!(a.step().unwrap(), b.step().unwrap());
    }
    assert_eq!(a.predictions(), b.predictions());
}

#[test]
fn schedules_respect_ranges() {
    let g = connected_graph(&mut ChaCha8Rng::seed_from_u64(0), 40, 0.1);
    let s = build_schedule(&g, 0.1, 9).unwrap();
    assert_eq!(s.edges.len(), g.n_edges());
    assert!(s.probs.iter().all(|p| (0.0..=0.1).contains(p)));
    let half = s.scaled(0.5).unwrap();
    for (p, q) in s.probs.iter().zip(&half.probs) {
        assert_eq!(*q, p * 0.5);
    }
    assert!(build_schedule(&g, 1.0, 0).is_err());
    assert!(build_schedule_in_range(&g, 0.3, 0.2, 0).is_err());
}

#[test]
fn fuzzed_protocol_keeps_labeled_devices_fixed() {
    for seed in 0..3 {
        fuzz_labeled_invariant(seed, 2000).unwrap();
    }
}

fn small_experiment(mode: TrainingMode, classifier: ClassifierKind) -> ExperimentConfig {
    ExperimentConfig {
        classifier,
        mode,
        steps: 60,
        repetitions: 2,
        sigma_max: 0.3,
        metrics_every: 20,
        train: TrainConfig { max_epochs: 50, hidden: 8, ..TrainConfig::default() },
        ..ExperimentConfig::default()
    }
}

#[test]
fn experiments_run_in_every_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = connected_graph(&mut rng, 40, 0.1);
    let ds = Arc::new(random_dataset(&mut rng, g, 3, 5, 12));
    let lr = p2pgnn::learn::pretrain(&ds.data, &ds.splits, ClassifierKind::Lr, &TrainConfig { max_epochs: 50, ..TrainConfig::default() })
        .unwrap()
        .params;
    let runs = [
        (small_experiment(TrainingMode::Labels, ClassifierKind::Label), None),
        (small_experiment(TrainingMode::Pretrained, ClassifierKind::Lr), Some(&lr)),
        (small_experiment(TrainingMode::Gossip, ClassifierKind::Mlp), None),
    ];
    for (cfg, params) in runs {
        let out = run(ds.clone(), &cfg, params).unwrap();
        // t = 0, 20, 40, 60 for each repetition
        assert_eq!(out.records.len(), 8, "{:?}", cfg.mode);
        assert_eq!(out.summary.final_accuracies.len(), 2);
        assert_eq!(out.summary.message_bytes, message_len(3));
        let gossip = cfg.mode == TrainingMode::Gossip;
        assert_eq!(out.summary.bytes_training_mean > 0.0, gossip);
        assert_eq!(out.summary.parameter_bytes > 0, gossip);

        let mut csv = Vec::new();
        write_metrics_csv(&out.records, &mut csv).unwrap();
        let back = read_metrics_csv(csv.as_slice(), std::path::Path::new("mem")).unwrap();
        assert_eq!(back, out.records);

        let again = run(ds.clone(), &cfg, params).unwrap();
        assert_eq!(again.records, out.records);
    }
}

#[test]
fn pretrained_mode_requires_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = connected_graph(&mut rng, 10, 0.2);
    let ds = Arc::new(random_dataset(&mut rng, g, 2, 3, 3));
    let cfg = small_experiment(TrainingMode::Pretrained, ClassifierKind::Lr);
    assert!(matches!(run(ds, &cfg, None), Err(p2pgnn::Error::Config(_))));
}
