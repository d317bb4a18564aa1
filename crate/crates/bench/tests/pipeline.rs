use gmatch_bench::{
    read_rows, run_experiment, run_experiment_with, test_split, Ablation, AffinitySource, Aggregates, DatasetSpec,
    ExperimentConfig, LearnedModel, SolverChoice,
};
use gmatch_core::affinity::{assemble_affinity, objective};
use gmatch_core::nn::Predictor;

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn dataset(n: usize, noise: Vec<f64>, instances: usize) -> DatasetSpec {
    DatasetSpec {
        n,
        noise_levels: noise,
        instances,
        ..Default::default()
    }
}

#[test]
fn zero_noise_handcrafted_instances_are_solved_exactly() {
    let cfg = ExperimentConfig {
        dataset: dataset(6, vec![0.0], 10),
        ..Default::default()
    };
    for inst in test_split(&cfg.dataset).unwrap() {
        let pair = &inst.pair;
        let k = assemble_affinity(&pair.g1, &pair.g2, &cfg.handcrafted).unwrap();
        let gt = objective(&k, &pair.ground_truth.to_indicator(6)).unwrap();
        for p in permutations(6) {
            if p != pair.ground_truth.mapping() {
                let mut x = vec![0.0; 36];
                p.iter().enumerate().for_each(|(i, &a)| x[i * 6 + a] = 1.0);
                assert!(objective(&k, &x).unwrap() < gt);
            }
        }
    }
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.mean_accuracy(), 1.0);
}

/// One untrained network is a fixed function whose accuracy varies a lot
/// between initializations, so chance level is checked on the mean over
/// initializations against the spread between them.
#[test]
fn untrained_predictor_without_solver_is_near_chance() {
    let n = 8;
    let mut cfg = ExperimentConfig {
        dataset: dataset(n, vec![0.03], 40),
        affinity: AffinitySource::Learned,
        ablation: Ablation::Wps,
        ..Default::default()
    };
    cfg.output.checkpoint = Some("unused.json".into());
    let accs: Vec<f64> = (0..20)
        .map(|seed| {
            let predictor = Predictor::new(&cfg.predictor, 16).unwrap();
            let store = predictor.init_params(seed).unwrap();
            let model = LearnedModel { predictor, store };
            run_experiment_with(&cfg, Some(&model)).unwrap().mean_accuracy()
        })
        .collect();
    let m = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / m;
    let se = (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt();
    let chance = 1.0 / n as f64;
    assert!((mean - chance).abs() < 3.0 * se, "mean {mean}, standard error {se}");
    assert!(mean < 0.3, "{mean}");
}

#[test]
fn reruns_and_worker_counts_give_identical_rows() {
    for solver in SolverChoice::ALL {
        let mut cfg = ExperimentConfig {
            dataset: dataset(7, vec![0.0, 0.04], 6),
            solver,
            workers: 1,
            ..Default::default()
        };
        let a = run_experiment(&cfg).unwrap().rows_csv().unwrap();
        cfg.workers = 3;
        let b = run_experiment(&cfg).unwrap().rows_csv().unwrap();
        assert_eq!(a, b, "{}", solver.name());
        assert_eq!(a.lines().count(), 13);
    }
}

#[test]
fn aggregates_are_recomputable_from_emitted_rows() {
    let cfg = ExperimentConfig {
        dataset: dataset(8, vec![0.0, 0.05, 0.1], 5),
        solver: SolverChoice::Rrwm,
        ..Default::default()
    };
    let report = run_experiment(&cfg).unwrap();
    let rows = read_rows(&report.rows_csv().unwrap()).unwrap();
    let recomputed = Aggregates::from_rows(&rows);
    assert_eq!(recomputed, report.aggregates);
    let by_hand = rows.iter().map(|r| r.accuracy).sum::<f64>() / rows.len() as f64;
    assert!((by_hand - report.mean_accuracy()).abs() < 1e-12);
    let summary: serde_json::Value = serde_json::from_str(&report.summary_json().unwrap()).unwrap();
    assert_eq!(summary["aggregates"]["instances"], 15);
    assert!(summary["version"].as_str().unwrap().starts_with("gmatch-bench"));
}

#[test]
fn learned_source_without_checkpoint_fails_before_work() {
    let cfg = ExperimentConfig {
        affinity: AffinitySource::Learned,
        ..Default::default()
    };
    assert!(matches!(run_experiment(&cfg), Err(gmatch_bench::BenchError::Config(_))));
}
