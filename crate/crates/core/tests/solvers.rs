mod common;

use common::{brute_force_qap, indicator, perm, permutations, random_affinity, rng};
use gmatch_core::affinity::{assemble_affinity, objective, AffinityConfig};
use gmatch_core::graphs::synthesize_pair;
use gmatch_core::math::{sinkhorn, AffinityPair, AssignmentMatrix, SparseAffinity};
use gmatch_core::solver::{
    discretize, discretize_vector, ipfp, probabilistic_solve, rrwm, rrwm_with, spectral_match, RrwmConfig,
    SolverConfig, StopReason,
};
use proptest::prelude::*;
use rand::Rng;

fn zero_noise_instance(n: usize, seed: u64) -> (SparseAffinity, Vec<usize>) {
    let pair = synthesize_pair(n, 0.0, std::f64::consts::FRAC_PI_8, seed).unwrap();
    let k = assemble_affinity(&pair.g1, &pair.g2, &AffinityConfig::default()).unwrap();
    (k, pair.ground_truth.mapping().to_vec())
}

#[test]
fn zero_noise_five_node_pair_is_solved_by_the_probabilistic_solver() {
    for seed in 0..5 {
        let (k, gt) = zero_noise_instance(5, seed);
        let (best, _, _) = brute_force_qap(&k);
        assert_eq!(best, gt, "ground truth is the QAP argmax");
        let (x, _) = probabilistic_solve(&k, &AssignmentMatrix::uniform(5, 5), &SolverConfig::default()).unwrap();
        assert_eq!(discretize(&x).unwrap().mapping(), &gt[..]);
    }
}

#[test]
fn zero_noise_five_node_pair_is_solved_by_rrwm() {
    for seed in 0..5 {
        let (k, gt) = zero_noise_instance(5, seed);
        assert_eq!(brute_force_qap(&k).0, gt);
        let r = rrwm_with(&k, &RrwmConfig::default()).unwrap();
        assert_eq!(discretize_vector(&r.x, 5, 5).unwrap().mapping(), &gt[..]);
    }
}

#[test]
fn ground_truth_start_stops_early_and_stays_put() {
    let n = 6;
    let gt: Vec<usize> = vec![2, 0, 5, 1, 4, 3];
    // Unary mass on the ground truth and pairwise support among its matches.
    let target = indicator(&gt, n);
    let unary = target.iter().map(|t| 0.1 + t).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push(AffinityPair {
                    p: i * n + gt[i],
                    q: j * n + gt[j],
                    value: 1.0,
                });
            }
        }
    }
    let k = SparseAffinity::new(n, n, unary, pairs).unwrap();
    let init = AssignmentMatrix::new(n, n, target.clone()).unwrap();
    let (x, trace) = probabilistic_solve(&k, &init, &SolverConfig::default()).unwrap();
    assert_eq!(trace.stop_reason, StopReason::EarlyStop);
    assert!(trace.iterations() <= 2);
    let drift = x
        .entries()
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift < 0.05, "{drift}");
}

/// With refinement disabled the solver must coincide with an independently
/// written Sinkhorn-projected power iteration.
#[test]
fn unrefined_solver_is_projected_power_iteration() {
    for seed in 0..10 {
        let n = 4;
        let k = random_affinity(n, n, 0.5, seed);
        let cfg = SolverConfig {
            refine_affinity: false,
            stop_eta: 1e-300,
            ..Default::default()
        };
        let mut r = rng(seed + 50);
        let init = AssignmentMatrix::new(n, n, (0..n * n).map(|_| r.gen::<f64>() + 0.05).collect()).unwrap();
        let (x, trace) = probabilistic_solve(&k, &init, &cfg).unwrap();
        let dense = k.to_dense();
        let mut y = init.entries().to_vec();
        for _ in 0..trace.iterations() {
            let z: Vec<f64> = (0..n * n)
                .map(|p| (0..n * n).map(|q| dense.get(p, q) * y[q]).sum())
                .collect();
            y = sinkhorn(
                &AssignmentMatrix::new(n, n, z).unwrap(),
                cfg.sinkhorn_iters,
                cfg.sinkhorn_tol,
                cfg.ratio_floor,
            )
            .unwrap()
            .into_entries();
        }
        assert_eq!(trace.iterations(), cfg.max_iters);
        for (a, b) in x.entries().iter().zip(&y) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(trace.final_row_scale.iter().all(|s| *s == 1.0));
    }
}

#[test]
fn ipfp_keeps_a_locally_optimal_start() {
    for seed in 0..5 {
        let (k, gt) = zero_noise_instance(6, seed);
        let x0 = indicator(&gt, 6);
        let f0 = objective(&k, &x0).unwrap();
        for i in 0..6 {
            for j in i + 1..6 {
                let mut swapped = gt.clone();
                swapped.swap(i, j);
                assert!(objective(&k, &indicator(&swapped, 6)).unwrap() <= f0);
            }
        }
        let r = ipfp(&k, &x0, 50).unwrap();
        assert_eq!(r.x, x0);
    }
}

#[test]
fn ipfp_never_lowers_the_objective() {
    for seed in 0..100 {
        let k = random_affinity(4, 4, 0.4, 1000 + seed);
        let mut r = rng(seed);
        let x0: Vec<f64> = (0..16).map(|_| r.gen::<f64>()).collect();
        let out = ipfp(&k, &x0, 100).unwrap();
        assert!(
            objective(&k, &out.x).unwrap() >= objective(&k, &x0).unwrap() - 1e-12,
            "seed {seed}"
        );
    }
}

#[test]
fn rrwm_without_jumps_follows_the_principal_direction() {
    for seed in 0..5 {
        let k = random_affinity(3, 3, 0.6, 300 + seed);
        let walk = rrwm(&k, 0.0, 30.0, 5000).unwrap();
        let spec = spectral_match(&k, 5000).unwrap();
        let dot: f64 = walk.x.iter().zip(&spec.x).map(|(a, b)| a * b).sum();
        let norm: f64 = walk.x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let angle = (dot / norm).clamp(-1.0, 1.0).acos();
        assert!(angle < 1e-6, "seed {seed}: {angle}");
    }
}

#[test]
fn spectral_rayleigh_quotient_is_stationary() {
    for seed in 0..5 {
        let k = random_affinity(4, 4, 0.3, 500 + seed);
        let rq = |x: &[f64]| objective(&k, x).unwrap() / x.iter().map(|v| v * v).sum::<f64>();
        let a = spectral_match(&k, 199).unwrap();
        let b = spectral_match(&k, 200).unwrap();
        assert!((rq(&a.x) - rq(&b.x)).abs() < 1e-8);
    }
}

#[test]
fn strongly_diagonal_sinkhorn_output_discretizes_to_identity() {
    let n = 5;
    let mut r = rng(9);
    let v: Vec<f64> = (0..n * n)
        .map(|p| if p % (n + 1) == 0 { 10.0 } else { r.gen::<f64>() })
        .collect();
    let s = sinkhorn(&AssignmentMatrix::new(n, n, v).unwrap(), 20, 1e-9, 1e-12).unwrap();
    assert_eq!(discretize(&s).unwrap(), perm((0..n).collect()));
}

#[test]
fn every_solver_is_deterministic() {
    let (k, _) = zero_noise_instance(7, 3);
    let u = AssignmentMatrix::uniform(7, 7);
    let cfg = SolverConfig::default();
    assert_eq!(
        probabilistic_solve(&k, &u, &cfg).unwrap(),
        probabilistic_solve(&k, &u, &cfg).unwrap()
    );
    assert_eq!(spectral_match(&k, 50).unwrap(), spectral_match(&k, 50).unwrap());
    assert_eq!(ipfp(&k, u.entries(), 50).unwrap(), ipfp(&k, u.entries(), 50).unwrap());
    let rc = RrwmConfig::default();
    assert_eq!(rrwm_with(&k, &rc).unwrap(), rrwm_with(&k, &rc).unwrap());
}

#[test]
fn brute_force_enumerates_every_permutation_once() {
    let all = permutations(4);
    assert_eq!(all.len(), 24);
    let mut sorted = all.clone();
    sorted.dedup();
    assert_eq!(sorted.len(), 24);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_respects_length_and_stop_invariants(
        n in 2usize..6,
        density in 0.0f64..1.0,
        seed in any::<u64>(),
        max_iters in 1usize..12,
        eta in 1e-9f64..1e-2,
    ) {
        let k = random_affinity(n, n, density, seed);
        let cfg = SolverConfig { max_iters, stop_eta: eta, ..Default::default() };
        let (x, trace) = probabilistic_solve(&k, &AssignmentMatrix::uniform(n, n), &cfg).unwrap();
        prop_assert!(trace.assignments.len() <= max_iters + 1);
        prop_assert_eq!(trace.assignments.len(), trace.iterations() + 1);
        prop_assert_eq!(trace.binary_scores.len(), trace.assignments.len());
        prop_assert_eq!(trace.assignments.last().unwrap(), &x);
        match trace.stop_reason {
            StopReason::EarlyStop => prop_assert!(*trace.step_norms.last().unwrap() < eta),
            StopReason::MaxIters => prop_assert_eq!(trace.iterations(), max_iters),
        }
        // Columns are normalized last; rows are only as tight as the inner cap allows.
        for s in x.col_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
