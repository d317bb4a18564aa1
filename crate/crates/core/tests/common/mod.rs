#![allow(dead_code)]

use gmatch_core::math::{AffinityPair, DenseMatrix, Permutation, SparseAffinity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

pub fn indicator(mapping: &[usize], n2: usize) -> Vec<f64> {
    let mut x = vec![0.0; mapping.len() * n2];
    for (i, &a) in mapping.iter().enumerate() {
        x[i * n2 + a] = 1.0;
    }
    x
}

/// Dense `xᵀKx`, independent of the sparse code path.
pub fn dense_quadratic(k: &DenseMatrix, x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            s += x[p] * k.get(p, q) * x[q];
        }
    }
    s
}

/// Best and second-best QAP objectives over all permutations.
pub fn brute_force_qap(k: &SparseAffinity) -> (Vec<usize>, f64, f64) {
    let dense = k.to_dense();
    let n = k.n1();
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    let mut second = f64::NEG_INFINITY;
    for perm in permutations(n) {
        let v = dense_quadratic(&dense, &indicator(&perm, k.n2()));
        if v > best.1 {
            second = best.1;
            best = (perm, v);
        } else if v > second {
            second = v;
        }
    }
    (best.0, best.1, second)
}

/// Random symmetric nonnegative operator with the given pair density.
pub fn random_affinity(n1: usize, n2: usize, density: f64, seed: u64) -> SparseAffinity {
    let mut r = rng(seed);
    let n = n1 * n2;
    let unary = (0..n).map(|_| r.gen::<f64>()).collect();
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if r.gen::<f64>() < density {
                let value = r.gen::<f64>();
                pairs.push(AffinityPair { p, q, value });
                pairs.push(AffinityPair { p: q, q: p, value });
            }
        }
    }
    SparseAffinity::new(n1, n2, unary, pairs).unwrap()
}

pub fn perm(mapping: Vec<usize>) -> Permutation {
    let n = mapping.len();
    Permutation::new(mapping, n).unwrap()
}
