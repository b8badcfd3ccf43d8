//! Helpers shared by the integration tests: seeded random instances and
//! exact rational reference implementations.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use psp::models::argmax_preclassify;
use psp::{ClassLabel, GroupPartition, ScoreMatrix};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// A score on the grid `{0, 1/q, ..., 1}` with `q` a power of two, so that
/// the values and `x³ + x` are exact in binary floating point.
pub fn grid_score<R: Rng>(rng: &mut R, q: u32) -> f64 {
    rng.random_range(0..=q) as f64 / q as f64
}

pub fn grid<R: Rng>(rng: &mut R) -> u32 {
    [4, 16, 1024][rng.random_range(0..3)]
}

/// Rows whose true-label column tends to score higher.
pub fn scored_rows<R: Rng>(rng: &mut R, n: usize, k: usize, q: u32) -> (ScoreMatrix, Vec<ClassLabel>) {
    let mut data = Vec::with_capacity(n * k);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let y = rng.random_range(0..k);
        for c in 0..k {
            let mut v = grid_score(rng, q);
            if c == y {
                v = v.max(grid_score(rng, q));
            }
            data.push(v);
        }
        truth.push(ClassLabel::from_index(y));
    }
    (ScoreMatrix::new(k, data).unwrap(), truth)
}

pub fn random_partition<R: Rng>(rng: &mut R, k: usize, alpha_hi: f64) -> GroupPartition {
    let g = rng.random_range(1..=k);
    let mut labels: Vec<u32> = (1..=k as u32).collect();
    labels.shuffle(rng);
    let mut groups = vec![Vec::new(); g];
    for (i, &l) in labels.iter().enumerate() {
        let slot = if i < g { i } else { rng.random_range(0..g) };
        groups[slot].push(l);
    }
    let alphas: Vec<f64> = (0..g).map(|_| rng.random_range(0.02..alpha_hi)).collect();
    GroupPartition::new(&groups, &alphas, k).unwrap()
}

pub struct Instance {
    pub k: usize,
    pub target: ScoreMatrix,
    pub holdout: ScoreMatrix,
    pub pre_target: Vec<ClassLabel>,
    pub pre_holdout: Vec<ClassLabel>,
    pub truth: Vec<ClassLabel>,
    pub partition: GroupPartition,
}

/// `m, n ≤ max_rows`, `K ≤ 6`, random partition and levels below `alpha_hi`.
pub fn random_instance(seed: u64, max_rows: usize, alpha_hi: f64) -> Instance {
    let mut r = rng(seed);
    let k = r.random_range(2..=6);
    let qn = grid(&mut r);
    let m = r.random_range(1..=max_rows);
    let n = r.random_range(1..=max_rows);
    let (target, _) = scored_rows(&mut r, m, k, qn);
    let (holdout, truth) = scored_rows(&mut r, n, k, qn);
    let partition = random_partition(&mut r, k, alpha_hi);
    Instance {
        k,
        pre_target: argmax_preclassify(&target, seed ^ 1),
        pre_holdout: argmax_preclassify(&holdout, seed ^ 2),
        target,
        holdout,
        truth,
        partition,
    }
}

/// Largest `l` with `sorted[l-1] <= l · c` over exact rationals, scanning
/// every index.
pub fn step_up_scan(sorted: &[BigRational], c: &BigRational) -> Option<usize> {
    (1..=sorted.len())
        .filter(|&l| sorted[l - 1] <= c * BigRational::from_integer(BigInt::from(l)))
        .max()
}

/// Conformal p-value `(1 + #{r >= s}) / (1 + |r|)` as an exact rational.
pub fn pvalue_ref(s: f64, residuals: &[f64]) -> BigRational {
    let count = residuals.iter().filter(|&&r| r >= s).count() as u64;
    q(1 + count, 1 + residuals.len() as u64)
}

pub fn to_big(r: psp::exact::Ratio) -> BigRational {
    q(r.num, r.den)
}

pub fn one() -> BigRational {
    BigRational::one()
}

pub fn zero() -> BigRational {
    BigRational::zero()
}
