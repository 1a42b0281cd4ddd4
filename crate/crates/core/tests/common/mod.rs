#![allow(dead_code)]

use fwheb::geometry::{FeasibleSet, MatrixSpec};
use fwheb::objectives::Objective;
use fwheb::Vector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SET_KINDS: [&str; 5] = ["ball", "ellipsoid", "level_set_quadratic", "lp_ball", "simplex"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random symmetric positive definite matrix `A^T A + shift I`.
pub fn random_spd(dim: usize, shift: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..dim)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| (0..dim).map(|k| a[k][i] * a[k][j]).sum::<f64>() + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect()
}

/// A random instance of the named set kind.
pub fn random_set(kind: &str, dim: usize, seed: u64) -> FeasibleSet {
    let mut r = rng(seed);
    let center: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    match kind {
        "ball" => FeasibleSet::ball(center, r.random_range(0.2..3.0)).unwrap(),
        "ellipsoid" => {
            let diag = (0..dim).map(|_| r.random_range(0.25..4.0)).collect();
            FeasibleSet::ellipsoid(center, MatrixSpec::Diagonal(diag), r.random_range(0.5..2.0)).unwrap()
        }
        "level_set_quadratic" => {
            let q = random_spd(dim, 0.5, &mut r);
            FeasibleSet::level_set_quadratic(center, MatrixSpec::Dense(q), r.random_range(0.5..2.0)).unwrap()
        }
        "lp_ball" => FeasibleSet::lp_ball(dim, r.random_range(0.5..2.0), r.random_range(1.2..=2.0)).unwrap(),
        "simplex" => FeasibleSet::simplex(dim).unwrap(),
        other => panic!("unknown set kind {other}"),
    }
}

pub const OBJECTIVE_KINDS: [&str; 5] = ["linear", "quadratic", "shifted_sq_norm", "power_norm2", "power_norm3"];

pub fn random_objective(kind: &str, dim: usize, seed: u64) -> Objective {
    let mut r = rng(seed);
    let v: Vec<f64> = (0..dim).map(|_| r.random_range(-2.0..2.0)).collect();
    match kind {
        "linear" => Objective::linear(v).unwrap(),
        "quadratic" => Objective::quadratic(random_spd(dim, 0.0, &mut r), v).unwrap(),
        "shifted_sq_norm" => Objective::shifted_sq_norm(v).unwrap(),
        "power_norm2" => Objective::power_norm(v, 2).unwrap(),
        "power_norm3" => Objective::power_norm(v, 3).unwrap(),
        other => panic!("unknown objective kind {other}"),
    }
}

pub fn v(xs: &[f64]) -> Vector {
    Vector::from_vec(xs.to_vec())
}
