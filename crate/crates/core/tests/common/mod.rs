#![allow(dead_code)]

use bnf_core::engine::{random_instance, FactoryInstance, NormalFormProfile};
use bnf_core::random::SeriesShape;
use bnf_core::QuadraticForm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FACTORY_CAP: usize = 17;

/// Instance with known `b_2`, `b_3` built from a seeded generator.
pub struct Case {
    pub seed: u64,
    pub dim: usize,
    pub instance: FactoryInstance,
}

#[allow(clippy::needless_range_loop)]
pub fn random_omega(dim: usize, rng: &mut ChaCha8Rng) -> QuadraticForm {
    loop {
        let mut rows = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            let mag = rng.gen_range(0.5..2.5);
            rows[i][i] = if rng.gen_bool(0.3) { -mag } else { mag };
            for j in 0..i {
                let x = if rng.gen_bool(0.5) { rng.gen_range(-0.4..0.4) } else { 0.0 };
                rows[i][j] = x;
                rows[j][i] = x;
            }
        }
        if let Ok(q) = QuadraticForm::new(&rows) {
            return q;
        }
    }
}

pub fn factory_case(dim: usize, seed: u64) -> Case {
    factory_case_with_cap(dim, seed, FACTORY_CAP)
}

pub fn factory_case_with_cap(dim: usize, seed: u64, cap: usize) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000);
    let omega = random_omega(dim, &mut rng);
    let b = vec![rng.gen_range(-0.3..0.3), rng.gen_range(-0.1..0.1)];
    let profile = NormalFormProfile::new(omega, b);
    let shape = SeriesShape {
        min_degree: 2,
        max_degree: 4,
        max_mode: 4,
        terms: 3,
        amplitude: 0.05,
        zero_average: true,
    };
    let instance = random_instance(&profile, &shape, cap, seed).expect("factory instance");
    Case { seed, dim, instance }
}

/// The factory suite: 12 instances with `d = 1` and 12 with `d = 2`.
pub fn factory_suite() -> Vec<Case> {
    let mut out = Vec::new();
    for dim in [1, 2] {
        for i in 0..12 {
            out.push(factory_case(dim, 1000 * dim as u64 + i));
        }
    }
    out
}
