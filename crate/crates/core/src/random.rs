//! Seeded random real-symmetric series, used by the instance factory and the
//! property suites.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::series::{MultiDegree, TFSeries, WaveVector};

/// Support and size of a random series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesShape {
    pub min_degree: usize,
    pub max_degree: usize,
    /// Bound on `|k|₁`.
    pub max_mode: usize,
    /// Number of conjugate pairs drawn.
    pub terms: usize,
    /// Bound on the modulus of each coefficient.
    pub amplitude: f64,
    /// Forbid `k = 0` terms.
    pub zero_average: bool,
}

fn random_exponents<R: Rng>(dim: usize, deg: usize, rng: &mut R) -> Vec<u32> {
    let mut e = vec![0u32; dim];
    for _ in 0..deg {
        e[rng.gen_range(0..dim)] += 1;
    }
    e
}

fn random_mode<R: Rng>(dim: usize, max_mode: usize, nonzero: bool, rng: &mut R) -> Vec<i32> {
    loop {
        let mut k = vec![0i32; dim];
        let budget = rng.gen_range(0..=max_mode);
        for _ in 0..budget {
            let i = rng.gen_range(0..dim);
            k[i] += if rng.gen_bool(0.5) { 1 } else { -1 };
        }
        let l1: i32 = k.iter().map(|c| c.abs()).sum();
        if l1 as usize <= max_mode && !(nonzero && l1 == 0) {
            return k;
        }
    }
}

/// Draws a real-symmetric series: every `(j, k)` term comes with its
/// conjugate partner at `(j, −k)`.
pub fn random_series<R: Rng>(dim: usize, cap: usize, shape: &SeriesShape, rng: &mut R) -> TFSeries {
    assert!(shape.min_degree <= shape.max_degree);
    assert!(!shape.zero_average || shape.max_mode > 0);
    let mut s = TFSeries::zero(dim, cap);
    for _ in 0..shape.terms {
        let deg = rng.gen_range(shape.min_degree..=shape.max_degree);
        let j = MultiDegree::new(&random_exponents(dim, deg, rng));
        let k = random_mode(dim, shape.max_mode, shape.zero_average, rng);
        let wave = WaveVector::new(&k);
        let r = shape.amplitude * rng.gen_range(0.1..1.0);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let c = Complex64::from_polar(r, phase);
        if wave.is_zero() {
            s.add_term(j, wave, Complex64::new(c.re, 0.0));
        } else {
            s.add_term(j, wave, c);
            s.add_term(j, wave.neg(), c.conj());
        }
    }
    s.prune();
    s
}
