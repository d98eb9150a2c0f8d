use std::collections::BTreeMap;

use super::{degree_scales, HamiltonianState};
use crate::error::Result;
use crate::homology::{solve_homological_with, HomologyOptions, QuadraticForm};
use crate::lie::lie_pullback;
use crate::series::{ActionPolynomial, TFSeries};

#[derive(Clone, Debug)]
pub struct OracleResult {
    /// θ-independent part of the normalized Hamiltonian, degrees `[2, cap]`.
    pub normal_form: ActionPolynomial,
    /// One generator per eliminated degree, in order; degree `t − 1` for target `t`.
    pub generators: Vec<TFSeries>,
    /// Largest `k ≠ 0` coefficient left after elimination, relative to its degree's scale.
    pub leftover: f64,
    pub max_residue: f64,
}

/// Classical elimination: for `t = 3, 4, …, cap` remove the `k ≠ 0` part of
/// degree `t` with a generator of degree `t − 1` and conjugate.
pub fn classical_oracle(h: &TFSeries, omega: &QuadraticForm, cap: usize, tol: f64) -> Result<OracleResult> {
    HamiltonianState::initial(h, omega)?;
    let mut cur = h.with_cap(cap);
    let mut generators = Vec::new();
    let mut max_residue: f64 = 0.0;
    let mut scales = degree_scales(&cur, &BTreeMap::new());
    for t in 3..=cap {
        let block = cur.degree_block(t);
        let q = block.oscillating();
        if q.is_empty() {
            continue;
        }
        let opts = HomologyOptions {
            tol,
            strict: true,
            reference: scales.get(&t).copied().unwrap_or(0.0),
        };
        let sol = solve_homological_with(omega, &q.neg(), &opts)?;
        max_residue = max_residue.max(sol.max_residue());
        if sol.f.is_empty() {
            continue;
        }
        cur = lie_pullback(&cur, &sol.f, cap)?;
        scales = degree_scales(&cur, &scales);
        generators.push(sol.f);
    }
    let mut leftover: f64 = 0.0;
    for t in 0..=cap {
        let block = cur.degree_block(t);
        let osc = block.oscillating().max_abs();
        if osc > 0.0 {
            leftover = leftover.max(osc / block.max_abs());
        }
    }
    Ok(OracleResult {
        normal_form: cur.mode_zero(),
        generators,
        leftover,
        max_residue,
    })
}
