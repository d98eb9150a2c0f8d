//! Constants of the Newton iteration and the inequality ledger behind its
//! convergence argument.
//!
//! `κ = d + 6`, `b = 2^{−(κ+3)}`, `δ_0 = ρ_0 2^{−(κ+6)}`, `δ_{n+1} = δ_n/2`,
//! `q_n = (2b)^{2^{−(n+1)}}`, `ρ_{n+1} = (ρ_n − 3δ_n) q_n`, `m_n = 2ⁿ + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default horizon; `δ_n` and `ρ_n` reach double-precision floors near there.
pub const DEFAULT_HORIZON: usize = 64;

/// Normalized degree after `n` steps, `2ⁿ + 1`.
pub fn normalized_degree(n: usize) -> usize {
    (1usize << n) + 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSchedule {
    pub dim: usize,
    pub rho0: f64,
    pub kappa: i32,
    pub b: f64,
    pub horizon: usize,
    pub delta: Vec<f64>,
    pub q: Vec<f64>,
    pub rho: Vec<f64>,
    pub m: Vec<usize>,
}

impl ConstantsSchedule {
    /// Materializes every sequence for `n = 0..=horizon`.
    pub fn build(dim: usize, rho0: f64, horizon: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dim must be at least 1".into()));
        }
        if !(rho0 > 0.0 && rho0 <= 1.0) {
            return Err(Error::InvalidArgument(format!("rho0 must lie in (0, 1], got {rho0}")));
        }
        if horizon == 0 || horizon > 62 {
            return Err(Error::InvalidArgument(format!("horizon must lie in 1..=62, got {horizon}")));
        }
        let kappa = dim as i32 + 6;
        let b = 2f64.powi(-(kappa + 3));
        let delta0 = rho0 * 2f64.powi(-(kappa + 6));
        let delta: Vec<f64> = (0..=horizon).map(|n| delta0 * 2f64.powi(-(n as i32))).collect();
        let q: Vec<f64> = (0..=horizon)
            .map(|n| (2.0 * b).powf(2f64.powi(-(n as i32 + 1))))
            .collect();
        let mut rho = Vec::with_capacity(horizon + 1);
        rho.push(rho0);
        for n in 0..horizon {
            rho.push((rho[n] - 3.0 * delta[n]) * q[n]);
        }
        let m = (0..=horizon).map(normalized_degree).collect();
        Ok(ConstantsSchedule {
            dim,
            rho0,
            kappa,
            b,
            horizon,
            delta,
            q,
            rho,
            m,
        })
    }

    /// `δ_n^κ`, the remainder budget at step `n`.
    pub fn remainder_budget(&self, n: usize) -> f64 {
        self.delta[n].powi(self.kappa)
    }

    /// `ln q_n = 2^{−(n+1)} ln(2b)`; exact up to one rounding.
    fn ln_q(&self, n: usize) -> f64 {
        (2.0 * self.b).ln() * 2f64.powi(-(n as i32 + 1))
    }
}

/// The five inequality families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `6δ_0 < bρ_0`
    ShrinkBudget,
    /// `ρ_n > bρ_0`
    RadiusFloor,
    /// `Π_{j≤n} q_j ≥ 2b`
    ProductFloor,
    /// `q_n^{m_{n+1}+1} < 2b`
    RemainderGain,
    /// `Σ_{j≥n} δ_j = 2^{1−n} δ_0`
    DeltaTail,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::ShrinkBudget,
        Family::RadiusFloor,
        Family::ProductFloor,
        Family::RemainderGain,
        Family::DeltaTail,
    ];
}

/// One checked inequality: `lhs` against `rhs` at step `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub family: Family,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub rows: Vec<LedgerRow>,
}

impl Ledger {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn family(&self, f: Family) -> impl Iterator<Item = &LedgerRow> {
        self.rows.iter().filter(move |r| r.family == f)
    }
}

/// Checks each family for `n = 0..horizon`. Families involving `q_n` powers are
/// compared in the logarithm, where the margins (`~2^{−n}` relative) survive
/// floating point.
pub fn check_convergence_chain(s: &ConstantsSchedule) -> Ledger {
    let mut rows = Vec::with_capacity(5 * s.horizon);
    let ln_2b = (2.0 * s.b).ln();
    let mut ln_prod = 0.0;
    for n in 0..s.horizon {
        rows.push(LedgerRow {
            family: Family::ShrinkBudget,
            n,
            lhs: 6.0 * s.delta[0],
            rhs: s.b * s.rho0,
            pass: 6.0 * s.delta[0] < s.b * s.rho0,
        });
        rows.push(LedgerRow {
            family: Family::RadiusFloor,
            n,
            lhs: s.rho[n],
            rhs: s.b * s.rho0,
            pass: s.rho[n] > s.b * s.rho0,
        });
        ln_prod += s.ln_q(n);
        rows.push(LedgerRow {
            family: Family::ProductFloor,
            n,
            lhs: ln_prod,
            rhs: ln_2b,
            pass: ln_prod >= ln_2b,
        });
        let ln_gain = (s.m[n + 1] + 1) as f64 * s.ln_q(n);
        rows.push(LedgerRow {
            family: Family::RemainderGain,
            n,
            lhs: ln_gain,
            rhs: ln_2b,
            pass: ln_gain < ln_2b,
        });
        // tail summed 64 halvings past n; the omitted remainder is below 2^{-64} relative
        let tail: f64 = (n..n + 64).map(|j| s.delta[0] * 2f64.powi(-(j as i32))).sum();
        let closed = 2f64.powi(1 - n as i32) * s.delta[0];
        rows.push(LedgerRow {
            family: Family::DeltaTail,
            n,
            lhs: tail,
            rhs: closed,
            pass: (tail - closed).abs() <= 1e-15 * closed,
        });
    }
    Ledger { rows }
}

/// Majorant recursion `S_1 = P_1`, `S_j = P_j + Σ_{i=1}^{j−1} 4^{−i} S_{j−i}`.
///
/// Evaluated in linear time through the running tail
/// `A_{j+1} = (S_j + A_j)/4` with `A_j = Σ_{i≥1} 4^{−i} S_{j−i}`.
pub fn majorant_recursion(p: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if let Some(bad) = p.iter().find(|&&x| !(0.0..=epsilon).contains(&x)) {
        return Err(Error::InvalidArgument(format!("P entry {bad} outside [0, epsilon]")));
    }
    let mut s = Vec::with_capacity(p.len());
    let mut tail = 0.0;
    for &pj in p {
        let sj = pj + tail;
        tail = (sj + tail) / 4.0;
        s.push(sj);
    }
    Ok(s)
}
