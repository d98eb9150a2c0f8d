use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::a3::{verify_a3_with_scales, A3Report};
use super::{HamiltonianState, NormalFormProfile, Profile};
use crate::error::{Error, Result};
use crate::homology::{solve_homological_with, HomologyOptions, QuadraticForm};
use crate::lie::{flow_coordinates, lie_pullback};
use crate::schedule::{majorant_recursion, normalized_degree, ConstantsSchedule};
use crate::series::{DomainBox, TFSeries, WaveVector};

/// Everything a step needs besides the state.
#[derive(Clone, Debug)]
pub struct StepContext<'a> {
    pub omega: &'a QuadraticForm,
    pub profile: &'a Profile,
    pub cap: usize,
    /// Relative divisibility tolerance of the homological solves and of the
    /// structural identity.
    pub tol: f64,
    pub strict: bool,
    /// Relative tolerance of the `B(N_0)` fit.
    pub a3_tol: f64,
    /// Supplies `ρ_n`, `δ_n`, `κ`; must reach index `n + 1`.
    pub schedule: &'a ConstantsSchedule,
    /// Fixed box for norms comparable across steps.
    pub diag: DomainBox,
}

/// Norms of one step. Unless stated otherwise they are majorant norms on the
/// schedule box `(ρ_n, ρ_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepNorms {
    pub rho: f64,
    pub delta: f64,
    /// `δ_n^κ`
    pub budget: f64,
    /// `δ_{n+1}^κ`
    pub budget_next: f64,
    pub remainder: f64,
    /// `|R̃_{n+1}|` on `(ρ_{n+1}, ρ_{n+1})`.
    pub remainder_next: f64,
    /// `|R̃_{n+1}|` on `(ρ_n − 3δ_n, ρ_n − 3δ_n)`.
    pub remainder_next_inner: f64,
    pub remainder_diag: f64,
    pub remainder_next_diag: f64,
    /// `P_j = |R^{[m+j]}| + |N^{[m+j]}|`, `j = 1..m−1`.
    pub p: Vec<f64>,
    /// `T_j = |{N_0, F^{[m+j−1]}}|`, `j = 1..m−1`.
    pub t: Vec<f64>,
    /// Recursion majorants `S_j` built from `P`.
    pub s: Vec<f64>,
    /// `(degree, |N^{[degree]}|_{ρ_n})` over `[m_n + 1, m_{n+1}]`.
    pub normal_window: Vec<(usize, f64)>,
    /// `(s, |g_s|_{ρ_n})` for `s = 3..m_n`.
    pub g: Vec<(usize, f64)>,
    pub c_direct: f64,
    pub c_formula: f64,
    /// Largest coefficient difference between the two `C_n` routes, relative
    /// to their largest coefficient.
    pub c_route_diff: f64,
    /// `(1/3) Σ_k 4^{−(k+1)} T_{m−k}`
    pub c_bound_measured: f64,
    /// `(1/3) Σ_k 4^{−(k+1)} S_{m−k}`
    pub c_bound_recursion: f64,
    /// Deviation of `Φ_n` and `Φ_n^{−1}` from the identity on `(ρ_n − 3δ_n, ρ_n − 3δ_n)`.
    pub phi: f64,
    pub phi_inverse: f64,
    pub phi_diag: f64,
    /// Largest `k ≠ 0` coefficient left in degrees `≤ m_{n+1}`, relative to its degree's scale.
    pub leftover: f64,
    pub max_residue: f64,
}

/// Hypotheses and conclusions of the step estimates, evaluated on the measured norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFlags {
    /// `|R̃_n| ≤ δ_n^κ`
    pub remainder_budget: bool,
    /// `|N^{[m_n+j]}|_{ρ_n} < δ_n^{κ+1}` over the window.
    pub est_n: bool,
    /// `|g_s|_{ρ_n} ≤ 4^{−s}`, `s = 3..m_n`.
    pub est_g: bool,
    /// `|R̃_{n+1}|_{ρ_{n+1}} ≤ δ_{n+1}^κ`
    pub est_rn: bool,
    /// `|R̃_{n+1}|_{ρ_n−3δ_n} < 4δ_n^κ`
    pub est_rn_inner: bool,
    /// Both coordinate deviations `< δ_n`.
    pub est_phi: bool,
    /// `|C_n| ≤ (1/3) Σ 4^{−(k+1)} T_{m−k} ≤ (1/3) Σ 4^{−(k+1)} S_{m−k}`;
    /// `None` when `est_g` fails.
    pub c_bound: Option<bool>,
    /// `|C_n| ≤ δ_n^κ`
    pub c_budget: bool,
    /// `T_j ≤ S_j` for every `j`; `None` when `est_g` fails.
    pub s_bound: Option<bool>,
    /// No `k ≠ 0` content survives in degrees `≤ m_{n+1}`.
    pub structural: bool,
    pub a3: bool,
}

impl StepFlags {
    /// Every hypothesis and conclusion of the step holds.
    pub fn compliant(&self) -> bool {
        self.remainder_budget
            && self.est_n
            && self.est_g
            && self.est_rn
            && self.est_rn_inner
            && self.est_phi
            && self.c_bound == Some(true)
            && self.c_budget
            && self.s_bound == Some(true)
            && self.structural
            && self.a3
    }
}

#[derive(Clone, Debug)]
pub struct NewtonStepReport {
    pub n: usize,
    pub m: usize,
    pub m_next: usize,
    /// `F_n`, degrees `[m_n, m_{n+1} − 1]`, no `k = 0` keys.
    pub generator: TFSeries,
    pub state: HamiltonianState,
    /// `k ≠ 0` terms of degree `≤ m_{n+1}` dropped from `H_n ∘ Φ_n`; roundoff.
    pub leftover: TFSeries,
    /// `{N_n, F_n}^{[>m_{n+1}]}`
    pub c_direct: TFSeries,
    /// `Σ_k (Σ_{s=k+2}^m g_s) {N_0, F^{[2m−1−k]}}`
    pub c_formula: TFSeries,
    pub norms: StepNorms,
    pub flags: StepFlags,
    pub a3: A3Report,
    /// Largest difference between the absorbed `k = 0` parts and the
    /// normal-form terms of `H_n ∘ Φ_n`.
    pub absorbed_mismatch: f64,
    /// Largest difference between the extracted normal form and the prescribed one.
    pub profile_mismatch: Option<f64>,
    /// Worst obstruction recorded in permissive mode.
    pub obstruction: Option<(WaveVector, usize, f64)>,
}

/// One degree-doubling step `H_{n+1} = H_n ∘ X_{F_n}^1`.
///
/// For `j = 1..m−1` (with `m = m_n`) the unknown `Y_j = {N_0, F^{[m+j−1]}}`
/// satisfies `Y_j = N^{[m+j]} − X_j` with
/// `X_j = R^{[m+j]} + Σ_{i<j} {N^{[j−i+2]}, F^{[m+i−1]}}`, where the bracket
/// is `g_{j−i+2} Y_i` for a prescribed profile. The `k = 0` part of `X_j` is
/// `N^{[m+j]}`; the rest is handed to the homological solver.
pub fn newton_step(state: &HamiltonianState, ctx: &StepContext) -> Result<NewtonStepReport> {
    let omega = ctx.omega;
    let d = omega.dim();
    let cap = ctx.cap;
    let n = state.n;
    let m = state.m();
    let m_next = normalized_degree(n + 1);
    if cap < m_next {
        return Err(Error::DegreeBudgetExceeded { needed: m_next, cap });
    }
    if ctx.schedule.horizon < n + 1 {
        return Err(Error::InvalidArgument(format!(
            "schedule horizon {} does not reach step {}",
            ctx.schedule.horizon,
            n + 1
        )));
    }
    if state.dim() != d {
        return Err(Error::DimensionMismatch(state.dim(), d));
    }
    let sched = ctx.schedule;
    let box_n = DomainBox::square(sched.rho[n])?;
    let box_next = DomainBox::square(sched.rho[n + 1])?;
    let inner_r = sched.rho[n] - 3.0 * sched.delta[n];
    let box_inner = DomainBox::square(inner_r)?;

    let n0 = omega.n0(cap);
    let prescribed = match ctx.profile {
        Profile::Prescribed(p) => {
            if p.omega != *omega {
                return Err(Error::InvalidArgument("profile and instance disagree on omega".into()));
            }
            Some(p)
        }
        Profile::Discover => None,
    };

    // triangular system
    let mut y: Vec<TFSeries> = Vec::with_capacity(m - 1);
    let mut parts: Vec<TFSeries> = Vec::with_capacity(m - 1);
    let mut absorbed = TFSeries::zero(d, cap);
    let mut x_scale: BTreeMap<usize, f64> = BTreeMap::new();
    let mut max_residue: f64 = 0.0;
    let mut obstruction = None;
    for j in 1..m {
        let t = m + j;
        let mut x = state.remainder.degree_block(t).with_cap(cap);
        // `x` and the data it came from may be the result of cancellation
        let mut scale = x.max_abs().max(state.data_scales.get(&t).copied().unwrap_or(0.0));
        for i in 1..j {
            let s = j - i + 2;
            let term = match prescribed {
                Some(p) => p.g(s, cap)?.mul(&y[i - 1], cap)?,
                None => state.normal.degree_block(s).poisson_bracket(&parts[i - 1], cap)?,
            };
            scale = scale.max(term.max_abs());
            x = x.add(&term)?;
        }
        x_scale.insert(t, x.coeff_norm());
        absorbed = absorbed.add(&x.mode_zero())?;
        let opts = HomologyOptions {
            tol: ctx.tol,
            strict: ctx.strict,
            reference: scale,
        };
        let sol = solve_homological_with(omega, &x.oscillating().neg(), &opts)?;
        max_residue = max_residue.max(sol.max_residue());
        if obstruction.is_none() {
            obstruction = sol.worst_obstruction;
        }
        let yj = n0.poisson_bracket(&sol.f, cap)?;
        y.push(yj);
        parts.push(sol.f);
    }
    let mut generator = TFSeries::zero(d, cap);
    for p in &parts {
        generator = generator.add(p)?;
    }

    // conjugation and split
    let h = state.hamiltonian().with_cap(cap);
    let h_next = lie_pullback(&h, &generator, cap)?;
    let normal_next = h_next.mode_zero().project_degrees(2, m_next);
    let remainder_next = h_next.project_degrees(m_next + 1, cap);
    let leftover = h_next.oscillating().project_degrees(0, m_next);
    let mut leftover_ratio: f64 = 0.0;
    for t in 0..=m_next {
        let lt = leftover.degree_block(t).max_abs();
        if lt == 0.0 {
            continue;
        }
        let scale = h.degree_block(t).max_abs().max(h_next.degree_block(t).max_abs());
        leftover_ratio = leftover_ratio.max(lt / scale);
    }
    let absorbed_mismatch = absorbed.max_coeff_diff(&normal_next.project_degrees(m + 1, m_next));

    // structure of the normal form
    let a3 = verify_a3_with_scales(&normal_next, omega, ctx.a3_tol, &merged_scales(state, &x_scale));
    let profile_mismatch = match prescribed {
        Some(p) => Some(
            p.normal_form(m_next)?
                .max_coeff_diff(&normal_next.with_cap(m_next)),
        ),
        None => None,
    };
    let fitted;
    let g_profile: &NormalFormProfile = match prescribed {
        Some(p) => p,
        None => {
            let b = (2..=m / 2).map(|j| a3.b(j).unwrap_or(0.0)).collect();
            fitted = NormalFormProfile::new(omega.clone(), b);
            &fitted
        }
    };
    if ctx.strict && !a3.pass {
        if let Some(e) = a3.violation() {
            return Err(e);
        }
    }

    // C_n by both routes
    let c_direct = state
        .normal
        .poisson_bracket(&generator, cap)?
        .project_degrees(m_next + 1, cap);
    let mut c_formula = TFSeries::zero(d, cap);
    for k in 1..m.saturating_sub(1) {
        let mut gsum = TFSeries::zero(d, cap);
        for s in k + 2..=m {
            gsum = gsum.add(&g_profile.g(s, cap)?)?;
        }
        c_formula = c_formula.add(&gsum.mul(&y[m - k - 1], cap)?)?;
    }
    let c_scale = c_direct.max_abs().max(c_formula.max_abs());
    let c_route_diff = if c_scale > 0.0 { c_direct.max_coeff_diff(&c_formula) / c_scale } else { 0.0 };

    // majorant data
    let p: Vec<f64> = (1..m)
        .map(|j| {
            state.remainder.degree_block(m + j).majorant_norm(&box_n)
                + normal_next.degree_block(m + j).majorant_norm(&box_n)
        })
        .collect();
    let t_norms: Vec<f64> = y.iter().map(|s| s.majorant_norm(&box_n)).collect();
    let eps = p.iter().copied().fold(0.0, f64::max);
    let s = if eps > 0.0 { majorant_recursion(&p, eps)? } else { vec![0.0; p.len()] };
    let bound_of = |v: &[f64]| -> f64 {
        (1..m.saturating_sub(1))
            .map(|k| 0.25f64.powi(k as i32 + 1) * v[m - k - 1])
            .sum::<f64>()
            / 3.0
    };
    let c_bound_measured = bound_of(&t_norms);
    let c_bound_recursion = bound_of(&s);
    let g_norms: Vec<(usize, f64)> = (3..=m)
        .map(|s| Ok((s, g_profile.g(s, cap)?.majorant_norm(&box_n))))
        .collect::<Result<_>>()?;
    let normal_window: Vec<(usize, f64)> = (m + 1..=m_next)
        .map(|t| (t, normal_next.degree_block(t).majorant_norm(&box_n)))
        .collect();

    // coordinate changes
    let flow = flow_coordinates(&generator, cap)?;
    let inverse = flow_coordinates(&generator.neg(), cap)?;
    let phi = flow.deviation_norm(&box_inner);
    let phi_inverse = inverse.deviation_norm(&box_inner);
    let phi_diag = flow.deviation_norm(&ctx.diag);

    let budget = sched.remainder_budget(n);
    let budget_next = sched.remainder_budget(n + 1);
    let c_direct_norm = c_direct.majorant_norm(&box_n);
    let norms = StepNorms {
        rho: sched.rho[n],
        delta: sched.delta[n],
        budget,
        budget_next,
        remainder: state.remainder.majorant_norm(&box_n),
        remainder_next: remainder_next.majorant_norm(&box_next),
        remainder_next_inner: remainder_next.majorant_norm(&box_inner),
        remainder_diag: state.remainder.majorant_norm(&ctx.diag),
        remainder_next_diag: remainder_next.majorant_norm(&ctx.diag),
        p,
        t: t_norms,
        s,
        normal_window,
        g: g_norms,
        c_direct: c_direct_norm,
        c_formula: c_formula.majorant_norm(&box_n),
        c_route_diff,
        c_bound_measured,
        c_bound_recursion,
        phi,
        phi_inverse,
        phi_diag,
        leftover: leftover_ratio,
        max_residue,
    };
    let est_g = norms.g.iter().all(|&(s, v)| v <= 0.25f64.powi(s as i32));
    let slack = 1.0 + 1e-12;
    let flags = StepFlags {
        remainder_budget: norms.remainder <= budget,
        est_n: norms
            .normal_window
            .iter()
            .all(|&(_, v)| v < sched.delta[n].powi(sched.kappa + 1)),
        est_g,
        est_rn: norms.remainder_next <= budget_next,
        est_rn_inner: norms.remainder_next_inner < 4.0 * budget,
        est_phi: phi < sched.delta[n] && phi_inverse < sched.delta[n],
        c_bound: est_g.then_some(c_direct_norm <= c_bound_measured * slack && c_bound_measured <= c_bound_recursion * slack),
        c_budget: c_direct_norm <= budget,
        s_bound: est_g.then(|| norms.t.iter().zip(&norms.s).all(|(t, s)| *t <= s * slack)),
        structural: leftover_ratio <= ctx.tol,
        a3: a3.pass,
    };

    let mut scales = state.a3_scales.clone();
    scales.extend(x_scale);
    Ok(NewtonStepReport {
        n,
        m,
        m_next,
        generator,
        state: HamiltonianState {
            n: n + 1,
            normal: normal_next,
            remainder: remainder_next,
            a3_scales: scales,
            data_scales: super::degree_scales(&h_next, &state.data_scales),
        },
        leftover,
        c_direct,
        c_formula,
        norms,
        flags,
        a3,
        absorbed_mismatch,
        profile_mismatch,
        obstruction,
    })
}

fn merged_scales(state: &HamiltonianState, fresh: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let mut out = state.a3_scales.clone();
    out.extend(fresh.iter().map(|(k, v)| (*k, *v)));
    for (deg, v) in &state.data_scales {
        let e = out.entry(*deg).or_insert(0.0);
        *e = e.max(*v);
    }
    out
}
