//! Report documents written by the commands, and their re-checks.

use bnf_core::engine::{verify_a3, NormalFormProfile, StepRecord};
use bnf_core::schedule::{check_convergence_chain, normalized_degree, Ledger};
use bnf_core::{ConstantsSchedule, QuadraticForm, Result, TFSeries, Term};
use serde::{Deserialize, Serialize};

use crate::instance::{ModeSpec, ProfileSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest coefficient difference accepted between two normal forms.
pub const MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub dim: usize,
    pub omega: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub degree_cap: usize,
    pub seed: Option<u64>,
    pub hamiltonian_terms: usize,
    pub from_generator: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedB {
    pub j: usize,
    pub b: f64,
}

/// Comparison with the normal form an instance was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Degrees compared, `[2, max_degree]`.
    pub max_degree: usize,
    pub max_coeff_diff: f64,
    pub max_b_rel_diff: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub steps: usize,
    pub mode: ModeSpec,
    pub profile: ProfileSpec,
    pub rho0: f64,
    pub tol: f64,
    pub a3_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub m_sequence: Vec<usize>,
    pub scale_exponent: Option<u32>,
    pub compliant: Option<bool>,
    pub steps: Vec<StepRecord>,
    /// Final `N_n` in the original variables.
    pub normal_form: Vec<Term>,
    pub b: Vec<FittedB>,
    pub remainder_min_degree: Option<usize>,
    pub remainder_terms: usize,
    pub ground_truth: Option<GroundTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSummary {
    pub degree: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffDiff {
    pub j: Vec<u32>,
    pub k: Vec<i32>,
    pub oracle: [f64; 2],
    pub run: [f64; 2],
    pub diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub max_degree: usize,
    pub coefficients: Vec<CoeffDiff>,
    pub max_diff: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub degree: usize,
    pub normal_form: Vec<Term>,
    pub b: Vec<FittedB>,
    pub generators: Vec<GeneratorSummary>,
    pub leftover: f64,
    pub max_residue: f64,
    pub ground_truth: Option<GroundTruth>,
    pub comparison: Option<Comparison>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOutput {
    pub dim: usize,
    pub rho0: f64,
    pub horizon: usize,
    pub kappa: i32,
    pub b: f64,
    pub delta0: f64,
    pub all_pass: bool,
    pub ledger: Ledger,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
    Obstruction,
    A3Violation,
    HypothesisFailure,
    ScheduleFailure,
    Mismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "command")]
pub enum Body {
    Run {
        settings: Option<RunSettings>,
        instance: Option<InstanceSummary>,
        result: Option<RunResult>,
    },
    Oracle {
        instance: Option<InstanceSummary>,
        result: Option<OracleOutput>,
    },
    Schedule {
        result: Option<ScheduleOutput>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub status: Status,
    pub exit_code: i32,
    pub error: Option<String>,
    #[serde(flatten)]
    pub body: Body,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `b_j` fitted from a normal form, `j ≥ 2`.
pub fn fitted_b(normal: &TFSeries, omega: &QuadraticForm, tol: f64) -> Vec<FittedB> {
    let fit = verify_a3(normal, omega, tol);
    fit.fits
        .iter()
        .filter(|f| f.degree >= 4)
        .filter_map(|f| f.b.map(|b| FittedB { j: f.degree / 2, b }))
        .collect()
}

/// Compares `normal` with the profile's normal form on degrees `[2, max_degree]`.
pub fn ground_truth(normal: &TFSeries, profile: &NormalFormProfile, max_degree: usize, tol: f64) -> Result<GroundTruth> {
    let truth = profile.normal_form(max_degree)?;
    let got = normal.project_degrees(0, max_degree).with_cap(max_degree);
    let max_coeff_diff = got.max_coeff_diff(&truth);
    let fitted = fitted_b(&got, &profile.omega, tol);
    let max_b_rel_diff = fitted
        .iter()
        .map(|f| {
            let want = profile.b_j(f.j);
            (f.b - want).abs() / want.abs().max(f64::MIN_POSITIVE)
        })
        .reduce(f64::max);
    Ok(GroundTruth {
        max_degree,
        max_coeff_diff,
        max_b_rel_diff,
        pass: max_coeff_diff <= MATCH_TOL,
    })
}

/// Coefficient-by-coefficient diff of two normal forms on degrees `≤ max_degree`.
pub fn compare(oracle: &TFSeries, run: &TFSeries, max_degree: usize) -> Comparison {
    let o = oracle.project_degrees(0, max_degree);
    let r = run.project_degrees(0, max_degree);
    let mut keys: Vec<_> = o.iter().map(|(k, _)| *k).chain(r.iter().map(|(k, _)| *k)).collect();
    keys.sort();
    keys.dedup();
    let dim = oracle.dim();
    let coefficients: Vec<CoeffDiff> = keys
        .iter()
        .map(|key| {
            let a = o.get(key);
            let b = r.get(key);
            CoeffDiff {
                j: key.j().to_vec(dim),
                k: key.k().to_vec(dim),
                oracle: [a.re, a.im],
                run: [b.re, b.im],
                diff: (a - b).norm(),
            }
        })
        .collect();
    let max_diff = coefficients.iter().map(|c| c.diff).fold(0.0, f64::max);
    Comparison {
        max_degree,
        coefficients,
        max_diff,
        pass: max_diff <= MATCH_TOL,
    }
}

pub fn schedule_output(dim: usize, rho0: f64, horizon: usize) -> Result<ScheduleOutput> {
    let s = ConstantsSchedule::build(dim, rho0, horizon)?;
    let ledger = check_convergence_chain(&s);
    Ok(ScheduleOutput {
        dim,
        rho0,
        horizon,
        kappa: s.kappa,
        b: s.b,
        delta0: s.delta[0],
        all_pass: ledger.all_pass(),
        ledger,
    })
}

/// Re-derives what a report states about itself. Returns the list of failed checks.
pub fn verify(report: &Report) -> Vec<String> {
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            bad.push(what);
        }
    };
    check(report.schema_version == SCHEMA_VERSION, format!("schema_version {}", report.schema_version));
    let expected_exit = match report.status {
        Status::Ok => 0,
        Status::Error | Status::Mismatch => 1,
        Status::Obstruction => 2,
        Status::A3Violation => 3,
        Status::HypothesisFailure | Status::ScheduleFailure => 4,
    };
    check(report.exit_code == expected_exit, format!("exit_code {} for status {:?}", report.exit_code, report.status));
    check(
        (report.status == Status::Ok) == report.error.is_none() || report.status == Status::HypothesisFailure,
        "error message inconsistent with status".into(),
    );
    match &report.body {
        Body::Run {
            settings,
            instance,
            result,
        } => {
            if let (Some(settings), Some(instance), Some(result)) = (settings, instance, result) {
                verify_run(settings, instance, result, &mut check);
            } else {
                check(report.status != Status::Ok, "successful run without result".into());
            }
        }
        Body::Oracle { instance, result } => {
            if let (Some(instance), Some(result)) = (instance, result) {
                verify_oracle(instance, result, &mut check);
            } else {
                check(report.status != Status::Ok, "successful oracle without result".into());
            }
        }
        Body::Schedule { result } => match result {
            Some(out) => match schedule_output(out.dim, out.rho0, out.horizon) {
                Ok(fresh) => {
                    check(fresh == *out, "schedule ledger differs from a fresh evaluation".into());
                    check(out.all_pass == out.ledger.all_pass(), "all_pass inconsistent with rows".into());
                    check(out.ledger.rows.len() == 5 * out.horizon, "ledger row count".into());
                }
                Err(e) => check(false, format!("schedule parameters: {e}")),
            },
            None => check(report.status != Status::Ok, "successful schedule without result".into()),
        },
    }
    bad
}

fn series_from(instance: &InstanceSummary, cap: usize, terms: &[Term], what: &str, check: &mut impl FnMut(bool, String)) -> Option<TFSeries> {
    match TFSeries::from_term_list(instance.dim, cap, terms) {
        Ok(s) => Some(s),
        Err(e) => {
            check(false, format!("{what}: {e}"));
            None
        }
    }
}

fn verify_fits(
    instance: &InstanceSummary,
    normal: &TFSeries,
    b: &[FittedB],
    gt: &Option<GroundTruth>,
    tol: f64,
    check: &mut impl FnMut(bool, String),
) {
    let omega = match QuadraticForm::new(&instance.omega) {
        Ok(o) => o,
        Err(e) => return check(false, format!("omega: {e}")),
    };
    let refit = fitted_b(normal, &omega, tol);
    check(refit.len() == b.len(), "number of fitted b".into());
    for (x, y) in refit.iter().zip(b) {
        check(x.j == y.j && (x.b - y.b).abs() <= 1e-12 * y.b.abs().max(1e-300), format!("b_{} does not refit", y.j));
    }
    if let Some(g) = gt {
        check(instance.from_generator, "ground truth without a generator".into());
        let profile = NormalFormProfile::new(omega, instance.b.clone());
        match ground_truth(normal, &profile, g.max_degree, tol) {
            Ok(fresh) => {
                check(
                    (fresh.max_coeff_diff - g.max_coeff_diff).abs() <= 1e-12 * g.max_coeff_diff.max(1e-300) + 1e-300,
                    "ground-truth diff does not recompute".into(),
                );
                check(fresh.pass == g.pass, "ground-truth pass flag".into());
            }
            Err(e) => check(false, format!("ground truth: {e}")),
        }
    }
}

fn verify_run(settings: &RunSettings, instance: &InstanceSummary, r: &RunResult, check: &mut impl FnMut(bool, String)) {
    let steps = settings.steps;
    check(r.steps.len() == steps, format!("{} step records for {steps} steps", r.steps.len()));
    check(
        r.m_sequence == (0..=steps).map(normalized_degree).collect::<Vec<_>>(),
        "m_sequence is not 2^n + 1".into(),
    );
    let schedule = match ConstantsSchedule::build(instance.dim, settings.rho0, steps.max(1) + 1) {
        Ok(s) => s,
        Err(e) => return check(false, format!("schedule: {e}")),
    };
    for rec in &r.steps {
        let n = rec.n;
        let tag = |s: &str| format!("step {n}: {s}");
        check(rec.m == normalized_degree(n) && rec.m_next == normalized_degree(n + 1), tag("normalized degrees"));
        if let Some((lo, hi)) = rec.generator_degrees {
            check(lo >= rec.m && hi < rec.m_next, tag("generator degrees outside [m_n, m_{n+1} - 1]"));
        }
        check(!rec.generator_has_zero_mode, tag("generator has a k = 0 term"));
        if let Some(lo) = rec.remainder_min_degree {
            check(lo > rec.m_next, tag("remainder below degree m_{n+1} + 1"));
        }
        if let Some(hi) = rec.normal_max_degree {
            check(hi <= rec.m_next, tag("normal form above degree m_{n+1}"));
        }
        let nm = &rec.norms;
        let budget = schedule.remainder_budget(n);
        let budget_next = schedule.remainder_budget(n + 1);
        check(nm.rho == schedule.rho[n] && nm.delta == schedule.delta[n], tag("schedule constants"));
        check(nm.budget == budget && nm.budget_next == budget_next, tag("budgets"));
        let f = &rec.flags;
        check(f.remainder_budget == (nm.remainder <= budget), tag("remainder_budget flag"));
        check(f.est_rn == (nm.remainder_next <= budget_next), tag("est_rn flag"));
        check(f.est_rn_inner == (nm.remainder_next_inner < 4.0 * budget), tag("est_rn_inner flag"));
        check(f.est_phi == (nm.phi < nm.delta && nm.phi_inverse < nm.delta), tag("est_phi flag"));
        check(f.c_budget == (nm.c_direct <= budget), tag("c_budget flag"));
        check(f.a3 == rec.a3.iter().all(|x| x.pass), tag("a3 flag"));
        check(f.c_bound.is_some() == f.est_g && f.s_bound.is_some() == f.est_g, tag("bound flags without est_g"));
    }
    match r.compliant {
        Some(c) => {
            check(settings.mode == ModeSpec::Compliant, "compliance verdict outside compliant mode".into());
            check(c == r.steps.iter().all(|s| s.flags.compliant()), "compliant verdict inconsistent with flags".into());
            check(r.scale_exponent.is_some(), "compliant run without scale exponent".into());
        }
        None => check(settings.mode == ModeSpec::FreeRunning, "compliant mode without verdict".into()),
    }
    let m_final = normalized_degree(steps);
    if let Some(normal) = series_from(instance, instance.degree_cap, &r.normal_form, "normal_form", check) {
        check(normal.is_action_only(), "normal form depends on the angles".into());
        check(normal.max_degree().is_none_or(|d| d <= m_final), "normal form above m_n".into());
        verify_fits(instance, &normal, &r.b, &r.ground_truth, settings.a3_tol, check);
    }
    if let Some(lo) = r.remainder_min_degree {
        check(lo > m_final, "final remainder below m_n + 1".into());
    }
}

fn verify_oracle(instance: &InstanceSummary, r: &OracleOutput, check: &mut impl FnMut(bool, String)) {
    let Some(normal) = series_from(instance, r.degree, &r.normal_form, "normal_form", check) else {
        return;
    };
    check(normal.is_action_only(), "normal form depends on the angles".into());
    for (i, g) in r.generators.iter().enumerate() {
        if let Some(s) = series_from(instance, r.degree, &g.terms, "generator", check) {
            check(
                s.min_degree() == Some(g.degree) && s.max_degree() == Some(g.degree),
                format!("generator {i} is not homogeneous of degree {}", g.degree),
            );
        }
    }
    check(r.generators.windows(2).all(|w| w[0].degree < w[1].degree), "generator degrees not increasing".into());
    verify_fits(instance, &normal, &r.b, &r.ground_truth, 1e-8, check);
    if let Some(c) = &r.comparison {
        check(c.max_diff == c.coefficients.iter().map(|x| x.diff).fold(0.0, f64::max), "comparison max_diff".into());
        check(c.pass == (c.max_diff <= MATCH_TOL), "comparison pass flag".into());
        for x in &c.coefficients {
            let d = ((x.oracle[0] - x.run[0]).powi(2) + (x.oracle[1] - x.run[1]).powi(2)).sqrt();
            check((d - x.diff).abs() <= 1e-15 * d.max(1e-300) + 1e-300, "comparison entry".into());
        }
    }
}
