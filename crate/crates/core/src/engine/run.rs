use serde::{Deserialize, Serialize};

use super::a3::DegreeFit;
use super::step::{newton_step, NewtonStepReport, StepContext, StepFlags, StepNorms};
use super::{HamiltonianState, Profile};
use crate::error::{Error, Result};
use crate::homology::{QuadraticForm, DEFAULT_DIVISIBILITY_TOL};
use crate::lie::CoordinateMap;
use crate::schedule::{normalized_degree, ConstantsSchedule};
use crate::series::{ActionPolynomial, DomainBox, TFSeries};

/// Smallest binary exponent allowed for the scaled coefficients before
/// subnormal numbers would break exact scaling.
const EXPONENT_FLOOR: i64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Mode {
    /// Iterate on the data as given and only report the estimates.
    FreeRunning,
    /// Rescale by `a = 2^{−s}` so the initial remainder fits the schedule
    /// budget and check every step hypothesis. `None` searches for `s`.
    Compliant { scale_exponent: Option<u32> },
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub mode: Mode,
    pub profile: Profile,
    pub rho0: f64,
    pub diag: DomainBox,
    pub tol: f64,
    pub a3_tol: f64,
    pub strict: bool,
    /// Compose the coordinate changes `T_n = Φ_0 ∘ ⋯ ∘ Φ_{n−1}`.
    pub track_transform: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            mode: Mode::FreeRunning,
            profile: Profile::Discover,
            rho0: 1.0,
            diag: DomainBox::new(0.25, 0.05).expect("valid box"),
            tol: DEFAULT_DIVISIBILITY_TOL,
            a3_tol: 1e-8,
            strict: true,
            track_transform: false,
        }
    }
}

/// Serializable summary of one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub m: usize,
    pub m_next: usize,
    pub generator_terms: usize,
    pub generator_degrees: Option<(usize, usize)>,
    pub generator_has_zero_mode: bool,
    pub remainder_min_degree: Option<usize>,
    pub normal_max_degree: Option<usize>,
    pub norms: StepNorms,
    pub flags: StepFlags,
    pub a3: Vec<DegreeFit>,
    pub absorbed_mismatch: f64,
    pub profile_mismatch: Option<f64>,
    /// Deviation of `T_{n+1}` from the identity on the diagnostic box.
    pub transform_deviation: Option<f64>,
}

impl StepRecord {
    fn from_report(r: &NewtonStepReport, transform_deviation: Option<f64>) -> Self {
        StepRecord {
            n: r.n,
            m: r.m,
            m_next: r.m_next,
            generator_terms: r.generator.len(),
            generator_degrees: r.generator.min_degree().zip(r.generator.max_degree()),
            generator_has_zero_mode: r.generator.iter().any(|(k, _)| k.k().is_zero()),
            remainder_min_degree: r.state.remainder.min_degree(),
            normal_max_degree: r.state.normal.max_degree(),
            norms: r.norms.clone(),
            flags: r.flags,
            a3: r.a3.fits.clone(),
            absorbed_mismatch: r.absorbed_mismatch,
            profile_mismatch: r.profile_mismatch,
            transform_deviation,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub steps: Vec<NewtonStepReport>,
    pub records: Vec<StepRecord>,
    /// `s` with `a = 2^{−s}` in compliant mode.
    pub scale_exponent: Option<u32>,
    pub schedule: ConstantsSchedule,
    /// Final state, in the scaled variables when compliant.
    pub state: HamiltonianState,
    /// Final normal form `N_n` in the original variables.
    pub normal_form: ActionPolynomial,
    /// `T_n`, in the scaled variables when compliant.
    pub transform: Option<CoordinateMap>,
    /// Compliant mode: every step satisfied every estimate.
    pub compliant: Option<bool>,
}

impl RunReport {
    /// Normalized degrees `m_0, …, m_steps`.
    pub fn m_sequence(&self) -> Vec<usize> {
        (0..=self.steps.len()).map(normalized_degree).collect()
    }
}

/// `Ĥ(I, θ) = a^{−2} H(aI, θ)`: the coefficient of `(j, k)` is multiplied by
/// `a^{|j|₁−2}`. Exact when `a` is a power of two and nothing under- or overflows.
pub fn scale_hamiltonian(h: &TFSeries, a: f64) -> Result<TFSeries> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {a}")));
    }
    let mut out = TFSeries::zero(h.dim(), h.degree_cap());
    for (key, c) in h.iter() {
        out.add_term(key.j(), key.k(), c * a.powi(key.degree() as i32 - 2));
    }
    Ok(out)
}

fn scale_exponent_limit(cap: usize) -> u32 {
    (EXPONENT_FLOOR / (cap.max(3) as i64 - 2)) as u32
}

/// Smallest `s` with `|R̃_0|_{ρ_0, ρ_0} ≤ δ_0^κ` after scaling by `2^{−s}`,
/// found from the per-degree norms of the unscaled data.
pub fn choose_scale_exponent(h: &TFSeries, schedule: &ConstantsSchedule, cap: usize) -> Option<u32> {
    let b = DomainBox::square(schedule.rho0).ok()?;
    let by_degree = h.project_degrees(3, cap).majorant_by_degree(&b);
    let budget = schedule.remainder_budget(0);
    (0..=scale_exponent_limit(cap)).find(|&s| {
        let total: f64 = by_degree
            .iter()
            .map(|(&t, &v)| v * 2f64.powi(-(s as i32) * (t as i32 - 2)))
            .sum();
        total <= budget
    })
}

/// Iterates `steps` Newton steps from `h0`.
pub fn run(h0: &TFSeries, omega: &QuadraticForm, steps: usize, cap: usize, opts: &EngineOptions) -> Result<RunReport> {
    let needed = normalized_degree(steps);
    if cap < needed {
        return Err(Error::DegreeBudgetExceeded { needed, cap });
    }
    let schedule = ConstantsSchedule::build(omega.dim(), opts.rho0, steps.max(1) + 1)?;
    match opts.mode {
        Mode::FreeRunning => iterate(h0, omega, steps, cap, opts, &schedule, None),
        Mode::Compliant { scale_exponent: Some(s) } => iterate(h0, omega, steps, cap, opts, &schedule, Some(s)),
        Mode::Compliant { scale_exponent: None } => {
            let limit = scale_exponent_limit(cap);
            let start = choose_scale_exponent(h0, &schedule, cap).unwrap_or(limit);
            let mut s = start;
            let mut bump = 1;
            loop {
                let report = iterate(h0, omega, steps, cap, opts, &schedule, Some(s))?;
                if report.compliant == Some(true) || s >= limit {
                    return Ok(report);
                }
                s = (start + bump).min(limit);
                bump *= 2;
            }
        }
    }
}

fn iterate(
    h0: &TFSeries,
    omega: &QuadraticForm,
    steps: usize,
    cap: usize,
    opts: &EngineOptions,
    schedule: &ConstantsSchedule,
    scale_exponent: Option<u32>,
) -> Result<RunReport> {
    let a = scale_exponent.map(|s| 2f64.powi(-(s as i32)));
    let (h, profile) = match a {
        Some(a) => {
            let h = scale_hamiltonian(h0, a)?;
            let profile = match &opts.profile {
                Profile::Discover => Profile::Discover,
                Profile::Prescribed(p) => {
                    let mut p = p.clone();
                    for (i, b) in p.b.iter_mut().enumerate() {
                        // b_j ↦ b_j a^{2(j−1)} with j = i + 2
                        *b *= a.powi(2 * (i as i32 + 1));
                    }
                    Profile::Prescribed(p)
                }
            };
            (h, profile)
        }
        None => (h0.with_cap(cap), opts.profile.clone()),
    };
    let mut state = HamiltonianState::initial(&h, omega)?;
    let ctx = StepContext {
        omega,
        profile: &profile,
        cap,
        tol: opts.tol,
        strict: opts.strict,
        a3_tol: opts.a3_tol,
        schedule,
        diag: opts.diag,
    };
    let mut transform = opts
        .track_transform
        .then(|| CoordinateMap::identity(omega.dim(), cap));
    let mut reports = Vec::with_capacity(steps);
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let r = newton_step(&state, &ctx)?;
        let deviation = match transform.take() {
            Some(t) => {
                let next = t.then_flow(&r.generator, cap)?;
                let dev = next.deviation_norm(&opts.diag);
                transform = Some(next);
                Some(dev)
            }
            None => None,
        };
        records.push(StepRecord::from_report(&r, deviation));
        state = r.state.clone();
        reports.push(r);
    }
    let normal_form = match a {
        Some(a) => scale_hamiltonian(&state.normal, 1.0 / a)?,
        None => state.normal.clone(),
    };
    let compliant = scale_exponent.map(|_| records.iter().all(|r| r.flags.compliant()));
    Ok(RunReport {
        steps: reports,
        records,
        scale_exponent,
        schedule: schedule.clone(),
        state,
        normal_form,
        transform,
        compliant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{c64, make_instance, NormalFormProfile};
    use num_complex::Complex64;

    fn quartic_instance(cap: usize) -> (NormalFormProfile, TFSeries) {
        let p = NormalFormProfile::new(QuadraticForm::diagonal(&[1.0]).unwrap(), vec![0.1, 0.02]);
        let g = TFSeries::monomial(1, cap, &[3], &[1], c64(0.05))
            .add(&TFSeries::monomial(1, cap, &[3], &[-1], c64(0.05)))
            .unwrap();
        let h = make_instance(&p, &g, cap).unwrap().hamiltonian;
        (p, h)
    }

    #[test]
    fn scaling_examples() {
        let i2 = TFSeries::monomial(1, 6, &[2], &[0], c64(1.0));
        assert_eq!(scale_hamiltonian(&i2, 0.3).unwrap(), i2);
        let h = i2.add(&TFSeries::monomial(1, 6, &[4], &[0], c64(1.0))).unwrap();
        let s = scale_hamiltonian(&h, 0.5).unwrap();
        assert_eq!(s.coeff(&[4], &[0]), c64(0.25));
        assert!(scale_hamiltonian(&h, 0.0).is_err());
        assert!(scale_hamiltonian(&h, -1.0).is_err());
    }

    #[test]
    fn already_normal_input_is_unchanged() {
        let p = NormalFormProfile::new(QuadraticForm::diagonal(&[1.0, 3.0]).unwrap(), vec![0.2]);
        let n = p.normal_form(10).unwrap();
        let r = run(&n, &p.omega, 3, 10, &EngineOptions::default()).unwrap();
        assert!(r.steps.iter().all(|s| s.generator.is_empty()));
        assert_eq!(r.state.hamiltonian(), n);
    }

    #[test]
    fn roundoff_remainder_is_not_an_obstruction() {
        // a degree-2 generator is undone by the first step; what follows is roundoff
        let omega = QuadraticForm::new(&[vec![1.0, 0.3], vec![0.3, -1.7]]).unwrap();
        let p = NormalFormProfile::new(omega, vec![0.2, -0.05]);
        let g = TFSeries::monomial(2, 9, &[1, 1], &[1, -1], Complex64::new(0.01, 0.002))
            .add(&TFSeries::monomial(2, 9, &[1, 1], &[-1, 1], Complex64::new(0.01, -0.002)))
            .unwrap();
        let h = make_instance(&p, &g, 9).unwrap().hamiltonian;
        let r = run(&h, &p.omega, 3, 9, &EngineOptions::default()).unwrap();
        assert!(r.steps[1..].iter().all(|s| s.generator.max_abs() < 1e-14));
        assert!(r.normal_form.max_coeff_diff(&p.normal_form(9).unwrap()) < 1e-12);
        let o = crate::engine::classical_oracle(&h, &p.omega, 9, 1e-9).unwrap();
        assert!(o.normal_form.max_coeff_diff(&p.normal_form(9).unwrap()) < 1e-12);
    }

    #[test]
    fn three_steps_double_the_degree() {
        let (p, h) = quartic_instance(12);
        let r = run(&h, &p.omega, 3, 12, &EngineOptions::default()).unwrap();
        assert_eq!(r.m_sequence(), vec![2, 3, 5, 9]);
        assert!(r.state.remainder.min_degree().unwrap() >= 10);
        assert!(r.normal_form.max_coeff_diff(&p.normal_form(9).unwrap()) < 1e-12);
    }

    #[test]
    fn prescribed_profile_matches_discovery() {
        let (p, h) = quartic_instance(12);
        let disc = run(&h, &p.omega, 3, 12, &EngineOptions::default()).unwrap();
        let opts = EngineOptions {
            profile: Profile::Prescribed(p.clone()),
            ..EngineOptions::default()
        };
        let pres = run(&h, &p.omega, 3, 12, &opts).unwrap();
        assert!(pres.normal_form.max_coeff_diff(&disc.normal_form) < 1e-12);
        for s in &pres.steps {
            assert!(s.profile_mismatch.unwrap() < 1e-12);
            assert!(s.flags.structural);
            assert!(s.c_direct.max_coeff_diff(&s.c_formula) <= 1e-12 * s.c_direct.max_abs().max(1e-300));
        }
    }

    #[test]
    fn budget_checked_up_front() {
        let (p, h) = quartic_instance(8);
        let r = run(&h, &p.omega, 3, 8, &EngineOptions::default());
        assert!(matches!(r, Err(Error::DegreeBudgetExceeded { needed: 9, cap: 8 })));
    }

    #[test]
    fn compliant_run_scales_into_budget() {
        let (p, h) = quartic_instance(12);
        let opts = EngineOptions {
            mode: Mode::Compliant { scale_exponent: None },
            ..EngineOptions::default()
        };
        let r = run(&h, &p.omega, 3, 12, &opts).unwrap();
        assert_eq!(r.compliant, Some(true), "{:#?}", r.records.iter().map(|x| x.flags).collect::<Vec<_>>());
        assert!(r.normal_form.max_coeff_diff(&p.normal_form(9).unwrap()) < 1e-12);
        let unscaled = EngineOptions {
            mode: Mode::Compliant { scale_exponent: Some(0) },
            ..EngineOptions::default()
        };
        assert_eq!(run(&h, &p.omega, 3, 12, &unscaled).unwrap().compliant, Some(false));
    }

    #[test]
    fn transform_tracks_conjugacy() {
        let (p, h) = quartic_instance(9);
        let opts = EngineOptions {
            track_transform: true,
            ..EngineOptions::default()
        };
        let r = run(&h, &p.omega, 3, 9, &opts).unwrap();
        let t = r.transform.unwrap();
        let pulled = t.pull_back(&h, 9).unwrap();
        assert!(pulled.max_coeff_diff(&r.state.hamiltonian()) < 1e-12);
    }
}
