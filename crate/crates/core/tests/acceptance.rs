//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

mod common;

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use bnf_core::engine::{classical_oracle, make_instance, run, EngineOptions, Mode, NormalFormProfile, RunReport};
use bnf_core::homology::homological_norm_ratio;
use bnf_core::random::{random_series, SeriesShape};
use bnf_core::schedule::check_convergence_chain;
use bnf_core::{
    flow_coordinates, majorant_recursion, solve_homological, symplecticity_defect, Complex64, ConstantsSchedule, DomainBox,
    Error, QuadraticForm, TFSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{factory_suite, random_omega, Case, FACTORY_CAP};

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// One factory instance with its three-step run.
struct FactoryRun {
    case: Case,
    report: RunReport,
    run_time: Duration,
}

fn homological_round_trip() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut absorbed_ok = true;
    let mut count = 0;
    for dim in 1..=3 {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + dim as u64);
            let omega = random_omega(dim, &mut rng);
            let shape = SeriesShape {
                min_degree: 1,
                max_degree: 8,
                max_mode: 5,
                terms: 8,
                amplitude: 1.0,
                zero_average: true,
            };
            let f = random_series(dim, 9, &shape, &mut rng);
            let q = omega.n0(9).poisson_bracket(&f, 9).unwrap();
            let sol = solve_homological(&omega, &q, 1e-9).unwrap();
            absorbed_ok &= sol.absorbed.is_empty();
            let scale = f.max_abs();
            for (key, c) in f.iter() {
                worst = worst.max((sol.f.get(key) - c).norm() / c.norm());
            }
            for (key, c) in sol.f.iter() {
                if f.get(key).norm() == 0.0 {
                    worst = worst.max(c.norm() / scale);
                }
            }
            count += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        1,
        "homological round-trip",
        worst <= 1e-10 && absorbed_ok && secs(el) <= 30.0,
        format!("{count} instances, max rel err {worst:.2e} (<= 1e-10), absorbed empty: {absorbed_ok}, {:.2} s (<= 30 s)", secs(el)),
    )
}

/// Whether `⟨a, I⟩` involves a coordinate other than `p`.
fn off_axis_index(a: &[f64], p: usize) -> bool {
    a.iter().enumerate().any(|(i, &x)| i != p && x.abs() > 1e-3)
}

fn obstruction_detection() -> Outcome {
    let mut min_planted: f64 = f64::INFINITY;
    let mut planted_raised = 0;
    let mut max_clean: f64 = 0.0;
    let mut clean_passed = 0;
    for seed in 0..20u64 {
        let dim = 2 + (seed % 2) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let omega = random_omega(dim, &mut rng);
        let cap = 8;
        let shape = SeriesShape {
            min_degree: 2,
            max_degree: 6,
            max_mode: 3,
            terms: 5,
            amplitude: 0.5,
            zero_average: true,
        };
        let f = random_series(dim, cap, &shape, &mut rng);
        let divisible = omega.n0(cap).poisson_bracket(&f, cap).unwrap();
        match solve_homological(&omega, &divisible, 1e-9) {
            Ok(sol) => {
                clean_passed += 1;
                max_clean = max_clean.max(sol.max_residue());
            }
            Err(_) => max_clean = f64::INFINITY,
        }

        // I_p^t is far from the ideal of ⟨Ωk, I⟩ when p is the weakest axis of Ωk
        let (k, p) = loop {
            let k: Vec<i32> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
            if k.iter().all(|&c| c == 0) {
                continue;
            }
            let a = omega.apply(&bnf_core::WaveVector::new(&k));
            let p = (0..dim).min_by(|&x, &y| a[x].abs().total_cmp(&a[y].abs())).unwrap();
            if off_axis_index(&a, p) {
                break (k, p);
            }
        };
        let deg = rng.gen_range(2..=5);
        let mut j = vec![0u32; dim];
        j[p] = deg;
        let neg: Vec<i32> = k.iter().map(|c| -c).collect();
        let c = Complex64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..TAU));
        let planted = divisible
            .add(&TFSeries::monomial(dim, cap, &j, &k, c))
            .unwrap()
            .add(&TFSeries::monomial(dim, cap, &j, &neg, c.conj()))
            .unwrap();
        match solve_homological(&omega, &planted, 1e-9) {
            Err(Error::ObstructionDetected { residue, .. }) => {
                planted_raised += 1;
                min_planted = min_planted.min(residue);
            }
            _ => min_planted = 0.0,
        }
    }
    outcome(
        2,
        "obstruction detection",
        planted_raised == 20 && min_planted >= 1e-3 && clean_passed == 20 && max_clean <= 1e-10,
        format!(
            "planted {planted_raised}/20 raised, min residue {min_planted:.2e} (>= 1e-3); divisible {clean_passed}/20 passed, max residue {max_clean:.2e} (<= 1e-10)"
        ),
    )
}

fn factory_runs() -> Vec<FactoryRun> {
    factory_suite()
        .into_iter()
        .map(|case| {
            let t = Instant::now();
            let report = run(
                &case.instance.hamiltonian,
                &case.instance.profile.omega,
                3,
                FACTORY_CAP,
                &EngineOptions::default(),
            )
            .expect("factory run");
            FactoryRun {
                case,
                report,
                run_time: t.elapsed(),
            }
        })
        .collect()
}

fn degree_doubling(runs: &[FactoryRun]) -> Outcome {
    let mut bad = Vec::new();
    for r in runs {
        for (n, s) in r.report.steps.iter().enumerate() {
            let m = (1usize << n) + 1;
            let m_next = (1usize << (n + 1)) + 1;
            let ok = s.m == m
                && s.m_next == m_next
                && s.state.remainder.min_degree().is_none_or(|lo| lo > m_next)
                && s.state.normal.max_degree().is_some_and(|hi| hi <= m_next)
                && s.state.normal.is_action_only();
            if !ok {
                bad.push(format!("seed {} step {n}", r.case.seed));
            }
        }
        if r.report.m_sequence() != vec![2, 3, 5, 9] {
            bad.push(format!("seed {} m sequence", r.case.seed));
        }
    }
    outcome(
        3,
        "degree doubling",
        bad.is_empty(),
        format!("{} instances x 3 steps, exact integer checks, failures: {:?}", runs.len(), bad),
    )
}

/// `b_j` read off directly: the `I_1^{2j}` coefficient of `N` over that of `N_0^j`, `Ω_11^j`.
fn b_by_coefficient(normal: &TFSeries, omega: &QuadraticForm, j: usize) -> f64 {
    let d = omega.dim();
    let mut e = vec![0u32; d];
    e[0] = 2 * j as u32;
    normal.coeff(&e, &vec![0; d]).re / omega.entry(0, 0).powi(j as i32)
}

fn ground_truth_recovery(runs: &[FactoryRun]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for r in runs {
        let p = &r.case.instance.profile;
        for j in [2, 3] {
            let got = b_by_coefficient(&r.report.normal_form, &p.omega, j);
            let want = p.b_j(j);
            worst = worst.max((got - want).abs() / want.abs());
        }
        slowest = slowest.max(r.run_time);
    }
    let dims: Vec<usize> = runs.iter().map(|r| r.case.dim).collect();
    outcome(
        4,
        "ground-truth recovery",
        worst <= 1e-8 && secs(slowest) <= 120.0 && dims.contains(&1) && dims.contains(&2),
        format!(
            "{} instances (d in {{1,2}}, cap {FACTORY_CAP}, |k| <= 4, amplitude 0.05), max rel err b_2,b_3 {worst:.2e} (<= 1e-8), slowest {:.2} s (<= 120 s)",
            runs.len(),
            secs(slowest)
        ),
    )
}

fn oracle_equivalence(runs: &[FactoryRun]) -> Outcome {
    let mut worst: f64 = 0.0;
    for r in runs {
        let oracle = classical_oracle(
            &r.case.instance.hamiltonian,
            &r.case.instance.profile.omega,
            FACTORY_CAP,
            1e-9,
        )
        .expect("oracle");
        let m = 9;
        let diff = oracle
            .normal_form
            .project_degrees(0, m)
            .max_coeff_diff(&r.report.normal_form.project_degrees(0, m));
        worst = worst.max(diff);
    }
    outcome(
        5,
        "oracle equivalence",
        worst <= 1e-8 && runs.len() >= 20,
        format!("{} instances, max coefficient diff through degree 9: {worst:.2e} (<= 1e-8)", runs.len()),
    )
}

fn symplecticity(runs: &[FactoryRun]) -> Outcome {
    let b = DomainBox::new(0.25, 0.05).unwrap();
    let mut worst: f64 = 0.0;
    let mut flows = 0;
    for r in runs {
        for s in &r.report.steps {
            if s.generator.is_empty() {
                continue;
            }
            let map = flow_coordinates(&s.generator, FACTORY_CAP).unwrap();
            worst = worst.max(symplecticity_defect(&map, FACTORY_CAP, &b).unwrap());
            flows += 1;
        }
    }
    outcome(
        6,
        "symplecticity",
        worst <= 1e-10,
        format!("{flows} flows of F_n, max defect on degrees <= {} over (0.25, 0.05): {worst:.2e} (<= 1e-10)", FACTORY_CAP - 1),
    )
}

fn schedule_ledger() -> Outcome {
    let t = Instant::now();
    let mut failing = Vec::new();
    let mut rows = 0;
    for d in 1..=6 {
        for rho0 in [0.25, 0.5, 1.0] {
            let s = ConstantsSchedule::build(d, rho0, 30).unwrap();
            let ledger = check_convergence_chain(&s);
            rows += ledger.rows.len();
            if !ledger.all_pass() || ledger.rows.len() != 150 {
                failing.push((d, rho0));
            }
        }
    }
    let el = t.elapsed();
    outcome(
        7,
        "schedule ledger",
        failing.is_empty() && secs(el) <= 1.0,
        format!("18 schedules, {rows} rows, failing {failing:?}, {:.3} s (<= 1 s)", secs(el)),
    )
}

fn majorant_recursion_suites() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut bad = 0;
    let mut longest = 0;
    for i in 0..10_000 {
        let m = if i % 100 == 0 { 1025 } else { rng.gen_range(2..=1025) };
        longest = longest.max(m);
        let eps = 10f64.powf(rng.gen_range(-12.0..0.0));
        let p: Vec<f64> = (1..m).map(|_| eps * rng.gen_range(0.0..=1.0)).collect();
        let s = majorant_recursion(&p, eps).unwrap();
        let mut ok = s.iter().all(|&x| x <= 2.0 * eps);
        for j in 1..s.len() {
            // one rounding per operation in the recurrence
            ok &= s[j] <= (p[j] + s[j - 1] / 2.0) * (1.0 + 1e-14);
        }
        if !ok {
            bad += 1;
        }
    }
    let el = t.elapsed();
    outcome(
        8,
        "majorant recursion",
        bad == 0 && secs(el) <= 10.0,
        format!("10000 suites, m up to {longest}, violations {bad}, {:.2} s (<= 10 s)", secs(el)),
    )
}

/// The compliant-mode instance: `d = 1`, degree-3 generator, cap 12.
fn compliant_instance() -> (NormalFormProfile, TFSeries) {
    let p = NormalFormProfile::new(QuadraticForm::diagonal(&[1.0]).unwrap(), vec![0.1, 0.02]);
    let cap = 12;
    let g = TFSeries::monomial(1, cap, &[3], &[1], Complex64::new(0.05, 0.0))
        .add(&TFSeries::monomial(1, cap, &[3], &[-1], Complex64::new(0.05, 0.0)))
        .unwrap();
    let h = make_instance(&p, &g, cap).unwrap().hamiltonian;
    (p, h)
}

fn compliant_runs() -> Vec<(String, RunReport)> {
    let mut out = Vec::new();
    let (p, h) = compliant_instance();
    let opts = EngineOptions {
        mode: Mode::Compliant { scale_exponent: None },
        ..EngineOptions::default()
    };
    out.push(("d=1 cubic generator, cap 12".to_string(), run(&h, &p.omega, 3, 12, &opts).unwrap()));
    for dim in [1, 2] {
        for seed in 0..3 {
            let case = common::factory_case(dim, 5000 + seed);
            let cap = 9;
            let h = case.instance.hamiltonian.with_cap(cap);
            let r = run(&h, &case.instance.profile.omega, 3, cap, &opts).unwrap();
            out.push((format!("factory d={dim} seed {}, cap {cap}", case.seed), r));
        }
    }
    out
}

fn c_bound(runs: &[(String, RunReport)]) -> Outcome {
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut worst_ratio: f64 = 0.0;
    for (name, r) in runs {
        for rec in &r.records {
            if !rec.flags.est_g {
                continue;
            }
            checked += 1;
            let n = &rec.norms;
            // δ_n^κ from the closed form, independent of the schedule tables
            let kappa = r.schedule.dim as i32 + 6;
            let budget = (r.schedule.rho0 * 2f64.powi(-(kappa + 6)) * 2f64.powi(-(rec.n as i32))).powi(kappa);
            let assembled = n.c_direct <= n.c_bound_measured * (1.0 + 1e-12)
                && n.c_bound_measured <= n.c_bound_recursion * (1.0 + 1e-12)
                && n.c_bound_recursion <= budget;
            if n.c_direct > 0.0 {
                worst_ratio = worst_ratio.max(n.c_direct / budget);
            }
            if !(assembled && n.c_direct <= budget) {
                bad.push(format!("{name} step {}", rec.n));
            }
        }
    }
    outcome(
        9,
        "C_n bound",
        bad.is_empty() && checked > 0,
        format!(
            "{checked} compliant steps with the g_s bound holding: |C_n| <= measured bound <= recursion bound <= delta_n^kappa; max |C_n|/delta_n^kappa {worst_ratio:.2e}; failures {bad:?}"
        ),
    )
}

fn majorant_by_hand(f: &TFSeries, rho: f64, sigma: f64) -> f64 {
    f.iter()
        .map(|(key, c)| c.norm() * rho.powi(key.degree() as i32) * (2.0 * PI * sigma * key.k().l1() as f64).exp())
        .sum()
}

/// `f` at complex actions and complex angles, straight from the coefficients.
fn evaluate_complex(f: &TFSeries, actions: &[Complex64], angles: &[Complex64]) -> Complex64 {
    let d = f.dim();
    let mut total = Complex64::new(0.0, 0.0);
    for (key, c) in f.iter() {
        let mut v = *c;
        for i in 0..d {
            v *= actions[i].powu(key.j().get(i));
            v *= (Complex64::new(0.0, 2.0 * PI * key.k().get(i) as f64) * angles[i]).exp();
        }
        total += v;
    }
    total
}

fn norm_inequalities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let shape = |deg| SeriesShape {
        min_degree: 0,
        max_degree: deg,
        max_mode: 3,
        terms: 6,
        amplitude: 1.0,
        zero_average: false,
    };
    let mut sup_ok = true;
    let mut sup_ratio: f64 = 0.0;
    let mut sub_ok = true;
    let mut sub_ratio: f64 = 0.0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=3);
        let rho = rng.gen_range(0.1..1.0);
        let sigma = rng.gen_range(0.01..0.2);
        let b = DomainBox::new(rho, sigma).unwrap();
        let f = random_series(d, 12, &shape(6), &mut rng);
        let g = random_series(d, 12, &shape(6), &mut rng);
        let norm_f = f.majorant_norm(&b);
        sup_ok &= (norm_f - majorant_by_hand(&f, rho, sigma)).abs() <= 1e-12 * norm_f;
        for _ in 0..20 {
            let actions: Vec<Complex64> = (0..d)
                .map(|_| Complex64::from_polar(rho * rng.gen_range(0.0..1.0f64).sqrt(), rng.gen_range(0.0..TAU)))
                .collect();
            let angles: Vec<Complex64> = (0..d)
                .map(|_| Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-sigma..sigma)))
                .collect();
            let v = evaluate_complex(&f, &actions, &angles).norm();
            sup_ratio = sup_ratio.max(v / norm_f);
            sup_ok &= v <= norm_f * (1.0 + 1e-12);
        }
        let fg = f.mul(&g, 12).unwrap();
        let lhs = fg.majorant_norm(&b);
        let rhs = norm_f * g.majorant_norm(&b);
        sub_ratio = sub_ratio.max(lhs / rhs);
        sub_ok &= lhs <= rhs * (1.0 + 1e-12);
    }

    // envelope: ratio maximum recorded on one suite, checked on a fresh one
    let ratio_suite = |seed0: u64| -> Vec<f64> {
        (0..100u64)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed0 + i);
                let d = rng.gen_range(1..=3);
                let omega = random_omega(d, &mut rng);
                let shape = SeriesShape {
                    min_degree: 2,
                    max_degree: 6,
                    max_mode: 4,
                    terms: 5,
                    amplitude: 1.0,
                    zero_average: true,
                };
                let f = random_series(d, 7, &shape, &mut rng);
                let q = omega.n0(7).poisson_bracket(&f, 7).unwrap();
                let sol = solve_homological(&omega, &q, 1e-9).unwrap();
                let b = DomainBox::new(0.5, 0.1).unwrap();
                homological_norm_ratio(&sol.f, &q, &b, 0.1, 0.02).unwrap()
            })
            .collect()
    };
    let recorded = ratio_suite(20_000).into_iter().fold(0.0, f64::max);
    let fresh = ratio_suite(30_000).into_iter().fold(0.0, f64::max);
    let envelope_ok = fresh <= 2.0 * recorded;
    outcome(
        10,
        "norm inequalities",
        sup_ok && sub_ok && envelope_ok,
        format!(
            "100 instances each: max sampled sup/majorant {sup_ratio:.3} (<= 1), max |fg|/(|f||g|) {sub_ratio:.3} (<= 1), homological ratio fresh max {fresh:.3e} vs recorded {recorded:.3e} (<= 2x)"
        ),
    )
}

fn compliant_contraction(runs: &[(String, RunReport)]) -> Outcome {
    let (name, r) = &runs[0];
    let kappa = r.schedule.dim as i32 + 6;
    let delta = |n: usize| r.schedule.rho0 * 2f64.powi(-(kappa + 6)) * 2f64.powi(-(n as i32));
    let mut rho = vec![r.schedule.rho0];
    for n in 0..3 {
        let q = (2.0 * 2f64.powi(-(kappa + 3))).powf(2f64.powi(-(n as i32 + 1)));
        rho.push((rho[n] - 3.0 * delta(n)) * q);
    }
    let mut lines = Vec::new();
    let mut ok = true;
    let r0 = r.records[0].norms.remainder;
    ok &= r0 <= delta(0).powi(kappa);
    lines.push(format!("|R_0| {r0:.2e} <= {:.2e}", delta(0).powi(kappa)));
    for n in 0..3 {
        let rem = &r.steps[n].state.remainder;
        let by_hand = majorant_by_hand(rem, rho[n + 1], rho[n + 1]);
        let budget = delta(n + 1).powi(kappa);
        ok &= by_hand <= budget;
        lines.push(format!("|R_{}| {by_hand:.2e} <= {budget:.2e}", n + 1));
    }
    outcome(
        11,
        "compliant-mode contraction",
        ok && r.compliant == Some(true),
        format!("{name}, scale 2^-{}: {}", r.scale_exponent.unwrap_or(0), lines.join(", ")),
    )
}

fn main() {
    let start = Instant::now();
    let mut results = vec![homological_round_trip(), obstruction_detection()];
    let runs = factory_runs();
    results.push(degree_doubling(&runs));
    results.push(ground_truth_recovery(&runs));
    results.push(oracle_equivalence(&runs));
    results.push(symplecticity(&runs));
    results.push(schedule_ledger());
    results.push(majorant_recursion_suites());
    let compliant = compliant_runs();
    results.push(c_bound(&compliant));
    results.push(norm_inequalities());
    results.push(compliant_contraction(&compliant));
    let mut failed = 0;
    for r in &results {
        println!("{} {:>2} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name, r.detail);
        if !r.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria pass ({:.1} s)", results.len() - failed, results.len(), secs(start.elapsed()));
    if failed > 0 {
        std::process::exit(1);
    }
}
