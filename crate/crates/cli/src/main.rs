//! `bnf`: normal forms of Taylor–Fourier Hamiltonians from instance files.

mod instance;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bnf_core::engine::{classical_oracle, run, EngineOptions};
use bnf_core::schedule::normalized_degree;
use bnf_core::{Error, TFSeries};
use clap::{Parser, Subcommand};

use instance::{Instance, ModeSpec, ProfileSpec};
use report::{Body, GeneratorSummary, InstanceSummary, OracleOutput, Report, RunResult, RunSettings, Status};

#[derive(Parser)]
#[command(name = "bnf", version, about = "Birkhoff normal forms by degree doubling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the degree-doubling iteration on an instance.
    Run {
        instance: PathBuf,
        /// Number of steps; defaults to the instance's `steps`, else the most the degree cap allows.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Relative divisibility tolerance of the homological solves.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeSpec>,
        #[arg(long, value_enum)]
        profile: Option<ProfileSpec>,
        /// Seed for a random generator.
        #[arg(long)]
        seed: Option<u64>,
        /// Fixed `s` of the compliant-mode scale `2^-s`.
        #[arg(long)]
        scale_exponent: Option<u32>,
    },
    /// Eliminate the angles degree by degree (reference route).
    Oracle {
        instance: PathBuf,
        /// Highest degree normalized; defaults to the instance's degree cap.
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// A `run` report to diff the normal form against.
        #[arg(long)]
        compare: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate the constants schedule and its inequality ledger.
    Schedule {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        rho0: f64,
        #[arg(long, default_value_t = 30)]
        horizon: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check a report's internal identities.
    Verify { report: PathBuf },
}

fn status_of(e: &Error) -> Status {
    match e {
        Error::ObstructionDetected { .. } => Status::Obstruction,
        Error::A3Violation { .. } => Status::A3Violation,
        _ => Status::Error,
    }
}

fn exit_code(s: &Status) -> i32 {
    match s {
        Status::Ok => 0,
        Status::Error | Status::Mismatch => 1,
        Status::Obstruction => 2,
        Status::A3Violation => 3,
        Status::HypothesisFailure | Status::ScheduleFailure => 4,
    }
}

fn summary(inst: &Instance) -> InstanceSummary {
    InstanceSummary {
        dim: inst.spec.dim,
        omega: inst.omega.rows(),
        b: inst.spec.b.clone(),
        degree_cap: inst.spec.degree_cap,
        seed: inst.spec.seed,
        hamiltonian_terms: inst.hamiltonian.len(),
        from_generator: inst.factory.is_some(),
    }
}

fn finish(report: &Report, path: Option<&Path>) -> ExitCode {
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    if let Some(p) = path {
        if let Err(e) = std::fs::write(p, report.to_json()) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(1);
        }
    }
    ExitCode::from(report.exit_code as u8)
}

fn failed(body: Body, e: &Error) -> Report {
    let status = status_of(e);
    Report {
        schema_version: report::SCHEMA_VERSION,
        exit_code: exit_code(&status),
        status,
        error: Some(e.to_string()),
        body,
    }
}

fn largest_feasible_steps(cap: usize) -> usize {
    (0..).take_while(|&n| normalized_degree(n) <= cap).last().unwrap_or(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    path: &Path,
    steps: Option<usize>,
    tol: Option<f64>,
    mode: Option<ModeSpec>,
    profile: Option<ProfileSpec>,
    seed: Option<u64>,
    scale_exponent: Option<u32>,
) -> Report {
    let empty = || Body::Run {
        settings: None,
        instance: None,
        result: None,
    };
    let mut inst = match instance::load(path, seed) {
        Ok(i) => i,
        Err(e) => return failed(empty(), &e),
    };
    if let Some(m) = mode {
        inst.spec.mode = m;
    }
    if let Some(p) = profile {
        inst.spec.profile = p;
    }
    if scale_exponent.is_some() {
        inst.spec.scale_exponent = scale_exponent;
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            return failed(empty(), &Error::Malformed(format!("--tol: must be positive, got {t}")));
        }
        inst.spec.tolerances.divisibility = t;
    }
    let cap = inst.spec.degree_cap;
    let steps = steps.or(inst.spec.steps).unwrap_or_else(|| largest_feasible_steps(cap));
    let settings = RunSettings {
        steps,
        mode: inst.spec.mode,
        profile: inst.spec.profile,
        rho0: inst.spec.rho0,
        tol: inst.spec.tolerances.divisibility,
        a3_tol: inst.spec.tolerances.a3,
    };
    let opts = EngineOptions {
        mode: inst.mode(),
        profile: inst.profile(),
        rho0: inst.spec.rho0,
        tol: settings.tol,
        a3_tol: settings.a3_tol,
        strict: true,
        ..EngineOptions::default()
    };
    let body = |result| Body::Run {
        settings: Some(settings.clone()),
        instance: Some(summary(&inst)),
        result,
    };
    let out = match run(&inst.hamiltonian, &inst.omega, steps, cap, &opts) {
        Ok(r) => r,
        Err(e) => return failed(body(None), &e),
    };
    let m_final = normalized_degree(steps);
    let ground_truth = match &inst.factory {
        Some(_) => match report::ground_truth(&out.normal_form, &inst.nf_profile, m_final, settings.a3_tol) {
            Ok(g) => Some(g),
            Err(e) => return failed(body(None), &e),
        },
        None => None,
    };
    let result = RunResult {
        m_sequence: out.m_sequence(),
        scale_exponent: out.scale_exponent,
        compliant: out.compliant,
        steps: out.records.clone(),
        normal_form: out.normal_form.to_term_list(),
        b: report::fitted_b(&out.normal_form, &inst.omega, settings.a3_tol),
        remainder_min_degree: out.state.remainder.min_degree(),
        remainder_terms: out.state.remainder.len(),
        ground_truth,
    };
    print_run_table(&result);
    let (status, error) = if out.compliant == Some(false) {
        let failing: Vec<String> = out
            .records
            .iter()
            .filter(|r| !r.flags.compliant())
            .map(|r| r.n.to_string())
            .collect();
        let s = out.scale_exponent.unwrap_or(0);
        (
            Status::HypothesisFailure,
            Some(format!("schedule hypotheses fail at steps [{}] with scale 2^-{s}", failing.join(", "))),
        )
    } else {
        (Status::Ok, None)
    };
    Report {
        schema_version: report::SCHEMA_VERSION,
        exit_code: exit_code(&status),
        status,
        error,
        body: body(Some(result)),
    }
}

fn yn(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn print_run_table(r: &RunResult) {
    println!("m sequence: {:?}", r.m_sequence);
    if let Some(s) = r.scale_exponent {
        println!("scale: 2^-{s}");
    }
    println!(
        "{:>3} {:>4} {:>6} {:>8} {:>11} {:>11} {:>11} {:>11} {:>9}",
        "n", "m", "m_next", "F terms", "|R_n|", "|R_n+1|", "|C_n|", "|Phi-id|", "compliant"
    );
    for s in &r.steps {
        println!(
            "{:>3} {:>4} {:>6} {:>8} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e} {:>9}",
            s.n,
            s.m,
            s.m_next,
            s.generator_terms,
            s.norms.remainder_diag,
            s.norms.remainder_next_diag,
            s.norms.c_direct,
            s.norms.phi_diag,
            yn(s.flags.compliant())
        );
    }
    for b in &r.b {
        println!("b_{} = {:.12e}", b.j, b.b);
    }
    if let Some(g) = &r.ground_truth {
        println!("ground truth through degree {}: max diff {:.3e} ({})", g.max_degree, g.max_coeff_diff, yn(g.pass));
    }
}

fn cmd_oracle(path: &Path, degree: Option<usize>, compare: Option<&Path>, tol: Option<f64>, seed: Option<u64>) -> Report {
    let empty = || Body::Oracle {
        instance: None,
        result: None,
    };
    let inst = match instance::load(path, seed) {
        Ok(i) => i,
        Err(e) => return failed(empty(), &e),
    };
    let cap = inst.spec.degree_cap;
    let degree = degree.unwrap_or(cap);
    if !(3..=cap).contains(&degree) {
        return failed(empty(), &Error::Malformed(format!("--degree: must lie in 3..={cap}, got {degree}")));
    }
    let tol = tol.unwrap_or(inst.spec.tolerances.divisibility);
    let body = |result| Body::Oracle {
        instance: Some(summary(&inst)),
        result,
    };
    let out = match classical_oracle(&inst.hamiltonian, &inst.omega, degree, tol) {
        Ok(o) => o,
        Err(e) => return failed(body(None), &e),
    };
    let comparison = match compare {
        Some(p) => match load_run_normal_form(p, &inst) {
            Ok((normal, m_final)) => Some(report::compare(&out.normal_form, &normal, m_final.min(degree))),
            Err(e) => return failed(body(None), &e),
        },
        None => None,
    };
    let ground_truth = match &inst.factory {
        Some(_) => match report::ground_truth(&out.normal_form, &inst.nf_profile, degree, inst.spec.tolerances.a3) {
            Ok(g) => Some(g),
            Err(e) => return failed(body(None), &e),
        },
        None => None,
    };
    let result = OracleOutput {
        degree,
        normal_form: out.normal_form.to_term_list(),
        b: report::fitted_b(&out.normal_form, &inst.omega, inst.spec.tolerances.a3),
        generators: out
            .generators
            .iter()
            .map(|g| GeneratorSummary {
                degree: g.min_degree().unwrap_or(0),
                terms: g.to_term_list(),
            })
            .collect(),
        leftover: out.leftover,
        max_residue: out.max_residue,
        ground_truth,
        comparison,
    };
    println!("oracle through degree {degree}: {} generators", result.generators.len());
    for b in &result.b {
        println!("b_{} = {:.12e}", b.j, b.b);
    }
    if let Some(g) = &result.ground_truth {
        println!("ground truth: max diff {:.3e} ({})", g.max_coeff_diff, yn(g.pass));
    }
    let mut status = Status::Ok;
    let mut error = None;
    if let Some(c) = &result.comparison {
        println!(
            "run comparison through degree {}: {} coefficients, max diff {:.3e} ({})",
            c.max_degree,
            c.coefficients.len(),
            c.max_diff,
            yn(c.pass)
        );
        if !c.pass {
            status = Status::Mismatch;
            error = Some(format!("oracle and run differ by {:.3e}", c.max_diff));
        }
    }
    Report {
        schema_version: report::SCHEMA_VERSION,
        exit_code: exit_code(&status),
        status,
        error,
        body: body(Some(result)),
    }
}

fn load_run_normal_form(path: &Path, inst: &Instance) -> bnf_core::Result<(TFSeries, usize)> {
    let text = std::fs::read_to_string(path)?;
    let report: Report = serde_json::from_str(&text)?;
    let Body::Run {
        result: Some(result),
        instance: Some(summary),
        ..
    } = report.body
    else {
        return Err(Error::Malformed(format!("--compare: {} holds no run result", path.display())));
    };
    if summary.dim != inst.spec.dim {
        return Err(Error::DimensionMismatch(summary.dim, inst.spec.dim));
    }
    let normal = TFSeries::from_term_list(summary.dim, summary.degree_cap, &result.normal_form)?;
    let m_final = *result.m_sequence.last().unwrap_or(&2);
    Ok((normal, m_final))
}

fn cmd_schedule(dim: usize, rho0: f64, horizon: usize) -> Report {
    match report::schedule_output(dim, rho0, horizon) {
        Ok(out) => {
            println!("{:<16} {:>10} {:>10}", "family", "rows", "passing");
            for f in bnf_core::schedule::Family::ALL {
                let rows: Vec<_> = out.ledger.family(f).collect();
                let name = serde_json::to_value(f).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                println!("{:<16} {:>10} {:>10}", name, rows.len(), rows.iter().filter(|r| r.pass).count());
            }
            let status = if out.all_pass { Status::Ok } else { Status::ScheduleFailure };
            Report {
                schema_version: report::SCHEMA_VERSION,
                exit_code: exit_code(&status),
                error: (!out.all_pass).then(|| "schedule ledger has failing rows".to_string()),
                status,
                body: Body::Schedule { result: Some(out) },
            }
        }
        Err(e) => failed(Body::Schedule { result: None }, &e),
    }
}

fn cmd_verify(path: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };
    let de = &mut serde_json::Deserializer::from_str(&text);
    let report: Report = match serde_path_to_error::deserialize(de) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: malformed report at {}: {}", e.path(), e.inner());
            return ExitCode::from(1);
        }
    };
    let failures = report::verify(&report);
    if failures.is_empty() {
        println!("report consistent");
        ExitCode::SUCCESS
    } else {
        for f in &failures {
            println!("FAIL {f}");
        }
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    // usage errors exit 1; 2 is reserved for obstructions
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            instance,
            steps,
            report,
            tol,
            mode,
            profile,
            seed,
            scale_exponent,
        } => {
            let r = cmd_run(&instance, steps, tol, mode, profile, seed, scale_exponent);
            finish(&r, report.as_deref())
        }
        Command::Oracle {
            instance,
            degree,
            report,
            compare,
            tol,
            seed,
        } => {
            let r = cmd_oracle(&instance, degree, compare.as_deref(), tol, seed);
            finish(&r, report.as_deref())
        }
        Command::Schedule { dim, rho0, horizon, out } => finish(&cmd_schedule(dim, rho0, horizon), out.as_deref()),
        Command::Verify { report } => cmd_verify(&report),
    }
}
