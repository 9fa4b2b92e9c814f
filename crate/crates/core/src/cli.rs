//! Command-line front end.
//!
//! Exit codes: `0` success, `1` a numerical or verification failure, `2` bad
//! input or usage. Every report is written atomically into `--out`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::demos::{family_profile, run_demo, ProfileEntry, DEMO_NAMES};
use crate::error::{Error, Result};
use crate::gram::{
    gamma_sequence, gram_matrix, gram_quadrature_oracle, relative_frobenius_discrepancy,
    GammaSequence,
};
use crate::io::{
    format_float, matrix_csv, parse_json, to_json_string, write_atomic, Csv, ProblemDocument,
};
use crate::minimality::scaled_gamma_bound;
use crate::perturbation::{
    perturbed_controllability_check, PerturbationOptions, PerturbationReport,
};
use crate::simulator::{
    modal_state, modal_trajectory_csv, quadrature_state_oracle, relative_state_discrepancy,
    verify_null_controllability, VerificationReport,
};
use crate::spectrum::{validate_spectrum, ControlProblem, InputVector, SpectrumValidation};
use crate::synthesis::{realify, synthesize_null_control, RealControl, SynthesisResult};

const TRACE_SAMPLES: usize = 201;
const TRAJECTORY_STEPS: usize = 200;

#[derive(Parser, Debug)]
#[command(
    name = "nullctl",
    version,
    about = "Null-controllability via exponential moment problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gram profile, minimality verdict and Boas certificate of a problem's family.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Minimum-norm null control for the first `n` modes.
    Synthesize {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Synthesize, then simulate and verify the state at `t1`.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        check_order: Option<usize>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Deviation test between a reference and a perturbed problem.
    Perturb {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        check_order: Option<usize>,
        /// Random directions for the sampled deviation ratio.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        /// Continue when the reference is not strongly minimal or `q ≥ 1`.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Built-in pipelines.
    Demo {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(DEMO_NAMES))]
        name: String,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    /// Truncation order; defaults to the number of stored modes.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct CommonArgs {
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    panels: usize,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

/// Input document of `perturb`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationDocument {
    pub reference: ProblemDocument,
    pub perturbed: ProblemDocument,
    #[serde(rename = "override", default)]
    pub force: bool,
}

/// Envelope of every JSON report.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a CommonArgs,
    order: Option<usize>,
    passed: bool,
    result: T,
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ZeroInput { .. }
        | Error::IllConditioned { .. }
        | Error::NoConvergence { .. }
        | Error::NotHermitian { .. }
        | Error::InadmissiblePerturbation { .. }
        | Error::ReferenceNotStronglyMinimal { .. }
        | Error::NotConjugateClosed
        | Error::NotConjugateConsistent { .. }
        | Error::NonRealControl { .. } => 1,
        _ => 2,
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    format: Format,
}

impl Outputs<'_> {
    fn json<T: Serialize>(&self, file: &str, value: &T) -> Result<()> {
        if self.format.json() {
            write_atomic(&self.dir.join(file), to_json_string(value)?.as_bytes())?;
        }
        Ok(())
    }

    fn csv(&self, file: &str, csv: &Csv) -> Result<()> {
        if self.format.csv() {
            csv.write(&self.dir.join(file))?;
        }
        Ok(())
    }
}

fn check_common(c: &CommonArgs) -> Result<Outputs<'_>> {
    if !(c.tol > 0.0 && c.tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "--tol must be positive, got {}",
            c.tol
        )));
    }
    if c.panels == 0 {
        return Err(Error::InvalidParameter(
            "--panels must be at least 1".into(),
        ));
    }
    fs::create_dir_all(&c.out)?;
    Ok(Outputs {
        dir: &c.out,
        format: c.format,
    })
}

fn resolve_order(n: Option<usize>, available: usize) -> Result<usize> {
    match n {
        Some(0) => Err(Error::InvalidParameter("--n must be at least 1".into())),
        Some(n) if n > available => Err(Error::InvalidParameter(format!(
            "--n {n} exceeds the {available} stored modes"
        ))),
        Some(n) => Ok(n),
        None => Ok(available),
    }
}

fn resolve_check_order(check: Option<usize>, n: usize, available: usize) -> Result<usize> {
    match check {
        Some(j) if j < n || j > available => Err(Error::InvalidParameter(format!(
            "--check-order {j} must lie between n = {n} and the {available} stored modes"
        ))),
        Some(j) => Ok(j),
        None => Ok((3 * n).min(available)),
    }
}

fn load_input<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_json(&text, &path.display().to_string())
}

fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Analyze { input, common } => analyze(&input, &common),
        Command::Synthesize { input, common } => synthesize(&input, &common),
        Command::Simulate {
            input,
            check_order,
            common,
        } => simulate(&input, check_order, &common),
        Command::Perturb {
            input,
            check_order,
            samples,
            force,
            common,
        } => perturb(&input, check_order, samples, force, &common),
        Command::Demo { name, common } => demo(&name, &common),
    }
}

#[derive(Serialize)]
struct AnalysisReport {
    validation: SpectrumValidation,
    profile: ProfileEntry,
    /// `β² γ_n(b ≡ 1)` with `β = min |b_j|`, a lower bound for `profile.full_gamma`.
    scaled_lower_bound: Option<GammaSequence>,
    gram_oracle_discrepancy: f64,
    gram_oracle_panels: usize,
}

fn analyze(input: &InputArgs, common: &CommonArgs) -> Result<bool> {
    let out = check_common(common)?;
    let p: ControlProblem = load_input::<ProblemDocument>(&input.input)?.into_problem()?;
    let n = resolve_order(input.n, p.len())?;
    let profile = family_profile("input", &p, n, common.seed)?;
    let fam = p.family();
    let b = InputVector::new(fam.weights()[..n].to_vec())?;
    let scaled_lower_bound = if b.coefficients().iter().all(|w| w.norm() > 0.0) {
        let plain = gamma_sequence(&fam.with_input(&InputVector::ones(fam.len())), n)?;
        Some(scaled_gamma_bound(&plain, &b)?)
    } else {
        None
    };
    let g = gram_matrix(&fam, n)?;
    let gram_oracle_discrepancy =
        relative_frobenius_discrepancy(&g, &gram_quadrature_oracle(&fam, n, common.panels)?);
    let passed = profile.boas.passed && profile.full_gamma.monotonicity_violation(0.0).is_none();

    let mut gamma_csv = Csv::with_header(&["n", "gamma", "error_bound", "below_floor"]);
    for (i, v) in profile.full_gamma.values.iter().enumerate() {
        gamma_csv.row([
            (i + 1).to_string(),
            format_float(*v),
            format_float(profile.full_gamma.error_bounds[i]),
            profile.full_gamma.below_floor[i].to_string(),
        ]);
    }
    println!(
        "analyze: n = {n}, verdict {}, gamma_n = {:e}: {}",
        profile.minimality.verdict.as_str(),
        profile.full_gamma.values[n - 1],
        status(passed)
    );
    let report = AnalysisReport {
        validation: validate_spectrum(p.spectrum()),
        profile,
        scaled_lower_bound,
        gram_oracle_discrepancy,
        gram_oracle_panels: common.panels,
    };
    out.json(
        "analysis.json",
        &Envelope {
            command: "analyze",
            config: common,
            order: Some(n),
            passed,
            result: &report,
        },
    )?;
    out.csv("gamma.csv", &gamma_csv)?;
    out.csv("gram.csv", &matrix_csv(g.entries()))?;
    Ok(passed)
}

#[derive(Serialize)]
struct SynthesisReport {
    synthesis: SynthesisResult,
    real_control: Option<RealControl>,
    /// Why no real control was produced, if applicable.
    real_control_note: Option<String>,
}

fn synthesize_problem(p: &ControlProblem, n: usize, tol: f64) -> Result<SynthesisReport> {
    let synthesis = synthesize_null_control(p, n)?;
    let (real_control, real_control_note) = match realify(&synthesis, p, tol) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(SynthesisReport {
        synthesis,
        real_control,
        real_control_note,
    })
}

fn synthesize(input: &InputArgs, common: &CommonArgs) -> Result<bool> {
    let out = check_common(common)?;
    let p: ControlProblem = load_input::<ProblemDocument>(&input.input)?.into_problem()?;
    let n = resolve_order(input.n, p.len())?;
    let report = synthesize_problem(&p, n, common.tol)?;
    let passed = report.synthesis.relative_residual <= common.tol;
    println!(
        "synthesize: n = {n}, |u| = {:e}, relative moment residual {:e}: {}",
        report.synthesis.control_norm,
        report.synthesis.relative_residual,
        status(passed)
    );
    out.json(
        "synthesis.json",
        &Envelope {
            command: "synthesize",
            config: common,
            order: Some(n),
            passed,
            result: &report,
        },
    )?;
    out.csv(
        "control.csv",
        &report.synthesis.control.trace_csv(TRACE_SAMPLES),
    )?;
    Ok(passed)
}

#[derive(Serialize)]
struct SimulationReport {
    synthesis: SynthesisResult,
    verification: VerificationReport,
    oracle_discrepancy: f64,
    oracle_panels: usize,
}

fn simulate(input: &InputArgs, check_order: Option<usize>, common: &CommonArgs) -> Result<bool> {
    let out = check_common(common)?;
    let p: ControlProblem = load_input::<ProblemDocument>(&input.input)?.into_problem()?;
    let n = resolve_order(input.n, p.len())?;
    let j = resolve_check_order(check_order, n, p.len())?;
    let synthesis = synthesize_null_control(&p, n)?;
    let verification = verify_null_controllability(&p, &synthesis.control, j, common.tol)?;
    let closed = modal_state(&p, &synthesis.control, p.t1());
    let oracle = quadrature_state_oracle(&p, &synthesis.control, p.t1(), common.panels);
    let oracle_discrepancy =
        relative_state_discrepancy(&p, &synthesis.control, &closed, &oracle, p.t1());
    let passed = verification.passed;
    println!(
        "simulate: n = {n}, J = {j}, max residual {:e}, uncontrolled bound {:e}: {}",
        verification.max_residual,
        verification.uncontrolled_bound,
        status(passed)
    );
    let trajectory =
        modal_trajectory_csv(&p, &synthesis.control, 2.0 * p.t1(), TRAJECTORY_STEPS, j);
    let control = synthesis.control.trace_csv(TRACE_SAMPLES);
    out.json(
        "verification.json",
        &Envelope {
            command: "simulate",
            config: common,
            order: Some(n),
            passed,
            result: &SimulationReport {
                synthesis,
                verification,
                oracle_discrepancy,
                oracle_panels: common.panels,
            },
        },
    )?;
    out.csv("control.csv", &control)?;
    out.csv("trajectory.csv", &trajectory)?;
    Ok(passed)
}

fn perturb(
    input: &InputArgs,
    check_order: Option<usize>,
    samples: usize,
    force: bool,
    common: &CommonArgs,
) -> Result<bool> {
    let out = check_common(common)?;
    let doc: PerturbationDocument = load_input(&input.input)?;
    let force = force || doc.force;
    let reference = doc.reference.into_problem()?;
    let perturbed = doc.perturbed.into_problem()?;
    let n = resolve_order(input.n, reference.len().min(perturbed.len()))?;
    let check_order = resolve_check_order(check_order, n, perturbed.len())?;
    let opts = PerturbationOptions {
        tolerance: common.tol,
        check_order,
        samples,
        seed: common.seed,
        force,
    };
    let report: PerturbationReport =
        perturbed_controllability_check(&reference, &perturbed, n, &opts)?;
    println!(
        "perturb: n = {n}, q_n = {:e}, perturbed gamma_n = {:e}: {}",
        report.deviation.q_final,
        report.deviation.perturbed_gamma,
        status(report.passed)
    );
    out.json(
        "perturbation.json",
        &Envelope {
            command: "perturb",
            config: common,
            order: Some(n),
            passed: report.passed,
            result: &report,
        },
    )?;
    out.csv("q_profile.csv", &report.deviation.q_csv())?;
    if let Some(s) = &report.synthesis {
        out.csv("control.csv", &s.control.trace_csv(TRACE_SAMPLES))?;
    }
    Ok(report.passed)
}

fn demo(name: &str, common: &CommonArgs) -> Result<bool> {
    let out = check_common(common)?;
    let d = run_demo(name, common.seed, common.tol)?;
    println!("demo {}: {}", d.name, status(d.passed));
    out.json(
        &format!("{name}.json"),
        &Envelope {
            command: "demo",
            config: common,
            order: None,
            passed: d.passed,
            result: &d.report,
        },
    )?;
    for (file, csv) in &d.csv {
        out.csv(&format!("{name}_{file}"), csv)?;
    }
    Ok(d.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::ZeroInput { index: 1 }), 1);
        assert_eq!(exit_code(&Error::InadmissiblePerturbation { q: 1.2 }), 1);
        assert_eq!(
            exit_code(&Error::Schema {
                path: "$".into(),
                message: String::new()
            }),
            2
        );
        assert_eq!(exit_code(&Error::InvalidParameter(String::new())), 2);
    }

    #[test]
    fn default_check_order_clamped() {
        assert_eq!(resolve_check_order(None, 5, 15).unwrap(), 15);
        assert_eq!(resolve_check_order(None, 2, 15).unwrap(), 6);
        assert!(resolve_check_order(Some(3), 5, 15).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["nullctl", "frobnicate"]), 2);
        assert_eq!(run(["nullctl", "demo", "--name", "nope"]), 2);
        assert_eq!(run(["nullctl", "--help"]), 0);
    }

    #[test]
    fn perturbation_document_override_defaults_false() {
        let text = r#"{"reference": {"spectrum": {"preset": {"imaginary_ladder": {"n": 2}}}, "b": [1, 1], "x0": [1, 1], "t1": 1},
                       "perturbed": {"spectrum": {"preset": {"imaginary_ladder": {"n": 2}}}, "b": [1, 1], "x0": [1, 1], "t1": 1}}"#;
        let doc: PerturbationDocument = parse_json(text, "test").unwrap();
        assert!(!doc.force);
    }
}
