//! Built-in end-to-end pipelines.
//!
//! * `heat-null-control`: heat spectrum `λ_j = -j²π²`, five controlled modes,
//!   `L = 0.02`, `t1 = 0.1`, `x_{0j} = 1/j`, fifteen stored modes.
//! * `strip-perturbation`: `λ_k = ik` against `μ_k = ik + 1/k` on `[0, 2π]`,
//!   eight modes, `x_{0k} = 1/k²`.
//! * `strong-minimality-heat`: `γ_n` profile of `e^{n²π²t}` on `[0, 0.02]`,
//!   contrasted with the Fourier ladder on `[0, 2π]`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::{gamma_sequence, GammaSequence};
use crate::io::{format_float, Csv};
use crate::minimality::{
    boas_certificate, classify_minimality, BoasCertificate, MinimalityReport, DEFAULT_TRIALS,
};
use crate::moment::{solvability_diagnostic, MomentTargets, SolvabilityProfile};
use crate::perturbation::{
    perturbed_controllability_check, strip_deviation_mass, DeviationMass, PerturbationOptions,
    PerturbationReport,
};
use crate::simulator::{
    modal_state, modal_trajectory_csv, quadrature_state_oracle, relative_state_discrepancy,
    verify_null_controllability, VerificationReport,
};
use crate::spectrum::{
    build_spectrum, ControlProblem, DeviationRule, InputVector, SpectrumDescriptor, SpectrumPreset,
};
use crate::synthesis::{synthesize_null_control, SynthesisResult};
use crate::C64;

pub const DEMO_NAMES: [&str; 3] = [
    "heat-null-control",
    "strip-perturbation",
    "strong-minimality-heat",
];

pub const HEAT_STORED_MODES: usize = 15;
pub const HEAT_CONTROLLED: usize = 5;
pub const HEAT_T1: f64 = 0.1;
pub const HEAT_SETTLE_LAG: f64 = 0.08;
pub const HEAT_PROFILE_ORDER: usize = 8;
pub const STRIP_ORDER: usize = 8;
pub const STRIP_TOLERANCE: f64 = 1e-7;
pub const STRIP_SAMPLES: usize = 500;
/// Truncation of the deviation-mass series.
pub const STRIP_MASS_TERMS: usize = 1000;
pub const ORACLE_PANELS: usize = 256;

/// Heat problem with `x_{0j} = 1/j` and `b ≡ 1`.
pub fn heat_problem(stored: usize, t1: f64, settle_lag: f64) -> Result<ControlProblem> {
    let s = build_spectrum(&SpectrumDescriptor::Preset(SpectrumPreset::Heat {
        n: stored,
    }))?;
    let x0 = (1..=stored)
        .map(|j| C64::new(1.0 / j as f64, 0.0))
        .collect();
    ControlProblem::new(s, InputVector::ones(stored), x0, t1, settle_lag)
}

/// Finite `n`-mode strip system on `[0, 2π]` with `x_{0k} = 1/k²`.
pub fn strip_problem(preset: SpectrumPreset) -> Result<ControlProblem> {
    let n = preset.len();
    let s = build_spectrum(&SpectrumDescriptor::Preset(preset))?.into_finite();
    let x0 = (1..=n)
        .map(|k| C64::new(1.0 / (k * k) as f64, 0.0))
        .collect();
    ControlProblem::new(s, InputVector::ones(n), x0, 2.0 * PI, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatNullControlReport {
    pub stored_modes: usize,
    pub controlled_order: usize,
    pub check_order: usize,
    pub t1: f64,
    pub settle_lag: f64,
    pub horizon: f64,
    pub gamma: GammaSequence,
    pub synthesis: SynthesisResult,
    pub verification: VerificationReport,
    /// Closed-form state against quadrature of the convolution at `t1`.
    pub oracle_discrepancy: f64,
    pub oracle_panels: usize,
    pub passed: bool,
}

pub fn heat_null_control(tol: f64) -> Result<(ControlProblem, HeatNullControlReport)> {
    let p = heat_problem(HEAT_STORED_MODES, HEAT_T1, HEAT_SETTLE_LAG)?;
    let n = HEAT_CONTROLLED;
    let gamma = gamma_sequence(&p.family(), n)?;
    let synthesis = synthesize_null_control(&p, n)?;
    let verification = verify_null_controllability(&p, &synthesis.control, HEAT_STORED_MODES, tol)?;
    let closed = modal_state(&p, &synthesis.control, p.t1());
    let oracle = quadrature_state_oracle(&p, &synthesis.control, p.t1(), ORACLE_PANELS);
    let oracle_discrepancy =
        relative_state_discrepancy(&p, &synthesis.control, &closed, &oracle, p.t1());
    let report = HeatNullControlReport {
        stored_modes: HEAT_STORED_MODES,
        controlled_order: n,
        check_order: HEAT_STORED_MODES,
        t1: p.t1(),
        settle_lag: p.settle_lag(),
        horizon: p.horizon(),
        gamma,
        passed: verification.passed,
        synthesis,
        verification,
        oracle_discrepancy,
        oracle_panels: ORACLE_PANELS,
    };
    Ok((p, report))
}

/// The `M(t2)/α²` route next to the direct `q_n`.
#[derive(Debug, Clone, Serialize)]
pub struct MassRoute {
    pub mass: DeviationMass,
    pub alpha_sq: f64,
    /// `M(t2) / α²`, an upper bound for `q²`.
    pub ratio: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StripPerturbationReport {
    pub order: usize,
    pub horizon: f64,
    pub perturbation: PerturbationReport,
    pub mass_route: MassRoute,
    pub passed: bool,
}

pub fn strip_perturbation(
    seed: u64,
) -> Result<(ControlProblem, ControlProblem, StripPerturbationReport)> {
    let n = STRIP_ORDER;
    let rule = DeviationRule::default();
    let reference = strip_problem(SpectrumPreset::ImaginaryLadder { n })?;
    let perturbed = strip_problem(SpectrumPreset::StripPerturbed {
        n,
        deviation: rule.clone(),
    })?;
    let opts = PerturbationOptions {
        tolerance: STRIP_TOLERANCE,
        check_order: n,
        samples: STRIP_SAMPLES,
        seed,
        force: false,
    };
    let perturbation = perturbed_controllability_check(&reference, &perturbed, n, &opts)?;
    let alpha_sq = perturbation.deviation.alpha_sq;
    let mass = strip_deviation_mass(reference.horizon(), 0.0, &rule, STRIP_MASS_TERMS)?;
    let ratio = mass.total / alpha_sq;
    let report = StripPerturbationReport {
        order: n,
        horizon: reference.horizon(),
        passed: perturbation.passed,
        perturbation,
        mass_route: MassRoute {
            mass,
            alpha_sq,
            ratio,
            admissible: ratio < 1.0,
        },
    };
    Ok((reference, perturbed, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileEntry {
    pub family: String,
    pub horizon: f64,
    pub requested_order: usize,
    /// Orders whose `γ_n` is above the precision floor.
    pub resolved_order: usize,
    /// Verdict on the resolved prefix.
    pub minimality: MinimalityReport,
    /// Full profile, including entries below the floor.
    pub full_gamma: GammaSequence,
    pub boas: BoasCertificate,
    pub solvability: SolvabilityProfile,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongMinimalityReport {
    pub heat: ProfileEntry,
    pub ladder: ProfileEntry,
    pub passed: bool,
}

pub fn family_profile(
    name: &str,
    p: &ControlProblem,
    order: usize,
    seed: u64,
) -> Result<ProfileEntry> {
    let fam = p.family();
    let full_gamma = gamma_sequence(&fam, order)?;
    let resolved = full_gamma.resolved_prefix();
    if resolved == 0 {
        return Err(Error::IllConditioned {
            order: 1,
            gamma: full_gamma.values[0],
            ratio: 0.0,
        });
    }
    let minimality = classify_minimality(&full_gamma.truncated(resolved));
    let boas = boas_certificate(
        &fam,
        minimality.gamma_estimate,
        DEFAULT_TRIALS,
        resolved,
        seed,
    )?;
    let targets = MomentTargets::new(p.x0().iter().map(|x| -x).collect())?;
    let solvability = solvability_diagnostic(&fam, &targets, order)?;
    Ok(ProfileEntry {
        family: name.to_string(),
        horizon: fam.horizon(),
        requested_order: order,
        resolved_order: resolved,
        minimality,
        full_gamma,
        boas,
        solvability,
    })
}

pub fn strong_minimality_heat(seed: u64) -> Result<StrongMinimalityReport> {
    let heat = heat_problem(HEAT_PROFILE_ORDER, HEAT_T1, HEAT_SETTLE_LAG)?;
    let ladder = strip_problem(SpectrumPreset::ImaginaryLadder {
        n: HEAT_PROFILE_ORDER,
    })?;
    let heat = family_profile("heat", &heat, HEAT_PROFILE_ORDER, seed)?;
    let ladder = family_profile("imaginary-ladder", &ladder, HEAT_PROFILE_ORDER, seed)?;
    let passed = heat.boas.passed
        && ladder.boas.passed
        && heat.full_gamma.monotonicity_violation(0.0).is_none()
        && ladder.full_gamma.monotonicity_violation(0.0).is_none();
    Ok(StrongMinimalityReport {
        heat,
        ladder,
        passed,
    })
}

/// Sections used to check minimum-norm monotonicity and primal/dual agreement.
pub fn solvability_suite() -> Result<Vec<(String, SolvabilityProfile)>> {
    let heat = heat_problem(HEAT_PROFILE_ORDER, HEAT_T1, HEAT_SETTLE_LAG)?;
    let ladder = strip_problem(SpectrumPreset::ImaginaryLadder { n: STRIP_ORDER })?;
    let strip = strip_problem(SpectrumPreset::StripPerturbed {
        n: STRIP_ORDER,
        deviation: DeviationRule::default(),
    })?;
    let mut out = Vec::new();
    for (name, p) in [
        ("heat", heat),
        ("imaginary-ladder", ladder),
        ("strip-perturbed", strip),
    ] {
        let targets = MomentTargets::new(p.x0().iter().map(|x| -x).collect())?;
        out.push((
            name.to_string(),
            solvability_diagnostic(&p.family(), &targets, p.len())?,
        ));
    }
    Ok(out)
}

/// Serialized report plus plot-ready CSV files of a demo.
pub struct DemoOutput {
    pub name: String,
    pub report: serde_json::Value,
    pub csv: Vec<(String, Csv)>,
    pub passed: bool,
}

pub fn run_demo(name: &str, seed: u64, tol: f64) -> Result<DemoOutput> {
    match name {
        "heat-null-control" => {
            let (p, r) = heat_null_control(tol)?;
            let csv = vec![
                (
                    "control.csv".to_string(),
                    r.synthesis.control.trace_csv(201),
                ),
                (
                    "trajectory.csv".to_string(),
                    modal_trajectory_csv(
                        &p,
                        &r.synthesis.control,
                        2.0 * p.t1(),
                        200,
                        HEAT_STORED_MODES,
                    ),
                ),
            ];
            Ok(DemoOutput {
                name: name.into(),
                passed: r.passed,
                report: serde_json::to_value(&r)?,
                csv,
            })
        }
        "strip-perturbation" => {
            let (_, perturbed, r) = strip_perturbation(seed)?;
            let mut csv = vec![(
                "q_profile.csv".to_string(),
                r.perturbation.deviation.q_csv(),
            )];
            if let Some(s) = &r.perturbation.synthesis {
                csv.push(("control.csv".into(), s.control.trace_csv(201)));
                csv.push((
                    "trajectory.csv".into(),
                    modal_trajectory_csv(
                        &perturbed,
                        &s.control,
                        2.0 * perturbed.t1(),
                        200,
                        STRIP_ORDER,
                    ),
                ));
            }
            Ok(DemoOutput {
                name: name.into(),
                passed: r.passed,
                report: serde_json::to_value(&r)?,
                csv,
            })
        }
        "strong-minimality-heat" => {
            let r = strong_minimality_heat(seed)?;
            let mut csv = Csv::with_header(&["family", "n", "gamma", "error_bound", "below_floor"]);
            for e in [&r.heat, &r.ladder] {
                for (i, g) in e.full_gamma.values.iter().enumerate() {
                    csv.row([
                        e.family.clone(),
                        (i + 1).to_string(),
                        format_float(*g),
                        format_float(e.full_gamma.error_bounds[i]),
                        e.full_gamma.below_floor[i].to_string(),
                    ]);
                }
            }
            Ok(DemoOutput {
                name: name.into(),
                passed: r.passed,
                report: serde_json::to_value(&r)?,
                csv: vec![("gamma.csv".into(), csv)],
            })
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown demo '{other}', expected one of {}",
            DEMO_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minimality::Verdict;

    #[test]
    fn heat_demo_passes() {
        let (_, r) = heat_null_control(1e-8).unwrap();
        assert!(r.passed);
        assert!(r.oracle_discrepancy <= 1e-8, "{}", r.oracle_discrepancy);
    }

    #[test]
    fn strip_demo_passes() {
        let (_, _, r) = strip_perturbation(7).unwrap();
        assert!(r.passed);
        assert!(r.perturbation.deviation.q_final < 1.0);
    }

    #[test]
    fn heat_profile_verdicts() {
        let r = strong_minimality_heat(0).unwrap();
        assert_eq!(r.heat.resolved_order, 6);
        assert_eq!(r.heat.minimality.verdict, Verdict::GeometricDecay);
        assert_eq!(r.ladder.minimality.verdict, Verdict::StrongEvidence);
        assert!(r.passed);
    }

    #[test]
    fn unknown_demo_rejected() {
        assert!(run_demo("nope", 0, 1e-8).is_err());
    }
}
