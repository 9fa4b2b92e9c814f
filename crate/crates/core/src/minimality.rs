//! Minimality diagnostics built on the `γ_n` profile.
//!
//! A family is minimal at truncation `n` when `γ_n > 0` and strongly minimal
//! when `γ_n` stays bounded away from zero as `n → ∞`. Only finite prefixes are
//! available, so the classifier below is a declared heuristic on the tail ratio
//! `γ_N / γ_{⌈N/2⌉}` and its thresholds are reported with every verdict.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::{gram_matrix, GammaSequence};
use crate::spectrum::{ExponentialFamily, InputVector};
use crate::C64;

/// Tail ratio below which the profile counts as geometric decay.
pub const GEOMETRIC_DECAY_RATIO: f64 = 0.1;
/// Tail ratio at or above which the profile counts as evidence of strong minimality.
pub const STRONG_EVIDENCE_RATIO: f64 = 0.5;
/// Relative slack of the Boas certificate.
pub const BOAS_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StrongEvidence,
    GeometricDecay,
    Degenerate,
    Unresolved,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::StrongEvidence => "strong-evidence",
            Verdict::GeometricDecay => "geometric-decay",
            Verdict::Degenerate => "degenerate",
            Verdict::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub geometric_decay_below: f64,
    pub strong_evidence_at_least: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            geometric_decay_below: GEOMETRIC_DECAY_RATIO,
            strong_evidence_at_least: STRONG_EVIDENCE_RATIO,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalityReport {
    pub gamma: GammaSequence,
    pub verdict: Verdict,
    /// `γ_N`
    pub gamma_estimate: f64,
    /// `γ_N / γ_{⌈N/2⌉}`; `None` when the denominator vanishes.
    pub decay_ratio: Option<f64>,
    /// 1-based order of the first entry that decided a degenerate verdict.
    pub degenerate_at: Option<usize>,
    pub thresholds: Thresholds,
}

/// Classifies a nonempty `γ_n` profile.
///
/// 1. `degenerate` if some entry not flagged below the precision floor is at most
///    its eigensolver error bound (raw values: at most zero);
/// 2. `unresolved` if `γ_N` is below the precision floor;
/// 3. otherwise by the tail ratio against the thresholds.
pub fn classify_minimality(g: &GammaSequence) -> MinimalityReport {
    assert!(!g.is_empty(), "gamma sequence must be nonempty");
    let thresholds = Thresholds::default();
    let n = g.len();
    let gamma_estimate = g.values[n - 1];
    let half = g.values[n.div_ceil(2) - 1];
    let decay_ratio = if half != 0.0 {
        Some(gamma_estimate / half)
    } else {
        None
    };

    let degenerate_at = (0..n)
        .find(|&i| {
            let v = g.values[i];
            let eps = g.error_bounds[i];
            (!g.below_floor[i] && v <= eps) || v < -eps
        })
        .map(|i| i + 1);

    let verdict = if degenerate_at.is_some() {
        Verdict::Degenerate
    } else if g.below_floor[n - 1] {
        Verdict::Unresolved
    } else {
        match decay_ratio {
            Some(r) if r < thresholds.geometric_decay_below => Verdict::GeometricDecay,
            Some(r) if r >= thresholds.strong_evidence_at_least => Verdict::StrongEvidence,
            _ => Verdict::Unresolved,
        }
    };
    MinimalityReport {
        gamma: g.clone(),
        verdict,
        gamma_estimate,
        decay_ratio,
        degenerate_at,
        thresholds,
    }
}

/// Outcome of sampling the Boas inequality `γ Σ|c_k|² ≤ ‖Σ c_j f_j‖²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoasCertificate {
    pub passed: bool,
    pub gamma_candidate: f64,
    /// Minimum of `‖Σ c_j f_j‖² / Σ|c_k|²` over all probes.
    pub worst_ratio: f64,
    pub order: usize,
    pub trials: usize,
    /// Deterministic probes `e_j`, `e_j ± e_k`, `e_j ± i e_k` evaluated before the random trials.
    pub structured_probes: usize,
    pub seed: u64,
    pub tolerance: f64,
}

/// Checks the Boas lower bound on structured and seeded complex-Gaussian
/// coefficient vectors. Passes iff the worst ratio is at least
/// `gamma_candidate (1 - tolerance)`.
pub fn boas_certificate(
    fam: &ExponentialFamily,
    gamma_candidate: f64,
    trials: usize,
    n: usize,
    seed: u64,
) -> Result<BoasCertificate> {
    if !(gamma_candidate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma candidate must be positive, got {gamma_candidate}"
        )));
    }
    let g = gram_matrix(fam, n)?;
    let zero = C64::new(0.0, 0.0);
    let mut worst = f64::INFINITY;
    let mut probe = |c: &[C64]| {
        let denom: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        if denom > 0.0 {
            worst = worst.min(g.quadratic_form(c) / denom);
        }
    };

    let mut structured = 0;
    let mut c = vec![zero; n];
    for j in 0..n {
        c[j] = C64::new(1.0, 0.0);
        probe(&c);
        structured += 1;
        for k in j + 1..n {
            for w in [
                C64::new(1.0, 0.0),
                C64::new(-1.0, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, -1.0),
            ] {
                c[k] = w;
                probe(&c);
                structured += 1;
            }
            c[k] = zero;
        }
        c[j] = zero;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let c: Vec<C64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        probe(&c);
    }

    Ok(BoasCertificate {
        passed: worst >= gamma_candidate * (1.0 - BOAS_TOLERANCE),
        gamma_candidate,
        worst_ratio: worst,
        order: n,
        trials,
        structured_probes: structured,
        seed,
        tolerance: BOAS_TOLERANCE,
    })
}

/// `n ↦ (min_{j≤n} |b_j|²) γ_n`: a lower bound for the `γ_n` profile of the
/// family rescaled by `b`.
pub fn scaled_gamma_bound(gamma_plain: &GammaSequence, b: &InputVector) -> Result<GammaSequence> {
    let n = gamma_plain.len();
    if b.len() < n {
        return Err(Error::LengthMismatch {
            what: "input vector for the scaling bound".into(),
            expected: n,
            found: b.len(),
        });
    }
    let coeffs = &b.coefficients()[..n];
    if let Some(i) = coeffs.iter().position(|z| z.norm() == 0.0) {
        return Err(Error::ZeroInput { index: i + 1 });
    }
    let mut beta_sq = f64::INFINITY;
    let mut values = Vec::with_capacity(n);
    let mut error_bounds = Vec::with_capacity(n);
    for i in 0..n {
        beta_sq = beta_sq.min(coeffs[i].norm_sqr());
        values.push(beta_sq * gamma_plain.values[i]);
        error_bounds.push(beta_sq * gamma_plain.error_bounds[i]);
    }
    Ok(GammaSequence {
        values,
        error_bounds,
        below_floor: gamma_plain.below_floor.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::hermitian_eigenvalues;
    use crate::gram::gamma_sequence;
    use crate::spectrum::{
        build_spectrum, exponential_family, Spectrum, SpectrumDescriptor, SpectrumPreset,
    };
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn family(eigs: Vec<C64>, b: Vec<C64>, l: f64) -> ExponentialFamily {
        exponential_family(&Spectrum::from_raw(eigs), &InputVector::new(b).unwrap(), l).unwrap()
    }

    fn orthonormal(n: usize) -> ExponentialFamily {
        let s = build_spectrum(&SpectrumDescriptor::Preset(
            SpectrumPreset::ImaginaryLadder { n },
        ))
        .unwrap();
        exponential_family(
            &s,
            &InputVector::constant(c(1.0 / (2.0 * PI).sqrt(), 0.0), n),
            2.0 * PI,
        )
        .unwrap()
    }

    #[test]
    fn flat_profile_is_strong_evidence() {
        let r = classify_minimality(&GammaSequence::from_values(vec![1.0; 4]));
        assert_eq!(r.verdict, Verdict::StrongEvidence);
        assert_eq!(r.gamma_estimate, 1.0);
    }

    #[test]
    fn geometric_profile() {
        let r = classify_minimality(&GammaSequence::from_values(vec![1.0, 0.1, 0.01, 0.001]));
        assert_eq!(r.verdict, Verdict::GeometricDecay);
        assert!((r.decay_ratio.unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn zero_entry_is_degenerate() {
        let r = classify_minimality(&GammaSequence::from_values(vec![1.0, 0.5, 0.0]));
        assert_eq!(r.verdict, Verdict::Degenerate);
        assert_eq!(r.degenerate_at, Some(3));
    }

    #[test]
    fn intermediate_ratio_is_unresolved() {
        let r = classify_minimality(&GammaSequence::from_values(vec![1.0, 0.5, 0.3, 0.2]));
        assert_eq!(r.verdict, Verdict::Unresolved);
    }

    #[test]
    fn floor_flagged_tail_is_unresolved() {
        let mut g = GammaSequence::from_values(vec![1.0, 1e-20]);
        g.below_floor[1] = true;
        assert_eq!(classify_minimality(&g).verdict, Verdict::Unresolved);
    }

    #[test]
    fn verdict_serializes_kebab_case() {
        assert_eq!(
            serde_json::to_string(&Verdict::StrongEvidence).unwrap(),
            "\"strong-evidence\""
        );
        assert_eq!(Verdict::GeometricDecay.as_str(), "geometric-decay");
    }

    #[test]
    fn boas_orthonormal() {
        let cert = boas_certificate(&orthonormal(5), 1.0, 50, 5, 1).unwrap();
        assert!(cert.passed);
        assert!((cert.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn boas_dependent_pair_fails() {
        let fam = family(vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0); 2], 1.0);
        let cert = boas_certificate(&fam, 1e-6, 10, 2, 3).unwrap();
        assert!(!cert.passed);
        assert_eq!(cert.worst_ratio, 0.0);
    }

    #[test]
    fn boas_rejects_nonpositive_candidate() {
        assert!(boas_certificate(&orthonormal(2), 0.0, 1, 2, 0).is_err());
    }

    #[test]
    fn scaled_bound_identity_and_square() {
        let plain = GammaSequence::from_values(vec![1.0, 0.5]);
        let same = scaled_gamma_bound(&plain, &InputVector::ones(2)).unwrap();
        assert_eq!(same.values, plain.values);
        let twice = scaled_gamma_bound(&plain, &InputVector::constant(c(2.0, 0.0), 2)).unwrap();
        assert_eq!(twice.values, vec![4.0, 2.0]);
    }

    #[test]
    fn scaled_bound_rejects_zero_input() {
        let plain = GammaSequence::from_values(vec![1.0, 0.5]);
        let b = InputVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(
            scaled_gamma_bound(&plain, &b),
            Err(Error::ZeroInput { index: 2 })
        ));
    }

    #[test]
    fn minimality_matches_determinant_sign() {
        let fam = family(
            vec![
                c(0.5, 1.0),
                c(-0.3, 2.0),
                c(1.0, -1.5),
                c(0.0, 0.7),
                c(-1.0, 0.0),
                c(0.2, 3.0),
            ],
            vec![c(1.0, 0.0); 6],
            1.0,
        );
        for n in 1..=6 {
            let g = gram_matrix(&fam, n).unwrap();
            let spec = hermitian_eigenvalues(g.entries()).unwrap();
            let det: f64 = spec.values.iter().product();
            let gamma = spec.min();
            assert!(gamma > 0.0 && det > 0.0);
            let chol = crate::linalg::Cholesky::factor(g.entries()).unwrap();
            // each eigenvalue carries absolute error of order eps·|G|
            let cond = spec.max() / gamma;
            let tol = 64.0 * n as f64 * f64::EPSILON * cond;
            assert!((chol.determinant() - det).abs() <= tol * det);
        }
    }

    fn arb_family() -> impl Strategy<Value = (ExponentialFamily, Vec<C64>)> {
        (1usize..=6, 0.5f64..2.0).prop_flat_map(|(n, l)| {
            (
                proptest::collection::vec((-3.0f64..3.0, -6.0f64..6.0), n),
                proptest::collection::vec((0.1f64..1.0, 0.0f64..(2.0 * PI)), n),
                Just(l),
            )
                .prop_map(|(eigs, bs, l)| {
                    let eigs: Vec<C64> = eigs.into_iter().map(|(r, i)| c(r, i)).collect();
                    let n = eigs.len();
                    let bs = bs.into_iter().map(|(m, a)| C64::from_polar(m, a)).collect();
                    (family(eigs, vec![c(1.0, 0.0); n], l), bs)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn direct_scaled_gamma_dominates_bound((plain, b) in arb_family()) {
            let n = plain.len();
            let b = InputVector::new(b).unwrap();
            let gp = gamma_sequence(&plain, n).unwrap();
            let gs = gamma_sequence(&plain.with_input(&b), n).unwrap();
            let bound = scaled_gamma_bound(&gp, &b).unwrap();
            for i in 0..n {
                prop_assert!(gs.values[i] >= bound.values[i] - gs.error_bounds[i] - bound.error_bounds[i] - 1e-12);
            }
        }

        #[test]
        fn boas_never_fails_at_min_eigenvalue((plain, _b) in arb_family(), seed in any::<u64>()) {
            let n = plain.len();
            let gs = gamma_sequence(&plain, n).unwrap();
            let gamma = gs.values[n - 1];
            // the relative slack only dominates rounding on reasonably conditioned blocks
            prop_assume!(gs.error_bounds[n - 1] <= 1e-10 * gamma);
            let cert = boas_certificate(&plain, gamma, 40, n, seed).unwrap();
            prop_assert!(cert.passed, "worst {} vs gamma {}", cert.worst_ratio, gamma);
        }

        #[test]
        fn any_zero_is_degenerate(mut vals in proptest::collection::vec(0.0f64..5.0, 1..10), idx in any::<prop::sample::Index>()) {
            let i = idx.index(vals.len());
            vals[i] = 0.0;
            prop_assert_eq!(classify_minimality(&GammaSequence::from_values(vals)).verdict, Verdict::Degenerate);
        }
    }
}
