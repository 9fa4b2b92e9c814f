//! Perturbations of the spectrum.
//!
//! For families `x_j` (reference) and `y_j` (perturbed) on the same horizon the
//! tight constant in `‖Σ c_j (y_j − x_j)‖ ≤ q ‖Σ c_j x_j‖` at truncation `n` is
//! `q_n = sqrt(λ_max(R^{-H} D R^{-1}))`, where `G = R^H R` is the reference Gram
//! matrix and `D` the Gram matrix of the differences. When `q < 1` the perturbed
//! family inherits `γ ≥ α² (1 − q)²` from the reference constant `α²`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::eigen::hermitian_eigenvalues;
use crate::error::{Error, Result};
use crate::gram::{cross_gram_matrix, gamma_sequence, gram_matrix, GramMatrix};
use crate::io::{format_float, Csv};
use crate::linalg::{CMatrix, Cholesky};
use crate::minimality::{classify_minimality, MinimalityReport, Verdict};
use crate::quadrature::{GaussLegendre, ORACLE_NODES};
use crate::simulator::{verify_null_controllability, VerificationReport};
use crate::spectrum::{ControlProblem, DeviationRule, ExponentialFamily};
use crate::synthesis::{synthesize_null_control, SynthesisResult};
use crate::C64;

/// Gram matrix of the differences `y_j − x_j`.
pub fn difference_gram(
    reference: &ExponentialFamily,
    perturbed: &ExponentialFamily,
    n: usize,
) -> Result<GramMatrix> {
    let gx = gram_matrix(reference, n)?;
    let gy = gram_matrix(perturbed, n)?;
    let cyx = cross_gram_matrix(perturbed, reference, n)?;
    let d = CMatrix::from_fn(n, |j, k| {
        let v = gy.entries()[(j, k)] - cyx[(j, k)] - cyx[(k, j)].conj() + gx.entries()[(j, k)];
        if j == k {
            C64::new(v.re, 0.0)
        } else {
            v
        }
    });
    Ok(GramMatrix::from_entries(d))
}

fn factor_reference(reference: &ExponentialFamily, n: usize) -> Result<(GramMatrix, Cholesky)> {
    let g = gram_matrix(reference, n)?;
    let m = g.min_eig()?;
    if m.below_floor {
        return Err(Error::IllConditioned {
            order: n,
            gamma: m.value,
            ratio: m.floor_ratio(),
        });
    }
    let chol = Cholesky::factor(g.entries())?;
    Ok((g, chol))
}

/// Tight deviation constant `q_n`.
pub fn deviation_ratio(
    reference: &ExponentialFamily,
    perturbed: &ExponentialFamily,
    n: usize,
) -> Result<f64> {
    if reference.horizon() != perturbed.horizon() {
        return Err(Error::HorizonMismatch(
            reference.horizon(),
            perturbed.horizon(),
        ));
    }
    let (_, chol) = factor_reference(reference, n)?;
    let d = difference_gram(reference, perturbed, n)?;
    let m = chol.congruence(d.entries());
    Ok(hermitian_eigenvalues(&m)?.max().max(0.0).sqrt())
}

/// `q_1, …, q_N`.
pub fn deviation_profile(
    reference: &ExponentialFamily,
    perturbed: &ExponentialFamily,
    max_order: usize,
) -> Result<Vec<f64>> {
    (1..=max_order)
        .map(|n| deviation_ratio(reference, perturbed, n))
        .collect()
}

/// Largest `‖Σ c (y − x)‖ / ‖Σ c x‖` over seeded complex-Gaussian `c`.
pub fn sampled_deviation_ratio(
    reference: &ExponentialFamily,
    perturbed: &ExponentialFamily,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if reference.horizon() != perturbed.horizon() {
        return Err(Error::HorizonMismatch(
            reference.horizon(),
            perturbed.horizon(),
        ));
    }
    let g = gram_matrix(reference, n)?;
    let d = difference_gram(reference, perturbed, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let c: Vec<C64> = (0..n)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        let den = g.quadratic_form(&c);
        if den > 0.0 {
            worst = worst.max((d.quadratic_form(&c).max(0.0) / den).sqrt());
        }
    }
    Ok(worst)
}

/// `α² (1 − q)²`.
pub fn transfer_bound(alpha_sq: f64, q: f64) -> Result<f64> {
    if !(alpha_sq > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha^2 must be positive, got {alpha_sq}"
        )));
    }
    if !(q >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "q must be nonnegative, got {q}"
        )));
    }
    if q >= 1.0 {
        return Err(Error::InadmissiblePerturbation { q });
    }
    Ok(alpha_sq * (1.0 - q).powi(2))
}

/// `M(t2) = ∫_0^{t2} e^{2γt} Σ_k |e^{-d(k) t} − 1|² dt`, split at `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationMass {
    /// Quadrature of the sum over `k ≤ K`.
    pub partial: f64,
    /// Upper bound for the sum over `k > K`.
    pub remainder: f64,
    pub total: f64,
    pub truncation: usize,
}

/// Panels used for the deviation-mass quadrature.
pub const MASS_PANELS: usize = 64;

/// Deviation mass of a strip perturbation. The remainder uses
/// `|e^{z} − 1| ≤ |z| e^{|z|}` with `|d(k)| ≤ C / k^p ≤ C / (K+1)^p` and
/// `Σ_{k>K} k^{-2p} ≤ K^{1−2p} / (2p − 1)`.
pub fn strip_deviation_mass(
    t2: f64,
    gamma: f64,
    rule: &DeviationRule,
    truncation: usize,
) -> Result<DeviationMass> {
    if !(t2 > 0.0) {
        return Err(Error::NonPositiveHorizon(t2));
    }
    if truncation == 0 {
        return Err(Error::ZeroOrder);
    }
    let quad = GaussLegendre::new(ORACLE_NODES);
    let deviations: Vec<C64> = (1..=truncation).map(|k| rule.at(k)).collect();
    let partial = quad
        .integrate(0.0, t2, MASS_PANELS, |t| {
            let s: f64 = deviations
                .iter()
                .map(|d| crate::numeric::expm1(-d * t).norm_sqr())
                .sum();
            C64::new((2.0 * gamma * t).exp() * s, 0.0)
        })
        .re;
    let (cst, p) = rule.envelope();
    let remainder = if cst == 0.0 {
        0.0
    } else {
        let k = truncation as f64;
        let tail_sum = cst * cst * k.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0);
        let d_max = cst / (k + 1.0).powf(p);
        tail_sum
            * quad
                .integrate(0.0, t2, MASS_PANELS, |t| {
                    C64::new(t * t * (2.0 * (gamma + d_max) * t).exp(), 0.0)
                })
                .re
    };
    Ok(DeviationMass {
        partial,
        remainder,
        total: partial + remainder,
        truncation,
    })
}

/// Direct `q_n` against the sampling oracle and the transferred bound.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub q_values: Vec<f64>,
    pub q_final: f64,
    pub admissible: bool,
    /// `α² = γ_n` of the reference family.
    pub alpha_sq: f64,
    /// `α² (1 − q)²` when admissible.
    pub transferred_gamma: Option<f64>,
    /// Directly computed `γ_n` of the perturbed family.
    pub perturbed_gamma: f64,
    pub sampled_max: f64,
    pub samples: usize,
    pub seed: u64,
}

impl DeviationReport {
    pub fn q_csv(&self) -> Csv {
        let mut csv = Csv::with_header(&["n", "q_n"]);
        for (i, q) in self.q_values.iter().enumerate() {
            csv.row([(i + 1).to_string(), format_float(*q)]);
        }
        csv
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationOptions {
    pub tolerance: f64,
    pub check_order: usize,
    pub samples: usize,
    pub seed: u64,
    /// Run synthesis on the perturbed problem even when `q ≥ 1` or the
    /// reference is not classified as strongly minimal.
    pub force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub order: usize,
    pub reference_minimality: MinimalityReport,
    pub deviation: DeviationReport,
    pub synthesis: Option<SynthesisResult>,
    pub verification: Option<VerificationReport>,
    pub forced: bool,
    pub passed: bool,
}

/// Deviation test, transferred bound and the synthesis/verification pipeline on
/// the perturbed problem.
pub fn perturbed_controllability_check(
    reference: &ControlProblem,
    perturbed: &ControlProblem,
    n: usize,
    opts: &PerturbationOptions,
) -> Result<PerturbationReport> {
    if reference.horizon() != perturbed.horizon() {
        return Err(Error::HorizonMismatch(
            reference.horizon(),
            perturbed.horizon(),
        ));
    }
    let xf = reference.family();
    let yf = perturbed.family();
    let reference_minimality = classify_minimality(&gamma_sequence(&xf, n)?);
    if reference_minimality.verdict != Verdict::StrongEvidence && !opts.force {
        return Err(Error::ReferenceNotStronglyMinimal {
            order: n,
            verdict: reference_minimality.verdict.as_str().to_string(),
        });
    }
    let q_values = deviation_profile(&xf, &yf, n)?;
    let q_final = q_values[n - 1];
    let admissible = q_final < 1.0;
    let alpha_sq = reference_minimality.gamma_estimate;
    let transferred_gamma = if admissible {
        transfer_bound(alpha_sq, q_final).ok()
    } else {
        None
    };
    let deviation = DeviationReport {
        perturbed_gamma: gamma_sequence(&yf, n)?.values[n - 1],
        sampled_max: sampled_deviation_ratio(&xf, &yf, n, opts.samples, opts.seed)?,
        samples: opts.samples,
        seed: opts.seed,
        q_values,
        q_final,
        admissible,
        alpha_sq,
        transferred_gamma,
    };
    let (synthesis, verification) = if admissible || opts.force {
        let s = synthesize_null_control(perturbed, n)?;
        let v = verify_null_controllability(
            perturbed,
            &s.control,
            opts.check_order.max(n).min(perturbed.len()),
            opts.tolerance,
        )?;
        (Some(s), Some(v))
    } else {
        (None, None)
    };
    let passed = admissible && verification.as_ref().is_some_and(|v| v.passed);
    Ok(PerturbationReport {
        order: n,
        reference_minimality,
        deviation,
        synthesis,
        verification,
        forced: opts.force,
        passed,
    })
}
