//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nullctl::demos::{
    heat_null_control, heat_problem, solvability_suite, strip_perturbation, strip_problem,
    strong_minimality_heat,
};
use nullctl::eigen::hermitian_min_eig;
use nullctl::gram::{
    gamma_sequence, gram_matrix, gram_quadrature_oracle, relative_frobenius_discrepancy,
    GammaSequence,
};
use nullctl::linalg::CMatrix;
use nullctl::moment::{biorthogonality_defect, build_biorthogonal};
use nullctl::simulator::modal_state;
use nullctl::spectrum::{
    exponential_family, ExponentialFamily, InputVector, Spectrum, SpectrumPreset,
};
use nullctl::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    passed: bool,
    detail: String,
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Random family with `n ≤ 8`, `|Re λ| L ≤ 40` and distinct eigenvalues.
fn random_family(rng: &mut ChaCha8Rng) -> ExponentialFamily {
    let n = rng.random_range(1..=8);
    let horizon = rng.random_range(0.1..2.0);
    let re_max = 40.0 / horizon;
    let mut eigs: Vec<C64> = Vec::with_capacity(n);
    while eigs.len() < n {
        let z = C64::new(
            rng.random_range(-re_max..re_max),
            rng.random_range(-20.0..20.0),
        );
        if eigs.iter().all(|w| (w - z).norm() > 1e-3) {
            eigs.push(z);
        }
    }
    eigs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    exponential_family(&Spectrum::from_raw(eigs), &InputVector::ones(n), horizon).unwrap()
}

fn families(seed: u64, count: usize) -> Vec<ExponentialFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_family(&mut rng)).collect()
}

/// Haar-like unitary from Gram-Schmidt (applied twice) on a Gaussian matrix.
fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / norm).collect());
    }
    CMatrix::from_fn(n, |i, j| cols[j][i])
}

fn ac1() -> Outcome {
    let mut worst: f64 = 0.0;
    for fam in families(1, 100) {
        let n = fam.len();
        let g = gram_matrix(&fam, n).unwrap();
        let o = gram_quadrature_oracle(&fam, n, 256).unwrap();
        worst = worst.max(relative_frobenius_discrepancy(&g, &o));
    }
    Outcome {
        passed: worst <= 1e-8,
        detail: format!(
            "100 families, max relative Frobenius discrepancy {worst:.3e} (limit 1e-8)"
        ),
    }
}

fn ac2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let scale = 10f64.powf(rng.random_range(-2.0..1.0));
        let planted: Vec<f64> = (0..n)
            .map(|_| scale * rng.random_range(-1.0..1.0))
            .collect();
        let u = random_unitary(&mut rng, n);
        let d = CMatrix::from_fn(n, |i, j| {
            if i == j {
                C64::new(planted[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mut a = u.matmul(&d).matmul(&u.adjoint());
        // exact Hermitian symmetry
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
                a = set(a, i, j, avg);
                a = set(a, j, i, avg.conj());
            }
            let re = a[(i, i)].re;
            a = set(a, i, i, C64::new(re, 0.0));
        }
        let want = planted.iter().copied().fold(f64::INFINITY, f64::min);
        let got = hermitian_min_eig(&a).unwrap().value;
        worst = worst.max((got - want).abs());
    }
    Outcome {
        passed: worst <= 1e-11,
        detail: format!("1000 matrices, max |γ - planted| {worst:.3e} (limit 1e-11)"),
    }
}

fn set(m: CMatrix, i: usize, j: usize, v: C64) -> CMatrix {
    let n = m.dim();
    CMatrix::from_fn(n, |r, c| if (r, c) == (i, j) { v } else { m[(r, c)] })
}

fn ac3() -> Outcome {
    let mut violations = 0;
    for fam in families(1, 100) {
        if gamma_sequence(&fam, fam.len())
            .unwrap()
            .monotonicity_violation(0.0)
            .is_some()
        {
            violations += 1;
        }
    }
    let heat = strong_minimality_heat(0).unwrap();
    let heat_ok = heat.heat.full_gamma.monotonicity_violation(0.0).is_none();
    Outcome {
        passed: violations == 0 && heat_ok,
        detail: format!(
            "{violations} violations in 100 random families, heat profile monotone: {heat_ok}"
        ),
    }
}

fn ac4() -> Outcome {
    let (p, r) = heat_null_control(1e-8).unwrap();
    let moment = r
        .synthesis
        .moment_residuals
        .iter()
        .copied()
        .fold(0.0, f64::max);
    let x = modal_state(&p, &r.synthesis.control, p.t1());
    let state = x[..5].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tail = r.verification.uncontrolled_bound;
    Outcome {
        passed: moment <= 1e-9 && state <= 1e-8 && tail <= 1e-12 && r.verification.passed,
        detail: format!(
            "moment residual {moment:.3e}, max_(j<=5) |x_j(t1)| {state:.3e}, tail bound (j>5) {tail:.3e}, verification {}",
            r.verification.passed
        ),
    }
}

fn ac5() -> Outcome {
    let heat = heat_problem(3, 0.1, 0.08).unwrap().family();
    let ladder = strip_problem(SpectrumPreset::ImaginaryLadder { n: 6 })
        .unwrap()
        .family();
    let dh = biorthogonality_defect(&heat, &build_biorthogonal(&heat, 3).unwrap()).unwrap();
    let dl = biorthogonality_defect(&ladder, &build_biorthogonal(&ladder, 6).unwrap()).unwrap();
    Outcome {
        passed: dh <= 1e-9 && dl <= 1e-9,
        detail: format!("heat(3) defect {dh:.3e}, ladder(6) defect {dl:.3e} (limit 1e-9)"),
    }
}

/// Worst violation of `γ_n(scaled) ≥ β² γ_n(plain) − 1e-10`, and of the same
/// inequality with the eigensolver error bounds as slack.
fn scaling_violation(fams: &[ExponentialFamily], seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_bounded = f64::NEG_INFINITY;
    for fam in fams {
        let n = fam.len();
        let beta = rng.random_range(0.1..=1.0);
        let mut b: Vec<C64> = (0..n)
            .map(|_| {
                C64::from_polar(
                    rng.random_range(beta..=1.0),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let k = rng.random_range(0..n);
        b[k] = C64::from_polar(beta, rng.random_range(0.0..2.0 * PI));
        let plain: GammaSequence = gamma_sequence(fam, n).unwrap();
        let scaled = gamma_sequence(&fam.with_input(&InputVector::new(b).unwrap()), n).unwrap();
        for i in 0..n {
            let gap = beta * beta * plain.values[i] - scaled.values[i];
            worst = worst.max(gap - 1e-10);
            worst_bounded = worst_bounded
                .max(gap - beta * beta * plain.error_bounds[i] - scaled.error_bounds[i]);
        }
    }
    (worst, worst_bounded)
}

/// Families with `|Re λ| L ≤ 2`, so that Gram entries stay of order one and an
/// absolute slack is meaningful.
fn moderate_families(seed: u64, count: usize) -> Vec<ExponentialFamily> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=8);
            let horizon = rng.random_range(0.5..2.0);
            let re_max = 2.0 / horizon;
            let mut eigs: Vec<C64> = Vec::with_capacity(n);
            while eigs.len() < n {
                let z = C64::new(
                    rng.random_range(-re_max..re_max),
                    rng.random_range(-20.0..20.0),
                );
                if eigs.iter().all(|w| (w - z).norm() > 1e-3) {
                    eigs.push(z);
                }
            }
            eigs.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
            exponential_family(&Spectrum::from_raw(eigs), &InputVector::ones(n), horizon).unwrap()
        })
        .collect()
}

fn ac6() -> Outcome {
    let (worst, _) = scaling_violation(&moderate_families(60, 100), 6);
    let (wide, wide_bounded) = scaling_violation(&families(1, 100), 6);
    Outcome {
        passed: worst <= 0.0,
        detail: format!(
            "100 families (|Re λ|L ≤ 2), max (β²γ_plain − 1e-10 − γ_scaled) = {worst:.3e} (must be ≤ 0); \
             criterion-1 families: absolute {wide:.3e}, against eigensolver error bounds {wide_bounded:.3e}"
        ),
    }
}

fn ac7() -> Outcome {
    let (_, _, r) = strip_perturbation(7).unwrap();
    let d = &r.perturbation.deviation;
    let reference = d.alpha_sq;
    let bound = 2.0 * PI * (1.0 - d.q_final).powi(2);
    let verified = r
        .perturbation
        .verification
        .as_ref()
        .is_some_and(|v| v.passed && v.tolerance == 1e-7);
    Outcome {
        passed: (reference - 2.0 * PI).abs() <= 1e-9 && d.q_final < 1.0 && d.perturbed_gamma >= bound - 1e-9 && verified,
        detail: format!(
            "reference γ_8 = {reference:.12}, q_8 = {:.12}, perturbed γ_8 = {:.6e} ≥ {bound:.6e}, verification at 1e-7: {verified}",
            d.q_final, d.perturbed_gamma
        ),
    }
}

fn ac8() -> Outcome {
    let mut worst_dual: f64 = 0.0;
    let mut monotone = true;
    let mut sections = Vec::new();
    for (name, prof) in solvability_suite().unwrap() {
        monotone &= prof.norms.windows(2).all(|w| w[1] >= w[0]);
        for (a, b) in prof.norms.iter().zip(&prof.dual_norms) {
            let (a2, b2) = (a * a, b * b);
            worst_dual = worst_dual.max((a2 - b2).abs() / a2.max(b2).max(f64::MIN_POSITIVE));
        }
        sections.push(format!("{name}:{}", prof.resolved_order));
    }
    Outcome {
        passed: monotone && worst_dual <= 1e-9,
        detail: format!(
            "sections [{}], norms nondecreasing: {monotone}, max primal/dual relative gap {worst_dual:.3e}",
            sections.join(", ")
        ),
    }
}

fn ac9() -> Outcome {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let status = Command::new(env!("CARGO_BIN_EXE_nullctl"))
            .args([
                "demo",
                "--name",
                "strip-perturbation",
                "--seed",
                "7",
                "--format",
                "json",
                "--out",
            ])
            .arg(dir.path())
            .output()
            .unwrap()
            .status;
        (
            status.success(),
            fs::read(dir.path().join("strip-perturbation.json")).unwrap_or_default(),
        )
    };
    let (ok_a, a) = run();
    let (ok_b, b) = run();
    Outcome {
        passed: ok_a && ok_b && !a.is_empty() && a == b,
        detail: format!("two runs, {} bytes, identical: {}", a.len(), a == b),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        (
            "AC1 gram closed form vs quadrature",
            ac1,
            Some(Duration::from_secs(5)),
        ),
        (
            "AC2 eigensolver on planted spectra",
            ac2,
            Some(Duration::from_secs(10)),
        ),
        ("AC3 gamma monotonicity", ac3, None),
        (
            "AC4 heat null-control demo",
            ac4,
            Some(Duration::from_secs(1)),
        ),
        ("AC5 biorthogonality", ac5, None),
        ("AC6 input scaling bound", ac6, None),
        (
            "AC7 strip perturbation pipeline",
            ac7,
            Some(Duration::from_secs(2)),
        ),
        ("AC8 minimum-norm monotonicity and duality", ac8, None),
        ("AC9 determinism", ac9, None),
    ];
    let mut failures = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = outcome.passed && in_time;
        if !passed {
            failures += 1;
        }
        let limit = budget.map(|b| format!(" / {:.0?}", b)).unwrap_or_default();
        println!(
            "{} {name}: {} [{:.3?}{limit}]",
            if passed { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
