//! Null-control synthesis: the moment problem with targets `c_j = -x_{0j}`.

use serde::Serialize;

use crate::eigen::MinEig;
use crate::error::{Error, Result};
use crate::moment::{
    relative_moment_residual, solve_truncated_moment, verify_moments, ControlSignal, MomentTargets,
};
use crate::spectrum::{conjugate_pairing, ControlProblem};
use crate::C64;

/// Grid size used for the realness defect.
pub const REALNESS_SAMPLES: usize = 257;
const CONJUGATE_DATA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SynthesisResult {
    pub control: ControlSignal,
    pub targets: MomentTargets,
    pub order: usize,
    /// `max |Im u|` on a uniform grid of [`REALNESS_SAMPLES`] points.
    pub realness_defect: f64,
    pub gamma_used: MinEig,
    /// `|∫ f_j u − c_j|` for `j ≤ n`.
    pub moment_residuals: Vec<f64>,
    /// `max_j r_j / max(1, ‖x0‖)`.
    pub relative_residual: f64,
    pub control_norm: f64,
    pub control_norm_dual: f64,
}

/// `c_j = -x_{0j}` for `j ≤ n`.
pub fn moment_targets_from_state(p: &ControlProblem, n: usize) -> Result<MomentTargets> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if n > p.len() {
        return Err(Error::OrderTooLarge {
            requested: n,
            available: p.len(),
        });
    }
    MomentTargets::new(p.x0()[..n].iter().map(|x| -x).collect())
}

/// Minimum-norm control that zeroes the first `n` modes at `t1` and vanishes
/// after `t1 - T`.
pub fn synthesize_null_control(p: &ControlProblem, n: usize) -> Result<SynthesisResult> {
    let targets = moment_targets_from_state(p, n)?;
    if let Some(i) = p.input().coefficients()[..n]
        .iter()
        .position(|b| b.norm() == 0.0)
    {
        return Err(Error::ZeroInput { index: i + 1 });
    }
    let fam = p.family();
    let sol = solve_truncated_moment(&fam, &targets, n)?;
    let moment_residuals = verify_moments(&fam, &sol.control, &targets)?;
    Ok(SynthesisResult {
        realness_defect: sol.control.realness_defect(REALNESS_SAMPLES),
        relative_residual: relative_moment_residual(&moment_residuals, &targets),
        moment_residuals,
        gamma_used: sol.gamma,
        control_norm: sol.norm(),
        control_norm_dual: sol.norm_sq_dual.sqrt(),
        order: n,
        control: sol.control,
        targets,
    })
}

/// Real-valued control obtained from a synthesis result.
#[derive(Debug, Clone, Serialize)]
pub struct RealControl {
    /// `Re u`, written in the same exponential terms.
    pub control: ControlSignal,
    pub realness_defect: f64,
    /// Residual of the realified control, recomputed.
    pub moment_residuals: Vec<f64>,
    pub relative_residual: f64,
}

/// Projects `u` onto its real part after checking that the problem data allow
/// a real control.
///
/// With conjugate partners `k ↔ k'` (`λ_{k'} = conj λ_k`, `b_{k'} = conj b_k`)
/// one has `conj(f_k) = f_{k'}`, so `Re u = Σ_k ½(α_k + conj α_{k'}) conj(f_k)`
/// stays in the same span.
pub fn realify(r: &SynthesisResult, p: &ControlProblem, tol: f64) -> Result<RealControl> {
    let n = r.order;
    let eigs = &p.spectrum().eigenvalues()[..n];
    let pairing = conjugate_pairing(eigs).ok_or(Error::NotConjugateClosed)?;
    let b = p.input().coefficients();
    let x0 = p.x0();
    let close =
        |a: C64, b: C64| (a - b).norm() <= CONJUGATE_DATA_TOL * a.norm().max(b.norm()).max(1.0);
    for (k, &k2) in pairing.iter().enumerate() {
        if !close(b[k2], b[k].conj()) || !close(x0[k2], x0[k].conj()) {
            return Err(Error::NotConjugateConsistent { index: k + 1 });
        }
    }
    if r.realness_defect > tol {
        return Err(Error::NonRealControl {
            defect: r.realness_defect,
            tol,
        });
    }
    let alpha = r.control.coefficients();
    let projected: Vec<C64> = (0..n)
        .map(|k| 0.5 * (alpha[k] + alpha[pairing[k]].conj()))
        .collect();
    let control = r.control.with_coefficients(projected);
    let fam = p.family();
    let moment_residuals = verify_moments(&fam, &control, &r.targets)?;
    Ok(RealControl {
        realness_defect: control.realness_defect(REALNESS_SAMPLES),
        relative_residual: relative_moment_residual(&moment_residuals, &r.targets),
        moment_residuals,
        control,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gram::phi;
    use crate::spectrum::{
        build_spectrum, InputVector, Spectrum, SpectrumDescriptor, SpectrumPreset,
    };
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn problem(eigs: Vec<C64>, b: Vec<C64>, x0: Vec<C64>, t1: f64, lag: f64) -> ControlProblem {
        let s = build_spectrum(&SpectrumDescriptor::Explicit(eigs)).unwrap();
        ControlProblem::new(s, InputVector::new(b).unwrap(), x0, t1, lag).unwrap()
    }

    fn heat_demo() -> ControlProblem {
        let s = build_spectrum(&SpectrumDescriptor::Preset(SpectrumPreset::Heat { n: 5 })).unwrap();
        let x0 = (1..=5).map(|j| c(1.0 / j as f64, 0.0)).collect();
        ControlProblem::new(s, InputVector::ones(5), x0, 0.1, 0.08).unwrap()
    }

    #[test]
    fn targets_flip_sign() {
        let p = problem(
            vec![c(-1.0, 0.0), c(-2.0, 0.0), c(-3.0, 0.0)],
            vec![c(1.0, 0.0); 3],
            vec![c(1.0, 0.0), c(0.5, 0.0), c(1.0 / 3.0, 0.0)],
            1.0,
            0.0,
        );
        let t = moment_targets_from_state(&p, 3).unwrap();
        assert_eq!(
            t.values(),
            &[c(-1.0, 0.0), c(-0.5, 0.0), c(-1.0 / 3.0, 0.0)]
        );
        let z = moment_targets_from_state(&p.with_x0(vec![c(0.0, 0.0); 3]).unwrap(), 3).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn heat_targets() {
        let t = moment_targets_from_state(&heat_demo(), 5).unwrap();
        for (j, v) in t.values().iter().enumerate() {
            assert_eq!(*v, c(-1.0 / (j + 1) as f64, 0.0));
        }
    }

    #[test]
    fn zero_state_zero_control() {
        let p = heat_demo().with_x0(vec![c(0.0, 0.0); 5]).unwrap();
        let r = synthesize_null_control(&p, 5).unwrap();
        assert!(r.control.is_zero());
        assert_eq!(r.realness_defect, 0.0);
        assert_eq!(r.relative_residual, 0.0);
    }

    #[test]
    fn singleton_closed_form() {
        // λ = 1: f(t) = e^{-t}, G = φ(2, 1), α = -1/G
        let p = problem(
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
            1.0,
            0.0,
        );
        let r = synthesize_null_control(&p, 1).unwrap();
        let want = -2.0 / (1.0 - (-2.0f64).exp());
        assert!((r.control.coefficients()[0] - c(want, 0.0)).norm() < 1e-14 * want.abs());
        assert!((r.control.eval(0.5) - c(want * (-0.5f64).exp(), 0.0)).norm() < 1e-14 * want.abs());
        // λ = -1: f(t) = e^{t}, G = φ(-2, 1) = (e² - 1)/2
        let p = problem(
            vec![c(-1.0, 0.0)],
            vec![c(1.0, 0.0)],
            vec![c(1.0, 0.0)],
            1.0,
            0.0,
        );
        let r = synthesize_null_control(&p, 1).unwrap();
        let want = -2.0 / (2.0f64.exp() - 1.0);
        assert!((r.control.coefficients()[0] - c(want, 0.0)).norm() < 1e-14 * want.abs());
        assert!((phi(c(-2.0, 0.0), 1.0).re * r.control.coefficients()[0].re + 1.0).abs() < 1e-15);
    }

    #[test]
    fn heat_fixture_residual() {
        let r = synthesize_null_control(&heat_demo(), 5).unwrap();
        assert!(
            r.moment_residuals.iter().all(|&x| x <= 1e-9),
            "{:?}",
            r.moment_residuals
        );
        assert!(r.realness_defect <= 1e-13 * crate::numeric::max_abs(r.control.coefficients()));
    }

    #[test]
    fn zero_input_rejected() {
        let p = problem(
            vec![c(-1.0, 0.0), c(-2.0, 0.0)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0); 2],
            1.0,
            0.0,
        );
        assert!(matches!(
            synthesize_null_control(&p, 2),
            Err(Error::ZeroInput { index: 1 })
        ));
    }

    #[test]
    fn real_data_realify_unchanged() {
        let p = heat_demo();
        let r = synthesize_null_control(&p, 5).unwrap();
        let real = realify(&r, &p, 1e-9).unwrap();
        for (a, b) in real
            .control
            .coefficients()
            .iter()
            .zip(r.control.coefficients())
        {
            assert_eq!(a.re, b.re);
        }
    }

    #[test]
    fn conjugate_pair_is_real() {
        let p = problem(
            vec![c(0.0, 1.0), c(0.0, -1.0)],
            vec![c(1.0, 0.0); 2],
            vec![c(1.0, 2.0), c(1.0, -2.0)],
            1.5,
            0.0,
        );
        let r = synthesize_null_control(&p, 2).unwrap();
        assert!(r.realness_defect <= 1e-12);
        let real = realify(&r, &p, 1e-9).unwrap();
        assert!(real.relative_residual <= 1e-12);
        assert!(real.realness_defect <= 1e-15);
    }

    #[test]
    fn lone_imaginary_eigenvalue_cannot_be_realified() {
        let s = Spectrum::from_raw(vec![c(0.0, 1.0)]);
        let p = ControlProblem::new(s, InputVector::ones(1), vec![c(-1.0, 0.0)], 1.0, 0.0).unwrap();
        let r = synthesize_null_control(&p, 1).unwrap();
        assert!(matches!(
            realify(&r, &p, 1e-9),
            Err(Error::NotConjugateClosed)
        ));
    }

    #[test]
    fn inconsistent_conjugate_data_rejected() {
        let p = problem(
            vec![c(0.0, 1.0), c(0.0, -1.0)],
            vec![c(1.0, 0.0); 2],
            vec![c(1.0, 2.0), c(1.0, 2.0)],
            1.5,
            0.0,
        );
        let r = synthesize_null_control(&p, 2).unwrap();
        assert!(matches!(
            realify(&r, &p, 1e-9),
            Err(Error::NotConjugateConsistent { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn homogeneous_in_initial_state(kr in -3.0f64..3.0, ki in -3.0f64..3.0) {
            let k = c(kr, ki);
            let p = problem(vec![c(-0.5, 1.0), c(0.2, -2.0), c(0.0, 3.0)], vec![c(1.0, 0.3), c(0.8, 0.0), c(1.0, -1.0)], vec![c(1.0, 0.0), c(-0.5, 0.5), c(0.25, 0.0)], 2.0, 0.5);
            let base = synthesize_null_control(&p, 3).unwrap();
            let scaled = synthesize_null_control(&p.with_x0(p.x0().iter().map(|x| x * k).collect()).unwrap(), 3).unwrap();
            for t in [0.0, 0.4, 1.1, 1.5] {
                let want = base.control.eval(t) * k;
                prop_assert!((scaled.control.eval(t) - want).norm() <= 1e-12 * (1.0 + want.norm()));
            }
        }
    }
}
