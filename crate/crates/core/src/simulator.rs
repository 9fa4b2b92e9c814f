//! Modal mild solution and null-controllability verification.
//!
//! Mode `j` evolves as
//!
//! ```text
//! x_j(t) = e^{λ_j t} (x_{0j} + ∫_0^t e^{-λ_j τ} b_j u(τ) dτ)
//! ```
//!
//! and, with `u = Σ_k α_k conj(f_k)`, the integral is
//! `Σ_k α_k b_j conj(b_k) φ(λ_j + conj λ_k, min(t, L))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{format_float, Csv};
use crate::moment::ControlSignal;
use crate::quadrature::{GaussLegendre, ORACLE_NODES};
use crate::spectrum::{ControlProblem, GrowthClass};
use crate::C64;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Persistence spot checks after `t1`, as multiples of `t1`.
pub const PERSISTENCE_TIMES: [f64; 2] = [1.5, 2.0];
const PERSISTENCE_SLACK: f64 = 1e-12;

fn mode_state(rate: C64, weight: C64, x0: C64, u: &ControlSignal, t: f64) -> C64 {
    (rate * t).exp() * (x0 + u.moment_until(rate, weight, t))
}

/// Panels for the scale integral of [`relative_state_discrepancy`].
const SCALE_PANELS: usize = 32;

/// `x_j(t)` for every stored mode.
pub fn modal_state(p: &ControlProblem, u: &ControlSignal, t: f64) -> Vec<C64> {
    let eigs = p.spectrum().eigenvalues();
    let b = p.input().coefficients();
    (0..p.len())
        .map(|j| mode_state(eigs[j], b[j], p.x0()[j], u, t))
        .collect()
}

/// `x_j(t)` with the convolution integral evaluated by composite Gauss-Legendre.
pub fn quadrature_state_oracle(
    p: &ControlProblem,
    u: &ControlSignal,
    t: f64,
    panels: usize,
) -> Vec<C64> {
    let rule = GaussLegendre::new(ORACLE_NODES);
    let eigs = p.spectrum().eigenvalues();
    let b = p.input().coefficients();
    let upto = t.min(u.horizon());
    (0..p.len())
        .map(|j| {
            let integral = if upto > 0.0 {
                rule.integrate(0.0, upto, panels, |tau| {
                    (-eigs[j] * tau).exp() * b[j] * u.eval(tau)
                })
            } else {
                C64::new(0.0, 0.0)
            };
            (eigs[j] * t).exp() * (p.x0()[j] + integral)
        })
        .collect()
}

/// `max_j |a_j - o_j| / s_j` with the cancellation-aware scale
/// `s_j = |e^{λ_j t}| (|x_{0j}| + ∫_0^t |e^{-λ_j τ} b_j u(τ)| dτ)`.
pub fn relative_state_discrepancy(
    p: &ControlProblem,
    u: &ControlSignal,
    closed: &[C64],
    oracle: &[C64],
    t: f64,
) -> f64 {
    let rule = GaussLegendre::new(ORACLE_NODES);
    let eigs = p.spectrum().eigenvalues();
    let b = p.input().coefficients();
    let upto = t.min(u.horizon());
    closed
        .iter()
        .zip(oracle)
        .enumerate()
        .map(|(j, (a, o))| {
            let mass = if upto > 0.0 {
                rule.integrate(0.0, upto, SCALE_PANELS, |tau| {
                    C64::new(((-eigs[j] * tau).exp() * b[j] * u.eval(tau)).norm(), 0.0)
                })
                .re
            } else {
                0.0
            };
            let scale = (eigs[j] * t).exp().norm() * (p.x0()[j].norm() + mass);
            let d = (a - o).norm();
            if scale > 0.0 {
                d / scale
            } else {
                d
            }
        })
        .fold(0.0, f64::max)
}

/// How the uncontrolled modes beyond the stored truncation were handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailStatus {
    /// No modes exist beyond the stored ones.
    Finite,
    /// Dissipative preset: the bound covers the stored modes and the first
    /// extrapolated one, whose term dominates all later ones.
    Decaying,
    /// The spectrum stays in a strip: no decaying bound exists, inconclusive.
    NotDecaying,
}

#[derive(Debug, Clone, Serialize)]
pub struct PersistenceCheck {
    pub time: f64,
    /// `max_{j≤n} |x_j(t)| / (|e^{λ_j (t - t1)}| |x_j(t1)|)`, or 0 when all vanish.
    pub worst_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    /// `|x_j(t1)|` for `j ≤ J`.
    pub modal_residuals: Vec<f64>,
    pub controlled_order: usize,
    pub check_order: usize,
    pub max_residual: f64,
    /// `tol · max(1, ‖x0‖)`
    pub residual_threshold: f64,
    /// Bound on `sup_{j>J} |x_j(t1)|`.
    pub tail_bound: f64,
    /// Bound on `sup_{j>n} |x_j(t1)|` over every uncontrolled mode.
    pub uncontrolled_bound: f64,
    pub tail_status: TailStatus,
    pub persistence: Vec<PersistenceCheck>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Bound `|e^{λ t1}| (|x_0| + |∫ f u|)` on `|x(t1)|`, evaluated in log space.
fn mode_bound(rate: C64, weight: C64, x0_abs: f64, u: &ControlSignal, t1: f64) -> f64 {
    let decay = rate.re * t1;
    let m = u.moment(rate, weight).norm();
    let forced = if m > 0.0 { (decay + m.ln()).exp() } else { 0.0 };
    x0_abs * decay.exp() + forced
}

/// Evaluates `x_j(t1)` for `j ≤ J`, bounds the remaining modes and spot-checks
/// that the controlled modes stay at zero after `t1`.
pub fn verify_null_controllability(
    p: &ControlProblem,
    u: &ControlSignal,
    check_order: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let n = u.order();
    if check_order < n {
        return Err(Error::CheckOrderTooSmall {
            check: check_order,
            controlled: n,
        });
    }
    if check_order > p.len() {
        return Err(Error::OrderTooLarge {
            requested: check_order,
            available: p.len(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let t1 = p.t1();
    let eigs = p.spectrum().eigenvalues();
    let b = p.input().coefficients();
    let x0 = p.x0();
    let states = modal_state(p, u, t1);
    let modal_residuals: Vec<f64> = states[..check_order].iter().map(|x| x.norm()).collect();
    let max_residual = modal_residuals.iter().copied().fold(0.0, f64::max);
    let residual_threshold = tol * p.x0_norm().max(1.0);

    let stored_bound = |from: usize| -> f64 {
        (from..p.len())
            .map(|j| mode_bound(eigs[j], b[j], x0[j].norm(), u, t1))
            .fold(0.0, f64::max)
    };
    let (tail_status, extrapolated) = match p.spectrum().preset() {
        None => (TailStatus::Finite, 0.0),
        Some(preset) => match preset.growth() {
            GrowthClass::Dissipative => {
                let next = p.len() + 1;
                let rate = preset.eigenvalue(next);
                let b_max = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
                (
                    TailStatus::Decaying,
                    mode_bound(rate, C64::new(b_max, 0.0), p.x0_norm(), u, t1),
                )
            }
            GrowthClass::Strip => (TailStatus::NotDecaying, f64::INFINITY),
        },
    };
    let tail_bound = stored_bound(check_order).max(extrapolated);
    let uncontrolled_bound = stored_bound(n).max(extrapolated);

    let persistence: Vec<PersistenceCheck> = PERSISTENCE_TIMES
        .iter()
        .map(|&factor| {
            let t = factor * t1;
            let later = modal_state(p, u, t);
            let mut worst: f64 = 0.0;
            let mut passed = true;
            for j in 0..n {
                let allowed = (eigs[j] * (t - t1)).exp().norm() * states[j].norm();
                let got = later[j].norm();
                if allowed > 0.0 {
                    worst = worst.max(got / allowed);
                }
                if got > allowed * (1.0 + PERSISTENCE_SLACK) + f64::MIN_POSITIVE {
                    passed = false;
                }
            }
            PersistenceCheck {
                time: t,
                worst_ratio: worst,
                passed,
            }
        })
        .collect();

    let passed = max_residual <= residual_threshold
        && tail_status != TailStatus::NotDecaying
        && tail_bound <= tol
        && persistence.iter().all(|c| c.passed);
    Ok(VerificationReport {
        modal_residuals,
        controlled_order: n,
        check_order,
        max_residual,
        residual_threshold,
        tail_bound,
        uncontrolled_bound,
        tail_status,
        persistence,
        tolerance: tol,
        passed,
    })
}

/// `(t, j, Re x_j, Im x_j)` on `steps + 1` uniform times of `[0, t_end]` for modes `j ≤ modes`.
pub fn modal_trajectory_csv(
    p: &ControlProblem,
    u: &ControlSignal,
    t_end: f64,
    steps: usize,
    modes: usize,
) -> Csv {
    let steps = steps.max(1);
    let modes = modes.min(p.len());
    let mut csv = Csv::with_header(&["t", "j", "re_x", "im_x"]);
    for i in 0..=steps {
        let t = t_end * i as f64 / steps as f64;
        let xs = modal_state(p, u, t);
        for (j, x) in xs.iter().take(modes).enumerate() {
            csv.row([
                format_float(t),
                (j + 1).to_string(),
                format_float(x.re),
                format_float(x.im),
            ]);
        }
    }
    csv
}
