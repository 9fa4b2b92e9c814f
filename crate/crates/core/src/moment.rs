//! Minimum-norm solutions of the truncated exponential moment problem
//!
//! ```text
//! ∫_0^L e^{-λ_j t} b_j u(t) dt = c_j,   j = 1, …, n.
//! ```
//!
//! The minimum-norm `u` lies in the conjugate span of the family,
//! `u = Σ_k α_k conj(f_k)`, and then the constraints read `G α = c`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::eigen::MinEig;
use crate::error::{Error, Result};
use crate::gram::{gram_matrix, phi, GramMatrix};
use crate::io::{format_float, Csv};
use crate::linalg::{solve_refined, Cholesky};
use crate::numeric::{norm2, ComplexAccumulator};
use crate::spectrum::ExponentialFamily;
use crate::C64;

/// Right-hand sides `c_j` of the moment problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTargets {
    values: Vec<C64>,
}

impl MomentTargets {
    pub fn new(values: Vec<C64>) -> Result<Self> {
        if let Some(i) = values
            .iter()
            .position(|c| !(c.re.is_finite() && c.im.is_finite()))
        {
            return Err(Error::InvalidParameter(format!(
                "target c_{} is not finite",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// `e_k` (0-based `k`).
    pub fn unit(n: usize, k: usize) -> Self {
        let mut t = Self::zeros(n);
        t.values[k] = C64::new(1.0, 0.0);
        t
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self {
            values: self.values[..n.min(self.values.len())].to_vec(),
        }
    }
}

impl Serialize for MomentTargets {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::io::cplx_vec::serialize(&self.values, s)
    }
}

/// `u(t) = Σ_k α_k conj(e^{-λ_k t} b_k)` on `[0, L]`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignal {
    rates: Vec<C64>,
    weights: Vec<C64>,
    coefficients: Vec<C64>,
    horizon: f64,
}

impl ControlSignal {
    /// Control built on the first `coefficients.len()` elements of `fam`.
    pub fn new(fam: &ExponentialFamily, coefficients: Vec<C64>) -> Result<Self> {
        let n = coefficients.len();
        if n > fam.len() {
            return Err(Error::OrderTooLarge {
                requested: n,
                available: fam.len(),
            });
        }
        Ok(Self {
            rates: fam.rates()[..n].to_vec(),
            weights: fam.weights()[..n].to_vec(),
            coefficients,
            horizon: fam.horizon(),
        })
    }

    pub fn zero(fam: &ExponentialFamily, n: usize) -> Result<Self> {
        Self::new(fam, vec![C64::new(0.0, 0.0); n])
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn rates(&self) -> &[C64] {
        &self.rates
    }

    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|a| a.norm() == 0.0)
    }

    /// Same family terms, new coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<C64>) -> Self {
        assert_eq!(coefficients.len(), self.coefficients.len());
        Self {
            coefficients,
            ..self.clone()
        }
    }

    pub fn scaled(&self, k: C64) -> Self {
        self.with_coefficients(self.coefficients.iter().map(|a| a * k).collect())
    }

    pub fn eval(&self, t: f64) -> C64 {
        if !(0.0..=self.horizon).contains(&t) {
            return C64::new(0.0, 0.0);
        }
        let mut acc = ComplexAccumulator::default();
        for ((a, l), b) in self.coefficients.iter().zip(&self.rates).zip(&self.weights) {
            acc.add_product(*a, ((-l * t).exp() * b).conj());
        }
        acc.value()
    }

    /// `∫_0^{min(t, L)} e^{-λ τ} b u(τ) dτ` in closed form.
    pub fn moment_until(&self, rate: C64, weight: C64, t: f64) -> C64 {
        let upto = t.min(self.horizon);
        if !(upto > 0.0) {
            return C64::new(0.0, 0.0);
        }
        let mut acc = ComplexAccumulator::default();
        for ((a, l), b) in self.coefficients.iter().zip(&self.rates).zip(&self.weights) {
            acc.add_product(*a * b.conj(), phi(rate + l.conj(), upto));
        }
        acc.value() * weight
    }

    /// `∫_0^L e^{-λ τ} b u(τ) dτ`.
    pub fn moment(&self, rate: C64, weight: C64) -> C64 {
        self.moment_until(rate, weight, self.horizon)
    }

    /// Gram matrix of the terms of this control.
    pub fn gram(&self) -> GramMatrix {
        let n = self.order();
        let g = crate::linalg::CMatrix::from_fn(n, |j, k| {
            self.weights[j]
                * self.weights[k].conj()
                * phi(self.rates[j] + self.rates[k].conj(), self.horizon)
        });
        GramMatrix::from_entries(g)
    }

    /// `‖u‖²_{L₂} = α^H G α`.
    pub fn norm_sq(&self) -> f64 {
        if self.order() == 0 {
            return 0.0;
        }
        self.gram()
            .entries()
            .hermitian_form(&self.coefficients)
            .re
            .max(0.0)
    }

    /// `(t, Re u, Im u)` on `samples` uniform points of `[0, L]`.
    pub fn trace(&self, samples: usize) -> Vec<(f64, C64)> {
        let samples = samples.max(2);
        (0..samples)
            .map(|i| {
                let t = self.horizon * i as f64 / (samples - 1) as f64;
                (t, self.eval(t))
            })
            .collect()
    }

    pub fn trace_csv(&self, samples: usize) -> Csv {
        let mut csv = Csv::with_header(&["t", "re_u", "im_u"]);
        for (t, u) in self.trace(samples) {
            csv.row([format_float(t), format_float(u.re), format_float(u.im)]);
        }
        csv
    }

    /// `max |Im u|` on a uniform grid.
    pub fn realness_defect(&self, samples: usize) -> f64 {
        self.trace(samples)
            .iter()
            .map(|(_, u)| u.im.abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize)]
struct Term {
    #[serde(with = "crate::io::cplx")]
    lambda: C64,
    #[serde(with = "crate::io::cplx")]
    b: C64,
    #[serde(with = "crate::io::cplx")]
    alpha: C64,
}

impl Serialize for ControlSignal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<Term> = (0..self.order())
            .map(|k| Term {
                lambda: self.rates[k],
                b: self.weights[k],
                alpha: self.coefficients[k],
            })
            .collect();
        let mut st = s.serialize_struct("ControlSignal", 2)?;
        st.serialize_field("horizon", &self.horizon)?;
        st.serialize_field("terms", &terms)?;
        st.end()
    }
}

/// Solver output with the diagnostics needed to audit it.
#[derive(Debug, Clone, Serialize)]
pub struct MomentSolution {
    pub control: ControlSignal,
    pub order: usize,
    pub gamma: MinEig,
    /// `‖G α - c‖₂` after refinement.
    pub residual: f64,
    /// Residual before refinement.
    pub initial_residual: f64,
    /// `α^H G α`
    pub norm_sq: f64,
    /// `c^H G^{-1} c = ‖R^{-H} c‖²`
    pub norm_sq_dual: f64,
}

impl MomentSolution {
    pub fn norm(&self) -> f64 {
        self.norm_sq.sqrt()
    }
}

fn check_targets(c: &MomentTargets, n: usize) -> Result<()> {
    if c.order() < n {
        return Err(Error::LengthMismatch {
            what: "moment targets".into(),
            expected: n,
            found: c.order(),
        });
    }
    Ok(())
}

/// Factors `G_n` after checking its minimal eigenvalue against the precision floor.
fn resolvable_factor(g: &GramMatrix) -> Result<(Cholesky, MinEig)> {
    let m = g.min_eig()?;
    if m.below_floor {
        return Err(Error::IllConditioned {
            order: g.order(),
            gamma: m.value,
            ratio: m.floor_ratio(),
        });
    }
    let chol = Cholesky::factor(g.entries()).map_err(|_| Error::IllConditioned {
        order: g.order(),
        gamma: m.value,
        ratio: m.floor_ratio(),
    })?;
    Ok((chol, m))
}

fn solve_with(
    g: &GramMatrix,
    chol: &Cholesky,
    gamma: MinEig,
    fam: &ExponentialFamily,
    c: &[C64],
) -> Result<MomentSolution> {
    let sol = solve_refined(g.entries(), chol, c);
    let dual = norm2(&chol.solve_lower(c)).powi(2);
    let control = ControlSignal::new(fam, sol.solution)?;
    let norm_sq = g
        .entries()
        .hermitian_form(control.coefficients())
        .re
        .max(0.0);
    Ok(MomentSolution {
        order: g.order(),
        gamma,
        residual: sol.residual,
        initial_residual: sol.initial_residual,
        norm_sq,
        norm_sq_dual: dual,
        control,
    })
}

/// Minimum-norm control meeting the first `n` moment constraints.
pub fn solve_truncated_moment(
    fam: &ExponentialFamily,
    c: &MomentTargets,
    n: usize,
) -> Result<MomentSolution> {
    check_targets(c, n)?;
    let g = gram_matrix(fam, n)?;
    let (chol, gamma) = resolvable_factor(&g)?;
    solve_with(&g, &chol, gamma, fam, &c.values()[..n])
}

/// `r_j = |∫_0^L f_j u − c_j|` in closed form, for `j` up to the target order.
pub fn verify_moments(
    fam: &ExponentialFamily,
    u: &ControlSignal,
    c: &MomentTargets,
) -> Result<Vec<f64>> {
    if c.order() > fam.len() {
        return Err(Error::OrderTooLarge {
            requested: c.order(),
            available: fam.len(),
        });
    }
    if u.horizon() != fam.horizon() {
        return Err(Error::HorizonMismatch(u.horizon(), fam.horizon()));
    }
    Ok((0..c.order())
        .map(|j| (u.moment(fam.rate(j), fam.weight(j)) - c.values()[j]).norm())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolvabilityEvidence {
    Bounded,
    BlowUp,
    Inconclusive,
}

/// Growth ratio above which the profile counts as blowing up.
pub const BLOW_UP_RATIO: f64 = 10.0;
/// Growth ratio at or below which the profile counts as bounded.
pub const BOUNDED_RATIO: f64 = 1.5;

/// `‖u_n‖` for the minimum-norm sections `n = 1, …`.
#[derive(Debug, Clone, Serialize)]
pub struct SolvabilityProfile {
    pub norms: Vec<f64>,
    pub dual_norms: Vec<f64>,
    pub residuals: Vec<f64>,
    pub requested_order: usize,
    /// Last order with a resolvable Gram matrix.
    pub resolved_order: usize,
    pub truncated: bool,
    /// `‖u_M‖ / ‖u_{⌈M/2⌉}‖` at the resolved order `M`.
    pub growth_ratio: Option<f64>,
    pub evidence: SolvabilityEvidence,
    pub blow_up_above: f64,
    pub bounded_at_most: f64,
}

/// Norm-growth profile of the minimum-norm sections, cut at the first
/// numerically singular section.
pub fn solvability_diagnostic(
    fam: &ExponentialFamily,
    c: &MomentTargets,
    max_order: usize,
) -> Result<SolvabilityProfile> {
    check_targets(c, max_order)?;
    let full = gram_matrix(fam, max_order)?;
    let mut norms = Vec::new();
    let mut dual_norms = Vec::new();
    let mut residuals = Vec::new();
    let mut truncated = false;
    for n in 1..=max_order {
        let g = full.leading(n);
        let (chol, gamma) = match resolvable_factor(&g) {
            Ok(x) => x,
            Err(Error::IllConditioned { .. }) => {
                truncated = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let sol = solve_with(&g, &chol, gamma, fam, &c.values()[..n])?;
        norms.push(sol.norm());
        dual_norms.push(sol.norm_sq_dual.sqrt());
        residuals.push(sol.residual);
    }
    let resolved = norms.len();
    if resolved == 0 {
        let m = full.leading(1).min_eig()?;
        return Err(Error::IllConditioned {
            order: 1,
            gamma: m.value,
            ratio: m.floor_ratio(),
        });
    }
    let top = norms[resolved - 1];
    let half = norms[resolved.div_ceil(2) - 1];
    let growth_ratio = if half > 0.0 {
        Some(top / half)
    } else if top == 0.0 {
        Some(1.0)
    } else {
        None
    };
    let evidence = match growth_ratio {
        Some(r) if r > BLOW_UP_RATIO => SolvabilityEvidence::BlowUp,
        Some(r) if r <= BOUNDED_RATIO => SolvabilityEvidence::Bounded,
        _ => SolvabilityEvidence::Inconclusive,
    };
    Ok(SolvabilityProfile {
        norms,
        dual_norms,
        residuals,
        requested_order: max_order,
        resolved_order: resolved,
        truncated,
        growth_ratio,
        evidence,
        blow_up_above: BLOW_UP_RATIO,
        bounded_at_most: BOUNDED_RATIO,
    })
}

/// Controls `u_1, …, u_n` with `∫_0^L f_j u_k = δ_jk`; the coefficient vector of
/// `u_k` is column `k` of `G_n^{-1}`.
pub fn build_biorthogonal(fam: &ExponentialFamily, n: usize) -> Result<Vec<ControlSignal>> {
    let g = gram_matrix(fam, n)?;
    let (chol, _) = resolvable_factor(&g)?;
    (0..n)
        .map(|k| {
            let e = MomentTargets::unit(n, k);
            let sol = solve_refined(g.entries(), &chol, e.values());
            ControlSignal::new(fam, sol.solution)
        })
        .collect()
}

/// `max_{j,k} |∫ f_j u_k − δ_jk|`.
pub fn biorthogonality_defect(fam: &ExponentialFamily, controls: &[ControlSignal]) -> Result<f64> {
    let n = controls.len();
    let mut worst: f64 = 0.0;
    for (k, u) in controls.iter().enumerate() {
        let r = verify_moments(fam, u, &MomentTargets::unit(n, k))?;
        worst = worst.max(r.iter().copied().fold(0.0, f64::max));
    }
    Ok(worst)
}

/// Largest absolute residual relative to `max(1, ‖c‖)`.
pub fn relative_moment_residual(residuals: &[f64], c: &MomentTargets) -> f64 {
    residuals.iter().copied().fold(0.0, f64::max) / c.norm().max(1.0)
}
