//! Gram matrices of exponential families on `[0, L]`.
//!
//! `G_jk = ∫_0^L e^{-λ_j t} b_j conj(e^{-λ_k t} b_k) dt = b_j conj(b_k) φ(λ_j + conj(λ_k), L)`
//! with `φ(s, L) = ∫_0^L e^{-s t} dt`.

use serde::Serialize;

use crate::eigen::{hermitian_eigenvalues, min_eig_from, MinEig};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::numeric::{expm1, ComplexAccumulator};
use crate::quadrature::{GaussLegendre, ORACLE_NODES};
use crate::spectrum::ExponentialFamily;
use crate::C64;

/// Below `|s| L` of this size `φ` is summed as a power series.
pub const PHI_SERIES_THRESHOLD: f64 = 1e-4;
const PHI_SERIES_TERMS: usize = 6;

/// `∫_0^L e^{-s t} dt = (1 - e^{-sL}) / s`, with `φ(0, L) = L`.
pub fn phi(s: C64, horizon: f64) -> C64 {
    let z = s * horizon;
    if z.norm() < PHI_SERIES_THRESHOLD {
        // L Σ_m (-sL)^m / (m+1)!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for m in 1..PHI_SERIES_TERMS {
            term = term * (-z) / (m as f64 + 1.0);
            sum += term;
        }
        sum * horizon
    } else {
        -expm1(-z) / s
    }
}

/// Closed-form Gram matrix of the first `order` family elements.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: CMatrix,
}

impl GramMatrix {
    pub fn from_entries(entries: CMatrix) -> Self {
        Self { entries }
    }

    pub fn order(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn leading(&self, n: usize) -> GramMatrix {
        GramMatrix {
            entries: self.entries.leading(n),
        }
    }

    /// `Σ_jk c_j G_jk conj(c_k) = ‖Σ_j c_j f_j‖²`.
    pub fn quadratic_form(&self, c: &[C64]) -> f64 {
        let n = self.order();
        let mut acc = ComplexAccumulator::default();
        for j in 0..n {
            for k in 0..n {
                acc.add_product(c[j] * self.entries[(j, k)], c[k].conj());
            }
        }
        acc.value().re
    }

    pub fn min_eig(&self) -> Result<MinEig> {
        Ok(min_eig_from(&hermitian_eigenvalues(&self.entries)?))
    }
}

fn check_order(fam: &ExponentialFamily, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ZeroOrder);
    }
    if n > fam.len() {
        return Err(Error::OrderTooLarge {
            requested: n,
            available: fam.len(),
        });
    }
    Ok(())
}

/// Upper triangle from the closed form, lower triangle mirrored by conjugation.
pub fn gram_matrix(fam: &ExponentialFamily, n: usize) -> Result<GramMatrix> {
    check_order(fam, n)?;
    let l = fam.horizon();
    let mut g = CMatrix::zeros(n);
    for j in 0..n {
        for k in j..n {
            let v = fam.weight(j) * fam.weight(k).conj() * phi(fam.rate(j) + fam.rate(k).conj(), l);
            if j == k {
                g[(j, j)] = C64::new(v.re, 0.0);
            } else {
                g[(j, k)] = v;
                g[(k, j)] = v.conj();
            }
        }
    }
    Ok(GramMatrix { entries: g })
}

/// `C_jk = ∫_0^L y_j conj(x_k) dt` for two families on the same horizon.
pub fn cross_gram_matrix(
    y: &ExponentialFamily,
    x: &ExponentialFamily,
    n: usize,
) -> Result<CMatrix> {
    check_order(y, n)?;
    check_order(x, n)?;
    if y.horizon() != x.horizon() {
        return Err(Error::HorizonMismatch(y.horizon(), x.horizon()));
    }
    let l = x.horizon();
    Ok(CMatrix::from_fn(n, |j, k| {
        y.weight(j) * x.weight(k).conj() * phi(y.rate(j) + x.rate(k).conj(), l)
    }))
}

/// Gram matrix by composite Gauss-Legendre quadrature of every inner product.
pub fn gram_quadrature_oracle(
    fam: &ExponentialFamily,
    n: usize,
    panels: usize,
) -> Result<GramMatrix> {
    check_order(fam, n)?;
    let rule = GaussLegendre::new(ORACLE_NODES);
    let l = fam.horizon();
    let g = CMatrix::from_fn(n, |j, k| {
        rule.integrate(0.0, l, panels, |t| fam.eval(j, t) * fam.eval(k, t).conj())
    });
    Ok(GramMatrix { entries: g })
}

/// Minimal eigenvalues `γ_1 ≥ γ_2 ≥ …` of the nested leading Gram blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSequence {
    pub values: Vec<f64>,
    /// Absolute eigensolver error bound per entry (zero for raw data).
    pub error_bounds: Vec<f64>,
    pub below_floor: Vec<bool>,
}

impl GammaSequence {
    /// Wraps raw values with no error bounds and no floor flags.
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            error_bounds: vec![0.0; n],
            below_floor: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Number of leading entries above the precision floor.
    pub fn resolved_prefix(&self) -> usize {
        self.below_floor
            .iter()
            .position(|&f| f)
            .unwrap_or(self.len())
    }

    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            values: self.values[..n].to_vec(),
            error_bounds: self.error_bounds[..n].to_vec(),
            below_floor: self.below_floor[..n].to_vec(),
        }
    }

    /// First `n` (1-based) with `γ_{n+1} > γ_n + ε_n + ε_{n+1}`, if any.
    pub fn monotonicity_violation(&self, slack: f64) -> Option<usize> {
        (1..self.len()).find(|&i| {
            self.values[i]
                > self.values[i - 1] + self.error_bounds[i] + self.error_bounds[i - 1] + slack
        })
    }
}

pub fn gamma_sequence(fam: &ExponentialFamily, max_order: usize) -> Result<GammaSequence> {
    let g = gram_matrix(fam, max_order)?;
    gamma_sequence_of(&g)
}

/// `γ_n` for every leading block of an already assembled Gram matrix.
pub fn gamma_sequence_of(g: &GramMatrix) -> Result<GammaSequence> {
    let mut out = GammaSequence {
        values: Vec::with_capacity(g.order()),
        error_bounds: Vec::with_capacity(g.order()),
        below_floor: Vec::with_capacity(g.order()),
    };
    for n in 1..=g.order() {
        let m = g.leading(n).min_eig()?;
        out.values.push(m.value);
        out.error_bounds.push(m.error_bound);
        out.below_floor.push(m.below_floor);
    }
    Ok(out)
}

/// `‖A - B‖_F / ‖B‖_F`.
pub fn relative_frobenius_discrepancy(a: &GramMatrix, b: &GramMatrix) -> f64 {
    let n = a.order();
    let diff = CMatrix::from_fn(n, |i, j| a.entries[(i, j)] - b.entries[(i, j)]);
    let scale = b.entries.frobenius_norm();
    if scale == 0.0 {
        diff.frobenius_norm()
    } else {
        diff.frobenius_norm() / scale
    }
}
