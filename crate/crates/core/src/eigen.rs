//! Cyclic Jacobi eigensolver for small dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq = r e^{iφ}` with a
//! diagonal unitary and then annihilates it with a real plane rotation, so
//! the combined 2×2 unitary on columns `(p, q)` is
//!
//! ```text
//! U = [ c            s          ]
//!     [ -s e^{-iφ}   c e^{-iφ}  ]
//! ```
//!
//! Only eigenvalues are accumulated.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::C64;

/// Off-diagonal mass tolerance relative to `‖A‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-13;
pub const MAX_SWEEPS: usize = 100;
/// Relative Hermitian defect accepted on input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// `γ / ‖G‖₂` below this is indistinguishable from zero in double precision.
pub const PRECISION_FLOOR: f64 = 1e-14;

/// All eigenvalues of a Hermitian matrix with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    /// Ascending.
    pub values: Vec<f64>,
    pub sweeps: usize,
    /// Frobenius norm of the remaining off-diagonal part.
    pub off_diagonal: f64,
    pub frobenius: f64,
}

impl HermitianSpectrum {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Absolute error bound on every eigenvalue: Weyl bound for the residual
    /// off-diagonal part plus rounding of the rotations.
    pub fn error_bound(&self) -> f64 {
        let n = self.values.len().max(1) as f64;
        self.off_diagonal + 4.0 * n * f64::EPSILON * self.frobenius
    }
}

/// Smallest eigenvalue of a Gram-type matrix, reported as computed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MinEig {
    pub value: f64,
    pub spectral_norm: f64,
    pub error_bound: f64,
    /// `value / spectral_norm` is below [`PRECISION_FLOOR`].
    pub below_floor: bool,
    /// The raw value is negative (round-off for a Gram matrix).
    pub negative: bool,
}

impl MinEig {
    pub fn floor_ratio(&self) -> f64 {
        if self.spectral_norm > 0.0 {
            self.value / self.spectral_norm
        } else {
            0.0
        }
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<HermitianSpectrum> {
    let n = m.dim();
    let frobenius = m.frobenius_norm();
    let defect = m.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE * frobenius.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { defect });
    }

    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }

    let tol = JACOBI_TOLERANCE * frobenius;
    let mut sweeps = 0;
    let mut off = off_diagonal_mass(&a);
    while off > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
        sweeps += 1;
        off = off_diagonal_mass(&a);
    }

    let mut values: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    values.sort_by(f64::total_cmp);
    Ok(HermitianSpectrum {
        values,
        sweeps,
        off_diagonal: off,
        frobenius,
    })
}

/// Minimal eigenvalue with the precision-floor flag.
pub fn hermitian_min_eig(m: &CMatrix) -> Result<MinEig> {
    let spec = hermitian_eigenvalues(m)?;
    Ok(min_eig_from(&spec))
}

pub fn min_eig_from(spec: &HermitianSpectrum) -> MinEig {
    let value = spec.min();
    let spectral_norm = spec.spectral_norm();
    let below_floor = spectral_norm == 0.0 || value < PRECISION_FLOOR * spectral_norm;
    MinEig {
        value,
        spectral_norm,
        error_bound: spec.error_bound(),
        below_floor,
        negative: value < 0.0,
    }
}

fn off_diagonal_mass(a: &CMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += a[(i, j)].norm_sqr();
        }
    }
    (2.0 * s).sqrt()
}

fn rotate(a: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta.is_infinite() {
        0.0
    } else {
        let t = 1.0 / (theta.abs() + theta.hypot(1.0));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;
    let phase = apq / r; // e^{iφ}
    let e_minus = phase.conj();

    let n = a.dim();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = akp * c - akq * (e_minus * s);
        let new_kq = akp * s + akq * (e_minus * c);
        a[(k, p)] = new_kp;
        a[(k, q)] = new_kq;
        a[(p, k)] = new_kp.conj();
        a[(q, k)] = new_kq.conj();
    }
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_rows(
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn identity_min_is_one() {
        let m = hermitian_min_eig(&CMatrix::identity(4)).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(!m.below_floor);
    }

    #[test]
    fn two_by_two_symmetric() {
        // roots of (2-x)^2 - 1 are 1 and 3
        let spec = hermitian_eigenvalues(&real(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((spec.values[0] - 1.0).abs() < 1e-15);
        assert!((spec.values[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn scalar_matrix() {
        let tau = 2.0 * std::f64::consts::PI;
        let mut m = CMatrix::identity(5);
        for i in 0..5 {
            m[(i, i)] = C64::new(tau, 0.0);
        }
        assert_eq!(hermitian_min_eig(&m).unwrap().value, tau);
    }

    #[test]
    fn complex_hermitian_2x2() {
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2
        let m = CMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)],
            vec![C64::new(0.0, -1.0), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        let spec = hermitian_eigenvalues(&m).unwrap();
        assert!(spec.values[0].abs() < 1e-15);
        assert!((spec.values[1] - 2.0).abs() < 1e-15);
        let me = min_eig_from(&spec);
        assert!(me.below_floor);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = real(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            hermitian_eigenvalues(&m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn trace_is_preserved() {
        let m = CMatrix::from_fn(6, |i, j| {
            if i == j {
                C64::new(i as f64 + 1.0, 0.0)
            } else if i < j {
                C64::new(0.1 * (i + j) as f64, 0.05 * (j - i) as f64)
            } else {
                C64::new(0.1 * (i + j) as f64, -0.05 * (i - j) as f64)
            }
        });
        let spec = hermitian_eigenvalues(&m).unwrap();
        let trace: f64 = (0..6).map(|i| m[(i, i)].re).sum();
        assert!((spec.values.iter().sum::<f64>() - trace).abs() < 1e-12);
    }
}
