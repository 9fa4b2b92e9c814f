//! Dense square complex matrices and the Hermitian positive-definite solve used
//! by the moment solver.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::numeric::{norm2, ComplexAccumulator};
use crate::C64;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn<F: FnMut(usize, usize) -> C64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row vectors; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    what: format!("matrix row {i}"),
                    expected: n,
                    found: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Leading `k × k` block.
    pub fn leading(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self[(i, j)])
    }

    /// Largest `|A_jk - conj(A_kj)|`, including imaginary parts of the diagonal.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `A v` with compensated accumulation.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| {
                let mut acc = ComplexAccumulator::default();
                for (a, x) in self.row(i).iter().zip(v) {
                    acc.add_product(*a, *x);
                }
                acc.value()
            })
            .collect()
    }

    /// `A B`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| {
            let mut acc = ComplexAccumulator::default();
            for k in 0..self.n {
                acc.add_product(self[(i, k)], other[(k, j)]);
            }
            acc.value()
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    /// `v^H A v`.
    pub fn hermitian_form(&self, v: &[C64]) -> C64 {
        let av = self.mul_vec(v);
        let mut acc = ComplexAccumulator::default();
        for (x, y) in v.iter().zip(&av) {
            acc.add_product(x.conj(), *y);
        }
        acc.value()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// `G = R^H R` with `R` upper triangular and positive real diagonal.
#[derive(Debug, Clone)]
pub struct Cholesky {
    r: CMatrix,
}

impl Cholesky {
    /// Fails with `IllConditioned` when a pivot is not positive.
    pub fn factor(g: &CMatrix) -> Result<Self> {
        let n = g.dim();
        let mut r = CMatrix::zeros(n);
        for j in 0..n {
            let mut d = ComplexAccumulator::default();
            d.add(g[(j, j)]);
            for i in 0..j {
                let rij = r[(i, j)];
                d.add_product(-rij.conj(), rij);
            }
            let pivot = d.value().re;
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::IllConditioned {
                    order: n,
                    gamma: pivot.min(0.0),
                    ratio: 0.0,
                });
            }
            let rjj = pivot.sqrt();
            r[(j, j)] = C64::new(rjj, 0.0);
            for k in j + 1..n {
                let mut acc = ComplexAccumulator::default();
                acc.add(g[(j, k)]);
                for i in 0..j {
                    acc.add_product(-r[(i, j)].conj(), r[(i, k)]);
                }
                r[(j, k)] = acc.value() / rjj;
            }
        }
        Ok(Self { r })
    }

    pub fn factor_r(&self) -> &CMatrix {
        &self.r
    }

    /// Solves `R^H y = b` (forward substitution).
    pub fn solve_lower(&self, b: &[C64]) -> Vec<C64> {
        let n = self.r.dim();
        let mut y = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut acc = ComplexAccumulator::default();
            acc.add(b[i]);
            for k in 0..i {
                acc.add_product(-self.r[(k, i)].conj(), y[k]);
            }
            y[i] = acc.value() / self.r[(i, i)].re;
        }
        y
    }

    /// Solves `R x = y` (back substitution).
    pub fn solve_upper(&self, y: &[C64]) -> Vec<C64> {
        let n = self.r.dim();
        let mut x = vec![C64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let mut acc = ComplexAccumulator::default();
            acc.add(y[i]);
            for k in i + 1..n {
                acc.add_product(-self.r[(i, k)], x[k]);
            }
            x[i] = acc.value() / self.r[(i, i)].re;
        }
        x
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `R^{-H} A R^{-1}` for Hermitian `A`, symmetrised exactly.
    pub fn congruence(&self, a: &CMatrix) -> CMatrix {
        let n = a.dim();
        // columns of R^{-H} A, then apply R^{-1} on the right
        let mut left = CMatrix::zeros(n);
        for j in 0..n {
            let col: Vec<C64> = (0..n).map(|i| a[(i, j)]).collect();
            let y = self.solve_lower(&col);
            for i in 0..n {
                left[(i, j)] = y[i];
            }
        }
        // (left R^{-1})^H = R^{-H} left^H, so solve on rows
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            let row: Vec<C64> = (0..n).map(|j| left[(i, j)].conj()).collect();
            let y = self.solve_lower(&row);
            for j in 0..n {
                out[(i, j)] = y[j].conj();
            }
        }
        for i in 0..n {
            out[(i, i)] = C64::new(out[(i, i)].re, 0.0);
            for j in i + 1..n {
                let avg = 0.5 * (out[(i, j)] + out[(j, i)].conj());
                out[(i, j)] = avg;
                out[(j, i)] = avg.conj();
            }
        }
        out
    }

    /// `det G = Π r_ii²`.
    pub fn determinant(&self) -> f64 {
        (0..self.r.dim())
            .map(|i| self.r[(i, i)].re.powi(2))
            .product()
    }
}

/// Result of [`solve_refined`].
#[derive(Debug, Clone)]
pub struct RefinedSolve {
    pub solution: Vec<C64>,
    /// `‖G x - b‖₂` after refinement, evaluated with compensated sums.
    pub residual: f64,
    /// Residual before the refinement pass.
    pub initial_residual: f64,
}

/// Cholesky solve of `G x = b` followed by one refinement step whose residual is
/// accumulated in extended precision.
pub fn solve_refined(g: &CMatrix, chol: &Cholesky, b: &[C64]) -> RefinedSolve {
    let x0 = chol.solve(b);
    let r0 = residual(g, &x0, b);
    let dx = chol.solve(&r0);
    let x: Vec<C64> = x0.iter().zip(&dx).map(|(a, d)| a + d).collect();
    let r1 = residual(g, &x, b);
    let (init, fin) = (norm2(&r0), norm2(&r1));
    if fin <= init {
        RefinedSolve {
            solution: x,
            residual: fin,
            initial_residual: init,
        }
    } else {
        RefinedSolve {
            solution: x0,
            residual: init,
            initial_residual: init,
        }
    }
}

/// `b - G x` with every product accumulated exactly.
pub fn residual(g: &CMatrix, x: &[C64], b: &[C64]) -> Vec<C64> {
    (0..g.dim())
        .map(|i| {
            let mut acc = ComplexAccumulator::default();
            acc.add(b[i]);
            for (a, xi) in g.row(i).iter().zip(x) {
                acc.add_product(-*a, *xi);
            }
            acc.value()
        })
        .collect()
}
