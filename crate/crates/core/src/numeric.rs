//! Small floating-point helpers: error-free transformations for compensated
//! sums and dot products, and an accurate complex `expm1`.

use crate::C64;

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Real accumulator with roughly twice the working precision (Ogita-Rump-Oishi `Dot2`).
#[derive(Debug, Default, Clone, Copy)]
pub struct Accumulator {
    sum: f64,
    err: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.sum, x);
        self.sum = s;
        self.err += e;
    }

    pub fn add_product(&mut self, a: f64, b: f64) {
        let (p, ep) = two_prod(a, b);
        let (s, es) = two_sum(self.sum, p);
        self.sum = s;
        self.err += ep + es;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.err
    }
}

/// Complex counterpart of [`Accumulator`].
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexAccumulator {
    re: Accumulator,
    im: Accumulator,
}

impl ComplexAccumulator {
    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    /// Adds `a * b` without rounding the product.
    pub fn add_product(&mut self, a: C64, b: C64) {
        self.re.add_product(a.re, b.re);
        self.re.add_product(-a.im, b.im);
        self.im.add_product(a.re, b.im);
        self.im.add_product(a.im, b.re);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

/// `Σ a_k b_k` with compensated accumulation.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    let mut acc = ComplexAccumulator::default();
    for (x, y) in a.iter().zip(b) {
        acc.add_product(*x, *y);
    }
    acc.value()
}

/// `e^z - 1` without cancellation for small `|z|`.
pub fn expm1(z: C64) -> C64 {
    let (sin_y, cos_y) = z.im.sin_cos();
    let half_sin = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * cos_y - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * sin_y;
    C64::new(re, im)
}

pub fn norm2(v: &[C64]) -> f64 {
    let mut acc = Accumulator::default();
    for z in v {
        acc.add_product(z.re, z.re);
        acc.add_product(z.im, z.im);
    }
    acc.value().sqrt()
}

pub fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_dot_recovers_cancelled_terms() {
        let a = [
            C64::new(1e16, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1e16, 0.0),
        ];
        let b = [C64::new(1.0, 0.0); 3];
        assert_eq!(dot(&a, &b), C64::new(1.0, 0.0));
    }

    #[test]
    fn expm1_small_argument() {
        let z = C64::new(1e-10, -2e-10);
        let got = expm1(z);
        let want = z + z * z / 2.0;
        assert!((got - want).norm() <= 1e-25);
    }

    #[test]
    fn expm1_matches_exp_for_large_argument() {
        let z = C64::new(1.3, 2.1);
        assert!((expm1(z) - (z.exp() - 1.0)).norm() < 1e-14);
    }
}
