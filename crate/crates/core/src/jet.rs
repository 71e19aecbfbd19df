//! Forward-mode first-order jets.
//!
//! `Jet1<F, N>` carries a value and its `N` partial derivatives. Nesting
//! (`Jet1<Jet1<f64, N>, N>`) gives second derivatives, which is how exact
//! 2-jets of analytic metrics and almost-complex structures are produced.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::scalar::{Analytic, Field};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1<F, const N: usize> {
    pub v: F,
    pub d: [F; N],
}

impl<F: Field, const N: usize> Jet1<F, N> {
    pub fn constant(v: F) -> Self {
        Self { v, d: [F::ZERO; N] }
    }

    /// Independent variable number `i` with value `v`.
    pub fn var(v: F, i: usize) -> Self {
        let mut d = [F::ZERO; N];
        d[i] = F::ONE;
        Self { v, d }
    }

    #[inline]
    fn chain(self, f: F, df: F) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = *x * df;
        }
        Self { v: f, d }
    }
}

impl<F: Field, const N: usize> Add for Jet1<F, N> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<F: Field, const N: usize> Sub for Jet1<F, N> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<F: Field, const N: usize> Mul for Jet1<F, N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [F::ZERO; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<F: Field, const N: usize> Div for Jet1<F, N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = F::ONE / o.v;
        let q = self.v * inv;
        let mut d = [F::ZERO; N];
        for i in 0..N {
            d[i] = (self.d[i] - q * o.d[i]) * inv;
        }
        Self { v: q, d }
    }
}

impl<F: Field, const N: usize> Neg for Jet1<F, N> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<F: Field, const N: usize> AddAssign for Jet1<F, N> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<F: Field, const N: usize> SubAssign for Jet1<F, N> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<F: Field, const N: usize> MulAssign for Jet1<F, N> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<F: Field, const N: usize> Field for Jet1<F, N> {
    const ZERO: Self = Jet1 {
        v: F::ZERO,
        d: [F::ZERO; N],
    };
    const ONE: Self = Jet1 {
        v: F::ONE,
        d: [F::ZERO; N],
    };
    fn cst(x: f64) -> Self {
        Self::constant(F::cst(x))
    }
}

impl<F: Analytic, const N: usize> Analytic for Jet1<F, N> {
    fn fsin(self) -> Self {
        self.chain(self.v.fsin(), self.v.fcos())
    }
    fn fcos(self) -> Self {
        self.chain(self.v.fcos(), -self.v.fsin())
    }
    fn fexp(self) -> Self {
        let e = self.v.fexp();
        self.chain(e, e)
    }
    fn fln(self) -> Self {
        self.chain(self.v.fln(), F::ONE / self.v)
    }
    fn fsqrt(self) -> Self {
        let s = self.v.fsqrt();
        self.chain(s, F::cst(0.5) / s)
    }
}

/// Second-order jet in `N` variables.
pub type Jet2<F, const N: usize> = Jet1<Jet1<F, N>, N>;

/// Seeds `x` as the independent point of a 2-jet.
pub fn seed2<F: Field, const N: usize>(x: &[F; N]) -> [Jet2<F, N>; N] {
    std::array::from_fn(|i| {
        let inner = Jet1::var(x[i], i);
        let mut d = [Jet1::<F, N>::ZERO; N];
        d[i] = Jet1::ONE;
        Jet1 { v: inner, d }
    })
}

/// Seeds `x` as the independent point of a 1-jet.
pub fn seed1<F: Field, const N: usize>(x: &[F; N]) -> [Jet1<F, N>; N] {
    std::array::from_fn(|i| Jet1::var(x[i], i))
}

/// Value, gradient and Hessian of a 2-jet.
pub fn unpack2<F: Field, const N: usize>(j: &Jet2<F, N>) -> (F, [F; N], [[F; N]; N]) {
    let v = j.v.v;
    let g = j.v.d;
    let h = std::array::from_fn(|a| j.d[a].d);
    (v, g, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_derivatives_of_product() {
        // f = sin(x) * exp(x y)
        let x = seed2(&[0.3f64, -0.7]);
        let f = x[0].fsin() * (x[0] * x[1]).fexp();
        let (v, g, h) = unpack2(&f);
        let (a, b) = (0.3f64, -0.7f64);
        let e = (a * b).exp();
        assert!((v - a.sin() * e).abs() < 1e-14);
        assert!((g[0] - (a.cos() * e + a.sin() * b * e)).abs() < 1e-14);
        assert!((g[1] - a.sin() * a * e).abs() < 1e-14);
        let hxy = a.cos() * a * e + a.sin() * (e + a * b * e);
        assert!((h[0][1] - hxy).abs() < 1e-13);
        assert!((h[1][0] - hxy).abs() < 1e-13);
        assert!((h[1][1] - a.sin() * a * a * e).abs() < 1e-13);
    }

    #[test]
    fn quotient_and_sqrt() {
        let x = seed1(&[2.0f64]);
        let f = (x[0] * x[0] + Jet1::cst(5.0)).fsqrt() / x[0];
        // d/dx sqrt(x^2+5)/x = (x^2/(sqrt) - sqrt)/x^2
        let s = 9.0f64.sqrt();
        let want = (4.0 / s - s) / 4.0;
        assert!((f.d[0] - want).abs() < 1e-14);
        assert!((x[0].fln().d[0] - 0.5).abs() < 1e-15);
    }
}
