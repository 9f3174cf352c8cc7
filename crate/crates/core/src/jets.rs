//! Truncated complex Taylor expansions.
//!
//! A [`Jet`] stores `c_j = f^{(j)}(a) / j!` for `j = 0..=K` at an anchor `a`.
//! Binary operations truncate to the smaller order. The operator impls
//! (`+`, `-`, `*`, `/`) panic on anchor mismatch; the `try_*` methods return
//! an error instead.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used by the branch-cut predicate of [`Jet::sqrt`].
pub const BRANCH_CUT_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    anchor: f64,
    coeffs: Vec<Complex64>,
}

/// Principal square root `(1/√2)(|z|+Re z)^{1/2} + i (1/√2) Im z / (|z|+Re z)^{1/2}`.
/// For `Re z < 0` the same value is computed from `|z| − Re z` to avoid
/// cancellation near the negative axis.
pub fn principal_sqrt(z: Complex64) -> Result<Complex64> {
    if on_branch_cut(z) {
        return Err(Error::BranchCut { re: z.re, im: z.im });
    }
    let r = z.norm();
    if z.re >= 0.0 {
        let s = ((r + z.re) * 0.5).sqrt();
        Ok(Complex64::new(s, z.im / (2.0 * s)))
    } else {
        let t = ((r - z.re) * 0.5).sqrt();
        Ok(Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im)))
    }
}

fn on_branch_cut(z: Complex64) -> bool {
    z.re <= 0.0 && z.im.abs() <= BRANCH_CUT_TOL * z.norm()
}

fn factorial(j: usize) -> f64 {
    (1..=j).fold(1.0, |acc, k| acc * k as f64)
}

impl Jet {
    pub fn new(anchor: f64, coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least its value");
        Jet { anchor, coeffs }
    }

    pub fn constant(anchor: f64, value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { anchor, coeffs }
    }

    /// The identity function `x` expanded at `anchor`.
    pub fn variable(anchor: f64, order: usize) -> Self {
        let mut j = Jet::constant(anchor, Complex64::new(anchor, 0.0), order);
        if order >= 1 {
            j.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// Builds a jet from raw derivatives `f^{(j)}(anchor)`.
    pub fn from_derivatives(anchor: f64, derivs: &[Complex64]) -> Self {
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(j, d)| d / factorial(j))
            .collect();
        Jet::new(anchor, coeffs)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Raw derivative `f^{(j)}(anchor) = j! c_j`.
    pub fn derivative(&self, j: usize) -> Complex64 {
        self.coeffs[j] * factorial(j)
    }

    pub fn derivatives(&self) -> Vec<Complex64> {
        (0..=self.order()).map(|j| self.derivative(j)).collect()
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let k = order.min(self.order());
        Jet::new(self.anchor, self.coeffs[..=k].to_vec())
    }

    /// Jet of `f'`, one order shorter. Fails on an order-0 jet.
    pub fn derive(&self) -> Result<Jet> {
        if self.order() == 0 {
            return Err(Error::InsufficientOrder { needed: 1, have: 0 });
        }
        let coeffs = (1..=self.order())
            .map(|j| self.coeffs[j] * j as f64)
            .collect();
        Ok(Jet::new(self.anchor, coeffs))
    }

    fn check(&self, other: &Jet) -> Result<usize> {
        if self.anchor != other.anchor {
            return Err(Error::AnchorMismatch {
                left: self.anchor,
                right: other.anchor,
            });
        }
        Ok(self.order().min(other.order()))
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        let k = self.check(other)?;
        let coeffs = (0..=k).map(|j| self.coeffs[j] + other.coeffs[j]).collect();
        Ok(Jet::new(self.anchor, coeffs))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        let k = self.check(other)?;
        let coeffs = (0..=k).map(|j| self.coeffs[j] - other.coeffs[j]).collect();
        Ok(Jet::new(self.anchor, coeffs))
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        let k = self.check(other)?;
        let coeffs = (0..=k)
            .map(|n| (0..=n).map(|j| self.coeffs[j] * other.coeffs[n - j]).sum())
            .collect();
        Ok(Jet::new(self.anchor, coeffs))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        self.try_mul(&other.recip()?)
    }

    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::ZeroDivisor { anchor: self.anchor });
        }
        let inv = 1.0 / a0;
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(inv);
        for n in 1..=self.order() {
            let s: Complex64 = (1..=n).map(|k| self.coeffs[k] * b[n - k]).sum();
            b.push(-s * inv);
        }
        Ok(Jet::new(self.anchor, b))
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet::new(self.anchor, self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn add_const(&self, c: Complex64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    /// Principal square root; errors when `c_0` lies on `(−∞, 0]`.
    pub fn sqrt(&self) -> Result<Jet> {
        let b0 = principal_sqrt(self.coeffs[0])?;
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(b0);
        let inv2 = 1.0 / (2.0 * b0);
        for n in 1..=self.order() {
            let s: Complex64 = (1..n).map(|k| b[k] * b[n - k]).sum();
            b.push((self.coeffs[n] - s) * inv2);
        }
        Ok(Jet::new(self.anchor, b))
    }

    pub fn exp(&self) -> Jet {
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(self.coeffs[0].exp());
        for n in 1..=self.order() {
            let s: Complex64 = (1..=n)
                .map(|k| self.coeffs[k] * b[n - k] * k as f64)
                .sum();
            b.push(s / n as f64);
        }
        Jet::new(self.anchor, b)
    }

    /// Principal logarithm of the constant term, extended by `a b' = a'`.
    pub fn ln(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::ZeroDivisor { anchor: self.anchor });
        }
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(a0.ln());
        for n in 1..=self.order() {
            let s: Complex64 = (1..n)
                .map(|k| b[k] * self.coeffs[n - k] * k as f64)
                .sum();
            b.push((self.coeffs[n] * n as f64 - s) / (a0 * n as f64));
        }
        Ok(Jet::new(self.anchor, b))
    }

    /// `a^p` for real `p`, using the principal power of the constant term.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::ZeroDivisor { anchor: self.anchor });
        }
        let mut b = Vec::with_capacity(self.coeffs.len());
        b.push(a0.powf(p));
        for n in 1..=self.order() {
            let s: Complex64 = (1..=n)
                .map(|k| self.coeffs[k] * b[n - k] * (p * k as f64 - (n - k) as f64))
                .sum();
            b.push(s / (a0 * n as f64));
        }
        Ok(Jet::new(self.anchor, b))
    }

    /// Simultaneous `(sin a, cos a)`.
    pub fn sin_cos(&self) -> (Jet, Jet) {
        let mut s = Vec::with_capacity(self.coeffs.len());
        let mut c = Vec::with_capacity(self.coeffs.len());
        s.push(self.coeffs[0].sin());
        c.push(self.coeffs[0].cos());
        for n in 1..=self.order() {
            let mut sn = Complex64::new(0.0, 0.0);
            let mut cn = Complex64::new(0.0, 0.0);
            for k in 1..=n {
                let w = self.coeffs[k] * k as f64;
                sn += w * c[n - k];
                cn -= w * s[n - k];
            }
            s.push(sn / n as f64);
            c.push(cn / n as f64);
        }
        (Jet::new(self.anchor, s), Jet::new(self.anchor, c))
    }

    pub fn sinh(&self) -> Jet {
        let e = self.exp();
        let em = (-self).exp();
        (&e - &em).scale(Complex64::new(0.5, 0.0))
    }

    pub fn cosh(&self) -> Jet {
        let e = self.exp();
        let em = (-self).exp();
        (&e + &em).scale(Complex64::new(0.5, 0.0))
    }

    /// `ln(a + √(a² + 1))`.
    /// Integrates `f'/√(1+f²)` so the value avoids the cancellation in
    /// `ln(f + √(1+f²))` for large negative `f`.
    pub fn asinh(&self) -> Result<Jet> {
        // asinh is odd; the library form cancels for Re < 0.
        let z = self.coeffs[0];
        let pos = |w: Complex64| {
            if w.norm() > 1e8 {
                (2.0 * w).ln() + 0.25 / (w * w)
            } else {
                w.asinh()
            }
        };
        let c0 = if z.re < 0.0 { -pos(-z) } else { pos(z) };
        if self.order() == 0 {
            return Ok(Jet::new(self.anchor, vec![c0]));
        }
        let r = (self * self).add_const(Complex64::new(1.0, 0.0)).sqrt()?;
        let d = self.derive()?.try_div(&r.truncate(self.order() - 1))?;
        let mut coeffs = vec![c0];
        coeffs.extend(d.coeffs.iter().enumerate().map(|(j, c)| c / (j + 1) as f64));
        Ok(Jet::new(self.anchor, coeffs))
    }

    pub fn max_abs_diff(&self, other: &Jet) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $try:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                self.$try(rhs).expect(concat!("jet ", stringify!($method)))
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);
binop!(Div, div, try_div);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::new(self.anchor, self.coeffs.iter().map(|a| -a).collect())
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -&self
    }
}

impl Mul<Complex64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: Complex64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<Complex64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: Complex64) -> Jet {
        self.add_const(rhs)
    }
}

impl Add<Complex64> for Jet {
    type Output = Jet;
    fn add(self, rhs: Complex64) -> Jet {
        self.add_const(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn close(a: &[Complex64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - c(*y)).norm() <= tol)
    }

    #[test]
    fn identity_multiplication() {
        let one = Jet::constant(0.3, c(1.0), 4);
        let f = Jet::new(0.3, vec![c(2.0), Complex64::new(0.0, 1.0), c(-3.0), c(0.5), c(7.0)]);
        assert_eq!(&one * &f, f);
    }

    #[test]
    fn cube_from_product() {
        let x = Jet::variable(1.0, 2);
        let x2 = &x * &x;
        assert!(close((&x2 * &x).coeffs(), &[1.0, 3.0, 3.0], 1e-15));
    }

    #[test]
    fn reciprocal_geometric_series() {
        let a = Jet::variable(0.0, 3).add_const(c(2.0));
        assert!(close(a.recip().unwrap().coeffs(), &[0.5, -0.25, 0.125, -0.0625], 1e-15));
    }

    #[test]
    fn sqrt_cases() {
        let four = Jet::constant(0.0, c(4.0), 3);
        assert!(close(four.sqrt().unwrap().coeffs(), &[2.0, 0.0, 0.0, 0.0], 1e-15));
        let neg = Jet::constant(0.0, c(-1.0), 2);
        assert!(matches!(neg.sqrt(), Err(Error::BranchCut { .. })));
        let a = Jet::variable(0.0, 2).add_const(c(1.0));
        assert!(close(a.sqrt().unwrap().coeffs(), &[1.0, 0.5, -0.125], 1e-15));
    }

    #[test]
    fn sqrt_near_negative_axis_is_principal() {
        let z = Complex64::new(-4.0, 1e-3);
        let r = principal_sqrt(z).unwrap();
        assert!(r.re > 0.0);
        assert!((r * r - z).norm() < 1e-14);
        assert!((r - z.sqrt()).norm() < 1e-14);
    }

    #[test]
    fn exp_series() {
        assert!(close(Jet::constant(0.0, c(0.0), 2).exp().coeffs(), &[1.0, 0.0, 0.0], 0.0));
        let e = Jet::variable(0.0, 3).exp();
        assert!(close(e.coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0], 1e-15));
    }

    #[test]
    fn exp_matches_central_differences() {
        // f(x) = exp(sin x + i x^2 / 3) at x0 = 0.7, order-4 central stencil.
        let f = |x: f64| (Complex64::new(x.sin(), x * x / 3.0)).exp();
        let x0 = 0.7;
        let x = Jet::variable(x0, 2);
        let (s, _) = x.sin_cos();
        let arg = &s + &(&x * &x).scale(Complex64::new(0.0, 1.0 / 3.0));
        let j = arg.exp();
        let h = 1e-2;
        let d1 = (f(x0 - 2.0 * h) - f(x0 + 2.0 * h) * 1.0 + (f(x0 + h) - f(x0 - h)) * 8.0)
            / (12.0 * h);
        let d2 = (-f(x0 - 2.0 * h) - f(x0 + 2.0 * h) + (f(x0 + h) + f(x0 - h)) * 16.0
            - f(x0) * 30.0)
            / (12.0 * h * h);
        assert!((j.derivative(1) - d1).norm() <= 1e-6 * d1.norm());
        assert!((j.derivative(2) - d2).norm() <= 1e-6 * d2.norm().max(1.0));
    }

    #[test]
    fn ln_pow_inverse_pairs() {
        let a = Jet::new(0.2, vec![Complex64::new(1.5, 0.4), c(0.3), Complex64::new(0.0, -0.7), c(0.1), c(0.2)]);
        let back = a.ln().unwrap().exp();
        assert!(back.max_abs_diff(&a) < 1e-14);
        let sq = a.powf(0.5).unwrap();
        assert!(sq.max_abs_diff(&a.sqrt().unwrap()) < 1e-14);
        let cube = a.powf(3.0).unwrap();
        assert!(cube.max_abs_diff(&(&(&a * &a) * &a)) < 1e-13);
    }

    #[test]
    fn anchor_mismatch_is_an_error() {
        let a = Jet::variable(0.0, 2);
        let b = Jet::variable(1.0, 2);
        assert!(matches!(a.try_mul(&b), Err(Error::AnchorMismatch { .. })));
        assert!(matches!(
            Jet::constant(0.0, c(0.0), 2).recip(),
            Err(Error::ZeroDivisor { .. })
        ));
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(0.0, 5);
        let b = Jet::variable(0.0, 2);
        assert_eq!((&a * &b).order(), 2);
        assert_eq!(a.derive().unwrap().order(), 4);
    }

    fn jet_strategy() -> impl Strategy<Value = Jet> {
        prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 6).prop_map(|v| {
            let mut coeffs: Vec<Complex64> = v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect();
            // keep the constant term away from zero and from the cut
            coeffs[0] = Complex64::new(1.0 + coeffs[0].re.abs(), coeffs[0].im);
            Jet::new(0.25, coeffs)
        })
    }

    fn rel_close(a: &Jet, b: &Jet, tol: f64) -> bool {
        a.coeffs()
            .iter()
            .zip(b.coeffs())
            .all(|(x, y)| (x - y).norm() <= tol * (1.0 + x.norm().max(y.norm())))
    }

    proptest! {
        #[test]
        fn add_mul_commute_and_associate(a in jet_strategy(), b in jet_strategy(), c in jet_strategy()) {
            prop_assert!(rel_close(&(&a + &b), &(&b + &a), 1e-15));
            prop_assert!(rel_close(&(&a * &b), &(&b * &a), 1e-14));
            prop_assert!(rel_close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
            prop_assert!(rel_close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), 1e-14));
        }

        #[test]
        fn reciprocal_is_inverse(a in jet_strategy()) {
            let one = Jet::constant(0.25, Complex64::new(1.0, 0.0), 5);
            prop_assert!(rel_close(&(&a * &a.recip().unwrap()), &one, 1e-12));
        }

        #[test]
        fn sqrt_squares_back(a in jet_strategy()) {
            let r = a.sqrt().unwrap();
            prop_assert!(r.value().re >= 0.0);
            prop_assert!(rel_close(&(&r * &r), &a, 1e-12));
        }
    }
}
