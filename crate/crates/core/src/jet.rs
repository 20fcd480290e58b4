//! Forward-mode derivative arithmetic.
//!
//! [`Jet1`] carries a truncated Taylor series of a function of one real
//! variable up to fourth order; it backs every toric profile, where scalar
//! curvature needs the fourth derivative of the potential. [`Jet2`] carries
//! value, gradient and Hessian of a function of two real variables and backs
//! the chart-based (non-toric) computations.

use std::ops::{Add, Div, Mul, Neg, Sub};

const N: usize = 5;

/// Taylor coefficients `c[k] = f^(k)(x0) / k!`, `k = 0..=4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet1 {
    c: [f64; N],
}

impl Jet1 {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = v;
        Jet1 { c }
    }

    /// The identity function seeded at `x`.
    pub fn var(x: f64) -> Self {
        let mut c = [0.0; N];
        c[0] = x;
        c[1] = 1.0;
        Jet1 { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `k`-th derivative, `k <= 4`.
    pub fn d(&self, k: usize) -> f64 {
        const FACT: [f64; N] = [1.0, 1.0, 2.0, 6.0, 24.0];
        self.c[k] * FACT[k]
    }

    pub fn d1(&self) -> f64 {
        self.d(1)
    }

    pub fn d2(&self) -> f64 {
        self.d(2)
    }

    pub fn scale(self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|v| *v *= s);
        Jet1 { c }
    }

    pub fn exp(self) -> Self {
        let a = self.c;
        let mut e = [0.0; N];
        e[0] = a[0].exp();
        for n in 1..N {
            let mut s = 0.0;
            for k in 1..=n {
                s += k as f64 * a[k] * e[n - k];
            }
            e[n] = s / n as f64;
        }
        Jet1 { c: e }
    }

    fn log_with(self, l0: f64, denom: f64) -> Self {
        // log of (denom-shifted) series: l' = a'/b where b0 = denom
        let a = self.c;
        let mut l = [0.0; N];
        l[0] = l0;
        for n in 1..N {
            let mut s = 0.0;
            for k in 1..n {
                s += k as f64 * l[k] * a[n - k];
            }
            l[n] = (a[n] - s / n as f64) / denom;
        }
        Jet1 { c: l }
    }

    pub fn ln(self) -> Self {
        let a0 = self.c[0];
        self.log_with(a0.ln(), a0)
    }

    /// `ln(1 + self)`, accurate for small values.
    pub fn ln_1p(self) -> Self {
        let a0 = self.c[0];
        self.log_with(a0.ln_1p(), 1.0 + a0)
    }

    /// `ln(1 + exp(self))` without overflow.
    pub fn softplus(self) -> Self {
        if self.c[0] > 0.0 {
            self + (-self).exp().ln_1p()
        } else {
            self.exp().ln_1p()
        }
    }

    /// `1 / cosh(self)`.
    pub fn sech(self) -> Self {
        // 2 e^{-|a|} / (1 + e^{-2|a|})
        let s = if self.c[0] >= 0.0 { self } else { -self };
        let e = (-s).exp();
        (e * 2.0) / ((e * e) + 1.0)
    }

    /// `tanh(self)`.
    pub fn tanh(self) -> Self {
        let sgn = if self.c[0] >= 0.0 { 1.0 } else { -1.0 };
        let s = self.scale(sgn);
        let e = (s.scale(-2.0)).exp();
        ((Jet1::constant(1.0) - e) / (e + 1.0)).scale(sgn)
    }

    /// Compose a function, given its derivatives `f^(n)(a0)` for `n = 0..=4`,
    /// with this jet.
    pub fn compose(self, derivs: [f64; 5]) -> Self {
        let mut delta = self;
        delta.c[0] = 0.0;
        let mut out = Jet1::constant(derivs[0]);
        let mut pow = Jet1::constant(1.0);
        let mut fact = 1.0;
        for (n, d) in derivs.iter().enumerate().skip(1) {
            pow = pow * delta;
            fact *= n as f64;
            out = out + pow.scale(d / fact);
        }
        out
    }

    pub fn powi(self, n: u32) -> Self {
        let mut r = Jet1::constant(1.0);
        for _ in 0..n {
            r = r * self;
        }
        r
    }

    /// Derivatives `f^(n)(x0)`, `n = 0..=4`.
    pub fn derivs(&self) -> [f64; 5] {
        [self.d(0), self.d(1), self.d(2), self.d(3), self.d(4)]
    }

    /// Jet of `f'` for a jet of `f` seeded with [`Jet1::var`]; the fourth
    /// coefficient is lost and set to zero.
    pub fn derivative(&self) -> Self {
        let d = self.derivs();
        Jet1 { c: [d[1], d[2], d[3] / 2.0, d[4] / 6.0, 0.0] }
    }

    /// Jet with the given derivatives `f^(n)(x0)`.
    pub fn from_derivs(d: [f64; 5]) -> Self {
        Jet1 { c: [d[0], d[1], d[2] / 2.0, d[3] / 6.0, d[4] / 24.0] }
    }
}

/// Derivatives of order `0..=3` of the inverse function at `f(a)`, given the
/// derivatives `f(a), f'(a), f''(a), f'''(a)`; `f'(a)` must be non-zero.
pub fn inverse_derivs(a: f64, f: [f64; 4]) -> [f64; 4] {
    let (d1, d2, d3) = (f[1], f[2], f[3]);
    [
        a,
        1.0 / d1,
        -d2 / (d1 * d1 * d1),
        (3.0 * d2 * d2 - d1 * d3) / d1.powi(5),
    ]
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(self, o: Jet1) -> Jet1 {
        let mut c = self.c;
        for k in 0..N {
            c[k] += o.c[k];
        }
        Jet1 { c }
    }
}

impl Add<f64> for Jet1 {
    type Output = Jet1;
    fn add(mut self, o: f64) -> Jet1 {
        self.c[0] += o;
        self
    }
}

impl Sub for Jet1 {
    type Output = Jet1;
    fn sub(self, o: Jet1) -> Jet1 {
        self + (-o)
    }
}

impl Sub<f64> for Jet1 {
    type Output = Jet1;
    fn sub(mut self, o: f64) -> Jet1 {
        self.c[0] -= o;
        self
    }
}

impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        self.scale(-1.0)
    }
}

impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        let mut c = [0.0; N];
        for i in 0..N {
            for j in 0..N - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet1 { c }
    }
}

impl Mul<f64> for Jet1 {
    type Output = Jet1;
    fn mul(self, o: f64) -> Jet1 {
        self.scale(o)
    }
}

impl Div for Jet1 {
    type Output = Jet1;
    fn div(self, b: Jet1) -> Jet1 {
        let mut q = [0.0; N];
        for n in 0..N {
            let mut s = self.c[n];
            for k in 1..=n {
                s -= b.c[k] * q[n - k];
            }
            q[n] = s / b.c[0];
        }
        Jet1 { c: q }
    }
}

/// Value, gradient and Hessian of a function of `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub gx: f64,
    pub gy: f64,
    pub hxx: f64,
    pub hxy: f64,
    pub hyy: f64,
}

impl Jet2 {
    pub fn constant(v: f64) -> Self {
        Jet2 { v, ..Default::default() }
    }

    pub fn var_x(x: f64) -> Self {
        Jet2 { v: x, gx: 1.0, ..Default::default() }
    }

    pub fn var_y(y: f64) -> Self {
        Jet2 { v: y, gy: 1.0, ..Default::default() }
    }

    /// Embed a jet in `x = log|z|^2` into the radial pseudo-chart, so that
    /// `dzbar()` returns `f'` and `ddbar()` returns `f''`.
    pub fn from_radial(f: &Jet1) -> Self {
        Jet2 { v: f.value(), gx: 2.0 * f.d1(), gy: 0.0, hxx: 4.0 * f.d2(), hxy: 0.0, hyy: 0.0 }
    }

    /// Compose with a scalar function given its value and first two derivatives.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2 {
            v: f0,
            gx: f1 * self.gx,
            gy: f1 * self.gy,
            hxx: f2 * self.gx * self.gx + f1 * self.hxx,
            hxy: f2 * self.gx * self.gy + f1 * self.hxy,
            hyy: f2 * self.gy * self.gy + f1 * self.hyy,
        }
    }

    /// Compose with a one-variable jet evaluated at `self.v`.
    pub fn compose(self, f: &Jet1) -> Self {
        self.chain(f.value(), f.d1(), f.d2())
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Self {
        let v = self.v;
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    pub fn scale(self, s: f64) -> Self {
        Jet2 {
            v: self.v * s,
            gx: self.gx * s,
            gy: self.gy * s,
            hxx: self.hxx * s,
            hxy: self.hxy * s,
            hyy: self.hyy * s,
        }
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    /// `d/dzbar = (d/dx + i d/dy) / 2`.
    pub fn dzbar(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(0.5 * self.gx, 0.5 * self.gy)
    }

    /// `d/dz d/dzbar = (d_xx + d_yy) / 4`.
    pub fn ddbar(&self) -> f64 {
        0.25 * (self.hxx + self.hyy)
    }

    /// `d^2/dzbar^2 = (d_xx - d_yy + 2i d_xy) / 4`.
    pub fn dzbar2(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(0.25 * (self.hxx - self.hyy), 0.5 * self.hxy)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            gx: self.gx + o.gx,
            gy: self.gy + o.gy,
            hxx: self.hxx + o.hxx,
            hxy: self.hxy + o.hxy,
            hyy: self.hyy + o.hyy,
        }
    }
}

impl Add<f64> for Jet2 {
    type Output = Jet2;
    fn add(mut self, o: f64) -> Jet2 {
        self.v += o;
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + o.scale(-1.0)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            gx: self.v * o.gx + o.v * self.gx,
            gy: self.v * o.gy + o.v * self.gy,
            hxx: self.v * o.hxx + o.v * self.hxx + 2.0 * self.gx * o.gx,
            hxy: self.v * o.hxy + o.v * self.hxy + self.gx * o.gy + self.gy * o.gx,
            hyy: self.v * o.hyy + o.v * self.hyy + 2.0 * self.gy * o.gy,
        }
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, o: f64) -> Jet2 {
        self.scale(o)
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, k: usize) -> f64 {
        let h: f64 = 1e-2;
        match k {
            1 => (f(x + h) - f(x - h)) / (2.0 * h),
            2 => (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h),
            _ => unreachable!(),
        }
    }

    #[test]
    fn jet1_matches_closed_forms() {
        let x = 0.7;
        let j = Jet1::var(x).softplus();
        // d/dx log(1+e^x) = sigmoid, second = s(1-s)
        let s = 1.0 / (1.0 + (-x).exp());
        assert!((j.value() - (1.0 + x.exp()).ln()).abs() < 1e-15);
        assert!((j.d1() - s).abs() < 1e-15);
        assert!((j.d2() - s * (1.0 - s)).abs() < 1e-15);
        assert!((j.d(3) - s * (1.0 - s) * (1.0 - 2.0 * s)).abs() < 1e-14);
        let d4 = s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
        assert!((j.d(4) - d4).abs() < 1e-14);
    }

    #[test]
    fn jet1_large_arguments_do_not_overflow() {
        let j = Jet1::var(800.0).softplus();
        assert!((j.value() - 800.0).abs() < 1e-12);
        assert!(j.d2().is_finite());
        let s = Jet1::var(-900.0).sech();
        assert_eq!(s.value(), 0.0);
    }

    #[test]
    fn jet1_sech_tanh_derivatives() {
        for &x in &[-2.0, -0.3, 0.0, 0.4, 3.0] {
            let j = Jet1::var(x).sech();
            let f = |t: f64| 1.0 / t.cosh();
            assert!((j.d1() - fd(f, x, 1)).abs() < 1e-4);
            assert!((j.d2() - fd(f, x, 2)).abs() < 1e-4);
            let t = Jet1::var(x).tanh();
            assert!((t.value() - x.tanh()).abs() < 1e-15);
            assert!((t.d1() - 1.0 / (x.cosh() * x.cosh())).abs() < 1e-14);
        }
    }

    #[test]
    fn jet2_product_rule_and_complex_derivatives() {
        // f = x^2 y + y^2, at (1, 2)
        let x = Jet2::var_x(1.0);
        let y = Jet2::var_y(2.0);
        let f = x * x * y + y * y;
        assert_eq!(f.v, 6.0);
        assert_eq!((f.gx, f.gy), (4.0, 5.0));
        assert_eq!((f.hxx, f.hxy, f.hyy), (4.0, 2.0, 2.0));
        // |z|^2 has d/dz d/dzbar = 1
        let r2 = x * x + y * y;
        assert!((r2.ddbar() - 1.0).abs() < 1e-15);
        let dz = r2.dzbar();
        assert!((dz.re - 1.0).abs() < 1e-15 && (dz.im - 2.0).abs() < 1e-15);
    }
}
