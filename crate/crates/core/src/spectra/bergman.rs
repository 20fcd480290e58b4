//! Bergman kernels on the diagonal.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::Result;
use crate::geometry::fiber::Metric;
use crate::geometry::point::Point;
use crate::quadrature::log_sum_exp;
use crate::spectra::hermitian::HermitianForm;
use crate::spectra::section::Twist;

/// Pre-factored kernel `B(z) = s(z)* G^{-1} s(z)` of a Hilbert norm.
pub struct BergmanKernel {
    form: HermitianForm,
    chol: Option<DMatrix<Complex64>>,
}

impl BergmanKernel {
    pub fn new(form: &HermitianForm) -> Result<Self> {
        let chol = if form.is_diagonal() { None } else { Some(form.cholesky()?.l()) };
        Ok(BergmanKernel { form: form.clone(), chol })
    }

    pub fn form(&self) -> &HermitianForm {
        &self.form
    }

    /// `log B(z)` with sections trivialised in the chart of `pt`.
    pub fn log_kernel(&self, pt: &Point) -> f64 {
        let sp = self.form.space;
        let s = self.form.log_scale();
        let d = sp.d;
        // B = conj(s)* G^{-1} conj(s); a_j = log |s_j|^2 - s_j
        let (a, vals): (Vec<f64>, Vec<Complex64>) = match pt {
            Point::Radial(x) => ((0..d).map(|j| sp.radial_log_modulus2(j, *x) - s[j]).collect(), Vec::new()),
            _ => {
                let mut v = vec![Complex64::default(); d];
                sp.eval(pt, &mut v);
                ((0..d).map(|j| 2.0 * v[j].norm().ln() - s[j]).collect(), v)
            }
        };
        match &self.chol {
            None => log_sum_exp(a),
            Some(l) => {
                let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let w = DVector::from_fn(d, |j, _| {
                    let mag = (0.5 * (a[j] - m)).exp();
                    match pt {
                        Point::Radial(_) => Complex64::new(mag, 0.0),
                        _ => {
                            let n = vals[j].norm();
                            if n > 0.0 {
                                vals[j].conj() / n * mag
                            } else {
                                Complex64::default()
                            }
                        }
                    }
                });
                let q = l.solve_lower_triangular(&w).map_or(f64::NAN, |y| y.norm_squared());
                m + q.ln()
            }
        }
    }

    /// `log(B e^{-p phi} / omega)` at `pt`.
    pub fn log_density(&self, metric: &Metric, pt: &Point) -> f64 {
        let loc = metric.local(pt);
        let p = self.form.space.p as f64;
        let base = self.log_kernel(pt) - p * loc.w.v;
        match self.form.space.twist {
            Twist::Canonical => base - loc.g.ln(),
            Twist::None => base,
        }
    }

    pub fn density(&self, metric: &Metric, pt: &Point) -> f64 {
        self.log_density(metric, pt).exp()
    }
}

/// `B e^{-p phi}` relative to `omega` at `pt`, for the norm `g`.
pub fn bergman_density(g: &HermitianForm, metric: &Metric, pt: &Point) -> Result<f64> {
    Ok(BergmanKernel::new(g)?.density(metric, pt))
}
