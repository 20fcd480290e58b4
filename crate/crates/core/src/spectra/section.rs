use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::point::{Chart, Point};

/// Which bundle the sections belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Twist {
    /// `H0(O(pk) ⊗ K)`, basis `z^j dz`; the E-type norm.
    Canonical,
    /// `H0(O(pk))`, basis `z^j`; the F-type norm with measure `e^{-p phi} omega`.
    None,
}

/// Monomial basis of sections at level `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectionSpace {
    pub k: u32,
    pub p: u32,
    pub twist: Twist,
    pub d: usize,
}

impl SectionSpace {
    pub fn new(k: u32, p: u32, twist: Twist) -> Result<Self> {
        let pk = (k as i64) * (p as i64);
        let d = match twist {
            Twist::Canonical => pk - 1,
            Twist::None => pk + 1,
        };
        if k == 0 || p == 0 || (twist == Twist::Canonical && pk < 2) {
            return Err(LabError::EmptySpace(pk));
        }
        Ok(SectionSpace { k, p, twist, d: d as usize })
    }

    pub fn canonical(k: u32, p: u32) -> Result<Self> {
        Self::new(k, p, Twist::Canonical)
    }

    pub fn plain(k: u32, p: u32) -> Result<Self> {
        Self::new(k, p, Twist::None)
    }

    pub fn pk(&self) -> u32 {
        self.k * self.p
    }

    /// Coefficients of the basis sections in the chart of `pt`.
    ///
    /// Chart 1 uses the trivialisations `z^j dz = -w^{pk-2-j} dw` (twisted by
    /// `w^{pk}`) and `z^j = w^{pk-j}`.
    pub fn eval(&self, pt: &Point, out: &mut [Complex64]) {
        let pk = self.pk() as i32;
        match *pt {
            Point::Chart(Chart::Zero, z) => {
                let mut v = Complex64::new(1.0, 0.0);
                for o in out.iter_mut().take(self.d) {
                    *o = v;
                    v *= z;
                }
            }
            Point::Chart(Chart::One, w) => {
                let (top, sign) = match self.twist {
                    Twist::Canonical => (pk - 2, -1.0),
                    Twist::None => (pk, 1.0),
                };
                for (j, o) in out.iter_mut().take(self.d).enumerate() {
                    *o = w.powi(top - j as i32) * sign;
                }
            }
            Point::Radial(x) => {
                for (j, o) in out.iter_mut().take(self.d).enumerate() {
                    *o = Complex64::new((0.5 * self.radial_log_modulus2(j, x)).exp(), 0.0);
                }
            }
        }
    }

    /// `log |s_j|^2` in the radial pseudo-chart: `(j+1) x` for the twisted
    /// space, `j x` otherwise.
    pub fn radial_log_modulus2(&self, j: usize, x: f64) -> f64 {
        match self.twist {
            Twist::Canonical => (j as f64 + 1.0) * x,
            Twist::None => j as f64 * x,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(SectionSpace::canonical(2, 3).unwrap().d, 5);
        assert_eq!(SectionSpace::plain(2, 3).unwrap().d, 7);
        assert!(matches!(SectionSpace::canonical(1, 1), Err(LabError::EmptySpace(1))));
    }

    #[test]
    fn chart_values_transform_as_sections() {
        // |s|^2 e^{-p w} measured in either chart agrees after the Jacobian
        let sp = SectionSpace::canonical(1, 4).unwrap();
        let z = Complex64::new(0.6, -1.7);
        let w = z.inv();
        let mut a = vec![Complex64::default(); sp.d];
        let mut b = a.clone();
        sp.eval(&Point::chart0(z), &mut a);
        sp.eval(&Point::chart1(w), &mut b);
        // f1(w) = -w^{pk} f0(1/w) / w^2
        for j in 0..sp.d {
            let expect = -a[j] * w.powi(4) / (w * w);
            assert!((b[j] - expect).norm() < 1e-12 * expect.norm());
        }
    }
}
