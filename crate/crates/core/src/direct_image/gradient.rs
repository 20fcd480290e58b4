//! Complex gradients `V_mu` with `ι_V omega = dbar mu`, and the geodesic
//! curvature `c(phi)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::direct_image::path::{ComplexField, PathPoint};
use crate::geometry::fiber::Metric;
use crate::geometry::point::Point;

/// Step of the chart differences used for `dbar V`.
const FD_STEP: f64 = 1e-3;

/// The gradient of a function at a point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VectorFieldData {
    /// Chart coefficient `V^z = -i mu_zbar / g`.
    pub v: Complex64,
    /// `|V|^2_omega = g |V^z|^2 = |dbar mu|^2_omega`.
    pub norm2: f64,
    /// `|dbar V|^2_omega = ½ |dV^z/dzbar|^2`.
    pub dbar_v2: f64,
    /// `|g V^z i - mu_zbar|`, the defining residual.
    pub residual: f64,
}

/// `|dbar mu|^2_omega = |mu_zbar|^2 / g`.
pub fn dbar_norm2(m: &Metric, mu: &ComplexField, pt: &Point) -> f64 {
    mu.dzbar(pt).norm_sqr() / m.local(pt).g
}

/// `V^z` at `pt`.
fn coefficient(m: &Metric, mu: &ComplexField, pt: &Point) -> Complex64 {
    -Complex64::i() * mu.dzbar(pt) / m.local(pt).g
}

pub fn complex_gradient(m: &Metric, mu: &ComplexField, pt: &Point) -> VectorFieldData {
    let g = m.local(pt).g;
    let dz = mu.dzbar(pt);
    let v = -Complex64::i() * dz / g;
    let dbar_v2 = match *pt {
        Point::Radial(x) => {
            // pseudo-chart: V ~ -i mu'/phi'', dbar ~ d/dx
            let tp = m.as_toric().expect("radial points need a toric metric");
            let j = tp.jet(x);
            let (re, im) = mu.radial_jets(x);
            let d1 = Complex64::new(re.d1(), im.d1());
            let d2 = Complex64::new(re.d2(), im.d2());
            let (g1, g2) = (j.d2(), j.d(3));
            0.5 * (d2 / g1 - d1 * g2 / (g1 * g1)).norm_sqr()
        }
        Point::Chart(..) => {
            let diff = |h: f64, dir: Complex64| {
                (coefficient(m, mu, &pt.offset(dir * h)) - coefficient(m, mu, &pt.offset(-dir * h))) / (2.0 * h)
            };
            let rich = |dir: Complex64| (diff(FD_STEP / 2.0, dir) * 4.0 - diff(FD_STEP, dir)) / 3.0;
            let vx = rich(Complex64::new(1.0, 0.0));
            let vy = rich(Complex64::new(0.0, 1.0));
            0.5 * ((vx + Complex64::i() * vy) * 0.5).norm_sqr()
        }
    };
    VectorFieldData { v, norm2: g * v.norm_sqr(), dbar_v2, residual: (Complex64::i() * g * v - dz).norm() }
}

/// `Δ mu = (d/dz d/dzbar mu) / g`.
pub fn laplacian(m: &Metric, mu: &ComplexField, pt: &Point) -> Complex64 {
    mu.ddbar(pt) / m.local(pt).g
}

/// `c(phi) = psi_{t tbar} - |dbar psi_t|^2_omega` at `pt`.
pub fn c_geodesic(at: &PathPoint, pt: &Point) -> f64 {
    at.dtt.value(pt) - dbar_norm2(&at.metric, &at.dt, pt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::fiber::FiberMetric;
    use crate::geometry::functions::FiberFunction;
    use crate::geometry::point::Chart;
    use crate::geometry::presets;
    use std::sync::Arc;

    #[test]
    fn fs_moment_has_holomorphic_gradient() {
        let mu = ComplexField::real(Arc::new(FiberFunction::fs_moment()));
        let m = Metric::Toric(presets::fs(1));
        let g = Metric::General(FiberMetric::fubini_study(1));
        for x in [-6.0, 0.0, 2.5] {
            let d = complex_gradient(&m, &mu, &Point::Radial(x));
            assert!(d.dbar_v2.sqrt() < 1e-8 && d.residual < 1e-14);
        }
        for z in [Complex64::new(0.3, 0.4), Complex64::new(-0.8, 0.1)] {
            for pt in [Point::chart0(z), Point::chart1(z)] {
                let d = complex_gradient(&g, &mu, &pt);
                assert!(d.dbar_v2.sqrt() < 1e-8, "{pt:?}: {}", d.dbar_v2);
                // V = ±2i z d/dz, the rotation field
                let sign = if matches!(pt, Point::Chart(Chart::Zero, _)) { 1.0 } else { -1.0 };
                assert!((d.v / z - Complex64::new(0.0, 2.0 * sign)).norm() < 1e-12, "{pt:?}");
            }
        }
    }

    #[test]
    fn chart_and_radial_gradients_agree() {
        let mu = ComplexField::real(Arc::new(FiberFunction::sech_bump(0.2, 0.8)));
        let t = presets::fs_bump(1, 0.1, 0.5, 1.0).unwrap();
        let m = Metric::Toric(t);
        let z = Complex64::new(0.5, -0.9);
        let x = z.norm_sqr().ln();
        let a = complex_gradient(&m, &mu, &Point::chart0(z));
        let b = complex_gradient(&m, &mu, &Point::Radial(x));
        assert!((a.norm2 - b.norm2).abs() < 1e-13);
        assert!((a.dbar_v2 - b.dbar_v2).abs() < 1e-9 * b.dbar_v2, "{} {}", a.dbar_v2, b.dbar_v2);
        assert!(b.dbar_v2 > 1e-4);
        let c = ComplexField::real(Arc::new(FiberFunction::Constant(2.0)));
        let d = complex_gradient(&m, &c, &Point::chart0(z));
        assert!(d.v.norm() == 0.0 && d.dbar_v2 == 0.0);
    }
}
