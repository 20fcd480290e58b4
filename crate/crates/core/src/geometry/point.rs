use num_complex::Complex64;

use crate::jet::Jet2;

/// The two standard affine charts of the projective line; `w = 1/z` on the overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    Zero,
    One,
}

/// A location on the fiber.
///
/// `Radial(x)` is the circle `log|z|^2 = x` of an S¹-invariant computation.
/// For S¹-invariant objects the radial coordinate acts as a pseudo-chart: the
/// x-derivative plays the role of `d/dzbar`, the second x-derivative the role
/// of `d/dz d/dzbar`, and `phi''(x)` the role of the Kähler density, so every
/// pointwise invariant (norms of (0,1)-forms, Laplacians, gradient norms) has
/// the same formula in both settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Radial(f64),
    Chart(Chart, Complex64),
}

impl Point {
    pub fn chart0(z: Complex64) -> Self {
        Point::Chart(Chart::Zero, z)
    }

    pub fn chart1(w: Complex64) -> Self {
        Point::Chart(Chart::One, w)
    }

    /// `log|z|^2` measured in chart 0.
    pub fn log_modulus2(&self) -> f64 {
        match *self {
            Point::Radial(x) => x,
            Point::Chart(Chart::Zero, z) => z.norm_sqr().ln(),
            Point::Chart(Chart::One, w) => -w.norm_sqr().ln(),
        }
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Point::Radial(_))
    }

    /// Coordinate jets `(Re, Im)` of the chart coordinate.
    pub(crate) fn coordinate_jets(&self) -> (Jet2, Jet2) {
        match *self {
            Point::Chart(_, z) => (Jet2::var_x(z.re), Jet2::var_y(z.im)),
            Point::Radial(x) => (Jet2::var_x((0.5 * x).exp()), Jet2::var_y(0.0)),
        }
    }

    /// Jet of `log|z|^2` (chart 0 convention) in the chart coordinates.
    pub(crate) fn log_modulus2_jet(&self) -> Jet2 {
        let (a, b) = self.coordinate_jets();
        let r2 = (a * a + b * b).ln();
        match self {
            Point::Chart(Chart::One, _) => -r2,
            _ => r2,
        }
    }

    /// Same point, other chart. Radial points are returned unchanged.
    pub fn flip(&self) -> Point {
        match *self {
            Point::Chart(Chart::Zero, z) => Point::Chart(Chart::One, z.inv()),
            Point::Chart(Chart::One, w) => Point::Chart(Chart::Zero, w.inv()),
            r => r,
        }
    }

    /// Shift the chart coordinate (or the radial coordinate by `d.re`).
    pub(crate) fn offset(&self, d: Complex64) -> Point {
        match *self {
            Point::Radial(x) => Point::Radial(x + d.re),
            Point::Chart(c, z) => Point::Chart(c, z + d),
        }
    }
}

/// Sphere coordinates `(X1, X2, X3)` of the point as jets in its chart.
///
/// `X3 = (|z|^2 - 1)/(|z|^2 + 1)`; `X1 + i X2 = 2z/(1 + |z|^2)`.
pub(crate) fn sphere_jets(pt: &Point) -> [Jet2; 3] {
    let (a, b) = pt.coordinate_jets();
    let r2 = a * a + b * b;
    let inv = (r2 + 1.0).recip();
    match pt {
        Point::Chart(Chart::One, _) => [
            a * inv * 2.0,
            -(b * inv * 2.0),
            (Jet2::constant(1.0) - r2) * inv,
        ],
        _ => [a * inv * 2.0, b * inv * 2.0, (r2 - Jet2::constant(1.0)) * inv],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_coordinates_agree_across_charts() {
        let z = Complex64::new(0.7, -1.3);
        let p0 = Point::chart0(z);
        let p1 = p0.flip();
        let s0 = sphere_jets(&p0);
        let s1 = sphere_jets(&p1);
        for i in 0..3 {
            assert!((s0[i].v - s1[i].v).abs() < 1e-14);
        }
        let n: f64 = s0.iter().map(|j| j.v * j.v).sum();
        assert!((n - 1.0).abs() < 1e-14);
        assert!((p0.log_modulus2() - p1.log_modulus2()).abs() < 1e-14);
    }
}
