use dilab::geodesics::{rate_fit, CanonicalWeight, FlatHermitianCurve};
use dilab::geometry::{presets, Point};
use dilab::quadrature::log_sum_exp;
use dilab::spectra::{gen_eigen, HermitianForm, SectionSpace};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_diagonal_json_round_trip(v in prop::collection::vec(-50.0f64..50.0, 5)) {
        let sp = SectionSpace::canonical(1, 6).unwrap();
        let g = HermitianForm::log_diagonal(sp, v).unwrap();
        let back = HermitianForm::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.log_scale(), g.log_scale());
    }

    #[test]
    fn scalar_pencils_have_constant_spectrum(v in prop::collection::vec(-20.0f64..20.0, 4), c in -3.0f64..3.0) {
        let sp = SectionSpace::canonical(1, 5).unwrap();
        let g = HermitianForm::log_diagonal(sp, v).unwrap();
        let eig = gen_eigen(&g, &g.scaled(2.0 * c)).unwrap();
        prop_assert!(eig.lambda.iter().all(|l| (l - c).abs() < 1e-10));
        let curve = FlatHermitianCurve::new(&g, &g.scaled(2.0 * c)).unwrap();
        let mid = curve.form_at(0.5).unwrap();
        for (a, b) in mid.log_scale().iter().zip(g.log_scale()) {
            prop_assert!((a - b - c).abs() < 1e-10);
        }
    }

    #[test]
    fn rate_verdict_is_scale_invariant(e in prop::collection::vec(1e-3f64..1.0, 5), s in 1e-3f64..1e3) {
        let p = [10u32, 20, 40, 80, 160];
        let scaled: Vec<f64> = e.iter().map(|v| v * s).collect();
        let a = rate_fit(&p, &e).unwrap();
        let b = rate_fit(&p, &scaled).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.argmax, b.argmax);
    }

    #[test]
    fn canonical_weight_transforms_like_a_section(re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re * re + im * im > 1e-6);
        let z = Complex64::new(re, im);
        let chi = CanonicalWeight::normalized(2);
        let x = z.norm_sqr().ln();
        prop_assert!((chi.value(&Point::Radial(x)) - x - chi.value(&Point::chart0(z))).abs() < 1e-12);
    }

    #[test]
    fn preset_strings_match_constructors(eps in 0.0f64..0.1, x0 in -2.0f64..2.0, x in -20.0f64..20.0) {
        let parsed = presets::parse(&format!("fs_bump({eps}, {x0}, 1)"), 2).unwrap();
        let direct = presets::fs_bump(2, eps, x0, 1.0).unwrap();
        prop_assert_eq!(parsed.phi(x), direct.phi(x));
        let shifted = presets::parse(&format!("fs_shift({x0})"), 1).unwrap();
        prop_assert!((shifted.phi(x) - presets::fs(1).phi(x) - x0).abs() < 1e-12);
    }

    #[test]
    fn log_sum_exp_is_bracketed(v in prop::collection::vec(-700.0f64..700.0, 1..20)) {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let l = log_sum_exp(v.iter().cloned());
        prop_assert!(l >= m - 1e-12 && l <= m + (v.len() as f64).ln() + 1e-12);
    }
}
