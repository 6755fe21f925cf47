use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use polya_core::quad::{integrate, integrate_finite, QuadratureSpec};
use polya_core::transforms::{inverse_hankel_with, mv_transform_polya, normalization_point, univariate_transform};
use polya_core::weights::{apply_derivative_op, make_family, Family};
use polya_core::{Complex64, MatrixSpace, TransformKind, Weight};

fn fam(s: &str) -> Weight {
    make_family(&s.parse::<Family>().unwrap()).unwrap()
}

/// The second induced weight `D ω` as a weight of its own.
fn induced(space: MatrixSpace, w: &Weight) -> Weight {
    let w0 = w.clone();
    Weight::new("Dω", w.support(), move |x| apply_derivative_op(&space, &w0, 2, x).unwrap())
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn fourier_of_derivative(s in -3.0f64..3.0, alpha in -1.0f64..1.0) {
        let w = fam(&format!("gaussian_shifted:alpha={alpha},var=1"));
        let s = Complex64::from(s);
        let d = induced(MatrixSpace::hermitian(2), &w);
        let lhs = univariate_transform(TransformKind::Fourier, &d, s).unwrap();
        let rhs = Complex64::i() * s * univariate_transform(TransformKind::Fourier, &w, s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-6 * rhs.norm().max(1e-3));
    }

    #[test]
    fn mellin_of_dilation(re in 0.5f64..3.0, im in -3.0f64..3.0, nu in 0.0f64..2.0) {
        let w = fam(&format!("ginibre:nu={nu}"));
        let s = Complex64::new(re, im);
        let d = induced(MatrixSpace::gl(2), &w);
        let lhs = univariate_transform(TransformKind::Mellin, &d, s).unwrap();
        let rhs = s * univariate_transform(TransformKind::Mellin, &w, s).unwrap();
        prop_assert!(crel(lhs, rhs) <= 1e-6);
    }

    #[test]
    fn hankel_of_bessel_operator(s in 0.0f64..4.0, nu in 0u32..3) {
        let w = fam(&format!("ginibre:nu={}", nu + 1));
        let space = MatrixSpace::chiral(2, nu);
        let d = induced(space, &w);
        let k = TransformKind::Hankel(nu as f64);
        let lhs = univariate_transform(k, &d, Complex64::from(s)).unwrap().re;
        let rhs = -s * univariate_transform(k, &w, Complex64::from(s)).unwrap().re;
        prop_assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1e-6));
    }

    #[test]
    fn hankel_round_trip(x in 0.2f64..6.0, nu in 0u32..3) {
        let w = fam(&format!("ginibre:nu={}", nu + 1));
        let k = TransformKind::Hankel(nu as f64);
        // the forward transform decays like e^{−s}; past s = 60 it is below 1e-20
        let fwd = |s: f64| if s > 60.0 { 0.0 } else { univariate_transform(k, &w, Complex64::from(s)).unwrap().re };
        // the forward values carry ~1e-10 quadrature noise; ask no more of the inverse
        let spec = QuadratureSpec::default().with_tol(1e-9, 1e-7);
        let back = inverse_hankel_with(fwd, nu as f64, x, &spec).unwrap();
        assert_relative_eq!(back, w.eval(x), max_relative = 1e-5);
    }
}

#[test]
fn fourier_round_trip() {
    let w = fam("gaussian_shifted:alpha=0.4,var=0.8");
    let spec = QuadratureSpec::default().with_tol(1e-12, 1e-10);
    for x in [-1.5, 0.0, 0.4, 2.0] {
        let back = integrate_finite(
            |s: f64| (Complex64::new(0.0, -s * x).exp() * univariate_transform(TransformKind::Fourier, &w, Complex64::from(s)).unwrap()).re,
            -12.0,
            12.0,
            &spec,
        )
        .value
            / (2.0 * PI);
        assert_relative_eq!(back, w.eval(x), max_relative = 1e-5);
    }
}

#[test]
fn hankel_at_zero_is_the_mass() {
    let spec = QuadratureSpec::default().with_tol(1e-13, 1e-11);
    for (spec_str, nu) in [("ginibre:nu=1", 0.0), ("gaussian_radial:nu=0.5,eps=2", 1.0), ("bessel_k:mu=1,nu=0", 2.0), ("jacobi:n=2,nu=1,mu=0", 0.5)] {
        let w = fam(spec_str);
        let s = w.support();
        let mass = integrate(|x| w.eval(x), s.lo, s.hi, &spec).unwrap().value;
        let h0 = univariate_transform(TransformKind::Hankel(nu), &w, Complex64::from(0.0)).unwrap().re;
        assert_relative_eq!(h0, mass, max_relative = 1e-9);
    }
}

#[test]
fn multivariate_transform_is_normalized() {
    let cases = [
        (MatrixSpace::gl(3), fam("ginibre:nu=1")),
        (MatrixSpace::gl(2), fam("jacobi:n=2,nu=0.5,mu=1")),
        (MatrixSpace::hermitian(3), fam("gumbel_deformed:alpha=1")),
        (MatrixSpace::chiral(2, 1), fam("ginibre:nu=2")),
        (MatrixSpace::antisymmetric_odd(2), fam("gaussian_radial:nu=0.5,eps=1")),
        (MatrixSpace::self_dual(2), fam("ginibre:nu=1")),
    ];
    for (space, w) in cases {
        let v = mv_transform_polya(&space, &w, &normalization_point(&space)).unwrap();
        assert_relative_eq!(v.re, 1.0, max_relative = 1e-12);
        assert!(v.im.abs() < 1e-12);
    }
}
