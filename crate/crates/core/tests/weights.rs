use approx::assert_relative_eq;
use proptest::prelude::*;

use polya_core::jet::Jet;
use polya_core::weights::{apply_derivative_op, make_family, Family};
use polya_core::{MatrixSpace, Weight};

fn fam(f: Family) -> Weight {
    make_family(&f).unwrap()
}

/// Richardson-extrapolated central differences of the operator applied to plain values.
fn fd_op(space: &MatrixSpace, w: &Weight, x: f64) -> f64 {
    let central = |h: f64| {
        let (m, p, c) = (w.eval(x - h), w.eval(x + h), w.eval(x));
        ((p - m) / (2.0 * h), (p - 2.0 * c + m) / (h * h))
    };
    let h = 2e-3 * x.abs().max(1.0);
    let ((a1, a2), (b1, b2)) = (central(h), central(0.5 * h));
    let (d1, d2) = ((4.0 * b1 - a1) / 3.0, (4.0 * b2 - a2) / 3.0);
    match space.kind() {
        polya_core::SpaceKind::H2 => -d1,
        polya_core::SpaceKind::G => -x * d1,
        _ => x * d2 + (1.0 - space.nu().value()) * d1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn induced_weights_match_finite_differences(alpha in -1.0f64..1.0, var in 0.5f64..2.0, nu in 0.0f64..3.0, x in 0.3f64..4.0) {
        let cases = [
            (MatrixSpace::hermitian(2), fam(Family::GaussianShifted { alpha, var })),
            (MatrixSpace::hermitian(2), fam(Family::GumbelDeformed { alpha: 1.0 + alpha.abs() })),
            (MatrixSpace::gl(2), fam(Family::Ginibre { nu })),
            (MatrixSpace::gl(2), fam(Family::Lognormal { alpha, sigma: var })),
            (MatrixSpace::chiral(2, 1), fam(Family::Ginibre { nu })),
            (MatrixSpace::chiral(2, 0), fam(Family::GaussianRadial { nu, eps: var })),
        ];
        for (space, w) in cases {
            let exact = apply_derivative_op(&space, &w, 2, x).unwrap();
            let fd = fd_op(&space, &w, x);
            let scale = w.eval(x).abs().max(exact.abs());
            prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{} on {space}: {exact} vs {fd}", w.label());
        }
    }

    #[test]
    fn bessel_operator_factorizes(nu in 0.0f64..3.0, p in 0.0f64..3.0, x in 0.2f64..5.0) {
        // x^ν ∂ x^{1−ν} ∂ w = ∂ x^{ν+1} ∂ x^{−ν} w
        let w = fam(Family::Ginibre { nu: p });
        let j = w.jet(x, 2).unwrap();
        let t = Jet::variable(x, 2);
        let lhs = (&t.truncate(1).powf(1.0 - nu) * &j.diff()).diff().value() * x.powf(nu);
        let rhs = (&t.truncate(1).powf(nu + 1.0) * &(&t.powf(-nu) * &j).diff()).diff().value();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10, epsilon = 1e-14);
    }

    #[test]
    fn first_induced_weight_is_omega(x in 0.1f64..5.0, nu in 0.0f64..2.0) {
        let w = fam(Family::Ginibre { nu });
        for space in [
            MatrixSpace::gl(2), MatrixSpace::hermitian(2), MatrixSpace::chiral(2, 1),
            MatrixSpace::antisymmetric_even(2), MatrixSpace::antisymmetric_odd(2), MatrixSpace::self_dual(2),
        ] {
            prop_assert_eq!(apply_derivative_op(&space, &w, 1, x).unwrap(), w.eval(x));
        }
    }
}

#[test]
fn higher_induced_weights_of_the_gaussian() {
    // (−∂)^{j−1} e^{−x²/2} = He_{j−1}(x) e^{−x²/2}
    let w = fam(Family::GaussianShifted { alpha: 0.0, var: 1.0 });
    let h2 = MatrixSpace::hermitian(4);
    let x: f64 = 0.7;
    let g = (-x * x / 2.0).exp();
    for (j, he) in [(2, x), (3, x * x - 1.0), (4, x.powi(3) - 3.0 * x)] {
        assert_relative_eq!(apply_derivative_op(&h2, &w, j, x).unwrap(), he * g, max_relative = 1e-12);
    }
}
