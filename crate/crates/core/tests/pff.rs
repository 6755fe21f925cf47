use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polya_core::ensembles::convolve_polya;
use polya_core::pff::{bridge_g, lift_to_m, make_laplace_pff, pff_order_check, GridSampler, PffSupport};
use polya_core::quad::{integrate, QuadratureSpec};
use polya_core::transforms::univariate_transform;
use polya_core::weights::{make_family, Family};
use polya_core::{Complex64, Ensemble, MatrixSpace, SpectralPoint, TransformKind, Weight};

fn fam(s: &str) -> Weight {
    make_family(&s.parse::<Family>().unwrap()).unwrap()
}

fn mass(w: &Weight) -> f64 {
    let s = w.support();
    let spec = QuadratureSpec::default().with_tol(1e-13, 1e-11);
    integrate(|x| w.eval(x), s.lo, s.hi, &spec).unwrap().value
}

#[test]
fn pff_weights_give_nonnegative_h2_densities() {
    let cases = [
        (make_laplace_pff(&[0.5, 1.0, 2.0], -1.0, 0.0, PffSupport::RealLine).unwrap(), (-1.0, 7.0)),
        (fam("gaussian_shifted:alpha=0.5,var=1.5"), (-4.0, 5.0)),
        (fam("gumbel_deformed:alpha=2"), (-2.0, 6.0)),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for (w, (lo, hi)) in cases {
        let verdict = pff_order_check(&w, 3, GridSampler::new(500, 5)).unwrap();
        assert!(verdict.is_pff, "{}: {verdict}", w.label());
        let e = Ensemble::polya(MatrixSpace::hermitian(3), w.clone()).unwrap();
        for _ in 0..1000 {
            let a: Vec<f64> = (0..3).map(|_| rng.random_range(lo..hi)).collect();
            let v = e.joint_density(&SpectralPoint::new(a.clone())).unwrap();
            assert!(v >= -1e-8, "{} at {a:?}: {v}", w.label());
        }
    }
}

#[test]
fn laplace_generators_are_probability_densities() {
    for (deltas, shift, gamma, support) in [
        (vec![1.0], 0.0, 0.0, PffSupport::HalfLine),
        (vec![0.3, 0.3, 2.0], 1.0, 0.0, PffSupport::HalfLine),
        (vec![0.5, 1.5], -2.0, 0.0, PffSupport::RealLine),
        (vec![1.0, 0.25], 0.0, 0.4, PffSupport::RealLine),
    ] {
        let w = make_laplace_pff(&deltas, shift, gamma, support).unwrap();
        assert_relative_eq!(mass(&w), 1.0, max_relative = 1e-8);
    }
}

#[test]
fn laplace_generators_close_under_additive_convolution() {
    let f = make_laplace_pff(&[0.5, 1.0], 0.2, 0.0, PffSupport::HalfLine).unwrap();
    let g = make_laplace_pff(&[2.0, 0.7], 0.3, 0.0, PffSupport::HalfLine).unwrap();
    let both = make_laplace_pff(&[0.5, 1.0, 2.0, 0.7], 0.5, 0.0, PffSupport::HalfLine).unwrap();
    let c = convolve_polya(&MatrixSpace::hermitian(2), &f, &g).unwrap();
    for x in [0.6, 1.0, 2.5, 4.0, 9.0] {
        assert_relative_eq!(c.eval(x), both.eval(x), max_relative = 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bridge_inverts(u in 0.01f64..6.0, nu in 0.0f64..2.0) {
        let w = fam(&format!("ginibre:nu={nu}"));
        let b = bridge_g(&w).unwrap();
        let back = b.eval(-u.ln()) / u;
        prop_assert!((back - w.eval(u)).abs() <= 1e-10 * w.eval(u));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lift_turns_hankel_into_laplace(s in 0.0f64..3.0, nu in 0u32..3) {
        let (d1, d2) = (1.0, 0.5);
        let wt = make_laplace_pff(&[d1, d2], 0.0, 0.0, PffSupport::HalfLine).unwrap();
        let lifted = lift_to_m(&wt, nu as f64).unwrap();
        let h = univariate_transform(TransformKind::Hankel(nu as f64), &lifted, Complex64::from(s)).unwrap().re;
        let laplace = 1.0 / ((1.0 + d1 * s) * (1.0 + d2 * s));
        prop_assert!((h - laplace).abs() <= 1e-6 * laplace, "{h} vs {laplace}");
    }
}
