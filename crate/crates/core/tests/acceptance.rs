//! Acceptance criteria, one line of output each. Run with
//! `cargo test -p polya-core --test acceptance`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polya_core::ensembles::{convolve_polya, convolution_weight, ConvolutionKind, Ensemble};
use polya_core::haarmc::{
    empirical_convolution_check, group_integral_closed, group_integral_mc, polya_group_identity, GroupIntegral,
    SampleFamily,
};
use polya_core::pff::{beyond_theorem_example, bridge_g, lift_to_m, pff_order_check, GridSampler};
use polya_core::quad::integrate_box;
use polya_core::special::{bessel_j, bessel_k};
use polya_core::transforms::univariate_transform;
use polya_core::weights::{make_family, Family};
use polya_core::{MatrixSpace, QuadratureSpec64, Result, SpectralPoint, TransformKind, Weight};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn fam(s: &str) -> Weight {
    make_family(&s.parse::<Family>().expect("family")).expect("weight")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn normalization() -> Result<Outcome> {
    let inf = f64::INFINITY;
    let spec = QuadratureSpec64::default().with_tol(1e-9, 1e-7);
    let cases = [
        (MatrixSpace::gl(2), fam("ginibre:nu=1"), 0.25, (0.0, inf)),
        (MatrixSpace::hermitian(2), fam("gaussian_shifted"), 1.0 / (4.0 * PI), (-inf, inf)),
        (MatrixSpace::chiral(2, 0), fam("ginibre:nu=0"), 0.5, (0.0, inf)),
    ];
    let mut worst_mass: f64 = 0.0;
    let mut worst_c: f64 = 0.0;
    for (space, w, c, range) in cases {
        let ens = Ensemble::polya(space, w)?;
        worst_c = worst_c.max(rel(ens.norm(), c));
        let f = |p: &[f64]| ens.joint_density(&SpectralPoint::new(p.to_vec())).unwrap_or(f64::NAN);
        let mass = integrate_box(&f, &[range, range], &spec)?.value;
        worst_mass = worst_mass.max((mass - 1.0).abs());
    }
    Ok(outcome(worst_mass <= 1e-4 && worst_c <= 1e-10, format!("max |mass − 1| = {worst_mass:.2e}, max rel. error of C_n = {worst_c:.2e}")))
}

fn multiplication_theorems() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    // additive on H2
    let (f, g) = (fam("gaussian_shifted:alpha=0.3,var=1"), fam("gumbel_deformed:alpha=1"));
    let h2 = MatrixSpace::hermitian(2);
    let conv = convolve_polya(&h2, &f, &g)?;
    for _ in 0..20 {
        let s = Complex64::from(rng.random_range(-3.0..3.0));
        let k = TransformKind::Fourier;
        let want = univariate_transform(k, &f, s)? * univariate_transform(k, &g, s)?;
        worst = worst.max(crel(univariate_transform(k, &conv, s)?, want));
    }
    // multiplicative on G
    let (f, g) = (fam("ginibre:nu=0"), fam("ginibre:nu=1"));
    let conv = convolve_polya(&MatrixSpace::gl(2), &f, &g)?;
    for _ in 0..20 {
        let s = Complex64::new(rng.random_range(0.5..3.0), rng.random_range(-3.0..3.0));
        let k = TransformKind::Mellin;
        let want = univariate_transform(k, &f, s)? * univariate_transform(k, &g, s)?;
        worst = worst.max(crel(univariate_transform(k, &conv, s)?, want));
    }
    // Hankel on M_1
    let (f, g) = (fam("gaussian_radial:nu=1,eps=1"), fam("gaussian_radial:nu=1,eps=0.5"));
    let conv = convolve_polya(&MatrixSpace::chiral(2, 1), &f, &g)?;
    for _ in 0..20 {
        let s = Complex64::from(rng.random_range(0.0..4.0));
        let k = TransformKind::Hankel(1.0);
        let want = univariate_transform(k, &f, s)? * univariate_transform(k, &g, s)?;
        worst = worst.max(crel(univariate_transform(k, &conv, s)?, want));
    }
    Ok(outcome(worst <= 1e-6, format!("max rel. error over 60 points = {worst:.2e}")))
}

fn hankel_semigroup() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a, b) in [(1.0, 1.0), (1.0, 2.0), (0.5, 3.0)] {
        let f = fam(&format!("exponential:a={a}"));
        let g = fam(&format!("exponential:a={b}"));
        let conv = convolution_weight(ConvolutionKind::Hankel(polya_core::Nu::ZERO), &f, &g)?;
        for k in 0..50 {
            let x = 0.05 + k as f64 * 4.0 * (a + b) / 50.0;
            let v = conv.eval(x);
            worst = worst.max(rel(v, (-x / (a + b)).exp() / (a + b)));
        }
    }
    Ok(outcome(worst <= 1e-5, format!("max rel. error on 150 points = {worst:.2e}")))
}

fn hciz() -> Result<Outcome> {
    let s = [Complex64::from(3.0), Complex64::from(5.0)];
    let exact = Complex64::new(0.0, 12.0).exp() * 1f64.sin();
    let mc = group_integral_mc(GroupIntegral::Hciz, &[1.0, 2.0], &s, 1_000_000, 11)?;
    let z2 = mc.sigmas_from(exact);
    let closed2 = crel(group_integral_closed(GroupIntegral::Hciz, &[1.0, 2.0], &s)?, exact);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s3: Vec<Complex64> = (0..3).map(|_| Complex64::from(rng.random_range(-1.5..1.5))).collect();
    let mc3 = group_integral_mc(GroupIntegral::Hciz, &a, &s3, 1_000_000, 12)?;
    let z3 = mc3.sigmas_from(group_integral_closed(GroupIntegral::Hciz, &a, &s3)?);
    Ok(outcome(
        z2 <= 5.0 && z3 <= 5.0 && closed2 <= 1e-12,
        format!("n=2: {z2:.2}σ (closed form rel. {closed2:.1e}); n=3: {z3:.2}σ"),
    ))
}

fn bk_gn() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_z: f64 = 0.0;
    let spaces = [
        MatrixSpace::chiral(2, 0),
        MatrixSpace::chiral(2, 1),
        MatrixSpace::antisymmetric_even(2),
        MatrixSpace::antisymmetric_odd(2),
        MatrixSpace::self_dual(2),
    ];
    for (i, space) in spaces.into_iter().enumerate() {
        let a: Vec<f64> = (0..2).map(|_| rng.random_range(0.2..2.0)).collect();
        let s: Vec<Complex64> = (0..2).map(|_| Complex64::from(rng.random_range(0.2..2.0))).collect();
        let mc = group_integral_mc(GroupIntegral::Bk(space), &a, &s, 1_000_000, 20 + i as u64)?;
        worst_z = worst_z.max(mc.sigmas_from(group_integral_closed(GroupIntegral::Bk(space), &a, &s)?));
    }
    let s = [Complex64::new(0.4, 0.3), Complex64::new(1.6, -0.5)];
    let a = [0.8, 1.7];
    let mc = group_integral_mc(GroupIntegral::Gn, &a, &s, 1_000_000, 30)?;
    worst_z = worst_z.max(mc.sigmas_from(group_integral_closed(GroupIntegral::Gn, &a, &s)?));
    // n = 1: J_ν(2√(as))/(as)^{ν/2}·Γ(ν+1) and a^{s−1}
    let mut worst_1: f64 = 0.0;
    for (space, nu) in [(MatrixSpace::chiral(1, 0), 0.0), (MatrixSpace::chiral(1, 2), 2.0), (MatrixSpace::self_dual(1), 0.5)] {
        let (a, s) = (0.7, 1.9);
        let z = a * s;
        let want = polya_core::special::gamma(nu + 1.0) * bessel_j(nu, 2.0 * f64::sqrt(z)) / z.powf(nu / 2.0);
        let got = group_integral_closed(GroupIntegral::Bk(space), &[a], &[Complex64::from(s)])?;
        worst_1 = worst_1.max(crel(got, Complex64::from(want)));
    }
    let s1 = Complex64::new(2.2, 0.7);
    let want = Complex64::from(1.3).powc(s1 - 1.0);
    worst_1 = worst_1.max(crel(group_integral_closed(GroupIntegral::Gn, &[1.3], &[s1])?, want));
    worst_1 = worst_1.max(crel(group_integral_mc(GroupIntegral::Gn, &[1.3], &[s1], 1000, 1)?.estimate, want));
    Ok(outcome(worst_z <= 5.0 && worst_1 <= 1e-10, format!("worst n=2 deviation {worst_z:.2}σ; n=1 max rel. error {worst_1:.1e}")))
}

fn group_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    let cases = [(MatrixSpace::hermitian(2), fam("gaussian_shifted"), -1.0, 1.5), (MatrixSpace::chiral(2, 0), fam("ginibre:nu=0"), 0.2, 2.0)];
    for (space, w, lo, hi) in cases {
        for rep in 0..2 {
            let mut draw = || {
                let mut v: Vec<f64> = (0..2).map(|_| rng.random_range(lo..hi)).collect();
                v.sort_by(f64::total_cmp);
                SpectralPoint::new(v)
            };
            let (x, y) = (draw(), draw());
            let (lhs, rhs) = polya_group_identity(&space, &w, &x, &y, 100_000, 40 + rep)?;
            let z = lhs.sigmas_from(rhs);
            worst = worst.max(z);
            lines.push(format!("{}: {z:.2}σ", space.kind()));
        }
    }
    Ok(outcome(worst <= 5.0, lines.join(", ")))
}

fn pff_suite() -> Result<Outcome> {
    let start = Instant::now();
    let sampler = GridSampler::new(10_000, 7);
    let mut bad = Vec::new();
    for (w, order) in [
        ("gaussian_shifted", 4),
        ("heaviside", 4),
        ("heaviside_power:p=1.5", 3),
        ("gumbel_deformed:alpha=1", 4),
    ] {
        let v = pff_order_check(&fam(w), order, sampler)?;
        if !v.is_pff {
            bad.push(format!("{w} N={order}: {v}"));
        }
    }
    for (w, order) in [("indicator_gap", 2), ("heaviside_power:p=1.5", 4)] {
        let v = pff_order_check(&fam(w), order, sampler)?;
        if v.is_pff {
            bad.push(format!("{w} N={order}: no witness"));
        }
    }
    let t = start.elapsed();
    let detail = if bad.is_empty() { "all six verdicts as expected".to_string() } else { bad.join("; ") };
    Ok(outcome(bad.is_empty() && t < Duration::from_secs(30), detail))
}

fn bridges() -> Result<Outcome> {
    let mut bridge_err: f64 = 0.0;
    for nu in [0.0, 0.5, 2.0] {
        let b = bridge_g(&fam(&format!("ginibre:nu={nu}")))?;
        let g = fam(&format!("gumbel_deformed:alpha={}", nu + 1.0));
        for k in 0..60 {
            let x = -3.0 + 0.25 * k as f64;
            bridge_err = bridge_err.max((b.eval(x) - g.eval(x)).abs());
        }
    }
    let lift = lift_to_m(&fam("ginibre:nu=0"), 0.0)?;
    let mut lift_err: f64 = 0.0;
    for k in 0..40 {
        let x = 0.01 * (2000.0_f64).powf(k as f64 / 39.0);
        lift_err = lift_err.max(rel(lift.eval(x), 2.0 * bessel_k(0.0, 2.0 * x.sqrt())));
    }
    // ω̃(y) = y e^{−y}: Laplace transform 1/(1+s)², lifted with ν = 1/2
    let lift = lift_to_m(&fam("ginibre:nu=1"), 0.5)?;
    let mut ident_err: f64 = 0.0;
    for k in 0..20 {
        let s = 0.25 * k as f64;
        let h = univariate_transform(TransformKind::Hankel(0.5), &lift, Complex64::from(s))?;
        ident_err = ident_err.max(rel(h.re, 1.0 / (1.0 + s).powi(2)));
    }
    Ok(outcome(
        bridge_err <= 1e-10 && lift_err <= 1e-6 && ident_err <= 1e-6,
        format!("bridge {bridge_err:.1e}, lift vs 2K₀ {lift_err:.1e}, Hankel/Laplace {ident_err:.1e}"),
    ))
}

fn empirical_convolution() -> Result<Outcome> {
    let start = Instant::now();
    let g = SampleFamily::Gaussian { eps: 1.0 };
    let ks_m0 = empirical_convolution_check(&MatrixSpace::chiral(2, 0), g, g, 100_000, 8)?;
    let ks_h2 = empirical_convolution_check(&MatrixSpace::hermitian(2), g, g, 100_000, 9)?;
    let t = start.elapsed();
    Ok(outcome(
        ks_m0 <= 0.02 && ks_h2 <= 0.02 && t < Duration::from_secs(120),
        format!("KS M₀ {ks_m0:.4}, H2 {ks_h2:.4}"),
    ))
}

fn beyond_theorem() -> Result<Outcome> {
    let a = 0.2;
    let ens = beyond_theorem_example(a)?;
    let mut min: f64 = f64::INFINITY;
    for i in 0..100 {
        for j in 0..100 {
            let p = vec![a * (i as f64 + 0.5) / 100.0, a * (j as f64 + 0.5) / 100.0];
            min = min.min(ens.joint_density(&SpectralPoint::new(p))?);
        }
    }
    let spec = QuadratureSpec64::default().with_tol(1e-10, 1e-8);
    let f = |p: &[f64]| ens.joint_density(&SpectralPoint::new(p.to_vec())).unwrap_or(f64::NAN);
    let mass = integrate_box(&f, &[(0.0, a), (0.0, a)], &spec)?.value;
    Ok(outcome(min >= -1e-10 && (mass - 1.0).abs() <= 1e-4, format!("min density {min:.2e}, mass {mass:.8}")))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>, Option<u64>); 10] = [
        ("normalization", normalization, Some(10)),
        ("multiplication theorems", multiplication_theorems, Some(30)),
        ("Hankel semigroup", hankel_semigroup, None),
        ("HCIZ", hciz, Some(60)),
        ("Berezin–Karpelevich and Gelfand–Naimark", bk_gn, None),
        ("group-integral identity", group_identity, None),
        ("PFF suite", pff_suite, Some(30)),
        ("bridges", bridges, None),
        ("empirical convolution", empirical_convolution, Some(120)),
        ("beyond-theorem example", beyond_theorem, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let t = start.elapsed();
        let (mut passed, mut detail) = match result {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if let Some(s) = limit {
            if t > Duration::from_secs(*s) {
                passed = false;
                detail.push_str(&format!("; over the {s} s budget"));
            }
        }
        if !passed {
            failed += 1;
        }
        println!("[{}] AC{} {name}: {detail} ({t:.1?})", if passed { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
