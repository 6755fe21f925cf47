//! Fourier, Hankel and Mellin transforms of weights, their multivariate
//! determinantal versions, and the Andréief identity.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::polynomial_normalization;
use crate::linalg::{coalesce, det, hermite_dd};
use crate::quad::{integrate_box, integrate_finite, integrate_oscillatory, integrate_scaled, QuadratureSpec};
use crate::spaces::{MatrixSpace, SpaceKind};
use crate::special::{bessel_j_zero_estimate, factorial, gamma, hankel_kernel, rising};
use crate::weights::{mass_center, Support, Weight, WeightVector};
use crate::{Error, QuadratureSpec64, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "nu", rename_all = "snake_case")]
pub enum TransformKind {
    Fourier,
    Hankel(f64),
    Mellin,
}

impl TransformKind {
    pub fn hankel(nu: f64) -> Result<Self> {
        if !(nu >= -0.5) {
            return Err(Error::InvalidParameter(format!("Hankel order must be at least -1/2, got {nu}")));
        }
        Ok(Self::Hankel(nu))
    }

    /// The transform that diagonalizes the convolution on `space`.
    pub fn for_space(space: &MatrixSpace) -> Self {
        match space.kind() {
            SpaceKind::H2 => Self::Fourier,
            SpaceKind::G => Self::Mellin,
            _ => Self::Hankel(space.nu().value()),
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fourier => write!(f, "fourier"),
            Self::Hankel(nu) => write!(f, "hankel({nu})"),
            Self::Mellin => write!(f, "mellin"),
        }
    }
}

pub fn transform_spec() -> QuadratureSpec64 {
    QuadratureSpec::default().with_tol(1e-13, 1e-10)
}

/// `Fω(s)`, `H_νω(s)` or `Mω(s)`.
pub fn univariate_transform(kind: TransformKind, f: &Weight, s: Complex64) -> Result<Complex64> {
    transform_derivative(kind, f, s, 0, &transform_spec())
}

/// `k`-th derivative in `s` of a univariate transform.
pub fn transform_derivative(kind: TransformKind, f: &Weight, s: Complex64, k: usize, spec: &QuadratureSpec64) -> Result<Complex64> {
    if !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::InvalidParameter("transform argument must be finite".into()));
    }
    match kind {
        TransformKind::Fourier => fourier(f, s, k, spec),
        TransformKind::Hankel(nu) => {
            if s.im != 0.0 || s.re < 0.0 {
                return Err(Error::InvalidParameter(format!("Hankel transforms take real s ≥ 0, got {s}")));
            }
            hankel(f, nu, s.re, k, spec).map(Complex64::from)
        }
        TransformKind::Mellin => mellin(f, s, k, spec),
    }
}

fn non_oscillatory<V: crate::quad::QuadValue<f64>>(
    g: impl Fn(f64) -> V,
    lo: f64,
    hi: f64,
    center: f64,
    spec: &QuadratureSpec64,
) -> Result<V> {
    let c = center.clamp(lo, hi);
    let mut left = integrate_scaled(&g, lo, c, 1.0, spec)?.value;
    let right = integrate_scaled(&g, c, hi, 1.0, spec)?.value;
    left.axpy(1.0, &right);
    Ok(left)
}

/// Break points `start + 2^{i−2}` up to the first natural break, then the natural ones.
fn breaks_from(start: f64, natural: impl Fn(usize) -> f64) -> impl Fn(usize) -> f64 {
    let first = natural(0);
    let mut prefix = Vec::new();
    let mut step = 0.25;
    while start + step < first && prefix.len() < 40 {
        prefix.push(start + step);
        step *= 2.0;
    }
    move |k| if k < prefix.len() { prefix[k] } else { natural(k - prefix.len()) }
}

fn fourier(f: &Weight, s: Complex64, k: usize, spec: &QuadratureSpec64) -> Result<Complex64> {
    let sup = f.support();
    let g = |x: f64| {
        let p = Complex64::new(0.0, x).powu(k as u32);
        p * (Complex64::new(0.0, x) * s).exp() * f.eval(x)
    };
    let c = mass_center(|x| f.eval(x) * (-s.im * x).exp(), sup);
    let w = s.re.abs();
    if w == 0.0 {
        return non_oscillatory(g, sup.lo, sup.hi, c, spec);
    }
    let period = std::f64::consts::PI / w;
    let mut total = Complex64::new(0.0, 0.0);
    // Right of the centre.
    if sup.hi.is_finite() {
        total += chunked(&g, c, sup.hi, period, spec);
    } else {
        total += integrate_oscillatory(&g, c, breaks_from(c, |m| c + (m + 1) as f64 * period), spec)?.value;
    }
    if sup.lo.is_finite() {
        total += chunked(&g, sup.lo, c, period, spec);
    } else {
        let h = |u: f64| g(-u);
        total += integrate_oscillatory(h, -c, breaks_from(-c, |m| -c + (m + 1) as f64 * period), spec)?.value;
    }
    if !total.re.is_finite() || !total.im.is_finite() {
        return Err(Error::Divergent("Fourier integral is not finite".into()));
    }
    Ok(total)
}

/// Sum of adaptive integrals over chunks of length `period` covering `[a, b]`.
fn chunked(g: &impl Fn(f64) -> Complex64, a: f64, b: f64, period: f64, spec: &QuadratureSpec64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let pieces = ((b - a) / period).ceil().clamp(1.0, 1e5) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|i| integrate_finite(g, a + i as f64 * h, a + (i + 1) as f64 * h, spec).value).sum()
}

/// Positions of the sign changes of `J_ν(2√(xs))` in `x`.
fn kernel_zero(nu: f64, s: f64, m: usize) -> f64 {
    let j = bessel_j_zero_estimate(nu, m + 1);
    j * j / (4.0 * s)
}

fn hankel(f: &Weight, nu: f64, s: f64, k: usize, spec: &QuadratureSpec64) -> Result<f64> {
    let sup = f.support();
    if sup.lo < 0.0 {
        return Err(Error::SupportMismatch(format!("Hankel transform needs support in [0, ∞), got {}", sup)));
    }
    let order = nu + k as f64;
    let norm = rising(nu + 1.0, k);
    let g = |x: f64| {
        let v = f.eval(x);
        if v == 0.0 {
            return 0.0;
        }
        (-x).powi(k as i32) * hankel_kernel(order, x * s) * v / norm
    };
    let c = mass_center(|x| f.eval(x) * x.powi(k as i32), sup);
    if s == 0.0 || sup.hi.is_finite() {
        let hi = sup.hi;
        let v = if hi.is_finite() && s > 0.0 {
            // split at the kernel zeros inside the support
            let mut pts = vec![sup.lo];
            let mut m = 0;
            while pts.len() < 10_000 {
                let z = kernel_zero(order, s, m);
                if z >= hi {
                    break;
                }
                if z > sup.lo {
                    pts.push(z);
                }
                m += 1;
            }
            pts.push(hi);
            pts.windows(2).map(|w| integrate_finite(&g, w[0], w[1], spec).value).sum()
        } else {
            non_oscillatory(g, sup.lo, hi, c, spec)?
        };
        return finite(v, "Hankel");
    }
    let head = integrate_finite(&g, sup.lo, c.max(sup.lo), spec).value;
    let first = (0..).find(|&m| kernel_zero(order, s, m) > c).unwrap_or(0);
    let tail = integrate_oscillatory(&g, c.max(sup.lo), breaks_from(c, |m| kernel_zero(order, s, m + first)), spec)?.value;
    finite(head + tail, "Hankel")
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Divergent(format!("{what} integral is not finite")))
    }
}

fn mellin(f: &Weight, s: Complex64, k: usize, spec: &QuadratureSpec64) -> Result<Complex64> {
    let sup = f.support();
    if sup.lo < 0.0 {
        return Err(Error::SupportMismatch(format!("Mellin transform needs support in [0, ∞), got {}", sup)));
    }
    let (tlo, thi) = (sup.lo.ln(), sup.hi.ln());
    let g = |t: f64| {
        let y = t.exp();
        // underflow at the far left: the factor e^{st} dominates there
        let v = if y > 0.0 && y.is_finite() { f.eval(y) } else { 0.0 };
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        (s * t).exp() * v * t.powi(k as i32)
    };
    // Outside the strip the log-variable integrand stops decaying at one end.
    for (inf, sign) in [(tlo, -1.0), (thi, 1.0)] {
        if inf.is_infinite() {
            let near = g(sign * 40.0).norm();
            let far = g(sign * 80.0).norm();
            if !far.is_finite() || (far > 0.0 && far >= near) {
                return Err(Error::OutsideMellinStrip { re: s.re, im: s.im });
            }
        }
    }
    let c = mass_center(|x| f.eval(x) * x.powf(s.re), sup);
    let tc = if c > 0.0 { c.ln() } else { tlo.max(-5.0) };
    let v = non_oscillatory(g, tlo, thi, tc, spec)?;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Divergent("Mellin integral is not finite".into()));
    }
    Ok(v)
}

/// `(1/Γ(ν+1)) ∫₀^∞ F(s) (xs)^{ν/2} J_ν(2√(xs)) ds`.
pub fn inverse_hankel(big_f: impl Fn(f64) -> f64, nu: f64, x: f64) -> Result<f64> {
    inverse_hankel_with(big_f, nu, x, &transform_spec())
}

pub fn inverse_hankel_with(big_f: impl Fn(f64) -> f64, nu: f64, x: f64, spec: &QuadratureSpec64) -> Result<f64> {
    if !(nu >= -0.5) || !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!("inverse Hankel needs ν ≥ -1/2 and x ≥ 0 (ν={nu}, x={x})")));
    }
    // (xs)^{ν/2} J_ν(2√(xs)) = (xs)^ν Λ_ν(xs) / Γ(ν+1)
    let g2 = gamma(nu + 1.0).powi(2);
    let g = |s: f64| {
        let v = big_f(s);
        if v == 0.0 {
            return 0.0;
        }
        let z = x * s;
        v * z.powf(nu) * hankel_kernel(nu, z) / g2
    };
    if x == 0.0 {
        return if nu == 0.0 { finite(integrate_scaled(&g, 0.0, f64::INFINITY, 1.0, spec)?.value, "inverse Hankel") } else { Ok(0.0) };
    }
    let breaks = breaks_from(0.0, |m| kernel_zero(nu, x, m));
    let v = integrate_oscillatory(g, 0.0, breaks, spec)?.value;
    finite(v, "inverse Hankel")
}

/// Argument at which the multivariate transform of `space` is normalized to 1.
pub fn normalization_point(space: &MatrixSpace) -> Vec<Complex64> {
    let n = space.n();
    match space.kind() {
        SpaceKind::G => (1..=n).map(|j| Complex64::from((j - 1) as f64 + (n + 1) as f64 / 2.0)).collect(),
        _ => vec![Complex64::new(0.0, 0.0); n],
    }
}

fn mellin_shift(space: &MatrixSpace) -> f64 {
    (space.n() as f64 - 1.0) / 2.0
}

/// Product formula for the multivariate transform of a Pólya ensemble.
pub fn mv_transform_polya(space: &MatrixSpace, w: &Weight, s: &[Complex64]) -> Result<Complex64> {
    check_len(space, s)?;
    let kind = TransformKind::for_space(space);
    let mut out = Complex64::new(1.0, 0.0);
    match space.kind() {
        SpaceKind::G => {
            let shift = mellin_shift(space);
            for (j, &sj) in s.iter().enumerate() {
                let den = univariate_transform(kind, w, Complex64::from((j + 1) as f64))?;
                out *= univariate_transform(kind, w, sj - shift)? / nonzero(den)?;
            }
        }
        _ => {
            let den = nonzero(univariate_transform(kind, w, Complex64::new(0.0, 0.0))?)?;
            for &sj in s {
                out *= univariate_transform(kind, w, sj)? / den;
            }
        }
    }
    Ok(out)
}

fn nonzero(v: Complex64) -> Result<Complex64> {
    if v.norm() == 0.0 || !v.norm().is_finite() {
        return Err(Error::Degenerate(format!("normalizing transform is {v}")));
    }
    Ok(v)
}

fn check_len(space: &MatrixSpace, s: &[Complex64]) -> Result<()> {
    if s.len() != space.n() {
        return Err(Error::InvalidParameter(format!("expected {} transform arguments, got {}", space.n(), s.len())));
    }
    Ok(())
}

/// Determinantal formula for the multivariate transform of a polynomial ensemble.
///
/// `det[T w_b(s_c)] / Δ_n(s)` is evaluated as the determinant of divided
/// differences, so coincident arguments use derivatives of the transforms.
pub fn mv_transform_polynomial(space: &MatrixSpace, ws: &WeightVector, s: &[Complex64]) -> Result<Complex64> {
    check_len(space, s)?;
    if ws.len() != space.n() {
        return Err(Error::InvalidParameter(format!("space has n = {} but {} weights were given", space.n(), ws.len())));
    }
    let n = space.n();
    let nu = space.nu().value();
    let kind = TransformKind::for_space(space);
    let shift = if space.kind() == SpaceKind::G { mellin_shift(space) } else { 0.0 };
    let c = polynomial_normalization(space, ws)?;
    let prefactor: f64 = match space.kind() {
        SpaceKind::H2 | SpaceKind::G => (1..=n).map(factorial).product(),
        _ => (1..=n).map(|j| factorial(j) * gamma(j as f64 + nu) / gamma(1.0 + nu)).product(),
    };
    let ratio = det_over_vandermonde(s, |b, z, order| {
        transform_derivative(kind, &ws.weights()[b], z - shift, order, &transform_spec())
    })?;
    // Δ(is) = i^{n(n−1)/2} Δ(s) and Δ(−s) = (−1)^{n(n−1)/2} Δ(s)
    let pairs = (n * (n - 1) / 2) as u32;
    let vander = match space.kind() {
        SpaceKind::H2 => Complex64::new(0.0, 1.0).powu(pairs),
        SpaceKind::G => Complex64::new(1.0, 0.0),
        _ => Complex64::new(-1.0, 0.0).powu(pairs),
    };
    Ok(ratio * c * prefactor / vander)
}

/// `det[g_b(s_c)] / Δ_n(s)` through Newton divided differences; near-equal
/// arguments are merged and fed derivatives instead.
pub fn det_over_vandermonde(
    s: &[Complex64],
    g: impl Fn(usize, Complex64, usize) -> Result<Complex64>,
) -> Result<Complex64> {
    let n = s.len();
    let (nodes, _) = coalesce(s, 1e-7);
    let mut m = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut cache = std::collections::HashMap::new();
        let mut err = None;
        let dd = hermite_dd(&nodes, |i, k| {
            let key = (nodes[i].re.to_bits(), nodes[i].im.to_bits(), k);
            *cache.entry(key).or_insert_with(|| match g(b, nodes[i], k) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    Complex64::new(f64::NAN, 0.0)
                }
            })
        });
        if let Some(e) = err {
            return Err(e);
        }
        for c in 0..n {
            m[(b, c)] = dd[c];
        }
    }
    Ok(det(m))
}

/// Returns `((1/n!)∫det[φ_b(x_c)]det[ψ_b(x_c)]dx, det[∫φ_bψ_c])` for `n ≤ 3`.
pub fn andreief_check(phi: &[&dyn Fn(f64) -> f64], psi: &[&dyn Fn(f64) -> f64], domain: Support) -> Result<(f64, f64)> {
    let n = phi.len();
    if n == 0 || n != psi.len() || n > 3 {
        return Err(Error::InvalidParameter("andreief_check needs 1 ≤ n ≤ 3 functions on each side".into()));
    }
    let spec = QuadratureSpec::default().with_tol(1e-11, 1e-9);
    let gram = DMatrix::from_fn(n, n, |b, c| integrate_scaled(|x| phi[b](x) * psi[c](x), domain.lo, domain.hi, 1.0, &spec).map(|e| e.value));
    let mut g = DMatrix::zeros(n, n);
    for b in 0..n {
        for c in 0..n {
            g[(b, c)] = gram[(b, c)].clone()?;
        }
    }
    let rhs = det(g);
    let integrand = |x: &[f64]| {
        let a = DMatrix::from_fn(n, n, |b, c| phi[b](x[c]));
        let p = DMatrix::from_fn(n, n, |b, c| psi[b](x[c]));
        det(a) * det(p)
    };
    let ranges = vec![(domain.lo, domain.hi); n];
    let lhs = integrate_box(&integrand, &ranges, &QuadratureSpec::default().with_tol(1e-9, 1e-7))?.value / factorial(n);
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::Divergent("Andréief integrals are not finite".into()));
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{make_family, Family};
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::from(x)
    }

    #[test]
    fn univariate_examples() {
        let e = make_family(&Family::Ginibre { nu: 0.0 }).unwrap();
        assert_relative_eq!(univariate_transform(TransformKind::Mellin, &e, c(3.0)).unwrap().re, 2.0, max_relative = 1e-10);
        assert_relative_eq!(univariate_transform(TransformKind::Hankel(0.0), &e, c(0.0)).unwrap().re, 1.0, max_relative = 1e-10);
        let g = make_family(&Family::GaussianShifted { alpha: 0.0, var: 1.0 }).unwrap();
        let f0 = univariate_transform(TransformKind::Fourier, &g, c(0.0)).unwrap();
        assert_relative_eq!(f0.re, 2.5066282746310002, max_relative = 1e-10);
        assert!(f0.im.abs() < 1e-12);
    }

    #[test]
    fn closed_form_transforms() {
        // F[e^{−(x−α)²/2}](s) = √(2π) e^{iαs − s²/2}
        let g = make_family(&Family::GaussianShifted { alpha: 0.7, var: 1.0 }).unwrap();
        for s in [0.3, 1.0, 2.5, 6.0] {
            let want = Complex64::new(0.0, 0.7 * s - 0.0).exp() * (2.0 * std::f64::consts::PI).sqrt() * (-0.5 * s * s).exp();
            let got = univariate_transform(TransformKind::Fourier, &g, c(s)).unwrap();
            assert!((got - want).norm() < 1e-9 * want.norm().max(1e-6), "s={s}: {got} vs {want}");
        }
        // H_ν[x^ν e^{−x}](s) = Γ(ν+1) e^{−s}
        for nu in [0.0, 0.5, 2.0] {
            let w = make_family(&Family::Ginibre { nu }).unwrap();
            for s in [0.1, 1.0, 4.0, 12.0] {
                let got = univariate_transform(TransformKind::Hankel(nu), &w, c(s)).unwrap().re;
                assert_relative_eq!(got, gamma(nu + 1.0) * (-s).exp(), max_relative = 1e-8, epsilon = 1e-13);
            }
        }
        // M[e^{−x}](s) = Γ(s) at complex s
        let e = make_family(&Family::Ginibre { nu: 0.0 }).unwrap();
        let got = univariate_transform(TransformKind::Mellin, &e, Complex64::new(2.0, 1.0)).unwrap();
        // Γ(2+i) from mpmath
        assert!((got - Complex64::new(0.652_965_496_420_166_9, 0.343_065_839_816_545_6)).norm() < 1e-9);
    }

    #[test]
    fn mellin_strip_is_enforced() {
        let e = make_family(&Family::Ginibre { nu: 0.0 }).unwrap();
        assert!(matches!(univariate_transform(TransformKind::Mellin, &e, c(0.0)), Err(Error::OutsideMellinStrip { .. })));
        assert!(matches!(univariate_transform(TransformKind::Mellin, &e, c(-0.5)), Err(Error::OutsideMellinStrip { .. })));
        let cl = make_family(&Family::CauchyLorentz { n: 1, nu: 0.0, mu: 0.0 }).unwrap();
        // x^0/(1+x)^2 has strip 0 < Re s < 2
        assert!(univariate_transform(TransformKind::Mellin, &cl, c(1.0)).is_ok());
        assert!(univariate_transform(TransformKind::Mellin, &cl, c(2.5)).is_err());
    }

    #[test]
    fn hankel_rejects_complex_and_negative_arguments() {
        let e = make_family(&Family::Ginibre { nu: 0.0 }).unwrap();
        assert!(univariate_transform(TransformKind::Hankel(0.0), &e, Complex64::new(1.0, 0.5)).is_err());
        assert!(univariate_transform(TransformKind::Hankel(0.0), &e, c(-1.0)).is_err());
        assert!(TransformKind::hankel(-0.75).is_err());
    }

    #[test]
    fn inverse_hankel_examples() {
        assert_relative_eq!(inverse_hankel(|s| (-s).exp(), 0.0, 1.0).unwrap(), (-1f64).exp(), max_relative = 1e-8);
        assert_eq!(inverse_hankel(|_| 0.0, 0.0, 1.0).unwrap(), 0.0);
        // H_{1/2}[x^{1/2} e^{−x}](s) = Γ(3/2) e^{−s}
        let g = gamma(1.5);
        assert_relative_eq!(inverse_hankel(|s| g * (-s).exp(), 0.5, 4.0).unwrap(), 2.0 * (-4f64).exp(), max_relative = 1e-7);
    }

    #[test]
    fn polya_transform_examples() {
        let g = make_family(&Family::GaussianShifted { alpha: 0.0, var: 1.0 }).unwrap();
        let h2 = MatrixSpace::hermitian(2);
        assert_relative_eq!(mv_transform_polya(&h2, &g, &[c(0.0), c(0.0)]).unwrap().re, 1.0, max_relative = 1e-12);
        assert_relative_eq!(mv_transform_polya(&h2, &g, &[c(1.0), c(2.0)]).unwrap().re, (-2.5f64).exp(), max_relative = 1e-9);
        let e = make_family(&Family::Ginibre { nu: 0.0 }).unwrap();
        assert_relative_eq!(mv_transform_polya(&MatrixSpace::gl(2), &e, &[c(1.5), c(2.5)]).unwrap().re, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn andreief_examples() {
        let e = |x: f64| (-x).exp();
        let xe = |x: f64| x * (-x).exp();
        let (l, r) = andreief_check(&[&e], &[&e], Support::HALF_LINE).unwrap();
        assert_relative_eq!(l, 0.5, max_relative = 1e-8);
        assert_relative_eq!(r, 0.5, max_relative = 1e-10);
        let (l, r) = andreief_check(&[&e, &xe], &[&e, &xe], Support::HALF_LINE).unwrap();
        assert_relative_eq!(r, 1.0 / 16.0, max_relative = 1e-10);
        assert_relative_eq!(l, r, max_relative = 1e-6);
        let (_, swapped) = andreief_check(&[&e, &xe], &[&xe, &e], Support::HALF_LINE).unwrap();
        assert_relative_eq!(swapped, -r, max_relative = 1e-10);
    }
}
