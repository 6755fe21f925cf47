//! Polynomial and Pólya ensembles: normalization, joint densities,
//! marginals and the three induced convolutions.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use parking_lot::RwLock;

use crate::jet::Jet;
use crate::linalg::{det, vandermonde};
use crate::quad::{integrate_finite, integrate_scaled, QuadratureSpec};
use crate::spaces::{MatrixSpace, Nu, SpaceKind, SpectralPoint};
use crate::special::{factorial, gamma};
use crate::transforms::{inverse_hankel_with, transform_derivative, transform_spec, univariate_transform, TransformKind};
use crate::weights::{apply_derivative_op, mass_center, Operator, Support, Weight, WeightVector};
use crate::{Error, QuadratureSpec64, Result};

#[derive(Debug, Clone)]
pub enum EnsembleForm {
    Polynomial(WeightVector),
    Polya(Weight),
}

/// A normalized ensemble on one matrix space.
#[derive(Debug, Clone)]
pub struct Ensemble {
    space: MatrixSpace,
    form: EnsembleForm,
    weights: WeightVector,
    norm: f64,
    // G^{-1} for the Gram matrix G_{rb} = ∫ x^{r−1} w_b(x) dx
    gram_inv: DMatrix<f64>,
}

impl Ensemble {
    /// `PE_space(ω)`, normalized by the product formula.
    pub fn polya(space: MatrixSpace, w: Weight) -> Result<Self> {
        let norm = normalize(&space, &w)?;
        let weights = WeightVector::induced(&space, &w);
        let gram = gram_matrix(&weights)?;
        let gram_inv = invert(gram)?;
        Ok(Self { space, form: EnsembleForm::Polya(w), weights, norm, gram_inv })
    }

    /// `PE_space(w_1, …, w_n)`, normalized through the Gram determinant.
    pub fn polynomial(space: MatrixSpace, ws: WeightVector) -> Result<Self> {
        if ws.len() != space.n() {
            return Err(Error::InvalidParameter(format!("space has n = {} but {} weights were given", space.n(), ws.len())));
        }
        let gram = gram_matrix(&ws)?;
        let norm = norm_from_gram(&gram)?;
        let gram_inv = invert(gram)?;
        Ok(Self { space, form: EnsembleForm::Polynomial(ws.clone()), weights: ws, norm, gram_inv })
    }

    pub fn space(&self) -> &MatrixSpace {
        &self.space
    }

    pub fn form(&self) -> &EnsembleForm {
        &self.form
    }

    /// The constant `C_n` in front of `Δ_n(a) det[w_b(a_c)]`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn support(&self) -> Result<Support> {
        self.weights.support()
    }

    /// `C_n Δ_n(a) det[w_b(a_c)]`; may be slightly negative from round-off.
    pub fn joint_density(&self, a: &SpectralPoint) -> Result<f64> {
        let n = self.space.n();
        if a.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} spectral values, got {}", a.len())));
        }
        let x = a.values();
        let vd = vandermonde(x);
        if vd == 0.0 {
            return Ok(0.0);
        }
        let mut m = DMatrix::zeros(n, n);
        for b in 0..n {
            for c in 0..n {
                m[(b, c)] = self.weight_value(b, x[c])?;
            }
        }
        Ok(self.norm * vd * det(m))
    }

    /// As [`Self::joint_density`], but values below `−tol` become a
    /// [`Error::PositivityViolation`].
    pub fn joint_density_checked(&self, a: &SpectralPoint, tol: f64) -> Result<f64> {
        let v = self.joint_density(a)?;
        if v < -tol {
            return Err(Error::PositivityViolation { value: v, at: a.values().to_vec() });
        }
        Ok(v)
    }

    fn weight_value(&self, b: usize, x: f64) -> Result<f64> {
        match &self.form {
            EnsembleForm::Polya(w) => {
                if !w.support().contains(x) {
                    return Ok(0.0);
                }
                apply_derivative_op(&self.space, w, b + 1, x)
            }
            EnsembleForm::Polynomial(ws) => Ok(ws.weights()[b].eval(x)),
        }
    }

    /// One-point marginal `ρ(x) = (1/n) Σ_{r,b} x^{r−1} w_b(x) (G^{-1})_{br}`.
    pub fn marginal(&self, x: f64) -> Result<f64> {
        let n = self.space.n();
        let mut acc = 0.0;
        for b in 0..n {
            let wb = self.weight_value(b, x)?;
            if wb == 0.0 {
                continue;
            }
            let mut p = 1.0;
            for r in 0..n {
                acc += p * wb * self.gram_inv[(b, r)];
                p *= x;
            }
        }
        Ok(acc / n as f64)
    }

    /// Marginal CDF tabulated at the sorted points `grid` (exact integrals between nodes).
    pub fn marginal_cdf(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let sup = self.support()?;
        let spec = QuadratureSpec::default().with_tol(1e-12, 1e-9);
        let f = |x: f64| self.marginal(x).unwrap_or(f64::NAN);
        let mut out = Vec::with_capacity(grid.len());
        let first = grid.first().copied().unwrap_or(0.0).max(sup.lo);
        let mut acc = integrate_scaled(f, sup.lo, first, 1.0, &spec)?.value;
        let mut prev = first;
        for &x in grid {
            let x = x.clamp(sup.lo, sup.hi);
            if x > prev {
                acc += integrate_finite(f, prev, x, &spec).value;
                prev = x;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn gram_matrix(ws: &WeightVector) -> Result<DMatrix<f64>> {
    let n = ws.len();
    let sup = ws.support()?;
    let spec = QuadratureSpec::default().with_tol(1e-13, 1e-11);
    let mut g = DMatrix::zeros(n, n);
    for (b, w) in ws.weights().iter().enumerate() {
        let c = mass_center(|x| w.eval(x), sup);
        // all moments of one weight in a single vector quadrature
        let f = |x: f64| {
            let v = w.eval(x);
            let mut p = 1.0;
            (0..n)
                .map(|_| {
                    let t = p * v;
                    p *= x;
                    t
                })
                .collect::<Vec<f64>>()
        };
        let mut m = integrate_scaled(f, sup.lo, c.clamp(sup.lo, sup.hi), 1.0, &spec)?.value;
        let right = integrate_scaled(f, c.clamp(sup.lo, sup.hi), sup.hi, 1.0, &spec)?.value;
        for r in 0..n {
            m[r] += right[r];
            g[(r, b)] = m[r];
        }
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergent("moments of the weights are not finite".into()));
    }
    Ok(g)
}

fn norm_from_gram(g: &DMatrix<f64>) -> Result<f64> {
    let n = g.nrows();
    let d = det(g.clone());
    let c = 1.0 / (factorial(n) * d);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Degenerate(format!("Gram determinant {d} does not give a positive normalization")));
    }
    Ok(c)
}

fn invert(g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.try_inverse().ok_or_else(|| Error::Degenerate("Gram matrix is singular".into()))
}

/// `C_n[w] = 1/(n! det[∫x^{r−1}w_b(x)dx])`, from Andréief's identity.
pub fn polynomial_normalization(_space: &MatrixSpace, ws: &WeightVector) -> Result<f64> {
    norm_from_gram(&gram_matrix(ws)?)
}

/// `C_n[ω]` of a Pólya ensemble from univariate transforms.
pub fn normalize(space: &MatrixSpace, w: &Weight) -> Result<f64> {
    let n = space.n();
    let kind = TransformKind::for_space(space);
    let mut c = 1.0;
    match space.kind() {
        SpaceKind::H2 => {
            let f0 = univariate_transform(kind, w, Complex64::new(0.0, 0.0))?.re;
            for j in 1..=n {
                c /= factorial(j) * f0;
            }
        }
        SpaceKind::G => {
            for j in 1..=n {
                c /= factorial(j) * univariate_transform(kind, w, Complex64::from(j as f64))?.re;
            }
        }
        _ => {
            let nu = space.nu().value();
            let h0 = univariate_transform(kind, w, Complex64::new(0.0, 0.0))?.re;
            for j in 1..=n {
                c *= gamma(1.0 + nu) / (factorial(j) * gamma(j as f64 + nu) * h0);
            }
        }
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Degenerate(format!("normalization constant {c} is not positive")));
    }
    Ok(c)
}

/// Which univariate convolution a space induces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvolutionKind {
    Additive,
    Multiplicative,
    Hankel(Nu),
}

impl ConvolutionKind {
    pub fn for_space(space: &MatrixSpace) -> Self {
        match space.kind() {
            SpaceKind::H2 => Self::Additive,
            SpaceKind::G => Self::Multiplicative,
            _ => Self::Hankel(space.nu()),
        }
    }
}

fn conv_spec() -> QuadratureSpec64 {
    QuadratureSpec::default().with_tol(1e-14, 1e-11)
}

type Memo = Arc<RwLock<HashMap<(usize, u64), f64>>>;

fn memoized(memo: &Memo, key: (usize, u64), f: impl FnOnce() -> f64) -> f64 {
    if let Some(v) = memo.read().get(&key) {
        return *v;
    }
    let v = f();
    memo.write().insert(key, v);
    v
}

/// `(f ∗ g)(x)`, `(f ⊛ g)(x)` or `(f ∗_ν g)(x)`.
pub fn univariate_convolution(kind: ConvolutionKind, f: &Weight, g: &Weight, x: f64) -> Result<f64> {
    let w = convolution_weight(kind, f, g)?;
    if !w.support().contains(x) {
        return Ok(0.0);
    }
    let v = w.eval(x);
    if v.is_nan() {
        return Err(Error::Divergent(format!("convolution integral failed at x = {x}")));
    }
    Ok(v)
}

/// The Pólya weight of the convolution of two Pólya ensembles on `space`.
pub fn convolve_polya(space: &MatrixSpace, w1: &Weight, w2: &Weight) -> Result<Weight> {
    convolution_weight(ConvolutionKind::for_space(space), w1, w2)
}

/// `(w_1 ∗ ω, …, w_n ∗ ω)` with the space's convolution.
pub fn convolve_mixed(space: &MatrixSpace, ws: &WeightVector, w: &Weight) -> Result<WeightVector> {
    let kind = ConvolutionKind::for_space(space);
    let out = ws.weights().iter().map(|wb| convolution_weight(kind, wb, w)).collect::<Result<Vec<_>>>()?;
    WeightVector::new(out)
}

/// Evaluable weight for the convolution of `f` and `g`.
pub fn convolution_weight(kind: ConvolutionKind, f: &Weight, g: &Weight) -> Result<Weight> {
    match kind {
        ConvolutionKind::Additive => Ok(additive(f, g)),
        ConvolutionKind::Multiplicative => multiplicative(f, g),
        ConvolutionKind::Hankel(nu) => hankel_convolution(nu, f, g),
    }
}

fn label(op: &str, f: &Weight, g: &Weight) -> String {
    format!("({}){op}({})", f.label(), g.label())
}

fn jet_or_zero(w: &Weight, x: f64, m: usize) -> Vec<f64> {
    match w.jet(x, m) {
        Ok(j) => j.coeffs().to_vec(),
        Err(_) => vec![0.0; m + 1],
    }
}

fn additive(f: &Weight, g: &Weight) -> Weight {
    let (sf, sg) = (f.support(), g.support());
    let support = Support { lo: sf.lo + sg.lo, hi: sf.hi + sg.hi };
    // Differentiate under the integral only through a factor with no moving boundary.
    let (smooth, other) = if sg.lo.is_infinite() && sg.hi.is_infinite() {
        (Some(g.clone()), f.clone())
    } else if sf.lo.is_infinite() && sf.hi.is_infinite() {
        (Some(f.clone()), g.clone())
    } else {
        (None, f.clone())
    };
    let range = move |x: f64| (sf.lo.max(x - sg.hi), sf.hi.min(x - sg.lo));
    let (f1, g1) = (f.clone(), g.clone());
    let memo: Memo = Arc::default();
    let value = move |x: f64| {
        memoized(&memo, (0, x.to_bits()), || {
            let (a, b) = range(x);
            if a >= b {
                return 0.0;
            }
            let h = |y: f64| f1.eval(y) * g1.eval(x - y);
            let c = mass_center(h, Support { lo: a, hi: b });
            split_integral(h, a, b, c)
        })
    };
    let w = Weight::new(label("*", f, g), support, value);
    match smooth {
        Some(s) => {
            let sup_o = other.support();
            w.with_jet(move |x, m| {
                // c_k = ∫ other(y) [s-jet at x−y]_k dy over the support of `other`
                let h = |y: f64| {
                    let o = other.eval(y);
                    if o == 0.0 {
                        return vec![0.0; m + 1];
                    }
                    jet_or_zero(&s, x - y, m).into_iter().map(|c| c * o).collect::<Vec<f64>>()
                };
                let c = mass_center(|y| other.eval(y) * s.eval(x - y), sup_o);
                Jet::from_coeffs(split_integral(h, sup_o.lo, sup_o.hi, c))
            })
        }
        None => w,
    }
}

fn split_integral<V: crate::quad::QuadValue<f64>>(h: impl Fn(f64) -> V, a: f64, b: f64, c: f64) -> V {
    let spec = conv_spec();
    let c = c.clamp(a, b);
    let left = integrate_scaled(&h, a, c, 1.0, &spec);
    let right = integrate_scaled(&h, c, b, 1.0, &spec);
    match (left, right) {
        (Ok(mut l), Ok(r)) => {
            l.value.axpy(1.0, &r.value);
            l.value
        }
        _ => {
            let mut z = h(c).zero_like();
            z.axpy(f64::NAN, &h(c));
            z
        }
    }
}

fn multiplicative(f: &Weight, g: &Weight) -> Result<Weight> {
    let (sf, sg) = (f.support(), g.support());
    if sf.lo < 0.0 || sg.lo < 0.0 {
        return Err(Error::SupportMismatch("multiplicative convolution needs weights on [0, ∞)".into()));
    }
    let support = Support { lo: sf.lo * sg.lo, hi: if sf.hi.is_infinite() || sg.hi.is_infinite() { f64::INFINITY } else { sf.hi * sg.hi } };
    let full = |s: Support| s.lo == 0.0 && s.hi.is_infinite();
    let (smooth, other) = if full(sg) {
        (Some(g.clone()), f.clone())
    } else if full(sf) {
        (Some(f.clone()), g.clone())
    } else {
        (None, f.clone())
    };
    // y = e^t: (f ⊛ g)(x) = ∫ f(e^t) g(x e^{−t}) dt
    let t_range = move |x: f64| {
        let lo = sf.lo.max(if sg.hi.is_finite() { x / sg.hi } else { 0.0 });
        let hi = sf.hi.min(if sg.lo > 0.0 { x / sg.lo } else { f64::INFINITY });
        (lo.ln(), hi.ln())
    };
    let (f1, g1) = (f.clone(), g.clone());
    let memo: Memo = Arc::default();
    let value = move |x: f64| {
        if x <= 0.0 {
            return f64::NAN;
        }
        memoized(&memo, (0, x.to_bits()), || {
            let (a, b) = t_range(x);
            if a >= b {
                return 0.0;
            }
            let h = |t: f64| {
                let y = t.exp();
                let u = f1.eval(y);
                // x/y overflows where f has long underflowed
                if u == 0.0 {
                    0.0
                } else {
                    u * g1.eval(x / y)
                }
            };
            let c = mass_center(h, Support { lo: a.max(-60.0), hi: b.min(60.0) });
            split_integral(h, a, b, c)
        })
    };
    let w = Weight::new(label("⊛", f, g), support, value);
    Ok(match smooth {
        Some(s) => {
            let so = other.support();
            w.with_jet(move |x, m| {
                // d^k/dx^k s(x/y) = y^{−k} s^{(k)}(x/y)
                let h = |t: f64| {
                    let y = t.exp();
                    let o = other.eval(y);
                    if o == 0.0 {
                        return vec![0.0; m + 1];
                    }
                    let mut p = o;
                    jet_or_zero(&s, x / y, m)
                        .into_iter()
                        .map(|c| {
                            let v = c * p;
                            p /= y;
                            v
                        })
                        .collect::<Vec<f64>>()
                };
                let (a, b) = (so.lo.ln(), so.hi.ln());
                let c = mass_center(|t| other.eval(t.exp()) * s.eval(x / t.exp()), Support { lo: a.max(-60.0), hi: b.min(60.0) });
                Jet::from_coeffs(split_integral(h, a, b, c))
            })
        }
        None => w,
    })
}

/// Product of two Hankel transforms, sampled on an adaptive grid in `u = √s`
/// and interpolated by cubic Hermite polynomials with exact slopes.
struct SpectralProduct {
    u: Vec<f64>,
    val: Vec<f64>,
    slope: Vec<f64>,
}

impl SpectralProduct {
    fn build(nu: Nu, f: &Weight, g: &Weight) -> Result<Self> {
        let kind = TransformKind::Hankel(nu.value());
        let spec = transform_spec();
        // value and u-derivative of H(u²), reusing a transform the weight already knows
        let one = |w: &Weight, u: f64| -> Result<(f64, f64)> {
            if let Some(v) = w.known_hankel(nu, u) {
                return Ok(v);
            }
            let s = Complex64::from(u * u);
            let (a, da) = (transform_derivative(kind, w, s, 0, &spec)?.re, transform_derivative(kind, w, s, 1, &spec)?.re);
            Ok((a, 2.0 * u * da))
        };
        let node = |u: f64| -> Result<(f64, f64)> {
            let ((a, da), (b, db)) = (one(f, u)?, one(g, u)?);
            Ok((a * b, da * b + a * db))
        };
        let (f0, _) = node(0.0)?;
        if !(f0.abs() > 0.0) || !f0.is_finite() {
            return Err(Error::Degenerate(format!("Hankel transform product at 0 is {f0}")));
        }
        let tol = 1e-12 * f0.abs();
        // find where the product has decayed
        let mut s_max: f64 = 1.0;
        let mut small = 0;
        while s_max < 1e6 {
            let (v, _) = node(s_max.sqrt())?;
            small = if v.abs() <= 1e-3 * tol { small + 1 } else { 0 };
            if small >= 2 {
                break;
            }
            s_max *= 2.0;
        }
        let u_max = s_max.sqrt();
        let mut pts: Vec<(f64, f64, f64)> = Vec::new();
        let init = 32;
        for i in 0..=init {
            let u = u_max * i as f64 / init as f64;
            let (v, d) = node(u)?;
            pts.push((u, v, d));
        }
        // bisect intervals whose midpoint is not reproduced
        let mut i = 0;
        while i + 1 < pts.len() {
            let (u0, v0, d0) = pts[i];
            let (u1, v1, d1) = pts[i + 1];
            let um = 0.5 * (u0 + u1);
            let (vm, dm) = node(um)?;
            let guess = hermite(u0, v0, d0, u1, v1, d1, um).0;
            if (guess - vm).abs() > tol && (u1 - u0) > 1e-6 * u_max && pts.len() < 20_000 {
                pts.insert(i + 1, (um, vm, dm));
            } else {
                i += 1;
            }
        }
        Ok(Self { u: pts.iter().map(|p| p.0).collect(), val: pts.iter().map(|p| p.1).collect(), slope: pts.iter().map(|p| p.2).collect() })
    }

    fn eval(&self, s: f64) -> f64 {
        self.eval_root(s.max(0.0).sqrt()).0
    }

    /// Value and `u`-derivative of the interpolant at `u = √s`.
    fn eval_root(&self, u: f64) -> (f64, f64) {
        let last = self.u.len() - 1;
        if u >= self.u[last] {
            return (0.0, 0.0);
        }
        let i = self.u.partition_point(|&t| t <= u).clamp(1, last);
        hermite(self.u[i - 1], self.val[i - 1], self.slope[i - 1], self.u[i], self.val[i], self.slope[i], u)
    }
}

fn hermite(x0: f64, y0: f64, d0: f64, x1: f64, y1: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
    let d = (6.0 * t2 - 6.0 * t) * (y0 - y1) / h + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (3.0 * t2 - 2.0 * t) * d1;
    (v, d)
}

fn hankel_convolution(nu: Nu, f: &Weight, g: &Weight) -> Result<Weight> {
    if f.support().lo < 0.0 || g.support().lo < 0.0 {
        return Err(Error::SupportMismatch("Hankel convolution needs weights on [0, ∞)".into()));
    }
    let nuv = nu.value();
    let prod = Arc::new(SpectralProduct::build(nu, f, g)?);
    let memo: Memo = Arc::default();
    let spec = QuadratureSpec::default().with_tol(1e-15, 1e-10);
    // L^{j−1}(f ∗_ν g) has Hankel transform (−s)^{j−1} H f · H g
    let induced = {
        let (prod, memo) = (prod.clone(), memo.clone());
        move |j: usize, x: f64| -> Result<f64> {
            if j == 0 {
                return Err(Error::InvalidParameter("induced weights are indexed from j = 1".into()));
            }
            let p = (j - 1) as i32;
            let v = memoized(&memo, (j, x.to_bits()), || {
                inverse_hankel_with(|s| (-s).powi(p) * prod.eval(s), nuv, x, &spec).unwrap_or(f64::NAN)
            });
            if v.is_nan() {
                return Err(Error::Divergent(format!("inverse Hankel transform failed at x = {x}")));
            }
            Ok(v)
        }
    };
    // The product is cut at a finite s, which leaves an x^{−3/4} floor near
    // 1e-15 in the inverse transform; the support ends once it sits there.
    let cut = tail_cut(|x| induced(1, x).unwrap_or(f64::NAN));
    let induced = move |j: usize, x: f64| if x > cut { Ok(0.0) } else { induced(j, x) };
    let value = {
        let induced = induced.clone();
        move |x: f64| induced(1, x).unwrap_or(f64::NAN)
    };
    Ok(Weight::new(label("*ν", f, g), Support { lo: 0.0, hi: cut }, value)
        .with_induced(Operator::Bessel(nu), induced)
        .with_hankel(nu, move |u| prod.eval_root(u)))
}

/// First doubling point past which `v` stays below `1e-11` of its peak.
fn tail_cut(v: impl Fn(f64) -> f64) -> f64 {
    let xs: Vec<f64> = (-8..=40).map(|k| 2f64.powi(k)).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| v(x).abs()).collect();
    let peak = vals.iter().cloned().filter(|a| a.is_finite()).fold(v(0.0).abs(), f64::max);
    let floor = 1e-11 * peak;
    (0..xs.len().saturating_sub(3))
        .find(|&i| vals[i..i + 3].iter().all(|&a| a <= floor))
        .map_or(f64::INFINITY, |i| xs[i])
}
