//! Haar sampling on U(n), O(n) and USp(2n), Monte Carlo estimates of the
//! HCIZ, Berezin–Karpelevich and Gelfand–Naimark integrals, and random
//! matrix draws for checking the convolution and group-integral identities.
//!
//! Every stochastic routine takes a root seed. Samples are drawn in chunks of
//! [`CHUNK`]; chunk `c` uses stream `c` of a ChaCha generator keyed by the
//! seed, and sums are pairwise, so results do not depend on the thread count.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{convolve_polya, Ensemble};
use crate::linalg::{coalesce, det, hermite_dd, vandermonde};
use crate::quad::{integrate_box, integrate_finite, QuadratureSpec};
use crate::spaces::{embed_iota, MatrixSpace, SpaceKind, SpectralPoint};
use crate::special::{binomial, factorial, gamma, hankel_kernel, rising};
use crate::transforms::{univariate_transform, TransformKind};
use crate::weights::{make_family, Family, Weight};
use crate::{Error, Result};

/// Samples per seeded stream.
pub const CHUNK: usize = 1024;

type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    Unitary(usize),
    Orthogonal(usize),
    /// USp(d) with `d = 2n`, acting on ℂ^d with `J = I_n ⊗ [[0,1],[−1,0]]`.
    Symplectic(usize),
    /// `U(n) × U(m)` as block-diagonal matrices.
    ProductUnitary(usize, usize),
}

impl GroupKind {
    pub fn dim(&self) -> usize {
        match *self {
            GroupKind::Unitary(n) | GroupKind::Orthogonal(n) | GroupKind::Symplectic(n) => n,
            GroupKind::ProductUnitary(n, m) => n + m,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GroupKind::Symplectic(d) if d == 0 || d % 2 == 1 => {
                Err(Error::InvalidParameter(format!("USp needs an even positive dimension, got {d}")))
            }
            GroupKind::ProductUnitary(n, m) if n == 0 || m == 0 => Err(Error::InvalidParameter("empty group factor".into())),
            g if g.dim() == 0 => Err(Error::InvalidParameter("group dimension must be positive".into())),
            _ => Ok(()),
        }
    }

    /// The group `K` acting on the chiral-type space.
    pub fn for_space(space: &MatrixSpace) -> Self {
        let n = space.n();
        match space.kind() {
            SpaceKind::H2 | SpaceKind::G => GroupKind::Unitary(n),
            SpaceKind::Mnu => GroupKind::ProductUnitary(n, n + space.nu().as_integer().unwrap_or(0) as usize),
            SpaceKind::H1Even => GroupKind::Orthogonal(2 * n),
            SpaceKind::H1Odd => GroupKind::Orthogonal(2 * n + 1),
            SpaceKind::H4 => GroupKind::Symplectic(2 * n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub estimate: Complex64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl McReport {
    /// `|estimate − target|` in units of the standard error.
    pub fn sigmas_from(&self, target: Complex64) -> f64 {
        let d = (self.estimate - target).norm();
        if self.std_error == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / self.std_error
        }
    }
}

fn cnormal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (0.5 * var).sqrt();
    Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
}

fn rnormal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> f64 {
    var.sqrt() * rng.sample::<f64, _>(StandardNormal)
}

/// One Haar-distributed element of `g`, from a generator seeded with `seed`.
pub fn haar_sample(g: GroupKind, seed: u64) -> Result<CMatrix> {
    g.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(haar_sample_with(g, &mut rng))
}

/// As [`haar_sample`], drawing from an existing generator.
pub fn haar_sample_with<R: Rng + ?Sized>(g: GroupKind, rng: &mut R) -> CMatrix {
    match g {
        GroupKind::Unitary(n) => {
            let z = CMatrix::from_fn(n, n, |_, _| cnormal(rng, 1.0));
            phase_corrected_q(z)
        }
        GroupKind::Orthogonal(n) => {
            let z = CMatrix::from_fn(n, n, |_, _| Complex64::from(rnormal(rng, 1.0)));
            phase_corrected_q(z).map(|c| Complex64::from(c.re))
        }
        GroupKind::Symplectic(d) => symplectic(d / 2, rng),
        GroupKind::ProductUnitary(n, m) => {
            let mut k = CMatrix::zeros(n + m, n + m);
            k.view_mut((0, 0), (n, n)).copy_from(&haar_sample_with(GroupKind::Unitary(n), rng));
            k.view_mut((n, n), (m, m)).copy_from(&haar_sample_with(GroupKind::Unitary(m), rng));
            k
        }
    }
}

// Q from QR with each column multiplied by the phase of the matching R diagonal entry.
fn phase_corrected_q(z: CMatrix) -> CMatrix {
    let qr = z.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..q.nrows() {
            q[(i, j)] *= ph;
        }
    }
    q
}

// Quaternionic Gram–Schmidt: each Gaussian column v is orthogonalized against the
// previous pairs and joined by its partner σ(v); the result is reordered to the
// interleaved basis.
fn symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let d = 2 * n;
    let sigma = |v: &DVector<Complex64>| {
        DVector::from_fn(d, |i, _| if i < n { -v[i + n].conj() } else { v[i - n].conj() })
    };
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    for _ in 0..n {
        let mut v = DVector::from_fn(d, |_, _| cnormal(rng, 1.0));
        for _ in 0..2 {
            for u in &basis {
                let c = u.dotc(&v);
                v -= u * c;
            }
        }
        let norm = v.norm();
        v /= Complex64::from(norm);
        let w = sigma(&v);
        basis.push(v);
        basis.push(w);
    }
    // Block basis: columns (v_1, …, v_n, σv_1, …, σv_n); rows/columns j ↦ 2j, n+j ↦ 2j+1.
    let perm = |i: usize| if i < n { 2 * i } else { 2 * (i - n) + 1 };
    let mut k = CMatrix::zeros(d, d);
    for j in 0..n {
        for i in 0..d {
            k[(perm(i), 2 * j)] = basis[2 * j][i];
            k[(perm(i), 2 * j + 1)] = basis[2 * j + 1][i];
        }
    }
    k
}

/// Runs `f` on `n_samples` draws and reports the mean and its standard error.
pub fn monte_carlo<F>(n_samples: usize, seed: u64, f: F) -> Result<McReport>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync,
{
    if n_samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Complex64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len).map(|_| f(&mut rng)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<Complex64> = parts.into_iter().flatten().collect();
    let n = values.len() as f64;
    let mean = pairwise_sum(&values, &|v| *v) / n;
    let var = pairwise_sum(&values, &|v| Complex64::new((v.re - mean.re).powi(2), (v.im - mean.im).powi(2))) / (n - 1.0);
    Ok(McReport { estimate: mean, std_error: ((var.re + var.im) / n).sqrt(), n_samples, seed })
}

fn pairwise_sum<T, F: Fn(&T) -> Complex64>(v: &[T], f: &F) -> Complex64 {
    if v.len() <= 16 {
        return v.iter().map(f).sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l, f) + pairwise_sum(r, f)
}

/// Which classical group integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroupIntegral {
    /// `∫_{U(n)} exp[i tr a k s k*] dk`.
    Hciz,
    /// `∫_K exp[i tr k* ι(a) k ι(s)] dk` for a chiral-type space (its `n` is ignored).
    Bk(MatrixSpace),
    /// `∫_{U(n)} ∏_j det(Π_j k a k* Π_j*)^{s_j − s_{j+1} − 1} dk`, `s_{n+1} = (n−1)/2`.
    Gn,
}

fn check_points(kind: &GroupIntegral, a: &[f64], s: &[Complex64]) -> Result<usize> {
    let n = a.len();
    if n == 0 || s.len() != n {
        return Err(Error::InvalidParameter("a and s must be non-empty and of equal length".into()));
    }
    if a.iter().any(|x| !x.is_finite()) || s.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::InvalidParameter("points must be finite".into()));
    }
    match kind {
        GroupIntegral::Hciz => {}
        GroupIntegral::Bk(space) => {
            if !space.kind().is_chiral() {
                return Err(Error::IncompatibleSpace(format!("{} has no Berezin–Karpelevich integral", space.kind())));
            }
            if a.iter().any(|&x| x < 0.0) || s.iter().any(|z| z.re < 0.0 || z.im != 0.0) {
                return Err(Error::InvalidParameter("a and s must be real and non-negative".into()));
            }
        }
        GroupIntegral::Gn => {
            if a.iter().any(|&x| x <= 0.0) {
                return Err(Error::InvalidParameter("a must be positive".into()));
            }
        }
    }
    Ok(n)
}

/// Right-hand side of the HCIZ, Berezin–Karpelevich or Gelfand–Naimark formula.
///
/// Coinciding entries of `a` or `s` are handled by taking the confluent
/// limit (double divided differences).
pub fn group_integral_closed(kind: GroupIntegral, a: &[f64], s: &[Complex64]) -> Result<Complex64> {
    let n = check_points(&kind, a, s)?;
    let pairs = (n * (n - 1) / 2) as i32;
    let fact: f64 = (0..n).map(factorial).product();
    let i = Complex64::i();
    let out = match kind {
        GroupIntegral::Hciz => fact * det_over_vandermondes(a, s, hciz_kernel) / i.powi(pairs),
        GroupIntegral::Bk(space) => {
            let nu = space.nu().value();
            let pref: f64 = (0..n).map(|j| gamma(j as f64 + nu + 1.0) * factorial(j)).product();
            let g = gamma(nu + 1.0);
            let k = move |x: f64, z: Complex64, p: usize, q: usize| Complex64::from(bk_kernel(nu, x, z.re, p, q) / g);
            pref * det_over_vandermondes(a, s, k) * if pairs % 2 == 0 { 1.0 } else { -1.0 }
        }
        GroupIntegral::Gn => {
            let c = (n as f64 + 1.0) / 2.0;
            fact * det_over_vandermondes(a, s, move |x, z, p, q| gn_kernel(x, z - c, p, q))
        }
    };
    Ok(out)
}

// det[K(a_b, s_c)] / (Δ(a)Δ(s)) as the determinant of two-variable Newton divided differences.
fn det_over_vandermondes(a: &[f64], s: &[Complex64], k: impl Fn(f64, Complex64, usize, usize) -> Complex64) -> Complex64 {
    let n = a.len();
    let ac: Vec<Complex64> = a.iter().map(|&x| Complex64::from(x)).collect();
    let (an, _) = coalesce(&ac, 1e-7);
    let (sn, _) = coalesce(s, 1e-7);
    // table[i][p] = Newton coefficients in s of ∂_a^p K(a_i, ·)
    let table: Vec<Vec<Vec<Complex64>>> =
        (0..n).map(|i| (0..n).map(|p| hermite_dd(&sn, |j, q| k(an[i].re, sn[j], p, q))).collect()).collect();
    let mut m = CMatrix::zeros(n, n);
    for c in 0..n {
        let col = hermite_dd(&an, |i, p| table[i][p][c]);
        for b in 0..n {
            m[(b, c)] = col[b];
        }
    }
    det(m)
}

// ∂_a^p ∂_s^q e^{ias}
fn hciz_kernel(a: f64, s: Complex64, p: usize, q: usize) -> Complex64 {
    let i = Complex64::i();
    let e = (i * a * s).exp();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..=p.min(q) {
        let falling = factorial(q) / factorial(q - r);
        acc += binomial(p, r) * falling * a.powi((q - r) as i32) * (i * s).powi((p - r) as i32);
    }
    acc * i.powi(q as i32) * e
}

// ∂_a^p ∂_s^q Λ_ν(as), using Λ_ν^{(k)} = (−1)^k Λ_{ν+k}/(ν+1)_k.
fn bk_kernel(nu: f64, a: f64, s: f64, p: usize, q: usize) -> f64 {
    let dl = |k: usize| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sign * hankel_kernel(nu + k as f64, a * s) / rising(nu + 1.0, k)
    };
    let mut acc = 0.0;
    for r in 0..=p.min(q) {
        let falling = factorial(q) / factorial(q - r);
        acc += binomial(p, r) * falling * a.powi((q - r) as i32) * s.powi((p - r) as i32) * dl(q + p - r);
    }
    acc
}

// ∂_a^p ∂_e^q a^e = Σ_r C(q,r) ∂^r[e(e−1)…(e−p+1)] (ln a)^{q−r} a^{e−p}
fn gn_kernel(a: f64, e: Complex64, p: usize, q: usize) -> Complex64 {
    // coefficients of the falling factorial polynomial in e
    let mut poly = vec![1.0];
    for k in 0..p {
        let mut next = vec![0.0; poly.len() + 1];
        for (d, &c) in poly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= k as f64 * c;
        }
        poly = next;
    }
    let deriv_at = |r: usize| -> Complex64 {
        poly.iter()
            .enumerate()
            .skip(r)
            .map(|(d, &c)| c * factorial(d) / factorial(d - r) * e.powi((d - r) as i32))
            .sum()
    };
    let la = a.ln();
    let base = (e - p as f64) * la;
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..=q {
        acc += binomial(q, r) * deriv_at(r) * la.powi((q - r) as i32);
    }
    acc * base.exp()
}

/// Monte Carlo estimate of the left-hand side of the chosen group integral.
pub fn group_integral_mc(kind: GroupIntegral, a: &[f64], s: &[Complex64], n_samples: usize, seed: u64) -> Result<McReport> {
    let n = check_points(&kind, a, s)?;
    let i = Complex64::i();
    match kind {
        GroupIntegral::Hciz => monte_carlo(n_samples, seed, |rng| {
            let k = haar_sample_with(GroupKind::Unitary(n), rng);
            let mut t = Complex64::new(0.0, 0.0);
            for b in 0..n {
                for c in 0..n {
                    t += a[b] * s[c] * k[(b, c)].norm_sqr();
                }
            }
            Ok((i * t).exp())
        }),
        GroupIntegral::Bk(space) => {
            let space = space.with_n(n);
            let ia = embed_iota(&space, &SpectralPoint::new(a.to_vec()))?;
            let sr: Vec<f64> = s.iter().map(|z| z.re).collect();
            let is = embed_iota(&space, &SpectralPoint::new(sr))?;
            let g = GroupKind::for_space(&space);
            monte_carlo(n_samples, seed, |rng| {
                let k = haar_sample_with(g, rng);
                let t = (k.adjoint() * &ia * &k * &is).trace();
                Ok((i * t).exp())
            })
        }
        GroupIntegral::Gn => {
            let mut ext = s.to_vec();
            ext.push(Complex64::from((n as f64 - 1.0) / 2.0));
            let expo: Vec<Complex64> = (0..n).map(|j| ext[j] - ext[j + 1] - 1.0).collect();
            let am = CMatrix::from_diagonal(&DVector::from_iterator(n, a.iter().map(|&x| Complex64::from(x))));
            monte_carlo(n_samples, seed, |rng| {
                let k = haar_sample_with(GroupKind::Unitary(n), rng);
                let x = &k * &am * k.adjoint();
                // Leading principal minors from one Cholesky factor, summed in the log domain.
                let l = x.cholesky().ok_or_else(|| Error::Degenerate("k a k* lost definiteness".into()))?.l();
                let mut log = Complex64::new(0.0, 0.0);
                let mut minor = 0.0;
                for j in 0..n {
                    minor += 2.0 * l[(j, j)].re.ln();
                    log += expo[j] * minor;
                }
                Ok(log.exp())
            })
        }
    }
}

/// The matrix density `p_M` of a Pólya ensemble, evaluated through its spectrum.
fn matrix_density(ens: &Ensemble, space: &MatrixSpace, a: Vec<f64>) -> Result<f64> {
    let vd = vandermonde(&a);
    if vd == 0.0 {
        return Ok(0.0);
    }
    let c: f64 = space.constant();
    let nu = space.nu().value();
    let det_a: f64 = a.iter().product();
    let jac = match space.kind() {
        SpaceKind::H2 | SpaceKind::G => c * vd * vd,
        _ => c * det_a.powf(nu) * vd * vd,
    };
    let mut sorted = a;
    sorted.sort_by(f64::total_cmp);
    // joint_density is symmetric, and Δ² is too
    Ok(ens.joint_density(&SpectralPoint::new(sorted))? / jac)
}

fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

// Squared singular values of a chiral-type matrix from its Hermitian embedding.
fn chiral_spectrum(m: &CMatrix, n: usize) -> Vec<f64> {
    let ev = hermitian_eigenvalues(m);
    let mut a: Vec<f64> = ev[ev.len() - n..].iter().map(|x| x.max(0.0).powi(2)).collect();
    a.sort_by(f64::total_cmp);
    a
}

fn diag(v: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::from(x))))
}

/// Both sides of the group-integral identity for `PE_M(ω)`.
///
/// Returns the Monte Carlo estimate of the Vandermonde-scaled group average
/// and the determinant of univariate data it should equal.
pub fn polya_group_identity(
    space: &MatrixSpace,
    w: &Weight,
    x: &SpectralPoint,
    y: &SpectralPoint,
    n_samples: usize,
    seed: u64,
) -> Result<(McReport, Complex64)> {
    let n = space.n();
    let (xv, yv) = (x.values().to_vec(), y.values().to_vec());
    if xv.len() != n || yv.len() != n {
        return Err(Error::InvalidParameter(format!("x and y need {n} entries")));
    }
    let ens = Ensemble::polya(*space, w.clone())?;
    let c_m: f64 = space.constant();
    let nf = factorial(n);
    let g = GroupKind::for_space(space);
    match space.kind() {
        SpaceKind::H2 => {
            let pref = vandermonde(&yv) * vandermonde(&xv);
            let (xm, ym) = (diag(&xv), diag(&yv));
            let lhs = monte_carlo(n_samples, seed, |rng| {
                let k = haar_sample_with(g, rng);
                let z = &ym - &k * &xm * k.adjoint();
                Ok(Complex64::from(pref * matrix_density(&ens, space, hermitian_eigenvalues(&z))?))
            })?;
            let f0 = univariate_transform(TransformKind::Fourier, w, Complex64::new(0.0, 0.0))?.re;
            let m = DMatrix::from_fn(n, n, |b, c| w.eval(yv[b] - xv[c]));
            Ok((lhs, Complex64::from(det(m) / f0.powi(n as i32) / (nf * c_m))))
        }
        SpaceKind::G => {
            if xv.iter().chain(&yv).any(|&v| v <= 0.0) {
                return Err(Error::InvalidParameter("x and y must be positive on G".into()));
            }
            let inv: Vec<f64> = xv.iter().map(|v| -1.0 / v).collect();
            let pref = vandermonde(&yv) * vandermonde(&inv);
            let xm = diag(&xv.iter().map(|v| v.powf(-0.5)).collect::<Vec<_>>());
            let ym = diag(&yv.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
            let lhs = monte_carlo(n_samples, seed, |rng| {
                let k = haar_sample_with(g, rng);
                let h = &xm * &k * &ym;
                let a = hermitian_eigenvalues(&(&h * h.adjoint()));
                Ok(Complex64::from(pref * matrix_density(&ens, space, a)?))
            })?;
            let mut den = 1.0;
            for j in 1..=n {
                den *= univariate_transform(TransformKind::Mellin, w, Complex64::from(j as f64))?.re;
            }
            let m = DMatrix::from_fn(n, n, |b, c| w.eval(yv[b] / xv[c]));
            Ok((lhs, Complex64::from(det(m) / den / (nf * c_m))))
        }
        _ => {
            let pref = vandermonde(&yv) * vandermonde(&xv);
            let ix = embed_iota(space, x)?;
            let iy = embed_iota(space, y)?;
            let lhs = monte_carlo(n_samples, seed, |rng| {
                let k = haar_sample_with(g, rng);
                let z = &iy - &k * &ix * k.adjoint();
                Ok(Complex64::from(pref * matrix_density(&ens, space, chiral_spectrum(&z, n))?))
            })?;
            let one = space.with_n(1);
            let c1: f64 = one.constant();
            let h0 = univariate_transform(TransformKind::Fourier, w, Complex64::new(0.0, 0.0))?.re;
            let mut m = DMatrix::zeros(n, n);
            for b in 0..n {
                for c in 0..n {
                    m[(b, c)] = single_orbit_average(&one, w, h0, c1, yv[b], xv[c])?;
                }
            }
            Ok((lhs, Complex64::from(c1.powi(n as i32) / (nf * c_m) * det(m))))
        }
    }
}

// ∫_{K(1)} p_{M(1)}(ι(y) − k ι(x) k*) dk by quadrature over the orbit angle.
fn single_orbit_average(one: &MatrixSpace, w: &Weight, h0: f64, c1: f64, y: f64, x: f64) -> Result<f64> {
    let nu = one.nu().value();
    let p = |z: f64| if z > 0.0 { w.eval(z) / (h0 * c1 * z.powf(nu)) } else { 0.0 };
    let r = (x * y).sqrt();
    let spec = QuadratureSpec::default().with_tol(1e-13, 1e-10);
    let v = match one.kind() {
        SpaceKind::H1Even => 0.5 * (p((y.sqrt() - x.sqrt()).powi(2)) + p((y.sqrt() + x.sqrt()).powi(2))),
        SpaceKind::H1Odd | SpaceKind::H4 => 0.5 * integrate_finite(|u: f64| p(x + y - 2.0 * r * u), -1.0, 1.0, &spec).value,
        _ => match one.nu().as_integer() {
            Some(0) => integrate_finite(|t: f64| p(x + y - 2.0 * r * t.cos()), 0.0, PI, &spec).value / PI,
            Some(k) => {
                // |v_1|² ~ Beta(1, ν) for the first entry of a unit vector in ℂ^{1+ν}
                let kf = k as f64;
                let f = |q: &[f64]| {
                    let (t, th) = (q[0], q[1]);
                    kf * (1.0 - t).powf(kf - 1.0) * p(x + y - 2.0 * r * t.sqrt() * th.cos()) / PI
                };
                integrate_box(&f, &[(0.0, 1.0), (0.0, PI)], &spec)?.value
            }
            None => return Err(Error::IncompatibleSpace("chiral space needs an integer ν".into())),
        },
    };
    Ok(v)
}

/// Classical random-matrix families that can be sampled directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SampleFamily {
    /// Gaussian entries with variance `eps` (H2 and the chiral spaces).
    Gaussian { eps: f64 },
    /// Wishart matrices `XX*` with `X` of size `n × (n+ν)` (H2).
    Laguerre { nu: u32 },
    /// Induced Ginibre matrices (G).
    Ginibre { nu: u32 },
    /// Truncations of Haar unitaries (G).
    Jacobi { nu: u32, mu: u32 },
}

impl SampleFamily {
    fn check(&self, space: &MatrixSpace) -> Result<()> {
        let ok = match self {
            SampleFamily::Gaussian { eps } => {
                if !(*eps > 0.0) {
                    return Err(Error::InvalidParameter("eps must be positive".into()));
                }
                space.kind() != SpaceKind::G
            }
            SampleFamily::Laguerre { .. } => space.kind() == SpaceKind::H2,
            SampleFamily::Ginibre { .. } | SampleFamily::Jacobi { .. } => space.kind() == SpaceKind::G,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::IncompatibleSpace(format!("{self:?} cannot be sampled on {}", space.kind())))
        }
    }

    /// The Pólya weight whose ensemble the samples follow.
    pub fn polya_weight(&self, space: &MatrixSpace) -> Result<Weight> {
        self.check(space)?;
        let n = space.n();
        let fam = match *self {
            SampleFamily::Gaussian { eps } => match space.kind() {
                SpaceKind::H2 => Family::GaussianShifted { alpha: 0.0, var: eps },
                _ => Family::GaussianRadial { nu: space.nu().value(), eps },
            },
            SampleFamily::Laguerre { nu } => Family::LaguerreH2 { n, nu: nu as f64 },
            SampleFamily::Ginibre { nu } => Family::Ginibre { nu: nu as f64 },
            SampleFamily::Jacobi { nu, mu } => Family::Jacobi { n, nu: nu as f64, mu: mu as f64 },
        };
        make_family(&fam)
    }
}

/// A random matrix of the family: the Hermitian representative for the
/// linear spaces (chiral ones in their embedded form) or the matrix itself on G.
pub fn sample_matrix<R: Rng + ?Sized>(space: &MatrixSpace, fam: SampleFamily, rng: &mut R) -> Result<CMatrix> {
    fam.check(space)?;
    let n = space.n();
    let i = Complex64::i();
    let rect = |rng: &mut R, rows: usize, cols: usize, var: f64| CMatrix::from_fn(rows, cols, |_, _| cnormal(rng, var));
    let m = match (fam, space.kind()) {
        (SampleFamily::Gaussian { eps }, SpaceKind::H2) => {
            let mut y = CMatrix::zeros(n, n);
            for b in 0..n {
                y[(b, b)] = Complex64::from(rnormal(rng, eps));
                for c in b + 1..n {
                    y[(b, c)] = cnormal(rng, eps);
                    y[(c, b)] = y[(b, c)].conj();
                }
            }
            y
        }
        (SampleFamily::Gaussian { eps }, SpaceKind::Mnu) => {
            let nu = space.nu().as_integer().unwrap_or(0) as usize;
            let x = rect(rng, n, n + nu, eps);
            let d = 2 * n + nu;
            let mut y = CMatrix::zeros(d, d);
            y.view_mut((0, n), (n, n + nu)).copy_from(&x);
            y.view_mut((n, 0), (n + nu, n)).copy_from(&x.adjoint());
            y
        }
        (SampleFamily::Gaussian { eps }, SpaceKind::H1Even | SpaceKind::H1Odd) => {
            let d = space.ambient_dim();
            let mut y = CMatrix::zeros(d, d);
            for b in 0..d {
                for c in b + 1..d {
                    let v = rnormal(rng, 0.5 * eps);
                    y[(b, c)] = i * v;
                    y[(c, b)] = -i * v;
                }
            }
            y
        }
        (SampleFamily::Gaussian { eps }, _) => {
            // [[A, B], [B̄, −Aᵀ]] with A Hermitian and B complex symmetric
            let mut y = CMatrix::zeros(2 * n, 2 * n);
            for b in 0..n {
                let a = Complex64::from(rnormal(rng, 0.5 * eps));
                y[(b, b)] = a;
                y[(n + b, n + b)] = -a;
                let bb = cnormal(rng, eps);
                y[(b, n + b)] = bb;
                y[(n + b, b)] = bb.conj();
                for c in b + 1..n {
                    let a = cnormal(rng, 0.5 * eps);
                    y[(b, c)] = a;
                    y[(c, b)] = a.conj();
                    y[(n + b, n + c)] = -a.conj();
                    y[(n + c, n + b)] = -a;
                    let bb = cnormal(rng, 0.5 * eps);
                    y[(b, n + c)] = bb;
                    y[(c, n + b)] = bb;
                    y[(n + b, c)] = bb.conj();
                    y[(n + c, b)] = bb.conj();
                }
            }
            y
        }
        (SampleFamily::Laguerre { nu }, _) => {
            let x = rect(rng, n, n + nu as usize, 1.0);
            &x * x.adjoint()
        }
        (SampleFamily::Ginibre { nu }, _) => {
            // g = (XX*)^{1/2}: only the squared singular values matter for the invariant ensemble
            let x = rect(rng, n, n + nu as usize, 1.0);
            let eig = (&x * x.adjoint()).symmetric_eigen();
            let root = eig.eigenvalues.map(|v| Complex64::from(v.max(0.0).sqrt()));
            &eig.eigenvectors * CMatrix::from_diagonal(&root) * eig.eigenvectors.adjoint()
        }
        (SampleFamily::Jacobi { nu, mu }, _) => {
            let big = 2 * n + (nu + mu) as usize;
            let u = haar_sample_with(GroupKind::Unitary(big), rng);
            let t = u.view((0, 0), (n, n + nu as usize)).into_owned();
            let eig = (&t * t.adjoint()).symmetric_eigen();
            let root = eig.eigenvalues.map(|v| Complex64::from(v.max(0.0).sqrt()));
            &eig.eigenvectors * CMatrix::from_diagonal(&root) * eig.eigenvectors.adjoint()
        }
    };
    Ok(m)
}

/// Eigenvalues (H2) or squared singular values (all other spaces), sorted.
pub fn spectrum(space: &MatrixSpace, m: &CMatrix) -> SpectralPoint {
    let v = match space.kind() {
        SpaceKind::H2 => hermitian_eigenvalues(m),
        SpaceKind::G => hermitian_eigenvalues(&(m * m.adjoint())).into_iter().map(|x| x.max(0.0)).collect(),
        _ => chiral_spectrum(m, space.n()),
    };
    SpectralPoint::new(v)
}

/// The spectrum of one draw from the family.
pub fn sample_matrix_ensemble(space: &MatrixSpace, fam: SampleFamily, seed: u64) -> Result<SpectralPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(spectrum(space, &sample_matrix(space, fam, &mut rng)?))
}

/// Spectra of `n_samples` independent draws (of `X₁ + X₂`, or `X₁X₂` on G, when
/// a second family is given).
pub fn sample_spectra(
    space: &MatrixSpace,
    f1: SampleFamily,
    f2: Option<SampleFamily>,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SpectralPoint>> {
    f1.check(space)?;
    if let Some(f) = f2 {
        f.check(space)?;
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len)
                .map(|_| {
                    let x1 = sample_matrix(space, f1, &mut rng)?;
                    let m = match f2 {
                        None => x1,
                        Some(f) => {
                            let x2 = sample_matrix(space, f, &mut rng)?;
                            if space.kind() == SpaceKind::G {
                                // a Haar rotation between the factors keeps both bi-invariant
                                let k = haar_sample_with(GroupKind::Unitary(space.n()), &mut rng);
                                x1 * k * x2
                            } else {
                                x1 + x2
                            }
                        }
                    };
                    Ok(spectrum(space, &m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Kolmogorov–Smirnov distance between the pooled eigenvalues and the
/// one-point marginal of `ens`, evaluated at 400 sample quantiles.
pub fn ks_distance(ens: &Ensemble, spectra: &[SpectralPoint]) -> Result<f64> {
    let mut pooled: Vec<f64> = spectra.iter().flat_map(|p| p.values().iter().copied()).collect();
    if pooled.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    pooled.sort_by(f64::total_cmp);
    let total = pooled.len();
    let probes = 400.min(total);
    let idx: Vec<usize> = (0..probes).map(|k| (k * (total - 1)) / (probes - 1).max(1)).collect();
    let grid: Vec<f64> = idx.iter().map(|&i| pooled[i]).collect();
    let cdf = ens.marginal_cdf(&grid)?;
    let mut ks: f64 = 0.0;
    for (&i, f) in idx.iter().zip(cdf) {
        let below = pooled.partition_point(|&v| v < pooled[i]) as f64 / total as f64;
        let upto = pooled.partition_point(|&v| v <= pooled[i]) as f64 / total as f64;
        ks = ks.max((f - below).abs()).max((f - upto).abs());
    }
    Ok(ks)
}

/// KS distance between sampled `X₁ + X₂` (or `X₁X₂` on G) and the Pólya
/// ensemble of the convolved weight.
pub fn empirical_convolution_check(
    space: &MatrixSpace,
    f1: SampleFamily,
    f2: SampleFamily,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let w = convolve_polya(space, &f1.polya_weight(space)?, &f2.polya_weight(space)?)?;
    let ens = Ensemble::polya(*space, w)?;
    let spectra = sample_spectra(space, f1, Some(f2), n_samples, seed)?;
    ks_distance(&ens, &spectra)
}
