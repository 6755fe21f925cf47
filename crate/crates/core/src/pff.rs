//! Pólya frequency functions: sampled sign checks of `det[f(x_b − y_c)]`,
//! generators from truncated Laplace data, and the maps that turn PFFs into
//! Pólya weights on `G` and on the chiral spaces.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ensembles::{convolution_weight, ConvolutionKind, Ensemble};
use crate::jet::Jet;
use crate::linalg::{det, hermite_dd, vandermonde};
use crate::quad::{integrate_scaled, QuadratureSpec};
use crate::spaces::{MatrixSpace, SpectralPoint};
use crate::special::ln_gamma;
use crate::weights::{is_integrable, make_family, mass_center, sample_points, Family, Support, Weight};
use crate::{Error, Jet64, Result};

/// Generators are truncated to this many exponential factors.
pub const MAX_FACTORS: usize = 32;

const WITNESS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `Δ(x)Δ(y)det[f(x_b − y_c)]`.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PffVerdict {
    pub is_pff: bool,
    pub order_tested: usize,
    pub witness: Option<Witness>,
    pub grids_tested: usize,
    /// Whether only the sizes 1 and N were searched (f was certified integrable).
    pub lemma_applied: bool,
}

impl fmt::Display for PffVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.witness {
            None => write!(f, "no violation of order {} in {} grids", self.order_tested, self.grids_tested),
            Some(w) => write!(f, "witness x={:?} y={:?} value={:e}", w.xs, w.ys, w.value),
        }
    }
}

/// How `pff_order_check` draws its grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSampler {
    pub trials: usize,
    pub seed: u64,
    /// Length scale of the grids; guessed from `f` when absent.
    pub span: Option<f64>,
}

impl Default for GridSampler {
    fn default() -> Self {
        Self { trials: 10_000, seed: 0, span: None }
    }
}

impl GridSampler {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self { trials, seed, span: None }
    }
}

/// One sign check of `Δ(x)Δ(y)det[f(x_b − y_c)]` on sorted grids.
pub fn pff_check_grid(f: &Weight, order: usize, xs: &[f64], ys: &[f64]) -> Result<PffVerdict> {
    let n = xs.len();
    if n == 0 || ys.len() != n || n > order {
        return Err(Error::InvalidParameter(format!("grids must have equal length between 1 and {order}")));
    }
    let increasing = |v: &[f64]| v.windows(2).all(|p| p[0] < p[1]) && v.iter().all(|x| x.is_finite());
    if !increasing(xs) || !increasing(ys) {
        return Err(Error::InvalidParameter("grid points must be finite and strictly increasing".into()));
    }
    let witness = grid_witness(f, xs, ys);
    Ok(PffVerdict { is_pff: witness.is_none(), order_tested: order, witness, grids_tested: 1, lemma_applied: false })
}

fn grid_witness(f: &Weight, xs: &[f64], ys: &[f64]) -> Option<Witness> {
    let n = xs.len();
    let m = DMatrix::from_fn(n, n, |b, c| f.eval(xs[b] - ys[c]));
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let d = det(m);
    // Sorted grids make both Vandermonde factors positive.
    if d.is_finite() && d < -WITNESS_TOL * scale.powi(n as i32) {
        Some(Witness { xs: xs.to_vec(), ys: ys.to_vec(), value: vandermonde(xs) * vandermonde(ys) * d })
    } else {
        None
    }
}

/// Randomized search for a grid of size `≤ N` with a negative determinant.
///
/// For integrable `f` only sizes 1 and `N` are drawn; otherwise every size
/// `1..=N` is. Trial `t` uses stream `t` of the seeded generator, so the
/// verdict does not depend on the number of worker threads.
pub fn pff_order_check(f: &Weight, order: usize, sampler: GridSampler) -> Result<PffVerdict> {
    if order == 0 || sampler.trials == 0 {
        return Err(Error::InvalidParameter("order and trials must be positive".into()));
    }
    let lemma_applied = is_integrable(f);
    let mut sizes: Vec<usize> = if lemma_applied { vec![1, order] } else { (1..=order).collect() };
    sizes.dedup_by_key(|n| *n);
    let (offset, span) = grid_scale(f, sampler.span);
    let first = (0..sampler.trials).into_par_iter().find_map_first(|t| {
        let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
        rng.set_stream(t as u64);
        sizes.iter().find_map(|&n| {
            let (xs, ys) = draw_grid(&mut rng, t % 4, n, offset, span);
            grid_witness(f, &xs, &ys).map(|w| (t, w))
        })
    });
    let grids_tested = match &first {
        Some((t, _)) => (t + 1) * sizes.len(),
        None => sampler.trials * sizes.len(),
    };
    let witness = first.map(|(_, w)| w);
    Ok(PffVerdict { is_pff: witness.is_none(), order_tested: order, witness, grids_tested, lemma_applied })
}

// Where differences x − y should land: start of the support (or of the bulk) and its length.
fn grid_scale(f: &Weight, span: Option<f64>) -> (f64, f64) {
    let s = f.support();
    let pts = sample_points(s, 400);
    let vals: Vec<f64> = pts.iter().map(|&x| f.eval(x).abs()).collect();
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let bulk: Vec<f64> = pts.iter().zip(&vals).filter(|(_, &v)| v >= 1e-6 * top).map(|(&x, _)| x).collect();
    let (a, b) = match (bulk.first(), bulk.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => (-1.0, 1.0),
    };
    let lo = if s.lo.is_finite() { s.lo } else { a };
    let hi = if s.hi.is_finite() { s.hi } else { b };
    let span = span.unwrap_or((hi - lo).clamp(1.0, 100.0));
    (lo, span)
}

// Kinds: 0 uniform, 1 arithmetic progressions, 2 clustered, 3 one near-coincident pair.
fn draw_grid(rng: &mut ChaCha8Rng, kind: usize, n: usize, offset: f64, span: f64) -> (Vec<f64>, Vec<f64>) {
    let mut one = |lo: f64, width: f64| -> Vec<f64> {
        let mut v: Vec<f64> = match kind {
            1 => {
                let start = lo + rng.random::<f64>() * width;
                let step = span * (0.02 + 0.5 * rng.random::<f64>());
                (0..n).map(|k| start + k as f64 * step).collect()
            }
            2 => {
                let c = lo + rng.random::<f64>() * width;
                (0..n).map(|_| c + 1e-2 * span * rng.random::<f64>()).collect()
            }
            _ => (0..n).map(|_| lo + rng.random::<f64>() * width).collect(),
        };
        v.sort_by(f64::total_cmp);
        if kind == 3 && n > 1 {
            let i = rng.random_range(1..n);
            v[i] = v[i - 1] + 1e-3 * span * (0.1 + rng.random::<f64>());
            v.sort_by(f64::total_cmp);
        }
        for i in 1..n {
            if v[i] <= v[i - 1] {
                v[i] = v[i - 1] + 1e-9 * span;
            }
        }
        v
    };
    let ys = one(0.0, span);
    let xs = one(offset, 2.0 * span);
    (xs, ys)
}

/// Support of a Laplace generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PffSupport {
    HalfLine,
    RealLine,
}

/// The probability density with Laplace transform `e^{γs² − δs} ∏ 1/(1 + δ_j s)`.
///
/// Only finite products (at most [`MAX_FACTORS`]) are realized. The
/// exponential part is a Hermite divided difference in the rates `1/δ_j`, so
/// repeated `δ_j` need no special treatment; `γ > 0` adds a numeric
/// convolution with a Gaussian of variance `2γ`.
pub fn make_laplace_pff(deltas: &[f64], shift: f64, gamma: f64, support: PffSupport) -> Result<Weight> {
    if deltas.len() > MAX_FACTORS {
        return Err(Error::InvalidParameter(format!("at most {MAX_FACTORS} factors are supported")));
    }
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidParameter("every δ_j must be positive".into()));
    }
    if !shift.is_finite() || !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter("shift must be finite and γ non-negative".into()));
    }
    if support == PffSupport::HalfLine && (gamma > 0.0 || shift < 0.0) {
        return Err(Error::InvalidParameter("a half-line generator needs γ = 0 and δ ≥ 0".into()));
    }
    let label = format!("laplace_pff:deltas={deltas:?},delta={shift},gamma={gamma}");
    if deltas.is_empty() {
        if gamma == 0.0 {
            return Err(Error::InvalidParameter("with no factors and γ = 0 the generator is a point mass".into()));
        }
        return Ok(gaussian_density(shift, 2.0 * gamma).relabel(label));
    }
    let mut rates: Vec<f64> = deltas.iter().map(|d| 1.0 / d).collect();
    rates.sort_by(f64::total_cmp);
    for i in 1..rates.len() {
        if rates[i] - rates[i - 1] <= 1e-7 * rates[i].max(1.0) {
            rates[i] = rates[i - 1];
        }
    }
    let exp_part = hypoexponential(rates, shift);
    if gamma == 0.0 {
        return Ok(exp_part.relabel(label));
    }
    let g = gaussian_density(0.0, 2.0 * gamma);
    Ok(convolution_weight(ConvolutionKind::Additive, &exp_part, &g)?.relabel(label))
}

fn gaussian_density(mean: f64, var: f64) -> Weight {
    let c = 1.0 / (2.0 * PI * var).sqrt();
    Weight::new("gaussian", Support::REAL_LINE, move |x| c * (-(x - mean).powi(2) / (2.0 * var)).exp()).with_jet(move |x, m| {
        let u = Jet::variable(x - mean, m);
        (&u * &u).scale(-0.5 / var).exp().scale(c)
    })
}

// Density of a sum of exponentials with the given (sorted, snapped) rates, shifted.
fn hypoexponential(rates: Vec<f64>, shift: f64) -> Weight {
    let m = rates.len();
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let prefactor = sign * rates.iter().product::<f64>();
    let multiplicity = rates.iter().map(|r| rates.iter().filter(|q| *q == r).count()).max().unwrap_or(1);
    let rates2 = rates.clone();
    // Taylor coefficient r in x of prefactor · DD_λ[e^{−λx}].
    let coeff = move |rates: &[f64], x: f64, r: usize| -> f64 {
        let dd = hermite_dd(rates, |i, k| {
            let lam = Jet::variable(rates[i], multiplicity);
            let neg = lam.scale(-1.0);
            let q = (0..r).fold(lam.scale(-x).exp(), |acc, _| &acc * &neg);
            q.derivative(k) / crate::special::factorial(r)
        });
        prefactor * dd[m - 1]
    };
    let value = {
        let rates = rates.clone();
        move |x: f64| coeff(&rates, x - shift, 0).max(0.0)
    };
    Weight::new("hypoexponential", Support { lo: shift, hi: f64::INFINITY }, value)
        .with_jet(move |x, order| Jet::from_coeffs((0..=order).map(|r| coeff(&rates2, x - shift, r)).collect()))
}

/// `x ↦ ω(e^{−x})e^{−x}`; ω must live on `[0, ∞)`.
pub fn bridge_g(w: &Weight) -> Result<Weight> {
    let s = w.support();
    if s.lo < 0.0 {
        return Err(Error::SupportMismatch("bridge_G needs a weight on [0, ∞)".into()));
    }
    let support = Support { lo: -s.hi.ln(), hi: if s.lo > 0.0 { -s.lo.ln() } else { f64::INFINITY } };
    let (w1, w2) = (w.clone(), w.clone());
    let out = Weight::new(format!("bridge_G({})", w.label()), support, move |x| {
        let u = (-x).exp();
        w1.eval(u) * u
    })
    .with_jet(move |x, m| {
        let u = Jet::variable(x, m).scale(-1.0).exp();
        let m_inner = if w2.has_analytic_derivatives() { m } else { m.min(4) };
        match w2.jet(u.value(), m_inner) {
            Ok(outer) => &u.compose(outer.coeffs()) * &u,
            Err(_) => Jet::constant(f64::NAN, m),
        }
    });
    Ok(out)
}

/// `x ↦ Γ(ν+1)^{−1} ∫ (x/y)^ν e^{−x/y} ω̃(y) dy/y`, a Pólya weight on the chiral
/// space with index ν whenever ω̃ is a PFF on `[0, ∞)`.
pub fn lift_to_m(wt: &Weight, nu: f64) -> Result<Weight> {
    if wt.support().lo < 0.0 {
        return Err(Error::SupportMismatch("lift_to_M needs a weight on [0, ∞)".into()));
    }
    let phi = make_family(&Family::Ginibre { nu })?;
    let (lo, hi) = (wt.support().lo.ln(), wt.support().hi.ln());
    let c = (-ln_gamma(nu + 1.0)).exp();
    let wt = wt.clone();
    let label = format!("lift_to_M({}, nu={nu})", wt.label());
    // Vector of jet coefficients of the kernel, integrated in t = ln y.
    let integral = move |x: f64, m: usize| -> Vec<f64> {
        let h = |t: f64| -> Vec<f64> {
            let y = t.exp();
            let o = wt.eval(y);
            let tau = x / y;
            if o == 0.0 || !y.is_finite() || !tau.is_finite() || (tau == 0.0 && nu < 0.0) {
                return vec![0.0; m + 1];
            }
            match phi.jet(tau, m) {
                Ok(j) => j.coeffs().iter().enumerate().map(|(k, ck)| c * o * ck * y.powi(-(k as i32))).collect(),
                Err(_) => vec![0.0; m + 1],
            }
        };
        let centre = mass_center(|t| h(t)[0], Support { lo: lo.max(-80.0), hi: hi.min(80.0) });
        let spec = QuadratureSpec::default().with_tol(1e-14, 1e-10);
        let left = integrate_scaled(&h, lo, centre, 1.0, &spec);
        let right = integrate_scaled(&h, centre, hi, 1.0, &spec);
        match (left, right) {
            (Ok(l), Ok(r)) => l.value.iter().zip(&r.value).map(|(a, b)| a + b).collect(),
            _ => vec![f64::NAN; m + 1],
        }
    };
    let i1 = integral.clone();
    Ok(Weight::new(label, Support::HALF_LINE, move |x| i1(x, 0)[0]).with_jet(move |x, m| Jet64::from_coeffs(integral(x, m))))
}

/// Diagnostics for [`lift_to_m`]: ω̃ should vanish at the origin when its support reaches it.
pub fn lift_warnings(wt: &Weight) -> Vec<String> {
    let s = wt.support();
    if s.lo > 0.0 {
        return Vec::new();
    }
    let top = sample_points(s, 200).iter().map(|&x| wt.eval(x).abs()).fold(0.0, f64::max);
    let at0 = wt.eval(1e-12).abs();
    if at0 > 1e-8 * top {
        vec![format!("{} does not vanish at the origin (value {at0:e}); boundary terms may not drop out", wt.label())]
    } else {
        Vec::new()
    }
}

/// The Pólya ensemble on `M_0`, n = 2, with `ω(x) = e^{−1/(a−x)}` on `(0, a)`.
///
/// Its joint density is sampled on a 40×40 grid before the ensemble is returned.
pub fn beyond_theorem_example(a: f64) -> Result<Ensemble> {
    if !(a > 0.0 && a < 0.25) {
        return Err(Error::InvalidParameter(format!("a must lie in (0, 1/4), got {a}")));
    }
    let w = make_family(&Family::BeyondTheorem { a })?;
    let ens = Ensemble::polya(MatrixSpace::chiral(2, 0), w)?;
    let k = 40;
    let mut top = 0.0_f64;
    let mut worst = (0.0, vec![]);
    for i in 0..k {
        for j in 0..k {
            let p = vec![a * (i as f64 + 0.5) / k as f64, a * (j as f64 + 0.5) / k as f64];
            let v = ens.joint_density(&SpectralPoint::new(p.clone()))?;
            top = top.max(v.abs());
            if v < worst.0 {
                worst = (v, p);
            }
        }
    }
    if worst.0 < -1e-10 * top.max(1.0) {
        return Err(Error::PositivityViolation { value: worst.0, at: worst.1 });
    }
    Ok(ens)
}
