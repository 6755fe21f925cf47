//! Numerical screening of the integrability classes a Pólya weight must belong to.

use std::fmt;

use crate::jet::Jet;
use crate::quad::{integrate_finite, QuadratureSpec};
use crate::spaces::{MatrixSpace, Nu};
use crate::Result;

use super::{apply_derivative_op, Operator, Support, Weight};

const SAMPLES: usize = 1000;
const MAX_DOUBLINGS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    /// Sampled minimum of ω and where it occurred.
    NonNegative { passed: bool, min_value: f64, at: f64 },
    /// ω is not zero on every sample point.
    NotIdenticallyZero { passed: bool },
    /// `∫|x|^{κ−1}|w_j(x)| dx` is finite.
    Integrable { j: usize, kappa: usize, passed: bool, estimate: f64, detail: String },
    /// `lim_{x→0} x^{ν+1}∂x^{−ν} g = 0` for `g = (x^ν∂x^{1−ν}∂)^l ω`.
    BoundaryLimit { l: usize, passed: bool, values: Vec<(f64, f64)> },
}

impl Finding {
    pub fn passed(&self) -> bool {
        match self {
            Finding::NonNegative { passed, .. }
            | Finding::NotIdenticallyZero { passed }
            | Finding::Integrable { passed, .. }
            | Finding::BoundaryLimit { passed, .. } => *passed,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "pass" } else { "FAIL" };
        match self {
            Finding::NonNegative { min_value, at, .. } => write!(f, "{tag} non-negative (min {min_value:e} at {at})"),
            Finding::NotIdenticallyZero { .. } => write!(f, "{tag} not identically zero"),
            Finding::Integrable { j, kappa, estimate, detail, .. } => {
                write!(f, "{tag} integrable j={j} kappa={kappa} (≈{estimate:e}; {detail})")
            }
            Finding::BoundaryLimit { l, values, .. } => {
                write!(f, "{tag} boundary limit l={l}:")?;
                for (x, v) in values {
                    write!(f, " ({x:e}, {v:e})")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub findings: Vec<Finding>,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.findings.iter().all(Finding::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| !f.passed())
    }

    pub fn integrability_failed(&self, kappa: usize) -> bool {
        self.findings.iter().any(|f| matches!(f, Finding::Integrable { kappa: k, passed: false, .. } if *k == kappa))
    }
}

/// `count` points spread over the support, denser near the origin.
pub fn sample_points(s: Support, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let t = (i as f64 + 0.5) / count as f64;
            match (s.lo.is_finite(), s.hi.is_finite()) {
                (true, true) => s.lo + t * (s.hi - s.lo),
                (true, false) => s.lo + 4.0 * t / (1.0 - t),
                (false, true) => s.hi - 4.0 * t / (1.0 - t),
                (false, false) => 4.0 * (t / (1.0 - t)).ln(),
            }
        })
        .collect()
}

/// Runs the three checks; every outcome is recorded, nothing is raised.
pub fn admissibility_check(space: &MatrixSpace, w: &Weight) -> AdmissibilityReport {
    let mut findings = Vec::new();
    let pts = sample_points(w.support(), SAMPLES);
    let (mut min_value, mut at) = (f64::INFINITY, f64::NAN);
    let mut any_nonzero = false;
    for &x in &pts {
        let v = w.eval(x);
        any_nonzero |= v != 0.0;
        if v < min_value || v.is_nan() {
            min_value = v;
            at = x;
        }
    }
    findings.push(Finding::NonNegative { passed: min_value >= 0.0, min_value, at });
    findings.push(Finding::NotIdenticallyZero { passed: any_nonzero });

    let n = space.n();
    let kappas: Vec<usize> = if n == 1 { vec![1] } else { vec![1, n] };
    for j in 1..=n {
        for &kappa in &kappas {
            let integrand = |x: f64| {
                let v = apply_derivative_op(space, w, j, x).unwrap_or(f64::NAN);
                x.abs().powi(kappa as i32 - 1) * v.abs()
            };
            let (passed, estimate, detail) = match apply_derivative_op(space, w, j, interior_point(w.support())) {
                Err(e) => (false, f64::NAN, e.to_string()),
                Ok(_) => probe_integral(integrand, w.support()),
            };
            findings.push(Finding::Integrable { j, kappa, passed, estimate, detail });
        }
    }

    if let Operator::Bessel(nu) = Operator::for_space(space) {
        let scale = pts.iter().map(|&x| w.eval(x).abs()).fold(0.0, f64::max).max(1e-300);
        for l in 0..n.saturating_sub(1) {
            let values: Vec<(f64, f64)> = if w.support().lo > 0.0 {
                vec![(0.0, 0.0)]
            } else {
                [1e-4, 1e-6, 1e-8].iter().map(|&x| (x, boundary_term(w, nu, l, x).unwrap_or(f64::NAN))).collect()
            };
            findings.push(Finding::BoundaryLimit { l, passed: boundary_vanishes(&values, scale), values });
        }
    }
    AdmissibilityReport { findings }
}

/// Whether `∫|ω|` is finite, as far as the window probe can tell.
pub fn is_integrable(w: &Weight) -> bool {
    probe_integral(|x| w.eval(x).abs(), w.support()).0
}

fn interior_point(s: Support) -> f64 {
    match (s.lo.is_finite(), s.hi.is_finite()) {
        (true, true) => 0.5 * (s.lo + s.hi),
        (true, false) => s.lo + 1.0,
        (false, true) => s.hi - 1.0,
        (false, false) => 0.0,
    }
}

/// `x g'(x) − ν g(x)` with `g = L^l ω` (equals `x^{ν+1}∂x^{−ν}g`).
fn boundary_term(w: &Weight, nu: Nu, l: usize, x: f64) -> Result<f64> {
    let op = Operator::Bessel(nu);
    let mut jet = w.jet(x, 2 * l + 1)?;
    for _ in 0..l {
        jet = op.apply(x, &jet);
    }
    let xj = Jet::variable(x, jet.order());
    Ok((&xj * &jet.diff()).value() - nu.value() * jet.value())
}

// Passes if the last value is negligible or the values shrink geometrically towards 0.
fn boundary_vanishes(values: &[(f64, f64)], scale: f64) -> bool {
    let v: Vec<f64> = values.iter().map(|p| p.1.abs()).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let last = *v.last().expect("non-empty");
    last <= 1e-8 * scale || v.windows(2).all(|p| p[1] <= 0.5 * p[0])
}

/// Integrates over growing windows; returns (finite?, estimate, diagnostic).
fn probe_integral(f: impl Fn(f64) -> f64, s: Support) -> (bool, f64, String) {
    let spec = QuadratureSpec::default().with_tol(1e-14, 1e-8);
    let piece = |a: f64, b: f64| -> std::result::Result<f64, String> {
        if b <= a {
            return Ok(0.0);
        }
        let e = integrate_finite(&f, a, b, &spec);
        if !e.value.is_finite() {
            return Err(format!("non-finite integrand on [{a}, {b}]"));
        }
        if !e.converged && e.error > 1e-3 * e.value.abs().max(1e-12) {
            return Err(format!("quadrature did not settle on [{a}, {b}] (error {:e})", e.error));
        }
        Ok(e.value)
    };
    let clip = |a: f64, b: f64| (a.max(s.lo), b.min(s.hi));
    let (a0, b0) = clip(-1.0, 1.0);
    let mut total = match piece(a0, b0) {
        Ok(v) => v,
        Err(d) => return (false, f64::NAN, d),
    };
    let mut x = 1.0;
    let mut incs: Vec<f64> = Vec::new();
    for _ in 0..MAX_DOUBLINGS {
        if x >= s.hi.max(-s.lo) {
            return (true, total, "bounded support".into());
        }
        let (ra, rb) = clip(x, 2.0 * x);
        let (la, lb) = clip(-2.0 * x, -x);
        let inc = match (piece(ra, rb), piece(la, lb)) {
            (Ok(r), Ok(l)) => r + l,
            (Err(d), _) | (_, Err(d)) => return (false, total, d),
        };
        total += inc;
        x *= 2.0;
        if inc <= 1e-12 * total.abs() {
            return (true, total, format!("tail negligible beyond {x}"));
        }
        incs.push(inc);
        let k = incs.len();
        if k >= 4 && (k - 3..k).all(|i| incs[i] >= 0.95 * incs[i - 1]) {
            return (false, total, format!("increments not shrinking up to {x}"));
        }
    }
    let k = incs.len();
    let decaying = (k - 3..k).all(|i| incs[i] < 0.95 * incs[i - 1]);
    (decaying, total, format!("window reached {x}"))
}
