//! One-point weights ω, the operators that generate Pólya ensembles from
//! them, built-in families and admissibility checks.

mod admissibility;
mod families;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::jet::Jet;
use crate::spaces::{MatrixSpace, Nu, SpaceKind};
use crate::special::binomial;
use crate::{Error, Jet64, Result};

pub use admissibility::{admissibility_check, is_integrable, sample_points, AdmissibilityReport, Finding};
pub use families::{make_family, Family};

pub type ValueFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type JetFn = Arc<dyn Fn(f64, usize) -> Jet64 + Send + Sync>;
/// Direct evaluation of induced weights `(j, x) ↦ w_j(x)` for one operator.
pub type InducedFn = Arc<dyn Fn(usize, f64) -> Result<f64> + Send + Sync>;

/// Highest derivative order served by finite differences.
pub const MAX_NUMERIC_ORDER: usize = 4;

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support { lo: f64::NEG_INFINITY, hi: f64::INFINITY };
    pub const HALF_LINE: Support = Support { lo: 0.0, hi: f64::INFINITY };

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidParameter(format!("empty support [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// True when the support lies in `[0, ∞)`.
    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0.0
    }

    pub fn intersect(&self, o: &Support) -> Option<Support> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo < hi).then_some(Support { lo, hi })
    }
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The differential operator that generates the induced weights of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    /// `−∂` (H2).
    Shift,
    /// `−x∂` (G).
    Dilation,
    /// `x^ν ∂ x^{1−ν} ∂ = x∂² + (1−ν)∂` (Mν, H1, H4).
    Bessel(Nu),
}

impl Operator {
    pub fn for_space(space: &MatrixSpace) -> Self {
        match space.kind() {
            SpaceKind::H2 => Self::Shift,
            SpaceKind::G => Self::Dilation,
            _ => Self::Bessel(space.nu()),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Self::Bessel(_) => 2,
            _ => 1,
        }
    }

    /// Applies the operator to a jet expanded at `x0`; the order drops by [`Self::order`].
    pub fn apply(&self, x0: f64, jet: &Jet64) -> Jet64 {
        match self {
            Self::Shift => -&jet.diff(),
            Self::Dilation => {
                let d = jet.diff();
                let x = Jet::variable(x0, d.order());
                -&(&x * &d)
            }
            Self::Bessel(nu) => {
                let d1 = jet.diff();
                let d2 = d1.diff();
                let x = Jet::variable(x0, d2.order());
                &(&x * &d2) + &d1.truncate(d2.order()).scale(1.0 - nu.value())
            }
        }
    }
}

/// An evaluable weight with declared support and optional exact derivatives.
#[derive(Clone)]
pub struct Weight {
    label: String,
    support: Support,
    value: ValueFn,
    jet: Option<JetFn>,
    induced: Option<(Operator, InducedFn)>,
    // ω = x^p g with g smooth at 0
    power: Option<(f64, JetFn)>,
    // known Hankel transform as u ↦ (H(u²), d/du H(u²))
    hankel: Option<(Nu, Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>)>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("analytic", &self.jet.is_some())
            .finish()
    }
}

impl Weight {
    pub fn new(label: impl Into<String>, support: Support, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), support, value: Arc::new(f), jet: None, induced: None, power: None, hankel: None }
    }

    /// Attaches exact Taylor expansions `(x0, order) ↦ jet`.
    pub fn with_jet(mut self, jet: impl Fn(f64, usize) -> Jet64 + Send + Sync + 'static) -> Self {
        self.jet = Some(Arc::new(jet));
        self
    }

    /// Attaches a direct evaluator of the induced weights for one operator.
    pub fn with_induced(mut self, op: Operator, f: impl Fn(usize, f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.induced = Some((op, Arc::new(f)));
        self
    }

    /// Declares `ω(x) = x^p g(x)` with `g` smooth; the Bessel operator then
    /// acts on `g` and the power is carried exactly, so no singular terms cancel.
    pub fn with_power(mut self, p: f64, g: impl Fn(f64, usize) -> Jet64 + Send + Sync + 'static) -> Self {
        self.power = Some((p, Arc::new(g)));
        self
    }

    /// Attaches the Hankel transform of order ν in the root variable `u = √s`,
    /// returning the value and its `u`-derivative.
    pub fn with_hankel(mut self, nu: Nu, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        self.hankel = Some((nu, Arc::new(f)));
        self
    }

    pub fn known_hankel(&self, nu: Nu, u: f64) -> Option<(f64, f64)> {
        match &self.hankel {
            Some((n, f)) if *n == nu => Some(f(u)),
            _ => None,
        }
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.jet.is_some()
    }

    pub fn has_induced_for(&self, op: Operator) -> bool {
        matches!(&self.induced, Some((o, _)) if *o == op)
    }

    /// ω(x); zero outside the support and at ±∞.
    pub fn eval(&self, x: f64) -> f64 {
        if x.is_finite() && self.support.contains(x) {
            (self.value)(x)
        } else {
            0.0
        }
    }

    /// Taylor expansion at `x` (exact if available, finite differences otherwise).
    pub fn jet(&self, x: f64, order: usize) -> Result<Jet64> {
        if !self.support.contains(x) {
            return Err(Error::OutsideSupport { x, support: self.support.to_string() });
        }
        if let Some(j) = &self.jet {
            return Ok(j(x, order));
        }
        if order > MAX_NUMERIC_ORDER {
            return Err(Error::DerivativeOrder { requested: order, available: MAX_NUMERIC_ORDER });
        }
        Ok(self.numeric_jet(x, order))
    }

    pub fn derivative(&self, x: f64, k: usize) -> Result<f64> {
        Ok(self.jet(x, k)?.derivative(k))
    }

    fn numeric_jet(&self, x: f64, order: usize) -> Jet64 {
        let mut c = vec![self.eval(x); order + 1];
        let mut fact = 1.0;
        for k in 1..=order {
            fact *= k as f64;
            c[k] = self.numeric_derivative(x, k) / fact;
        }
        Jet::from_coeffs(c)
    }

    // Richardson-extrapolated finite differences, one-sided near the support ends.
    fn numeric_derivative(&self, x: f64, k: usize) -> f64 {
        let h = x.abs().max(1.0) * f64::EPSILON.powf(1.0 / (k as f64 + 2.0));
        let half = 0.5 * k as f64 * h;
        let s = self.support;
        let f = |t: f64| (self.value)(t);
        if x - half >= s.lo && x + half <= s.hi {
            let central = |h: f64| {
                let mut acc = 0.0;
                for i in 0..=k {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binomial(k, i) * f(x + (0.5 * k as f64 - i as f64) * h);
                }
                acc / h.powi(k as i32)
            };
            (4.0 * central(0.5 * h) - central(h)) / 3.0
        } else {
            let dir = if x + k as f64 * h <= s.hi { 1.0 } else { -1.0 };
            let one_sided = |h: f64| {
                let mut acc = 0.0;
                for i in 0..=k {
                    let sign = if (k - i) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binomial(k, i) * f(x + dir * i as f64 * h);
                }
                acc / (dir * h).powi(k as i32)
            };
            2.0 * one_sided(0.5 * h) - one_sided(h)
        }
    }
}

/// The `n` weights of a polynomial ensemble.
#[derive(Debug, Clone)]
pub struct WeightVector {
    weights: Vec<Weight>,
}

impl WeightVector {
    pub fn new(weights: Vec<Weight>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("a weight vector needs at least one weight".into()));
        }
        Ok(Self { weights })
    }

    /// `(w_1, …, w_n)` induced from a single ω by the space's operator.
    pub fn induced(space: &MatrixSpace, w: &Weight) -> Self {
        let weights = (1..=space.n())
            .map(|j| {
                let w0 = w.clone();
                let sp = *space;
                Weight::new(format!("{}[{j}]", w.label()), w.support(), move |x| apply_derivative_op(&sp, &w0, j, x).unwrap_or(f64::NAN))
            })
            .collect();
        Self { weights }
    }

    pub fn weights(&self) -> &[Weight] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Common support of all weights.
    pub fn support(&self) -> Result<Support> {
        let mut s = self.weights[0].support();
        for w in &self.weights[1..] {
            s = s.intersect(&w.support()).ok_or_else(|| Error::SupportMismatch("weights have disjoint supports".into()))?;
        }
        Ok(s)
    }
}

/// Sample point where `|f|` is largest; used to split integrals where the mass sits.
pub fn mass_center(f: impl Fn(f64) -> f64, s: Support) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for x in sample_points(s, 400) {
        let v = f(x).abs();
        if v.is_finite() && v > best.0 {
            best = (v, x);
        }
    }
    if best.0 > 0.0 {
        return best.1;
    }
    match (s.lo.is_finite(), s.hi.is_finite()) {
        (true, true) => 0.5 * (s.lo + s.hi),
        (true, false) => s.lo,
        (false, true) => s.hi,
        (false, false) => 0.0,
    }
}

/// The j-th induced weight `w_j(x)` of ω on `space` (`j = 1` gives ω).
pub fn apply_derivative_op(space: &MatrixSpace, w: &Weight, j: usize, x: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("induced weights are indexed from j = 1".into()));
    }
    if !w.support().contains(x) {
        return Err(Error::OutsideSupport { x, support: w.support().to_string() });
    }
    if j == 1 {
        return Ok(w.eval(x));
    }
    let op = Operator::for_space(space);
    if let Some((o, f)) = &w.induced {
        if *o == op {
            return f(j, x);
        }
    }
    let steps = j - 1;
    let v = match (&w.power, op) {
        (Some((p, g)), Operator::Bessel(nu)) => bessel_on_power(*p, g, nu.value(), steps, x),
        _ => {
            let mut jet = w.jet(x, steps * op.order())?;
            for _ in 0..steps {
                jet = op.apply(x, &jet);
            }
            jet.value()
        }
    };
    // past the point where ω underflows its jets can overflow
    if !v.is_finite() && w.eval(x) == 0.0 {
        return Ok(0.0);
    }
    Ok(v)
}

// (x∂² + (1−ν)∂)(x^q G) = x^{q−1} [q(q−ν) G + (2q+1−ν) x G' + x² G'']
fn bessel_on_power(p: f64, g: &JetFn, nu: f64, steps: usize, x: f64) -> f64 {
    let mut q = p;
    // at the origin keep spare orders to find the leading power of G
    let spare = if x == 0.0 { steps + 2 } else { 0 };
    let mut jet = g(x, 2 * steps + spare);
    for _ in 0..steps {
        let d1 = jet.diff();
        let d2 = d1.diff();
        let m = d2.order();
        let t = Jet::variable(x, m);
        jet = &(&jet.truncate(m).scale(q * (q - nu)) + &(&t * &d1.truncate(m)).scale(2.0 * q + 1.0 - nu)) + &(&(&t * &t) * &d2);
        q -= 1.0;
    }
    if x == 0.0 {
        return match jet.coeffs().iter().position(|&c| c != 0.0) {
            None => 0.0,
            Some(k) if q + k as f64 > 0.0 => 0.0,
            Some(k) if q + k as f64 == 0.0 => jet.coeffs()[k],
            Some(k) => jet.coeffs()[k] * f64::INFINITY,
        };
    }
    // split the power so a tiny x cannot overflow it before G scales it back
    let h = x.powf(0.5 * q);
    h * jet.value() * h
}
