//! Built-in weight families with exact Taylor jets.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::jet::Jet;
use crate::special::bessel_k;
use crate::{Error, Jet64, Result};

use super::{Support, Weight};

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `e^{−(x−α)²/(2v)}` on ℝ.
    GaussianShifted { alpha: f64, var: f64 },
    /// `x^ν e^{−x/ε}` on ℝ₊.
    GaussianRadial { nu: f64, eps: f64 },
    /// `x^{n+ν−1} e^{−x}` on ℝ₊ (the induced Laguerre weight on H2).
    LaguerreH2 { n: usize, nu: f64 },
    /// `x^ν e^{−x}` on ℝ₊.
    Ginibre { nu: f64 },
    /// `x^ν (1−x)^{n+μ−1}` on [0, 1].
    Jacobi { n: usize, nu: f64, mu: f64 },
    /// `x^ν / (1+x)^{n+ν+μ+1}` on ℝ₊.
    CauchyLorentz { n: usize, nu: f64, mu: f64 },
    /// `x^{−1} e^{−(ln x − α)²/(2σ²)}` on ℝ₊.
    Lognormal { alpha: f64, sigma: f64 },
    /// `exp(−e^{−x} − αx)` on ℝ.
    GumbelDeformed { alpha: f64 },
    /// `cosh^{−μ}(x)` on ℝ.
    CoshPower { mu: f64 },
    /// `x^{(μ+ν)/2} K_{μ−ν}(2√x)` on ℝ₊.
    BesselK { mu: f64, nu: f64 },
    /// `e^{−x/a}/a` on ℝ₊.
    Exponential { scale: f64 },
    /// `Θ(x)`.
    Heaviside,
    /// `x^p Θ(x)`.
    HeavisidePower { p: f64 },
    /// Indicator of `[lo, hi]`.
    Indicator { lo: f64, hi: f64 },
    /// Indicator of `[0,1] ∪ [2,3]`.
    IndicatorGap,
    /// `e^{−1/(a−x)}` on `[0, a]`.
    BeyondTheorem { a: f64 },
    /// Two-column CSV `x,ω(x)` interpolated linearly in log ω.
    Table { path: PathBuf },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

fn above_minus_one(name: &str, v: f64) -> Result<()> {
    if v > -1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must exceed -1, got {v}")))
    }
}

fn at_least_one(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    Ok(())
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::GaussianShifted { alpha, var } => {
                positive("var", var)?;
                if !alpha.is_finite() {
                    return Err(Error::InvalidParameter("alpha must be finite".into()));
                }
                Ok(())
            }
            Family::GaussianRadial { nu, eps } => {
                above_minus_one("nu", nu)?;
                positive("eps", eps)
            }
            Family::LaguerreH2 { n, nu } => {
                at_least_one(n)?;
                above_minus_one("nu", nu)
            }
            Family::Ginibre { nu } => above_minus_one("nu", nu),
            Family::Jacobi { n, nu, mu } | Family::CauchyLorentz { n, nu, mu } => {
                at_least_one(n)?;
                above_minus_one("nu", nu)?;
                above_minus_one("mu", mu)
            }
            Family::Lognormal { alpha, sigma } => {
                positive("sigma", sigma)?;
                if !alpha.is_finite() {
                    return Err(Error::InvalidParameter("alpha must be finite".into()));
                }
                Ok(())
            }
            Family::GumbelDeformed { alpha } => positive("alpha", alpha),
            Family::CoshPower { mu } => positive("mu", mu),
            Family::BesselK { mu, nu } => {
                above_minus_one("mu", mu)?;
                above_minus_one("nu", nu)
            }
            Family::Exponential { scale } => positive("a", scale),
            Family::Heaviside | Family::IndicatorGap => Ok(()),
            Family::HeavisidePower { p } => above_minus_one("p", p),
            Family::Indicator { lo, hi } => Support::interval(lo, hi).map(|_| ()),
            Family::BeyondTheorem { a } => positive("a", a),
            Family::Table { ref path } => {
                if path.exists() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("table file {} not found", path.display())))
                }
            }
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::GaussianShifted { alpha, var } => write!(f, "gaussian_shifted:alpha={alpha},var={var}"),
            Family::GaussianRadial { nu, eps } => write!(f, "gaussian_radial:nu={nu},eps={eps}"),
            Family::LaguerreH2 { n, nu } => write!(f, "laguerre_h2:n={n},nu={nu}"),
            Family::Ginibre { nu } => write!(f, "ginibre:nu={nu}"),
            Family::Jacobi { n, nu, mu } => write!(f, "jacobi:n={n},nu={nu},mu={mu}"),
            Family::CauchyLorentz { n, nu, mu } => write!(f, "cauchy_lorentz:n={n},nu={nu},mu={mu}"),
            Family::Lognormal { alpha, sigma } => write!(f, "lognormal:alpha={alpha},sigma={sigma}"),
            Family::GumbelDeformed { alpha } => write!(f, "gumbel_deformed:alpha={alpha}"),
            Family::CoshPower { mu } => write!(f, "cosh_power:mu={mu}"),
            Family::BesselK { mu, nu } => write!(f, "bessel_k:mu={mu},nu={nu}"),
            Family::Exponential { scale } => write!(f, "exponential:a={scale}"),
            Family::Heaviside => write!(f, "heaviside"),
            Family::HeavisidePower { p } => write!(f, "heaviside_power:p={p}"),
            Family::Indicator { lo, hi } => write!(f, "indicator:lo={lo},hi={hi}"),
            Family::IndicatorGap => write!(f, "indicator_gap"),
            Family::BeyondTheorem { a } => write!(f, "beyond_theorem:a={a}"),
            Family::Table { path } => write!(f, "table:{}", path.display()),
        }
    }
}

struct Params {
    family: String,
    map: BTreeMap<String, f64>,
}

impl Params {
    fn take(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match (self.map.remove(key), default) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(Error::InvalidParameter(format!("{} needs parameter `{key}`", self.family))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<usize> {
        let v = self.take(key, None)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!("`{key}` must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }

    fn finish(self) -> Result<()> {
        match self.map.keys().next() {
            Some(k) => Err(Error::InvalidParameter(format!("{} has no parameter `{k}`", self.family))),
            None => Ok(()),
        }
    }
}

/// Parses `family:key=val,key=val` or `table:path`.
impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let name = name.trim().to_ascii_lowercase();
        if name == "table" {
            if rest.is_empty() {
                return Err(Error::InvalidParameter("table needs a file path".into()));
            }
            return Ok(Family::Table { path: PathBuf::from(rest.trim()) });
        }
        let mut map = BTreeMap::new();
        for kv in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("`{}` is not a number", v.trim())))?;
            map.insert(k.trim().to_ascii_lowercase(), v);
        }
        let mut p = Params { family: name.clone(), map };
        let family = match name.as_str() {
            "gaussian_shifted" | "gaussian" => {
                Family::GaussianShifted { alpha: p.take("alpha", Some(0.0))?, var: p.take("var", Some(1.0))? }
            }
            "gaussian_radial" => Family::GaussianRadial { nu: p.take("nu", Some(0.0))?, eps: p.take("eps", Some(1.0))? },
            "laguerre_h2" | "laguerre" => Family::LaguerreH2 { n: p.take_usize("n")?, nu: p.take("nu", Some(0.0))? },
            "ginibre" => Family::Ginibre { nu: p.take("nu", Some(0.0))? },
            "jacobi" => Family::Jacobi { n: p.take_usize("n")?, nu: p.take("nu", Some(0.0))?, mu: p.take("mu", Some(0.0))? },
            "cauchy_lorentz" | "cauchy" => {
                Family::CauchyLorentz { n: p.take_usize("n")?, nu: p.take("nu", Some(0.0))?, mu: p.take("mu", Some(0.0))? }
            }
            "lognormal" => Family::Lognormal { alpha: p.take("alpha", Some(0.0))?, sigma: p.take("sigma", Some(1.0))? },
            "gumbel_deformed" | "gumbel" => Family::GumbelDeformed { alpha: p.take("alpha", Some(1.0))? },
            "cosh_power" => Family::CoshPower { mu: p.take("mu", None)? },
            "bessel_k" => Family::BesselK { mu: p.take("mu", None)?, nu: p.take("nu", Some(0.0))? },
            "exponential" => Family::Exponential { scale: p.take("a", Some(1.0))? },
            "heaviside" => Family::Heaviside,
            "heaviside_power" => Family::HeavisidePower { p: p.take("p", None)? },
            "indicator" => Family::Indicator { lo: p.take("lo", Some(0.0))?, hi: p.take("hi", Some(1.0))? },
            "indicator_gap" => Family::IndicatorGap,
            "beyond_theorem" => Family::BeyondTheorem { a: p.take("a", Some(0.2))? },
            other => return Err(Error::InvalidParameter(format!("unknown weight family `{other}`"))),
        };
        p.finish()?;
        Ok(family)
    }
}

/// Generalized binomial coefficient `p(p−1)…(p−k+1)/k!`.
fn gbinom(p: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (p - i as f64) / (i + 1) as f64)
}

/// Jet of `(c0 + slope·h)^p` in `h`; exact at `c0 = 0` for integer `p ≥ 0`.
fn linear_pow(c0: f64, slope: f64, p: f64, order: usize) -> Jet64 {
    let c = (0..=order)
        .map(|k| {
            let b = gbinom(p, k);
            if b == 0.0 {
                0.0
            } else {
                b * c0.powf(p - k as f64) * slope.powi(k as i32)
            }
        })
        .collect();
    Jet::from_coeffs(c)
}

fn zero_jet(order: usize) -> Jet64 {
    Jet::constant(0.0, order)
}

/// `x^ν e^{−x/ε}` jets shared by several families.
/// `grow · decay`, taken as 0 once the decaying factor has underflowed.
fn decaying(grow: f64, decay: f64) -> f64 {
    if decay == 0.0 {
        0.0
    } else {
        grow * decay
    }
}

fn power_exp_jet(x: f64, order: usize, nu: f64, eps: f64) -> Jet64 {
    let t = Jet::variable(x, order);
    if x > 1.0 {
        // one exponential, so x^ν and e^{−x/ε} cannot overflow against each other
        return (&t.ln().scale(nu) - &t.scale(1.0 / eps)).exp();
    }
    &linear_pow(x, 1.0, nu, order) * &t.scale(-1.0 / eps).exp()
}

fn load_table(path: &std::path::Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    let mut pts = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let mut it = line.split(',').map(str::trim);
        let (Some(a), Some(b)) = (it.next(), it.next()) else {
            return Err(Error::InvalidParameter(format!("bad table row `{line}`")));
        };
        match (a.parse::<f64>(), b.parse::<f64>()) {
            (Ok(x), Ok(y)) => pts.push((x, y)),
            // tolerate a header row
            _ if pts.is_empty() => continue,
            _ => return Err(Error::InvalidParameter(format!("bad table row `{line}`"))),
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("a table needs at least two rows".into()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidParameter("table abscissae must be distinct".into()));
    }
    Ok(pts.into_iter().unzip())
}

fn table_interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    let t = (x - x0) / (x1 - x0);
    if y0 > 0.0 && y1 > 0.0 {
        (y0.ln() * (1.0 - t) + y1.ln() * t).exp()
    } else {
        y0 * (1.0 - t) + y1 * t
    }
}

/// Builds the weight of a family; exact jets are attached except for tables.
pub fn make_family(family: &Family) -> Result<Weight> {
    family.validate()?;
    let label = family.to_string();
    let w = match *family {
        Family::GaussianShifted { alpha, var } => Weight::new(label, Support::REAL_LINE, move |x| (-(x - alpha).powi(2) / (2.0 * var)).exp())
            .with_jet(move |x, m| {
                let u = Jet::variable(x - alpha, m);
                (&u * &u).scale(-0.5 / var).exp()
            }),
        Family::GaussianRadial { nu, eps } => Weight::new(label, Support::HALF_LINE, move |x| decaying(x.powf(nu), (-x / eps).exp()))
            .with_jet(move |x, m| power_exp_jet(x, m, nu, eps))
            .with_power(nu, move |x, m| Jet::variable(x, m).scale(-1.0 / eps).exp()),
        Family::LaguerreH2 { n, nu } => {
            let p = n as f64 + nu - 1.0;
            Weight::new(label, Support::HALF_LINE, move |x| decaying(x.powf(p), (-x).exp()))
                .with_jet(move |x, m| power_exp_jet(x, m, p, 1.0))
                .with_power(p, |x, m| (-&Jet::variable(x, m)).exp())
        }
        Family::Ginibre { nu } => {
            Weight::new(label, Support::HALF_LINE, move |x| decaying(x.powf(nu), (-x).exp()))
                .with_jet(move |x, m| power_exp_jet(x, m, nu, 1.0))
                .with_power(nu, |x, m| (-&Jet::variable(x, m)).exp())
        }
        Family::Jacobi { n, nu, mu } => {
            let q = n as f64 + mu - 1.0;
            Weight::new(label, Support { lo: 0.0, hi: 1.0 }, move |x| x.powf(nu) * (1.0 - x).powf(q))
                .with_jet(move |x, m| &linear_pow(x, 1.0, nu, m) * &linear_pow(1.0 - x, -1.0, q, m))
                .with_power(nu, move |x, m| linear_pow(1.0 - x, -1.0, q, m))
        }
        Family::CauchyLorentz { n, nu, mu } => {
            let q = -(n as f64 + nu + mu + 1.0);
            Weight::new(label, Support::HALF_LINE, move |x| decaying(x.powf(nu), (1.0 + x).powf(q)))
                .with_jet(move |x, m| &linear_pow(x, 1.0, nu, m) * &linear_pow(1.0 + x, 1.0, q, m))
        }
        Family::Lognormal { alpha, sigma } => {
            let k = -0.5 / (sigma * sigma);
            Weight::new(label, Support::HALF_LINE, move |x| if x > 0.0 { (k * (x.ln() - alpha).powi(2)).exp() / x } else { 0.0 })
                .with_jet(move |x, m| {
                    if x <= 0.0 {
                        return zero_jet(m);
                    }
                    let v = Jet::variable(x, m);
                    let l = v.ln().add_const(-alpha);
                    &(&l * &l).scale(k).exp() * &v.recip()
                })
        }
        Family::GumbelDeformed { alpha } => Weight::new(label, Support::REAL_LINE, move |x| (-(-x).exp() - alpha * x).exp())
            .with_jet(move |x, m| {
                let v = Jet::variable(x, m);
                let e = v.scale(-1.0).exp();
                (&e.scale(-1.0) - &v.scale(alpha)).exp()
            }),
        Family::CoshPower { mu } => {
            Weight::new(label, Support::REAL_LINE, move |x: f64| x.cosh().powf(-mu)).with_jet(move |x, m| {
                // ln cosh x = s·x + ln(1 + e^{−2 s x}) − ln 2 with s = sign(x), stable for large |x|
                let s = if x >= 0.0 { 1.0 } else { -1.0 };
                let v = Jet::variable(x, m);
                let tail = v.scale(-2.0 * s).exp().add_const(1.0).ln();
                let lncosh = (&v.scale(s) + &tail).add_const(-LN_2);
                lncosh.scale(-mu).exp()
            })
        }
        Family::BesselK { mu, nu } => {
            // x^{lo} g_b(x) with g_b(x) = x^{b/2} K_b(2√x), lo = min(μ,ν), b = |μ−ν|; g_b' = −g_{b−1}.
            let lo = mu.min(nu);
            let b = (mu - nu).abs();
            let g = move |c: f64, x: f64| decaying(x.powf(0.5 * c), bessel_k(c.abs(), 2.0 * x.sqrt()));
            Weight::new(label, Support::HALF_LINE, move |x| if x > 0.0 { decaying(x.powf(lo), g(b, x)) } else { limit_bessel_k(lo, b) })
                .with_jet(move |x, m| {
                    let mut fact = 1.0;
                    let mut c = Vec::with_capacity(m + 1);
                    for k in 0..=m {
                        if k > 0 {
                            fact *= k as f64;
                        }
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        let gk = if x > 0.0 { g(b - k as f64, x) } else { limit_bessel_k(0.0, b - k as f64) };
                        c.push(sign * gk / fact);
                    }
                    let gj = Jet::from_coeffs(c);
                    if lo == 0.0 {
                        gj
                    } else {
                        &linear_pow(x, 1.0, lo, m) * &gj
                    }
                })
        }
        Family::Exponential { scale } => Weight::new(label, Support::HALF_LINE, move |x| (-x / scale).exp() / scale)
            .with_jet(move |x, m| Jet::variable(x, m).scale(-1.0 / scale).exp().scale(1.0 / scale)),
        Family::Heaviside => Weight::new(label, Support::HALF_LINE, |_| 1.0).with_jet(|_, m| Jet::constant(1.0, m)),
        Family::HeavisidePower { p } => {
            Weight::new(label, Support::HALF_LINE, move |x| x.powf(p)).with_jet(move |x, m| linear_pow(x, 1.0, p, m))
        }
        Family::Indicator { lo, hi } => Weight::new(label, Support { lo, hi }, |_| 1.0).with_jet(|_, m| Jet::constant(1.0, m)),
        Family::IndicatorGap => {
            let inside = |x: f64| (0.0..=1.0).contains(&x) || (2.0..=3.0).contains(&x);
            Weight::new(label, Support { lo: 0.0, hi: 3.0 }, move |x| if inside(x) { 1.0 } else { 0.0 })
                .with_jet(move |x, m| Jet::constant(if inside(x) { 1.0 } else { 0.0 }, m))
        }
        Family::BeyondTheorem { a } => {
            Weight::new(label, Support { lo: 0.0, hi: a }, move |x| if x < a { (-1.0 / (a - x)).exp() } else { 0.0 })
                .with_jet(move |x, m| {
                    if x >= a {
                        return zero_jet(m);
                    }
                    Jet::variable(x, m).scale(-1.0).add_const(a).recip().scale(-1.0).exp()
                })
        }
        Family::Table { ref path } => {
            let (xs, ys) = load_table(path)?;
            if ys.iter().any(|y| !y.is_finite()) {
                return Err(Error::InvalidParameter("table values must be finite".into()));
            }
            let support = Support::interval(xs[0], xs[xs.len() - 1])?;
            Weight::new(label, support, move |x| table_interp(&xs, &ys, x))
        }
    };
    Ok(w)
}

/// `lim_{x→0⁺} x^{lo} g_b(x)` where `g_b(0) = Γ(b)/2` for `b > 0`.
fn limit_bessel_k(lo: f64, b: f64) -> f64 {
    if lo > 0.0 {
        0.0
    } else if lo == 0.0 && b > 0.0 {
        0.5 * crate::special::gamma(b)
    } else {
        f64::INFINITY
    }
}
