//! Textual forms of spaces, weights, sample families and number lists.

use anyhow::{anyhow, bail, Context, Result};
use polya_core::haarmc::SampleFamily;
use polya_core::pff::{bridge_g, lift_to_m, lift_warnings, make_laplace_pff, PffSupport};
use polya_core::weights::{make_family, Family};
use polya_core::{Complex64, MatrixSpace, SpaceKind, TransformKind, Weight};

use crate::config::RunConfig;

pub fn space(cfg: &RunConfig) -> Result<MatrixSpace> {
    let kind: SpaceKind = RunConfig::require(&cfg.space, "space")?.parse()?;
    let n = cfg.n.unwrap_or(1);
    Ok(MatrixSpace::of_kind(kind, n, cfg.nu.unwrap_or(0))?)
}

fn key_values(rest: &str) -> Result<Vec<(String, String)>> {
    rest.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| anyhow!("expected key=value, got `{kv}`"))?;
            Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
        })
        .collect()
}

fn number(v: &str) -> Result<f64> {
    v.parse().with_context(|| format!("`{v}` is not a number"))
}

/// `laplace_pff:deltas=1|2,shift=0,gamma=0.5,support=real`.
fn laplace(rest: &str) -> Result<Weight> {
    let (mut deltas, mut shift, mut gamma, mut support) = (Vec::new(), 0.0, 0.0, PffSupport::RealLine);
    for (k, v) in key_values(rest)? {
        match k.as_str() {
            "deltas" => deltas = v.split('|').map(|d| number(d.trim())).collect::<Result<_>>()?,
            "shift" => shift = number(&v)?,
            "gamma" => gamma = number(&v)?,
            "support" => {
                support = match v.as_str() {
                    "half" | "half_line" => PffSupport::HalfLine,
                    "real" | "real_line" => PffSupport::RealLine,
                    other => bail!("support must be `half` or `real`, got `{other}`"),
                }
            }
            other => bail!("unknown laplace_pff parameter `{other}`"),
        }
    }
    Ok(make_laplace_pff(&deltas, shift, gamma, support)?)
}

/// A single weight from its spec, without lift or bridge.
pub fn weight_spec(spec: &str) -> Result<Weight> {
    let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    if name.eq_ignore_ascii_case("laplace_pff") {
        return laplace(rest);
    }
    let fam: Family = spec.parse()?;
    Ok(make_family(&fam)?)
}

/// The primary weight with `--lift` / `--bridge` applied; lift warnings go to stderr.
pub fn weight(cfg: &RunConfig) -> Result<Weight> {
    let mut w = weight_spec(RunConfig::require(&cfg.weight, "weight")?)?;
    if let Some(nu) = cfg.lift {
        for msg in lift_warnings(&w) {
            eprintln!("warning: {msg}");
        }
        w = lift_to_m(&w, nu)?;
    }
    if cfg.bridge.unwrap_or(false) {
        w = bridge_g(&w)?;
    }
    Ok(w)
}

/// `gaussian:eps=1`, `laguerre:nu=1`, `ginibre:nu=0`, `jacobi:nu=0,mu=1`.
pub fn sample_family(spec: &str) -> Result<SampleFamily> {
    let (name, rest) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
    let kv = key_values(rest)?;
    let get = |key: &str, default: f64| -> Result<f64> {
        kv.iter().find(|(k, _)| k == key).map_or(Ok(default), |(_, v)| number(v))
    };
    let int = |key: &str| -> Result<u32> {
        let v = get(key, 0.0)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            bail!("{key} must be a non-negative integer, got {v}");
        }
        Ok(v as u32)
    };
    for (k, _) in &kv {
        let known: &[&str] = match name {
            "gaussian" => &["eps"],
            "laguerre" | "ginibre" => &["nu"],
            "jacobi" => &["nu", "mu"],
            _ => &[],
        };
        if !known.contains(&k.as_str()) {
            bail!("unknown parameter `{k}` for sample family `{name}`");
        }
    }
    Ok(match name {
        "gaussian" => SampleFamily::Gaussian { eps: get("eps", 1.0)? },
        "laguerre" => SampleFamily::Laguerre { nu: int("nu")? },
        "ginibre" => SampleFamily::Ginibre { nu: int("nu")? },
        "jacobi" => SampleFamily::Jacobi { nu: int("nu")?, mu: int("mu")? },
        other => bail!("unknown sample family `{other}` (gaussian, laguerre, ginibre, jacobi)"),
    })
}

pub fn reals(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(|t| number(t.trim())).collect()
}

/// `;`-separated rows of comma-separated reals.
pub fn rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';').filter(|r| !r.trim().is_empty()).map(reals).collect()
}

pub fn complexes(text: &str) -> Result<Vec<Complex64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<Complex64>().map_err(|_| anyhow!("`{t}` is not a complex number"))
        })
        .collect()
}

/// `fourier`, `mellin`, `hankel` (order from `--nu` or the space) or `hankel:<order>`.
pub fn transform(cfg: &RunConfig) -> Result<TransformKind> {
    let Some(text) = cfg.transform.as_deref() else {
        return match cfg.space {
            Some(_) => Ok(TransformKind::for_space(&space(cfg)?)),
            None => bail!("missing required option --transform (or --space to pick one)"),
        };
    };
    let (name, order) = text.split_once(':').unwrap_or((text, ""));
    match name.trim().to_ascii_lowercase().as_str() {
        "fourier" => Ok(TransformKind::Fourier),
        "mellin" => Ok(TransformKind::Mellin),
        "hankel" => {
            let nu = if !order.trim().is_empty() {
                number(order.trim())?
            } else if cfg.space.is_some() {
                space(cfg)?.nu().value()
            } else {
                cfg.nu.unwrap_or(0) as f64
            };
            Ok(TransformKind::hankel(nu)?)
        }
        other => bail!("unknown transform `{other}` (fourier, hankel, mellin)"),
    }
}
