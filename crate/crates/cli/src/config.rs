//! Run configuration: a JSON document overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Density,
    Convolve,
    Transform,
    PffCheck,
    Verify,
    Simulate,
    Normalize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Hciz,
    Bk,
    Gn,
    GroupIdentity,
}

/// Everything a run depends on. Lists are kept in their textual form
/// (`"1,2"`, `"1,2;3,4"`, `"1+2i,3"`) so flags and JSON share one grammar.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub check: Option<Check>,
    pub space: Option<String>,
    pub n: Option<usize>,
    pub nu: Option<u32>,
    pub weight: Option<String>,
    pub weight2: Option<String>,
    /// Apply `lift_to_m` with this ν to the weight.
    pub lift: Option<f64>,
    /// Apply the bridge map to G to the weight.
    pub bridge: Option<bool>,
    #[serde(default, deserialize_with = "list")]
    pub points: Option<String>,
    #[serde(default, deserialize_with = "list")]
    pub grid: Option<String>,
    #[serde(default, deserialize_with = "list")]
    pub s: Option<String>,
    #[serde(default, deserialize_with = "list")]
    pub a: Option<String>,
    #[serde(default, deserialize_with = "list")]
    pub x: Option<String>,
    #[serde(default, deserialize_with = "list")]
    pub y: Option<String>,
    pub transform: Option<String>,
    pub joint: Option<bool>,
    pub order: Option<usize>,
    pub trials: Option<usize>,
    pub family: Option<String>,
    pub family2: Option<String>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    /// Largest accepted deviation in standard errors (verify) or KS distance (simulate).
    pub threshold: Option<f64>,
    pub ks: Option<bool>,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
}

/// Accepts a string or an array of numbers/strings; arrays of arrays become `;`-separated rows.
fn list<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    use serde::de::Error;
    fn flat(v: &serde_json::Value) -> std::result::Result<String, String> {
        match v {
            serde_json::Value::String(s) => Ok(s.clone()),
            serde_json::Value::Number(x) => Ok(x.to_string()),
            serde_json::Value::Array(items) => {
                let sep = if items.iter().any(|i| i.is_array()) { ";" } else { "," };
                Ok(items.iter().map(flat).collect::<std::result::Result<Vec<_>, _>>()?.join(sep))
            }
            other => Err(format!("expected a list, got {other}")),
        }
    }
    let v = Option::<serde_json::Value>::deserialize(d)?;
    v.map(|v| flat(&v).map_err(D::Error::custom)).transpose()
}

macro_rules! overlay_fields {
    ($dst:expr, $src:expr; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    /// Fields set in `o` win.
    pub fn overlay(&mut self, o: &RunConfig) {
        overlay_fields!(self, o; command, check, space, n, nu, weight, weight2, lift, bridge, points, grid, s, a, x, y,
            transform, joint, order, trials, family, family2, samples, seed, threshold, ks, output);
    }

    /// SHA-256 of the canonical JSON form (the output path is excluded).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn require<'a, T>(v: &'a Option<T>, name: &str) -> Result<&'a T> {
        match v {
            Some(v) => Ok(v),
            None => bail!("missing required option --{name}"),
        }
    }

    pub fn seed(&self) -> Result<u64> {
        match self.seed {
            Some(s) => Ok(s),
            None => bail!("--seed is required for stochastic commands"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_lists_and_overlay() {
        let mut c: RunConfig =
            serde_json::from_str(r#"{"command":"density","space":"G","n":2,"points":[[1,2],[3,4]],"s":["1+2i",3]}"#).unwrap();
        assert_eq!(c.points.as_deref(), Some("1,2;3,4"));
        assert_eq!(c.s.as_deref(), Some("1+2i,3"));
        let h = c.hash();
        c.overlay(&RunConfig { n: Some(3), ..Default::default() });
        assert_eq!(c.n, Some(3));
        assert_eq!(c.space.as_deref(), Some("G"));
        assert_ne!(h, c.hash());
    }

    #[test]
    fn output_path_does_not_change_hash() {
        let a = RunConfig { seed: Some(1), ..Default::default() };
        let b = RunConfig { output: Some("x.csv".into()), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sead": 1}"#).is_err());
    }
}
