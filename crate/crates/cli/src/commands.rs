//! Dispatch from a merged configuration to the library.

use std::io::Write;

use anyhow::{bail, Result};
use polya_core::ensembles::{convolve_polya, normalize};
use polya_core::haarmc::{
    group_integral_closed, group_integral_mc, ks_distance, polya_group_identity, sample_spectra, GroupIntegral,
};
use polya_core::pff::{pff_order_check, GridSampler};
use polya_core::transforms::{mv_transform_polya, univariate_transform};
use polya_core::{Complex64, Ensemble, McReport, SpectralPoint};

use crate::config::{Check, Command, RunConfig};
use crate::parse;

/// Rows of already formatted cells under a header.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Comment line, header, rows.
    pub fn write(&self, out: impl Write, comment: &str) -> Result<()> {
        let mut out = out;
        writeln!(out, "# {comment}")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shortest round-trip decimal.
fn num(v: f64) -> String {
    format!("{v}")
}

fn cplx(z: Complex64) -> [String; 2] {
    [num(z.re), num(z.im)]
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}{i}"))
}

pub struct Outcome {
    pub table: Table,
    /// False when a verification or check failed (exit code 1).
    pub passed: bool,
}

fn ok(table: Table) -> Result<Outcome> {
    Ok(Outcome { table, passed: true })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    match RunConfig::require(&cfg.command, "command")? {
        Command::Density => density(cfg),
        Command::Normalize => normalize_cmd(cfg),
        Command::Convolve => convolve(cfg),
        Command::Transform => transform(cfg),
        Command::PffCheck => pff_check(cfg),
        Command::Verify => verify(cfg),
        Command::Simulate => simulate(cfg),
    }
}

fn density(cfg: &RunConfig) -> Result<Outcome> {
    let space = parse::space(cfg)?;
    let ens = Ensemble::polya(space, parse::weight(cfg)?)?;
    let points = parse::rows(RunConfig::require(&cfg.points, "points")?)?;
    let n = space.n();
    let mut t = Table::new(numbered("a", n).chain(["density".to_string()]));
    for p in points {
        let a = SpectralPoint::for_space(p, &space)?;
        let v = ens.joint_density(&a)?;
        t.push(a.values().iter().copied().chain([v]).map(num).collect());
    }
    ok(t)
}

fn normalize_cmd(cfg: &RunConfig) -> Result<Outcome> {
    let space = parse::space(cfg)?;
    let c = normalize(&space, &parse::weight(cfg)?)?;
    let mut t = Table::new(["space", "n", "nu", "c_n"]);
    t.push(vec![space.kind().to_string(), space.n().to_string(), space.nu().to_string(), num(c)]);
    ok(t)
}

fn convolve(cfg: &RunConfig) -> Result<Outcome> {
    let space = parse::space(cfg)?;
    let w1 = parse::weight(cfg)?;
    let w2 = parse::weight_spec(RunConfig::require(&cfg.weight2, "weight2")?)?;
    let conv = convolve_polya(&space, &w1, &w2)?;
    let mut t = Table::new(["x", "value"]);
    for x in parse::reals(RunConfig::require(&cfg.grid, "grid")?)? {
        let v = conv.eval(x);
        if !v.is_finite() {
            bail!("convolution is not finite at x = {x}");
        }
        t.push(vec![num(x), num(v)]);
    }
    ok(t)
}

fn transform(cfg: &RunConfig) -> Result<Outcome> {
    let w = parse::weight(cfg)?;
    let s = parse::complexes(RunConfig::require(&cfg.s, "s")?)?;
    if cfg.joint.unwrap_or(false) {
        let space = parse::space(cfg)?;
        let v = mv_transform_polya(&space, &w, &s)?;
        let mut t = Table::new(numbered("s", s.len()).flat_map(|c| [format!("{c}_re"), format!("{c}_im")]).chain(
            ["value_re".to_string(), "value_im".to_string()],
        ));
        t.push(s.iter().flat_map(|&z| cplx(z)).chain(cplx(v)).collect());
        return ok(t);
    }
    let kind = parse::transform(cfg)?;
    let mut t = Table::new(["s_re", "s_im", "value_re", "value_im"]);
    for z in s {
        let v = univariate_transform(kind, &w, z)?;
        t.push(cplx(z).into_iter().chain(cplx(v)).collect());
    }
    ok(t)
}

fn pff_check(cfg: &RunConfig) -> Result<Outcome> {
    let w = parse::weight(cfg)?;
    let order = cfg.order.unwrap_or(2);
    let sampler = GridSampler::new(cfg.trials.unwrap_or(GridSampler::default().trials), cfg.seed()?);
    let v = pff_order_check(&w, order, sampler)?;
    let mut t = Table::new(
        ["order", "is_pff", "grids_tested", "lemma_applied", "size"]
            .into_iter()
            .map(String::from)
            .chain(numbered("x", order))
            .chain(numbered("y", order))
            .chain(["value".to_string()]),
    );
    let mut row = vec![order.to_string(), v.is_pff.to_string(), v.grids_tested.to_string(), v.lemma_applied.to_string()];
    match &v.witness {
        Some(wit) => {
            row.push(wit.xs.len().to_string());
            let pad = |vals: &[f64]| -> Vec<String> {
                vals.iter().copied().map(num).chain(std::iter::repeat(String::new())).take(order).collect()
            };
            row.extend(pad(&wit.xs));
            row.extend(pad(&wit.ys));
            row.push(num(wit.value));
        }
        None => row.extend(std::iter::repeat(String::new()).take(2 * order + 2)),
    }
    t.push(row);
    Ok(Outcome { table: t, passed: v.is_pff })
}

fn report_table(r: &McReport, target: Complex64, threshold: f64) -> Outcome {
    let sig = r.sigmas_from(target);
    let passed = sig <= threshold;
    let mut t = Table::new([
        "estimate_re", "estimate_im", "closed_re", "closed_im", "std_error", "sigmas", "samples", "passed",
    ]);
    t.push(
        cplx(r.estimate)
            .into_iter()
            .chain(cplx(target))
            .chain([num(r.std_error), num(sig), r.n_samples.to_string(), passed.to_string()])
            .collect(),
    );
    Outcome { table: t, passed }
}

fn verify(cfg: &RunConfig) -> Result<Outcome> {
    let samples = *RunConfig::require(&cfg.samples, "samples")?;
    let seed = cfg.seed()?;
    let threshold = cfg.threshold.unwrap_or(5.0);
    let check = *RunConfig::require(&cfg.check, "check")?;
    if check == Check::GroupIdentity {
        let space = parse::space(cfg)?;
        let w = parse::weight(cfg)?;
        let x = SpectralPoint::new(parse::reals(RunConfig::require(&cfg.x, "x")?)?);
        let y = SpectralPoint::new(parse::reals(RunConfig::require(&cfg.y, "y")?)?);
        let (r, rhs) = polya_group_identity(&space, &w, &x, &y, samples, seed)?;
        return Ok(report_table(&r, rhs, threshold));
    }
    let a = parse::reals(RunConfig::require(&cfg.a, "a")?)?;
    let s = parse::complexes(RunConfig::require(&cfg.s, "s")?)?;
    let kind = match check {
        Check::Hciz => GroupIntegral::Hciz,
        Check::Gn => GroupIntegral::Gn,
        Check::Bk => GroupIntegral::Bk(polya_core::MatrixSpace::of_kind(
            RunConfig::require(&cfg.space, "space")?.parse()?,
            a.len().max(1),
            cfg.nu.unwrap_or(0),
        )?),
        Check::GroupIdentity => unreachable!(),
    };
    let closed = group_integral_closed(kind, &a, &s)?;
    let r = group_integral_mc(kind, &a, &s, samples, seed)?;
    Ok(report_table(&r, closed, threshold))
}

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let space = parse::space(cfg)?;
    let f1 = parse::sample_family(RunConfig::require(&cfg.family, "family")?)?;
    let f2 = cfg.family2.as_deref().map(parse::sample_family).transpose()?;
    let samples = *RunConfig::require(&cfg.samples, "samples")?;
    let spectra = sample_spectra(&space, f1, f2, samples, cfg.seed()?)?;
    if cfg.ks.unwrap_or(false) {
        let w1 = f1.polya_weight(&space)?;
        let w = match f2 {
            Some(f) => convolve_polya(&space, &w1, &f.polya_weight(&space)?)?,
            None => w1,
        };
        let ks = ks_distance(&Ensemble::polya(space, w)?, &spectra)?;
        let passed = cfg.threshold.is_none_or(|th| ks <= th);
        let mut t = Table::new(["samples", "ks", "passed"]);
        t.push(vec![samples.to_string(), num(ks), passed.to_string()]);
        return Ok(Outcome { table: t, passed });
    }
    let mut t = Table::new(["sample".to_string()].into_iter().chain(numbered("a", space.n())));
    for (i, p) in spectra.iter().enumerate() {
        t.push([i.to_string()].into_iter().chain(p.values().iter().copied().map(num)).collect());
    }
    ok(t)
}
