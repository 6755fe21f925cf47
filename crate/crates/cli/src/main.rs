//! `polya`: command-line front end for polya-core.
//!
//! Exit codes: 0 success, 1 failed verification or PFF witness, 2 bad configuration.

mod commands;
mod config;
mod parse;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Check, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "polya", version, about = "Pólya ensembles: densities, transforms, convolutions, PFF checks and group integrals")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for sampling and PFF trials.
    #[arg(long, global = true, env = "POLYA_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Args, Debug, Default)]
struct SpaceArgs {
    /// G, H2, M, H1even, H1odd or H4.
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Chirality index for M.
    #[arg(long)]
    nu: Option<u32>,
}

#[derive(Args, Debug, Default)]
struct WeightArgs {
    /// `family:key=val,...`, `table:path` or `laplace_pff:deltas=a|b,shift=..,gamma=..,support=half|real`.
    #[arg(long)]
    weight: Option<String>,
    /// Lift the weight to M with this ν before use.
    #[arg(long)]
    lift: Option<f64>,
    /// Map the weight to G through the exponential bridge.
    #[arg(long)]
    bridge: bool,
}

#[derive(Args, Debug, Default)]
struct McArgs {
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pass if the deviation stays within this many standard errors (default 5).
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Joint spectral density at one or more points (`--points "1,2;3,4"`).
    Density {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long)]
        points: Option<String>,
    },
    /// Normalization constant C_n.
    Normalize {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        weight: WeightArgs,
    },
    /// Convolution of two weights on a grid.
    Convolve {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long)]
        weight2: Option<String>,
        #[arg(long)]
        grid: Option<String>,
    },
    /// Univariate transform at complex points, or the multivariate one with `--joint`.
    Transform {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        weight: WeightArgs,
        /// fourier, mellin, hankel or hankel:<order>; defaults to the space's transform.
        #[arg(long)]
        transform: Option<String>,
        /// Comma-separated complex points such as `1+2i,0.5`.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[arg(long)]
        joint: bool,
    },
    /// Search for a violation of the Pólya frequency property.
    PffCheck {
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte Carlo check of a group-integral formula.
    Verify {
        #[command(subcommand)]
        check: VerifyCmd,
    },
    /// Sample spectra of a random-matrix family (or of a sum/product of two).
    Simulate {
        #[command(flatten)]
        space: SpaceArgs,
        /// gaussian:eps=.., laguerre:nu=.., ginibre:nu=.., jacobi:nu=..,mu=..
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        family2: Option<String>,
        /// Report the KS distance to the predicted Pólya ensemble instead of the spectra.
        #[arg(long)]
        ks: bool,
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(Args, Debug, Default)]
struct PairArgs {
    /// Comma-separated real values.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<String>,
    /// Comma-separated complex values.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<String>,
    /// Only checked against the lengths of --a and --s.
    #[arg(long)]
    n: Option<usize>,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Harish-Chandra–Itzykson–Zuber integral over U(n).
    Hciz(PairArgs),
    /// Berezin–Karpelevich integral for a chiral-type space.
    Bk {
        /// M, H1even, H1odd or H4.
        #[arg(long)]
        space: Option<String>,
        #[arg(long)]
        nu: Option<u32>,
        #[command(flatten)]
        pair: PairArgs,
    },
    /// Gelfand–Naimark integral over U(n).
    Gn(PairArgs),
    /// Group-integral identity for the Pólya ensemble of a weight.
    GroupIdentity {
        #[command(flatten)]
        space: SpaceArgs,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[command(flatten)]
        mc: McArgs,
    },
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl SpaceArgs {
    fn into_config(self, c: &mut RunConfig) {
        (c.space, c.n, c.nu) = (self.space, self.n, self.nu);
    }
}

impl WeightArgs {
    fn into_config(self, c: &mut RunConfig) {
        (c.weight, c.lift, c.bridge) = (self.weight, self.lift, flag(self.bridge));
    }
}

impl McArgs {
    fn into_config(self, c: &mut RunConfig) {
        (c.samples, c.seed, c.threshold) = (self.samples, self.seed, self.threshold);
    }
}

impl PairArgs {
    fn into_config(self, c: &mut RunConfig) {
        (c.a, c.s, c.n) = (self.a, self.s, self.n);
        self.mc.into_config(c);
    }
}

/// The flags as a sparse configuration.
fn flags(cmd: Cmd) -> RunConfig {
    let mut c = RunConfig::default();
    match cmd {
        Cmd::Density { space, weight, points } => {
            c.command = Some(Command::Density);
            space.into_config(&mut c);
            weight.into_config(&mut c);
            c.points = points;
        }
        Cmd::Normalize { space, weight } => {
            c.command = Some(Command::Normalize);
            space.into_config(&mut c);
            weight.into_config(&mut c);
        }
        Cmd::Convolve { space, weight, weight2, grid } => {
            c.command = Some(Command::Convolve);
            space.into_config(&mut c);
            weight.into_config(&mut c);
            (c.weight2, c.grid) = (weight2, grid);
        }
        Cmd::Transform { space, weight, transform, s, joint } => {
            c.command = Some(Command::Transform);
            space.into_config(&mut c);
            weight.into_config(&mut c);
            (c.transform, c.s, c.joint) = (transform, s, flag(joint));
        }
        Cmd::PffCheck { weight, order, trials, seed } => {
            c.command = Some(Command::PffCheck);
            weight.into_config(&mut c);
            (c.order, c.trials, c.seed) = (order, trials, seed);
        }
        Cmd::Verify { check } => {
            c.command = Some(Command::Verify);
            match check {
                VerifyCmd::Hciz(p) => {
                    c.check = Some(Check::Hciz);
                    p.into_config(&mut c);
                }
                VerifyCmd::Gn(p) => {
                    c.check = Some(Check::Gn);
                    p.into_config(&mut c);
                }
                VerifyCmd::Bk { space, nu, pair } => {
                    c.check = Some(Check::Bk);
                    (c.space, c.nu) = (space, nu);
                    pair.into_config(&mut c);
                }
                VerifyCmd::GroupIdentity { space, weight, x, y, mc } => {
                    c.check = Some(Check::GroupIdentity);
                    space.into_config(&mut c);
                    weight.into_config(&mut c);
                    (c.x, c.y) = (x, y);
                    mc.into_config(&mut c);
                }
            }
        }
        Cmd::Simulate { space, family, family2, ks, mc } => {
            c.command = Some(Command::Simulate);
            space.into_config(&mut c);
            (c.family, c.family2, c.ks) = (family, family2, flag(ks));
            mc.into_config(&mut c);
        }
    }
    c
}

fn configure(cli: Cli) -> Result<RunConfig> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("cannot start the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut over = cli.command.map(flags).unwrap_or_default();
    // a subcommand given on the command line replaces the file's command but
    // keeps its check unless one was named
    if over.command.is_some() && over.check.is_none() && over.command != cfg.command {
        cfg.check = None;
    }
    over.output = cli.output;
    cfg.overlay(&over);
    if cfg.command.is_none() {
        anyhow::bail!("no command given (use a subcommand or \"command\" in --config)");
    }
    if let (Some(n), Some(a)) = (cfg.n, &cfg.a) {
        if cfg.check != Some(Check::GroupIdentity) && a.split(',').count() != n {
            anyhow::bail!("--n {n} does not match the {} entries of --a", a.split(',').count());
        }
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> Result<bool> {
    let outcome = commands::run(cfg)?;
    let seed = cfg.seed.map_or("none".to_string(), |s| s.to_string());
    let comment = format!("config_hash={} seed={seed}", cfg.hash());
    match &cfg.output {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            outcome.table.write(BufWriter::new(f), &comment)?;
        }
        None => outcome.table.write(io::stdout().lock(), &comment)?,
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(cli).and_then(|cfg| execute(&cfg));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
