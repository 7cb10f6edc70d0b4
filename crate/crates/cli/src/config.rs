//! Command-line flags and the optional TOML config file.
//!
//! Every key of the file mirrors a long flag with `-` spelled `_`. Flags win
//! over the file; `RIESZ_CACHE_DIR` wins over the file's `cache_dir`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use riesz_lab::{Error, Result};

pub const CACHE_ENV: &str = "RIESZ_CACHE_DIR";
pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_T0: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Coeffs,
    Riesz,
    Perron,
    Contour,
    Reduce,
    Growth,
    Residue,
    ProbeIdentity,
}

#[derive(Debug, Parser)]
#[command(name = "riesz-lab", version, about = "Riesz mean experiments on Dirichlet series")]
pub struct Cli {
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Coefficient cache directory (also RIESZ_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Report path stem; writes STEM.csv, STEM.json and STEM.meta.json.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args, Default)]
pub struct TestbedArgs {
    /// zeta, zeta2, rs-delta, eisenstein:<im,...>, rs-eisenstein:<im,...>
    #[arg(long)]
    pub testbed: Option<String>,
    /// Largest n for which tau(n) may be computed.
    #[arg(long)]
    pub tau_cap: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub xmin: Option<f64>,
    #[arg(long)]
    pub xmax: Option<f64>,
    #[arg(long)]
    pub grid_ratio: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sieve a coefficient table.
    Coeffs {
        #[command(flatten)]
        tb: TestbedArgs,
        #[arg(long)]
        cutoff: Option<f64>,
    },
    /// Riesz means against the residue main term.
    Riesz {
        #[command(flatten)]
        tb: TestbedArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        prime_cutoff: Option<f64>,
    },
    /// Truncation error of the Perron kernel against T.
    Perron {
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<u32>>,
        #[arg(long, value_delimiter = ',')]
        y: Option<Vec<f64>>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Rectangle contour integral against the enclosed residues.
    Contour {
        #[command(flatten)]
        tb: TestbedArgs,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        c: Option<f64>,
        /// Box height (default x/10).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        left_sigma: Option<f64>,
        #[arg(long)]
        prime_cutoff: Option<f64>,
    },
    /// Descend from a Riesz mean to partial sums through sandwich bounds.
    Reduce {
        #[command(flatten)]
        tb: TestbedArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        k1: Option<u32>,
        /// Main-term constant (default: sourced from the testbed).
        #[arg(long)]
        residue: Option<f64>,
        #[arg(long)]
        delta_factor: Option<f64>,
        /// E_1(x) = e_factor * x.
        #[arg(long)]
        e_factor: Option<f64>,
        #[arg(long)]
        prime_cutoff: Option<f64>,
    },
    /// Windowed maxima of |L(sigma + it)|, or the conversion-factor exponent.
    Growth {
        #[command(flatten)]
        tb: TestbedArgs,
        #[arg(long, allow_hyphen_values = true)]
        sigma: Option<f64>,
        /// Start of the first window.
        #[arg(long)]
        t0: Option<f64>,
        #[arg(long)]
        windows: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        /// Fit |L(sigma+it)| / |L(1-sigma-it)| instead.
        #[arg(long)]
        conversion: bool,
        #[arg(long)]
        tmin: Option<f64>,
        #[arg(long)]
        tmax: Option<f64>,
    },
    /// Residue at s = 1 by every applicable method.
    Residue {
        #[command(flatten)]
        tb: TestbedArgs,
        #[arg(long)]
        prime_cutoff: Option<f64>,
    },
    /// Compare a Riesz mean with the average of the next lower one.
    ProbeIdentity {
        #[command(flatten)]
        tb: TestbedArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        k: Option<u32>,
    },
}

/// Flat view of every setting, as read from the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub command: Option<CommandName>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    pub epsilon: Option<f64>,
    pub testbed: Option<String>,
    pub tau_cap: Option<f64>,
    pub cutoff: Option<f64>,
    pub xmin: Option<f64>,
    pub xmax: Option<f64>,
    pub grid_ratio: Option<f64>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub k: Option<Vec<u32>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub y: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub tmin: Option<f64>,
    pub tmax: Option<f64>,
    pub x: Option<f64>,
    pub t: Option<f64>,
    pub left_sigma: Option<f64>,
    pub k1: Option<u32>,
    pub residue: Option<f64>,
    pub delta_factor: Option<f64>,
    pub e_factor: Option<f64>,
    pub sigma: Option<f64>,
    pub t0: Option<f64>,
    pub windows: Option<usize>,
    pub step: Option<f64>,
    pub conversion: Option<bool>,
    pub prime_cutoff: Option<f64>,
}

/// Accepts `k = 3` as well as `k = [1, 2]`.
fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(Some(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    }))
}

macro_rules! overlay {
    ($p:expr, $src:expr, $($f:ident),*) => {
        $( if let Some(v) = &$src.$f { $p.$f = Some(v.clone()); } )*
    };
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {}", path.display(), one_line(&e.to_string()))))
    }

    fn testbed(&mut self, tb: &TestbedArgs) {
        overlay!(self, tb, testbed, tau_cap);
    }

    fn grid(&mut self, g: &GridArgs) {
        overlay!(self, g, xmin, xmax, grid_ratio);
    }

    /// Applies flags on top of file values.
    pub fn apply(&mut self, cli: &Cli) {
        overlay!(self, cli, cache_dir, out, format, workers, epsilon);
        let Some(cmd) = &cli.command else { return };
        let single = |k: &Option<u32>| k.map(|k| vec![k]);
        match cmd {
            Command::Coeffs { tb, cutoff } => {
                self.command = Some(CommandName::Coeffs);
                self.testbed(tb);
                if cutoff.is_some() {
                    self.cutoff = *cutoff;
                }
            }
            Command::Riesz { tb, grid, k, prime_cutoff } => {
                self.command = Some(CommandName::Riesz);
                self.testbed(tb);
                self.grid(grid);
                if let Some(k) = single(k) {
                    self.k = Some(k);
                }
                if prime_cutoff.is_some() {
                    self.prime_cutoff = *prime_cutoff;
                }
            }
            Command::Perron { k, y, c, tmin, tmax } => {
                self.command = Some(CommandName::Perron);
                if k.is_some() {
                    self.k = k.clone();
                }
                if y.is_some() {
                    self.y = y.clone();
                }
                for (dst, src) in [(&mut self.c, c), (&mut self.tmin, tmin), (&mut self.tmax, tmax)] {
                    if src.is_some() {
                        *dst = *src;
                    }
                }
            }
            Command::Contour { tb, x, k, c, t, left_sigma, prime_cutoff } => {
                self.command = Some(CommandName::Contour);
                self.testbed(tb);
                if let Some(k) = single(k) {
                    self.k = Some(k);
                }
                for (dst, src) in [
                    (&mut self.x, x),
                    (&mut self.c, c),
                    (&mut self.t, t),
                    (&mut self.left_sigma, left_sigma),
                    (&mut self.prime_cutoff, prime_cutoff),
                ] {
                    if src.is_some() {
                        *dst = *src;
                    }
                }
            }
            Command::Reduce { tb, grid, k1, residue, delta_factor, e_factor, prime_cutoff } => {
                self.command = Some(CommandName::Reduce);
                self.testbed(tb);
                self.grid(grid);
                if k1.is_some() {
                    self.k1 = *k1;
                }
                for (dst, src) in [
                    (&mut self.residue, residue),
                    (&mut self.delta_factor, delta_factor),
                    (&mut self.e_factor, e_factor),
                    (&mut self.prime_cutoff, prime_cutoff),
                ] {
                    if src.is_some() {
                        *dst = *src;
                    }
                }
            }
            Command::Growth { tb, sigma, t0, windows, step, conversion, tmin, tmax } => {
                self.command = Some(CommandName::Growth);
                self.testbed(tb);
                if windows.is_some() {
                    self.windows = *windows;
                }
                if *conversion {
                    self.conversion = Some(true);
                }
                for (dst, src) in [
                    (&mut self.sigma, sigma),
                    (&mut self.t0, t0),
                    (&mut self.step, step),
                    (&mut self.tmin, tmin),
                    (&mut self.tmax, tmax),
                ] {
                    if src.is_some() {
                        *dst = *src;
                    }
                }
            }
            Command::Residue { tb, prime_cutoff } => {
                self.command = Some(CommandName::Residue);
                self.testbed(tb);
                if prime_cutoff.is_some() {
                    self.prime_cutoff = *prime_cutoff;
                }
            }
            Command::ProbeIdentity { tb, grid, k } => {
                self.command = Some(CommandName::ProbeIdentity);
                self.testbed(tb);
                self.grid(grid);
                if let Some(k) = single(k) {
                    self.k = Some(k);
                }
            }
        }
    }
}

pub fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}
