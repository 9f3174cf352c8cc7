//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Keys accepted in the file (all optional, flags win):
//!
//! | key | meaning |
//! |-----|---------|
//! | `command` | `validate`, `rates`, `complex-rates`, `region`, `normality`, `oracle-check` |
//! | `potential` | catalog name, optionally with a `-mirror` suffix |
//! | `params` | table of catalog parameters, e.g. `{ m = 1.0, gamma = 2.0 }` |
//! | `n` | WKB order for real sweeps |
//! | `N` | order for complex sweeps and regions |
//! | `lambdas`, `betas` | range spec `a:b:xK`, `a:b:+d` or `a,b,c` |
//! | `lambda`, `beta`, `alpha` | single spectral point for `oracle-check`; `alpha` also fixes a constant α in `complex-rates` |
//! | `family`, `gamma`, `eta`, `beta0`, `mass` | region parameters |
//! | `c` | constant in κ(β, c), default 0.9 |
//! | `eps1` | ε₁ for predicted slopes, default 0.5 |
//! | `oracle` | run the finite-difference oracle in sweeps, default true |
//! | `oracle_step` | oracle grid spacing |
//! | `grid_lo`, `grid_hi`, `grid_nodes` | grid for `validate` and `normality` |
//! | `tol` | algebraic tolerance for `normality` |
//! | `draws`, `seed` | randomized normality suite |
//! | `output` | CSV (or JSON) artifact path, stdout when absent |
//! | `report` | JSON report path |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use diracwkb::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Validate,
    Rates,
    ComplexRates,
    Region,
    Normality,
    OracleCheck,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draws: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// WKB pseudomodes for one-dimensional Dirac operators.
#[derive(Debug, Parser)]
#[command(name = "diracwkb", version)]
pub struct Cli {
    /// Operation to run; may instead come from the config file.
    #[arg(value_enum)]
    pub command: Option<Command>,
    /// TOML file with run settings (flags override it).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub potential: Option<String>,
    /// Catalog parameter `key=value`, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    /// Real sweep, e.g. `100:1600:x2`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambdas: Option<String>,
    /// Imaginary-part sweep, e.g. `20:320:x2`.
    #[arg(long)]
    pub betas: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub eps1: Option<f64>,
    /// Skip the finite-difference oracle in sweeps.
    #[arg(long)]
    pub no_oracle: bool,
    #[arg(long)]
    pub oracle_step: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_lo: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub grid_hi: Option<f64>,
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Number of random normal and near-miss draws for `normality`.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Artifact path; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn load_file(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::invalid("config", e.message().to_string()))
}

fn parse_param(s: &str) -> Result<(String, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::invalid("param", format!("'{s}' is not KEY=VALUE")))?;
    let v: f64 = v.trim().parse().map_err(|_| Error::invalid("param", format!("'{v}' is not a number")))?;
    Ok((k.trim().to_string(), v))
}

impl Cli {
    /// The file settings (if any) overridden by every flag given.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => load_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f.clone(); } )* };
        }
        over!(
            command, potential, n, big_n, lambdas, betas, lambda, beta, alpha, family, gamma, eta, beta0, mass, c,
            eps1, oracle_step, grid_lo, grid_hi, grid_nodes, tol, draws, seed, output, report
        );
        if self.no_oracle {
            c.oracle = Some(false);
        }
        for p in &self.params {
            let (k, v) = parse_param(p)?;
            c.params.insert(k, v);
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("diracwkb").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_from_examples() {
        let c = cli(&["rates", "--potential", "bounded-electric", "--n", "1", "--lambdas", "100:1600:x2"]).resolve().unwrap();
        assert_eq!(c.command, Some(Command::Rates));
        assert_eq!(c.n, Some(1));
        assert_eq!(c.lambdas.as_deref(), Some("100:1600:x2"));
        let c = cli(&["region", "--family", "polynomial", "--gamma", "2", "--N", "10"]).resolve().unwrap();
        assert_eq!(c.big_n, Some(10));
        let c = cli(&["rates", "--lambdas", "-100:-1600:x2", "--param", "m=0.5"]).resolve().unwrap();
        assert_eq!(c.lambdas.as_deref(), Some("-100:-1600:x2"));
        assert_eq!(c.params["m"], 0.5);
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "command = \"complex-rates\"\npotential = \"exponential\"\nN = 3\nbetas = \"2:8:x2\"\n[params]\ngamma = 2.0\n").unwrap();
        let c = cli(&["--config", path.to_str().unwrap(), "--N", "2", "--param", "v=0.5"]).resolve().unwrap();
        assert_eq!(c.command, Some(Command::ComplexRates));
        assert_eq!(c.big_n, Some(2));
        assert_eq!(c.params.len(), 2);
        std::fs::write(&path, "potentail = \"zero\"\n").unwrap();
        assert!(cli(&["--config", path.to_str().unwrap()]).resolve().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = cli(&["oracle-check", "--potential", "bounded-electric", "--n", "2", "--lambda", "-400", "--param", "m=0.25", "--no-oracle"])
            .resolve()
            .unwrap();
        let json = serde_json::to_value(&c).unwrap();
        assert_eq!(serde_json::from_value::<RunConfig>(json).unwrap(), c);
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
    }
}
