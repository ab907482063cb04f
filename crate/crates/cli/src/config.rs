//! Experiment parameters. Each subcommand's flags double as the keys of a
//! `run --config` TOML file, so both routes produce the same configuration.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::suite::Profile;

#[derive(Debug, Parser)]
#[command(name = "ergodyn", version, about = "Flip, switching and driven-chain experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    #[command(flatten)]
    Experiment(Experiment),
    /// Run the acceptance battery and print one line per criterion.
    Verify(VerifyArgs),
    /// Run an experiment described by a TOML file.
    Run(RunArgs),
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    /// Velocity-flip time averages against microcanonical references.
    FlipSim(FlipSimArgs),
    /// Lie closure and spectral criterion for two Hermitian matrices.
    QcCheck(QcCheckArgs),
    /// Random switching: Haar moment tests and Cesàro averages.
    QcSim(QcSimArgs),
    /// Stationary (or lagged) covariance of the driven chain.
    Cov(CovArgs),
    /// Cross-check the covariance against stochastic simulation.
    CovVerify(CovVerifyArgs),
    /// Covariances on growing truncations of a graph.
    ThermoScan(ThermoScanArgs),
    /// Dimension of the undamped subspace and mixing diagnostics.
    Ldim(LdimArgs),
    /// Fraction of random Hermitian pairs or local Hamiltonians that are generic.
    GenericSample(GenericSampleArgs),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FlipSim(_) => "flip-sim",
            Experiment::QcCheck(_) => "qc-check",
            Experiment::QcSim(_) => "qc-sim",
            Experiment::Cov(_) => "cov",
            Experiment::CovVerify(_) => "cov-verify",
            Experiment::ThermoScan(_) => "thermo-scan",
            Experiment::Ldim(_) => "ldim",
            Experiment::GenericSample(_) => "generic-sample",
        }
    }

    pub fn output(&self) -> OutputArgs {
        let (out, format) = match self {
            Experiment::FlipSim(a) => (&a.out, a.format),
            Experiment::QcCheck(a) => (&a.out, a.format),
            Experiment::QcSim(a) => (&a.out, a.format),
            Experiment::Cov(a) => (&a.out, a.format),
            Experiment::CovVerify(a) => (&a.out, a.format),
            Experiment::ThermoScan(a) => (&a.out, a.format),
            Experiment::Ldim(a) => (&a.out, a.format),
            Experiment::GenericSample(a) => (&a.out, a.format),
        };
        OutputArgs { out: out.clone(), format }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Where results go. Without `out` the JSON envelope is printed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputArgs {
    pub out: Option<PathBuf>,
    /// Defaults to `csv` for `.csv` paths and `json` otherwise.
    pub format: Option<Format>,
}

impl OutputArgs {
    pub fn effective_format(&self) -> Format {
        self.format.unwrap_or_else(|| match &self.out {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => Format::Csv,
            _ => Format::Json,
        })
    }
}

pub fn require_path<'a>(key: &str, path: &'a Path) -> Result<&'a Path> {
    if path.as_os_str().is_empty() {
        return Err(CliError::config(key, "missing required path"));
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlipSimArgs {
    /// Interaction matrix `V` (whitespace or CSV).
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub energy: f64,
    /// `exp:RATE`, `gamma:SHAPE,RATE` or `uniform:B`.
    #[arg(long, default_value = "exp:1")]
    pub clock: String,
    #[arg(long, default_value_t = 1e5)]
    pub time: f64,
    #[arg(long, default_value_t = 8)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated, e.g. `p1^2,p2^2,q1q2,H1`.
    #[arg(long, default_value = "p1^2,p2^2,q1q2")]
    pub observables: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub reference_samples: usize,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for FlipSimArgs {
    fn default() -> Self {
        FlipSimArgs {
            matrix: PathBuf::new(),
            energy: 1.0,
            clock: "exp:1".into(),
            time: 1e5,
            replicas: 8,
            seed: 0,
            observables: "p1^2,p2^2,q1q2".into(),
            reference_samples: 1_000_000,
            threshold: 0.05,
            out: None, format: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcCheckArgs {
    /// First Hermitian matrix; complex entries as `re,im`.
    #[arg(long)]
    pub h1: PathBuf,
    #[arg(long)]
    pub h2: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcSimArgs {
    #[arg(long)]
    pub h1: PathBuf,
    #[arg(long)]
    pub h2: PathBuf,
    /// Switches per run for the Haar moment test.
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub runs: usize,
    #[arg(long, default_value = "exp:1")]
    pub clock: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Horizon of the Cesàro averages started from `e₁`.
    #[arg(long, default_value_t = 1e4)]
    pub horizon: f64,
    /// Largest accepted `|z|` in the moment test.
    #[arg(long, default_value_t = 4.0)]
    pub z_threshold: f64,
    /// Largest accepted deviation of a Cesàro average from its limit.
    #[arg(long, default_value_t = 0.05)]
    pub cesaro_tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for QcSimArgs {
    fn default() -> Self {
        QcSimArgs {
            h1: PathBuf::new(),
            h2: PathBuf::new(),
            steps: 50,
            runs: 2000,
            clock: "exp:1".into(),
            seed: 0,
            horizon: 1e4,
            z_threshold: 4.0,
            cesaro_tolerance: 0.05,
            out: None, format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// `white:SIGMA2`, `gauss`, `gauss:A,L`, `bspline:A,W`, `exp:A,R` or sums.
    #[arg(long, default_value = "gauss")]
    pub kernel: String,
    /// Time lag `s` of `E ψ(t)ψ(t+s)ᵀ`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lag: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for CovArgs {
    fn default() -> Self {
        CovArgs { matrix: PathBuf::new(), alpha: 1.0, kernel: "gauss".into(), lag: 0.0, out: None, format: None }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovVerifyArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value = "gauss")]
    pub kernel: String,
    #[arg(long, default_value_t = 1e4)]
    pub time: f64,
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    #[arg(long, default_value_t = 32)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Cosines per path for smooth kernels.
    #[arg(long, default_value_t = 512)]
    pub frequencies: usize,
    /// Largest accepted relative error on the checked entries.
    #[arg(long, default_value_t = 0.1)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for CovVerifyArgs {
    fn default() -> Self {
        CovVerifyArgs {
            matrix: PathBuf::new(),
            alpha: 1.0,
            kernel: "gauss".into(),
            time: 1e4,
            dt: 0.02,
            paths: 32,
            seed: 0,
            frequencies: 512,
            tolerance: 0.1,
            out: None, format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoScanArgs {
    /// `chain:N1,N2,...`, `star:...` or `complete:...`, increasing.
    #[arg(long, default_value = "chain:8,16,32")]
    pub graph: String,
    /// Vertex pair `i,j` (1-based); repeatable.
    #[arg(long = "probe", default_value = "1,2")]
    pub probes: Vec<String>,
    /// Diagonal of the nearest-neighbour template.
    #[arg(long, default_value_t = 3.0)]
    pub diag: f64,
    /// Coupling of the nearest-neighbour template.
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    pub off: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value = "gauss:1,5")]
    pub kernel: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for ThermoScanArgs {
    fn default() -> Self {
        ThermoScanArgs {
            graph: "chain:8,16,32".into(),
            probes: vec!["1,2".into()],
            diag: 3.0,
            off: -1.0,
            alpha: 1.0,
            kernel: "gauss:1,5".into(),
            out: None, format: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdimArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Damping used for the spectral abscissa of the drift.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for LdimArgs {
    fn default() -> Self {
        LdimArgs { matrix: PathBuf::new(), alpha: 1.0, out: None, format: None }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenericSampleArgs {
    /// Sample Hermitian pairs of this dimension.
    #[arg(long, conflicts_with = "graph")]
    pub dim: Option<usize>,
    /// Sample local Hamiltonians on this graph (`chain:N`, `star:N`, `complete:N`).
    #[arg(long)]
    pub graph: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `json` or `csv`; defaults from the extension of `--out`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Default for GenericSampleArgs {
    fn default() -> Self {
        GenericSampleArgs { dim: None, graph: None, samples: 200, seed: 0, out: None, format: None }
    }
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Profile::Quick)]
    pub profile: Profile,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the summary as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Parses a TOML experiment description: `experiment = "<subcommand>"` plus
/// the subcommand's flags as keys (with `_` for `-`).
pub fn parse_config(text: &str, path: &Path) -> Result<Experiment> {
    toml::from_str(text).map_err(|e| CliError::ConfigFile { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_config(path: &Path) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Experiment {
        let cli = Cli::try_parse_from(std::iter::once("ergodyn").chain(args.iter().copied())).unwrap();
        match cli.command {
            Command::Experiment(e) => e,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn flag_defaults_match_config_defaults() {
        let x = || PathBuf::from("x");
        let cases = [
            (parse(&["flip-sim", "--matrix", "x"]), Experiment::FlipSim(FlipSimArgs { matrix: x(), ..Default::default() })),
            (
                parse(&["qc-check", "--h1", "x", "--h2", "x"]),
                Experiment::QcCheck(QcCheckArgs { h1: x(), h2: x(), ..Default::default() }),
            ),
            (
                parse(&["qc-sim", "--h1", "x", "--h2", "x"]),
                Experiment::QcSim(QcSimArgs { h1: x(), h2: x(), ..Default::default() }),
            ),
            (parse(&["cov", "--matrix", "x"]), Experiment::Cov(CovArgs { matrix: x(), ..Default::default() })),
            (
                parse(&["cov-verify", "--matrix", "x"]),
                Experiment::CovVerify(CovVerifyArgs { matrix: x(), ..Default::default() }),
            ),
            (parse(&["thermo-scan"]), Experiment::ThermoScan(ThermoScanArgs::default())),
            (parse(&["ldim", "--matrix", "x"]), Experiment::Ldim(LdimArgs { matrix: x(), ..Default::default() })),
            (parse(&["generic-sample"]), Experiment::GenericSample(GenericSampleArgs::default())),
        ];
        for (flags, defaults) in cases {
            assert_eq!(flags, defaults);
        }
    }

    #[test]
    fn toml_config_round_trip() {
        let text = "experiment = \"cov\"\nmatrix = \"v.txt\"\nkernel = \"white:1.0\"\nalpha = 0.5\nout = \"c.csv\"\n";
        let e = parse_config(text, Path::new("x.toml")).unwrap();
        let Experiment::Cov(c) = &e else { panic!("{e:?}") };
        assert_eq!(c.alpha, 0.5);
        assert_eq!(c.lag, 0.0);
        assert_eq!(e.output().effective_format(), Format::Csv);
        let again: Experiment = toml::from_str(&toml::to_string(&e).unwrap()).unwrap();
        assert_eq!(again, e);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config("experiment = \"ldim\"\nmatrix = \"v\"\nalpah = 1.0\n", Path::new("bad.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("alpah") && msg.contains("bad.toml"), "{msg}");
        let err = parse_config("experiment = \"nope\"\n", Path::new("bad.toml")).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }
}
