//! Command-line parsing and experiment definitions.
//!
//! Every invocation resolves to an [`Experiment`]: a preset, its parameter
//! grids and a fully defaulted base configuration. The experiment is written
//! back out as `config.json`, and `--config config.json` reproduces it.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use tvinpaint::{
    Backend, BoundaryMode, DamagedRegion, InitialIterate, InitialWeight, RunConfig, SolveParams,
};

use crate::error::{CliError, CliResult};
use crate::signal::{generate_signal, load_signal, Generator, SignalFormat};

pub const DEFAULT_ELEMENTS: usize = 300;
pub const DEFAULT_DAMAGE: (f64, f64) = (1.0 / 3.0, 2.0 / 3.0);
pub const DEFAULT_N_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// one run per lambda-tilde value
    LambdaSweep,
    /// one run per tau value
    TauSweep,
    /// the same problem with both backends
    StepCompare,
    SingleRun,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::LambdaSweep => "lambda-sweep",
            Preset::TauSweep => "tau-sweep",
            Preset::StepCompare => "step-compare",
            Preset::SingleRun => "single-run",
        }
    }

    /// Signal used when neither `--signal` nor `--generate` is given. The
    /// sweeps keep the jump outside the default damage so that only the
    /// smooth part has to be inpainted; the comparison puts it inside.
    pub fn default_signal(self) -> Generator {
        let loc = match self {
            Preset::LambdaSweep | Preset::TauSweep => 0.25,
            Preset::StepCompare | Preset::SingleRun => 0.5,
        };
        Generator::Step { lo: 0.0, hi: 1.0, loc }
    }

    pub fn default_lambda_tilde(self) -> Vec<f64> {
        match self {
            Preset::LambdaSweep => vec![10.0, 100.0, 1000.0],
            _ => vec![100.0],
        }
    }

    pub fn default_tau(self) -> Vec<f64> {
        match self {
            Preset::TauSweep => vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5],
            _ => vec![1.0],
        }
    }

    /// The sweeps run a fixed number of outer iterations.
    pub fn default_rel_tol(self) -> Option<f64> {
        match self {
            Preset::LambdaSweep | Preset::TauSweep => None,
            _ => SolveParams::default().rel_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalSpec {
    File {
        path: PathBuf,
        format: SignalFormat,
        header: bool,
    },
    Generate { generator: Generator, samples: usize },
}

impl SignalSpec {
    pub fn load(&self, seed: u64) -> CliResult<Vec<f64>> {
        match self {
            SignalSpec::File { path, format, header } => {
                load_signal(path, *format, *header).map_err(|e| CliError::Io(e.to_string()))
            }
            SignalSpec::Generate { generator, samples } => {
                generate_signal(generator, *samples, seed).map_err(|e| CliError::Usage(e.to_string()))
            }
        }
    }
}

/// A fully resolved experiment. `params.tau` is replaced by each entry of
/// `tau` when the runs are expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub preset: Preset,
    /// ignored by step-compare, which runs both
    pub backend: Backend,
    pub n_elements: usize,
    pub signal: SignalSpec,
    pub damage: DamagedRegion,
    pub lambda_tilde: Vec<f64>,
    pub tau: Vec<f64>,
    pub params: SolveParams,
    pub initial_iterate: InitialIterate,
    pub initial_weight: InitialWeight,
    pub seed: u64,
    pub plot: bool,
}

/// One concrete run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub config: RunConfig,
}

impl Experiment {
    pub fn validate(&self) -> CliResult<()> {
        let usage = |msg: String| Err(CliError::Usage(msg));
        if self.n_elements == 0 {
            return usage("--n-elements must be at least 1, got 0".into());
        }
        if self.lambda_tilde.is_empty() || self.tau.is_empty() {
            return usage("parameter grids must be nonempty".into());
        }
        let single = |what: &str, n: usize| {
            if n == 1 {
                Ok(())
            } else {
                Err(CliError::Usage(format!(
                    "preset {} takes a single {what} value, got {n}",
                    self.preset.name()
                )))
            }
        };
        match self.preset {
            Preset::LambdaSweep => single("--tau", self.tau.len())?,
            Preset::TauSweep => single("--lambda-tilde", self.lambda_tilde.len())?,
            Preset::StepCompare | Preset::SingleRun => {
                single("--lambda-tilde", self.lambda_tilde.len())?;
                single("--tau", self.tau.len())?;
            }
        }
        if let SignalSpec::Generate { generator, .. } = &self.signal {
            generator.check().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        // every grid point has to pass the core checks
        for &lt in &self.lambda_tilde {
            for &tau in &self.tau {
                let cfg = self.base_config(Vec::new(), self.backend, lt, tau);
                cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            }
        }
        Ok(())
    }

    fn base_config(&self, samples: Vec<f64>, backend: Backend, lambda_tilde: f64, tau: f64) -> RunConfig {
        RunConfig {
            backend,
            n_elements: self.n_elements,
            samples,
            damage: self.damage.clone(),
            lambda_tilde,
            params: SolveParams { tau, ..self.params },
            initial_iterate: self.initial_iterate,
            initial_weight: self.initial_weight,
        }
    }

    /// Expand the grids over already loaded samples.
    pub fn runs(&self, samples: &[f64]) -> Vec<RunSpec> {
        let cfg = |backend, lt, tau| self.base_config(samples.to_vec(), backend, lt, tau);
        let (lt0, tau0) = (self.lambda_tilde[0], self.tau[0]);
        match self.preset {
            Preset::SingleRun => vec![RunSpec {
                label: self.backend.name().to_string(),
                config: cfg(self.backend, lt0, tau0),
            }],
            Preset::StepCompare => [Backend::Fem, Backend::Dg]
                .into_iter()
                .map(|b| RunSpec {
                    label: b.name().to_string(),
                    config: cfg(b, lt0, tau0),
                })
                .collect(),
            Preset::LambdaSweep => self
                .lambda_tilde
                .iter()
                .map(|&lt| RunSpec {
                    label: format!("lambda-tilde-{lt}"),
                    config: cfg(self.backend, lt, tau0),
                })
                .collect(),
            Preset::TauSweep => self
                .tau
                .iter()
                .map(|&tau| RunSpec {
                    label: format!("tau-{tau}"),
                    config: cfg(self.backend, lt0, tau),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment serializes")
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let exp: Experiment =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config document: {e}")))?;
        exp.validate()?;
        Ok(exp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Fem,
    Dg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BoundaryArg {
    Neumann,
    WeakDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Raw,
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("damage interval {s:?} must look like a:b"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("damage interval {s:?}: {t:?} is not a number"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_generator(s: &str) -> Result<Generator, String> {
    s.parse().map_err(|e: crate::signal::SignalError| e.to_string())
}

/// `--rel-tol` value; "none" disables the iterate-change test.
#[derive(Debug, Clone, Copy, PartialEq)]
struct RelTol(Option<f64>);

fn parse_rel_tol(s: &str) -> Result<RelTol, String> {
    if s == "none" {
        return Ok(RelTol(None));
    }
    s.parse::<f64>()
        .map(|v| RelTol(Some(v)))
        .map_err(|_| format!("{s:?} is neither a number nor \"none\""))
}

#[derive(Debug, Parser)]
#[command(name = "tvinpaint", version, about = "Total-variation inpainting of damaged 1-D signals")]
struct Args {
    #[arg(long, value_enum, default_value_t = Preset::SingleRun)]
    preset: Preset,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    #[arg(long)]
    n_elements: Option<usize>,
    /// comma list; lambda = 1 / lambda-tilde on observed elements
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lambda_tilde: Vec<f64>,
    /// damaged interval a:b, repeatable
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    damage: Vec<(f64, f64)>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// jump penalty; defaults to 10 * max(w) at every solve
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// comma list of weight relaxation exponents
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    tau: Vec<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// relative iterate-change tolerance, or "none"
    #[arg(long, value_parser = parse_rel_tol)]
    rel_tol: Option<RelTol>,
    #[arg(long, value_enum)]
    boundary: Option<BoundaryArg>,
    /// read samples from a file
    #[arg(long, conflicts_with = "generate")]
    signal: Option<PathBuf>,
    #[arg(long, value_enum, requires = "signal")]
    signal_format: Option<FormatArg>,
    /// skip the first line of the signal file
    #[arg(long, requires = "signal")]
    header: bool,
    /// step:lo,hi,loc | ramp:lo,hi | piecewise:v1,v2,... | random:pieces
    #[arg(long, value_parser = parse_generator)]
    generate: Option<Generator>,
    /// sample count of a generated signal
    #[arg(long, conflicts_with = "signal")]
    samples: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// seed of the random generator
    #[arg(long)]
    seed: Option<u64>,
    /// also write plot.svg per run
    #[arg(long)]
    plot: bool,
    /// load a config.json echo instead of the flags above
    #[arg(long, conflicts_with_all = [
        "backend", "n_elements", "lambda_tilde", "damage", "epsilon", "alpha", "beta", "tau",
        "n_max", "rel_tol", "boundary", "signal", "generate", "samples", "seed", "plot",
    ])]
    config: Option<PathBuf>,
}

/// What to run and where to write it.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub experiment: Experiment,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Run(Invocation),
    /// help or version text; not an error
    Info(String),
}

pub fn parse_config<I, T>(args: I) -> CliResult<Parsed>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.to_string())),
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    let experiment = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
            Experiment::from_json(&text)?
        }
        None => resolve(&args)?,
    };
    Ok(Parsed::Run(Invocation {
        experiment,
        out: args.out,
    }))
}

fn resolve(args: &Args) -> CliResult<Experiment> {
    let preset = args.preset;
    if preset == Preset::StepCompare && args.backend.is_some() {
        return Err(CliError::Usage("step-compare always runs both backends; drop --backend".into()));
    }
    let n_elements = args.n_elements.unwrap_or(DEFAULT_ELEMENTS);
    let defaults = SolveParams::default();
    let params = SolveParams {
        epsilon: args.epsilon.unwrap_or(defaults.epsilon),
        alpha: args.alpha.or(defaults.alpha),
        beta: args.beta.unwrap_or(defaults.beta),
        tau: defaults.tau,
        n_max: args.n_max.unwrap_or(DEFAULT_N_MAX),
        rel_tol: args.rel_tol.map_or(preset.default_rel_tol(), |r| r.0),
        boundary_mode: match args.boundary {
            Some(BoundaryArg::WeakDirichlet) => BoundaryMode::WeakDirichlet,
            Some(BoundaryArg::Neumann) | None => BoundaryMode::Neumann,
        },
    };
    let signal = match (&args.signal, &args.generate) {
        (Some(path), _) => SignalSpec::File {
            path: path.clone(),
            format: match args.signal_format {
                Some(FormatArg::Csv) => SignalFormat::Csv,
                Some(FormatArg::Raw) => SignalFormat::RawFloats,
                None => SignalFormat::guess(path),
            },
            header: args.header,
        },
        (None, generator) => SignalSpec::Generate {
            generator: generator.clone().unwrap_or_else(|| preset.default_signal()),
            samples: args.samples.unwrap_or(n_elements),
        },
    };
    let intervals = if args.damage.is_empty() {
        vec![DEFAULT_DAMAGE]
    } else {
        args.damage.clone()
    };
    let damage = DamagedRegion::new(intervals).map_err(|e| CliError::Usage(format!("--damage: {e}")))?;
    let or_default = |v: &Vec<f64>, d: Vec<f64>| if v.is_empty() { d } else { v.clone() };
    let tau = or_default(&args.tau, preset.default_tau());
    let experiment = Experiment {
        preset,
        backend: match args.backend {
            Some(BackendArg::Dg) => Backend::Dg,
            Some(BackendArg::Fem) | None => Backend::Fem,
        },
        n_elements,
        signal,
        damage,
        lambda_tilde: or_default(&args.lambda_tilde, preset.default_lambda_tilde()),
        params: SolveParams { tau: tau[0], ..params },
        tau,
        initial_iterate: InitialIterate::Zero,
        initial_weight: InitialWeight::default(),
        seed: args.seed.unwrap_or(0),
        plot: args.plot,
    };
    experiment.validate()?;
    Ok(experiment)
}

/// Write the echo that `--config` reads back.
pub fn write_echo(experiment: &Experiment, path: &Path) -> CliResult<()> {
    std::fs::write(path, experiment.to_json() + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CliResult<Experiment> {
        let full = std::iter::once("tvinpaint").chain(args.iter().copied());
        match parse_config(full)? {
            Parsed::Run(inv) => Ok(inv.experiment),
            Parsed::Info(text) => panic!("unexpected info {text}"),
        }
    }

    fn usage_error(args: &[&str]) -> String {
        match parse(args) {
            Err(CliError::Usage(msg)) => msg,
            other => panic!("expected a usage error, got {other:?}"),
        }
    }

    #[test]
    fn lambda_sweep_grid() {
        let exp = parse(&["--preset", "lambda-sweep", "--lambda-tilde", "10,100,1000", "--damage", "0.3333:0.6667"]).unwrap();
        assert_eq!(exp.lambda_tilde, vec![10.0, 100.0, 1000.0]);
        assert_eq!(exp.damage.intervals(), &[(0.3333, 0.6667)]);
        let runs = exp.runs(&exp.signal.load(exp.seed).unwrap());
        assert_eq!(runs.len(), 3);
        let lts: Vec<f64> = runs.iter().map(|r| r.config.lambda_tilde).collect();
        assert_eq!(lts, vec![10.0, 100.0, 1000.0]);
    }

    #[test]
    fn tau_sweep_grid() {
        let exp = parse(&["--preset", "tau-sweep", "--tau", "1,0.9,0.8,0.7,0.6,0.5", "--n-max", "20"]).unwrap();
        let runs = exp.runs(&exp.signal.load(0).unwrap());
        assert_eq!(runs.len(), 6);
        assert!(runs.iter().all(|r| r.config.params.n_max == 20));
        assert_eq!(runs[3].config.params.tau, 0.7);
    }

    #[test]
    fn step_compare_runs_both_backends() {
        let exp = parse(&["--preset", "step-compare"]).unwrap();
        let runs = exp.runs(&exp.signal.load(0).unwrap());
        let backends: Vec<Backend> = runs.iter().map(|r| r.config.backend).collect();
        assert_eq!(backends, vec![Backend::Fem, Backend::Dg]);
        assert!(usage_error(&["--preset", "step-compare", "--backend", "dg"]).contains("both backends"));
    }

    #[test]
    fn defaults_resolved() {
        let exp = parse(&[]).unwrap();
        assert_eq!(exp.preset, Preset::SingleRun);
        assert_eq!(exp.n_elements, 300);
        assert_eq!(exp.damage.intervals(), &[DEFAULT_DAMAGE]);
        assert_eq!(exp.params.n_max, 20);
        assert_eq!(
            exp.signal,
            SignalSpec::Generate {
                generator: Generator::Step { lo: 0.0, hi: 1.0, loc: 0.5 },
                samples: 300
            }
        );
        let sweep = parse(&["--preset", "tau-sweep"]).unwrap();
        assert_eq!(sweep.params.rel_tol, None);
        assert_eq!(sweep.tau.len(), 6);
    }

    #[test]
    fn invalid_inputs_are_usage_errors() {
        assert!(usage_error(&["--n-elements", "0"]).contains("n-elements"));
        assert!(usage_error(&["--damage", "0.2-0.4"]).contains("0.2-0.4"));
        assert!(usage_error(&["--damage", "0.6:0.4"]).contains("damage"));
        assert!(usage_error(&["--frobnicate"]).contains("--frobnicate"));
        assert!(usage_error(&["--epsilon", "2"]).contains("epsilon"));
        assert!(usage_error(&["--lambda-tilde", "-1"]).contains("lambda_tilde"));
        assert!(usage_error(&["--tau", "1,0.5"]).contains("--tau"));
        assert!(usage_error(&["--generate", "step:0,1,0"]).contains("(0, 1)"));
        assert!(usage_error(&["--rel-tol", "tight"]).contains("tight"));
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(matches!(parse_config(["tvinpaint", "--help"]), Ok(Parsed::Info(_))));
    }

    #[test]
    fn echo_round_trip() {
        let exp = parse(&[
            "--preset", "lambda-sweep", "--backend", "dg", "--damage", "0.1:0.2", "--damage", "0.5:0.7",
            "--alpha", "3.5", "--boundary", "weak-dirichlet", "--rel-tol", "none", "--generate",
            "piecewise:0,1,1,0.5", "--samples", "123", "--seed", "4",
        ])
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        write_echo(&exp, &path).unwrap();
        let back = parse(&["--config", path.to_str().unwrap()]).unwrap();
        assert_eq!(back, exp);
        let samples = exp.signal.load(exp.seed).unwrap();
        assert_eq!(back.runs(&samples), exp.runs(&samples));
    }

    #[test]
    fn config_conflicts_with_flags() {
        assert!(usage_error(&["--config", "x.json", "--tau", "1"]).contains("--config"));
    }
}
