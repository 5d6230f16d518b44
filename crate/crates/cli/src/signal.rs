//! Reading and synthesizing sampled signals. Samples are taken to be
//! uniform on [0, 1], sample k sitting at k / (S - 1).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalFormat {
    /// last comma-separated column of each row
    Csv,
    /// one number per line
    RawFloats,
}

impl SignalFormat {
    /// `.csv` files are read as CSV, everything else as raw floats.
    pub fn guess(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SignalFormat::Csv,
            _ => SignalFormat::RawFloats,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("cannot read {path}: {reason}")]
    Read { path: PathBuf, reason: String },
    #[error("{path}:{line}: cannot parse {token:?} as a number")]
    Parse {
        path: PathBuf,
        line: u64,
        token: String,
    },
    #[error("{0}: no samples")]
    Empty(PathBuf),
    #[error("invalid signal generator: {0}")]
    Generator(String),
}

pub fn load_signal(path: &Path, format: SignalFormat, skip_header: bool) -> Result<Vec<f64>, SignalError> {
    let read_err = |e: &dyn fmt::Display| SignalError::Read {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    let parse = |line: u64, token: &str| {
        token.trim().parse::<f64>().map_err(|_| SignalError::Parse {
            path: path.to_path_buf(),
            line,
            token: token.trim().to_string(),
        })
    };
    let mut values = Vec::new();
    match format {
        SignalFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(skip_header)
                .flexible(true)
                .from_path(path)
                .map_err(|e| read_err(&e))?;
            for record in reader.records() {
                let record = record.map_err(|e| read_err(&e))?;
                let line = record.position().map_or(0, |p| p.line());
                let Some(last) = record.iter().last() else {
                    continue;
                };
                values.push(parse(line, last)?);
            }
        }
        SignalFormat::RawFloats => {
            let text = std::fs::read_to_string(path).map_err(|e| read_err(&e))?;
            for (i, line) in text.lines().enumerate().skip(usize::from(skip_header)) {
                if line.trim().is_empty() {
                    continue;
                }
                values.push(parse(i as u64 + 1, line)?);
            }
        }
    }
    if values.is_empty() {
        return Err(SignalError::Empty(path.to_path_buf()));
    }
    Ok(values)
}

/// Synthetic test signals. Written on the command line as `kind:p1,p2,...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// `lo` before `loc`, `hi` from `loc` on
    Step { lo: f64, hi: f64, loc: f64 },
    Ramp { lo: f64, hi: f64 },
    /// equal-length constant pieces
    Piecewise { levels: Vec<f64> },
    /// `pieces` equal-length pieces with uniform random levels in [0, 1)
    Random { pieces: usize },
}

impl FromStr for Generator {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| SignalError::Generator(format!("{s:?}: {msg}"));
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>, SignalError> {
            rest.split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad(&format!("{t:?} is not a number"))))
                .collect()
        };
        let gen = match kind {
            "step" => match nums()?[..] {
                [lo, hi, loc] => Generator::Step { lo, hi, loc },
                _ => return Err(bad("expected step:lo,hi,loc")),
            },
            "ramp" => match nums()?[..] {
                [lo, hi] => Generator::Ramp { lo, hi },
                _ => return Err(bad("expected ramp:lo,hi")),
            },
            "piecewise" => Generator::Piecewise { levels: nums()? },
            "random" => Generator::Random {
                pieces: rest.trim().parse().map_err(|_| bad("expected random:pieces"))?,
            },
            _ => return Err(bad("unknown kind (step, ramp, piecewise, random)")),
        };
        gen.check()?;
        Ok(gen)
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Step { lo, hi, loc } => write!(f, "step:{lo},{hi},{loc}"),
            Generator::Ramp { lo, hi } => write!(f, "ramp:{lo},{hi}"),
            Generator::Piecewise { levels } => {
                let parts: Vec<String> = levels.iter().map(f64::to_string).collect();
                write!(f, "piecewise:{}", parts.join(","))
            }
            Generator::Random { pieces } => write!(f, "random:{pieces}"),
        }
    }
}

impl Generator {
    pub fn check(&self) -> Result<(), SignalError> {
        let bad = |msg: String| Err(SignalError::Generator(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Generator::Step { lo, hi, loc } => {
                if !finite(&[*lo, *hi]) {
                    return bad("step levels must be finite".into());
                }
                if !(*loc > 0.0 && *loc < 1.0) {
                    return bad(format!("jump location {loc} must lie in (0, 1)"));
                }
            }
            Generator::Ramp { lo, hi } if !finite(&[*lo, *hi]) => {
                return bad("ramp ends must be finite".into());
            }
            Generator::Piecewise { levels } if levels.is_empty() || !finite(levels) => {
                return bad("piecewise needs at least one finite level".into());
            }
            Generator::Random { pieces: 0 } => return bad("random needs at least one piece".into()),
            _ => {}
        }
        Ok(())
    }
}

pub fn generate_signal(gen: &Generator, samples: usize, seed: u64) -> Result<Vec<f64>, SignalError> {
    gen.check()?;
    if samples < 2 {
        return Err(SignalError::Generator(format!("need at least 2 samples, got {samples}")));
    }
    let x = |k: usize| k as f64 / (samples - 1) as f64;
    // piece index of sample k among `pieces` equal pieces
    let piece = |k: usize, pieces: usize| ((x(k) * pieces as f64) as usize).min(pieces - 1);
    Ok(match gen {
        Generator::Step { lo, hi, loc } => (0..samples).map(|k| if x(k) < *loc { *lo } else { *hi }).collect(),
        Generator::Ramp { lo, hi } => (0..samples).map(|k| lo + (hi - lo) * x(k)).collect(),
        Generator::Piecewise { levels } => (0..samples).map(|k| levels[piece(k, levels.len())]).collect(),
        Generator::Random { pieces } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let levels: Vec<f64> = (0..*pieces).map(|_| rng.gen::<f64>()).collect();
            (0..samples).map(|k| levels[piece(k, *pieces)]).collect()
        }
    })
}
