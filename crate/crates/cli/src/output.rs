//! Result files. Layout under the output directory:
//!
//! ```text
//! config.json          experiment echo, accepted by --config
//! summary.json         per-run energies and metrics
//! <label>/trace.csv    one row per outer iteration
//! <label>/reconstruction.csv
//! <label>/plot.svg     with --plot
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tvinpaint::{Backend, RunOutcome};

use crate::config::{write_echo, Experiment, Preset, RunSpec};
use crate::error::{CliError, CliResult};
use crate::plot::{line_chart, Series};
use crate::run::RunResult;

pub const TRACE_HEADER: [&str; 8] = [
    "n",
    "total_J",
    "surrogate",
    "fidelity",
    "tv",
    "iterate_change",
    "w_min",
    "w_max",
];
pub const RECONSTRUCTION_HEADER: [&str; 6] = ["x", "g", "observed", "u", "u_left", "u_right"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEnergy {
    pub total_j: f64,
    pub surrogate: f64,
    pub fidelity: f64,
    pub tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub label: String,
    pub backend: Backend,
    pub lambda_tilde: f64,
    pub tau: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_energy: FinalEnergy,
    pub l2_error: f64,
    pub iterations_to_converge: usize,
    pub recovered_jump: f64,
    pub true_jump: f64,
    pub jump_retained: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub label: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub fem: RunSummary,
    pub dg: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: Experiment,
    pub runs: Vec<RunSummary>,
    pub failed: Vec<FailedRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
}

pub fn summarize(spec: &RunSpec, outcome: &RunOutcome) -> RunSummary {
    let last = outcome.trace.last();
    let m = &outcome.metrics;
    RunSummary {
        label: spec.label.clone(),
        backend: spec.config.backend,
        lambda_tilde: spec.config.lambda_tilde,
        tau: spec.config.params.tau,
        iterations: outcome.trace.iterations(),
        converged: outcome.trace.converged,
        final_energy: FinalEnergy {
            total_j: last.total_j,
            surrogate: last.surrogate,
            fidelity: last.fidelity,
            tv: last.tv,
        },
        l2_error: m.l2_error,
        iterations_to_converge: m.iterations_to_converge,
        recovered_jump: m.recovered_jump,
        true_jump: m.true_jump,
        jump_retained: m.jump_retained,
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("cannot write {}: {e}", path.display()))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_trace(path: &Path, outcome: &RunOutcome) -> CliResult<()> {
    let rows = outcome.trace.records.iter().map(|r| {
        vec![
            r.n.to_string(),
            num(r.total_j),
            num(r.surrogate),
            num(r.fidelity),
            num(r.tv),
            num(r.iterate_change),
            num(r.weight_min),
            num(r.weight_max),
        ]
    });
    write_csv(path, &TRACE_HEADER, rows)
}

/// Columns of the reconstruction table, one entry per element.
pub struct Reconstruction {
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    pub observed: Vec<bool>,
    pub u: Vec<f64>,
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
}

pub fn reconstruction(spec: &RunSpec, outcome: &RunOutcome) -> CliResult<Reconstruction> {
    let (mesh, signal) = spec
        .config
        .discretize()
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let u = &outcome.trace.final_iterate;
    let (u_left, u_right) = (0..mesh.n_elements()).map(|m| u.element_values(m)).unzip();
    Ok(Reconstruction {
        x: mesh.midpoints().collect(),
        g: signal.g().to_vec(),
        observed: signal.observed().to_vec(),
        u: u.midpoint_values(),
        u_left,
        u_right,
    })
}

pub fn write_reconstruction(path: &Path, rec: &Reconstruction) -> CliResult<()> {
    let rows = (0..rec.x.len()).map(|m| {
        vec![
            num(rec.x[m]),
            num(rec.g[m]),
            u8::from(rec.observed[m]).to_string(),
            num(rec.u[m]),
            num(rec.u_left[m]),
            num(rec.u_right[m]),
        ]
    });
    write_csv(path, &RECONSTRUCTION_HEADER, rows)
}

/// Write every file for the finished runs and return the summary. Runs
/// that failed are listed in the summary and get no per-run files.
pub fn emit_results(experiment: &Experiment, results: &[RunResult], out_dir: &Path) -> CliResult<Summary> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write_echo(experiment, &out_dir.join("config.json"))?;
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for result in results {
        let outcome = match &result.outcome {
            Ok(o) => o,
            Err(e) => {
                failed.push(FailedRun {
                    label: result.spec.label.clone(),
                    error: e.clone(),
                });
                continue;
            }
        };
        let dir = out_dir.join(&result.spec.label);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        write_trace(&dir.join("trace.csv"), outcome)?;
        let rec = reconstruction(&result.spec, outcome)?;
        write_reconstruction(&dir.join("reconstruction.csv"), &rec)?;
        if experiment.plot {
            let svg = line_chart(
                &result.spec.label,
                &[
                    Series { name: "g", x: &rec.x, y: &rec.g },
                    Series { name: "u", x: &rec.x, y: &rec.u },
                ],
            );
            let path = dir.join("plot.svg");
            fs::write(&path, svg).map_err(|e| io_err(&path, e))?;
        }
        runs.push(summarize(&result.spec, outcome));
    }
    let comparison = match (experiment.preset, &runs[..]) {
        (Preset::StepCompare, [a, b]) if a.backend == Backend::Fem && b.backend == Backend::Dg => Some(Comparison {
            fem: a.clone(),
            dg: b.clone(),
        }),
        _ => None,
    };
    let summary = Summary {
        config: experiment.clone(),
        runs,
        failed,
        comparison,
    };
    let path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&path, e))?;
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    Ok(summary)
}
