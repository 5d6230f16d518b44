//! Outer alternating-minimization loop: an inner linear solve in `u` for the
//! current weights, then the closed-form weight update, until `n_max` or the
//! relative iterate change drops below `rel_tol`.

use serde::{Deserialize, Serialize};

use crate::dg::dg_solve_step;
use crate::domain::{
    resample_signal, BrokenFunction, DamagedRegion, Function, Mesh, NodalFunction,
    ObservedSignal, SolveParams, WeightField,
};
use crate::energy::{element_gradients, energy_report, surrogate_energy, update_weight_relaxed};
use crate::error::{invalid, Error, Result};
use crate::fem::fem_solve_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Fem,
    Dg,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Fem => "fem",
            Backend::Dg => "dg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialIterate {
    #[default]
    Zero,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialWeight {
    Constant(f64),
}

impl Default for InitialWeight {
    fn default() -> Self {
        InitialWeight::Constant(1.0)
    }
}

/// One fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: Backend,
    pub n_elements: usize,
    /// Uniform samples of the undamaged signal on [0, 1].
    pub samples: Vec<f64>,
    pub damage: DamagedRegion,
    /// Fidelity weight on observed elements; lambda = 1 / lambda_tilde.
    pub lambda_tilde: f64,
    pub params: SolveParams,
    #[serde(default)]
    pub initial_iterate: InitialIterate,
    #[serde(default)]
    pub initial_weight: InitialWeight,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_tilde.is_finite() && self.lambda_tilde > 0.0) {
            return Err(invalid(
                "lambda_tilde",
                format!("must be positive, got {}", self.lambda_tilde),
            ));
        }
        self.params.validate()?;
        let InitialWeight::Constant(w0) = self.initial_weight;
        let eps = self.params.epsilon;
        if !(w0 >= eps && w0 <= 1.0 / eps) {
            return Err(invalid(
                "initial_weight",
                format!("{w0} lies outside [{eps}, {}]", 1.0 / eps),
            ));
        }
        Ok(())
    }

    /// Mesh and masked datum for this run.
    pub fn discretize(&self) -> Result<(Mesh, ObservedSignal)> {
        let mesh = Mesh::new(self.n_elements)?;
        let signal = resample_signal(&self.samples, &mesh, &self.damage, 1.0 / self.lambda_tilde)?;
        Ok((mesh, signal))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based outer iteration index.
    pub n: usize,
    pub total_j: f64,
    /// Surrogate at (u_n, w_n), after the weight update.
    pub surrogate: f64,
    /// Surrogate at (u_n, w_{n-1}), between the two half steps.
    pub surrogate_before_update: f64,
    pub fidelity: f64,
    pub tv: f64,
    /// L2 norm of u_n - u_{n-1}.
    pub iterate_change: f64,
    pub weight_min: f64,
    pub weight_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub backend: Backend,
    /// Surrogate at the initial pair (u_0, w_0).
    pub initial_surrogate: f64,
    pub records: Vec<IterationRecord>,
    pub final_iterate: Function,
    pub final_weight: Vec<f64>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace has at least one record")
    }
}

/// Exact L2 norm of a piecewise-linear function given by element end values.
fn l2_norm(u: &Function, h: f64) -> f64 {
    (0..u.n_elements())
        .map(|m| {
            let (p, q) = u.element_values(m);
            h * (p * p + p * q + q * q) / 3.0
        })
        .sum::<f64>()
        .sqrt()
}

fn difference(a: &Function, b: &Function) -> Function {
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>();
    match (a, b) {
        (Function::Nodal(x), Function::Nodal(y)) => {
            Function::Nodal(NodalFunction::new(diff(&x.values, &y.values)))
        }
        (Function::Broken(x), Function::Broken(y)) => Function::Broken(BrokenFunction {
            coeffs: diff(&x.coeffs, &y.coeffs),
        }),
        _ => unreachable!("iterates share one representation"),
    }
}

fn initial_iterate(rule: InitialIterate, backend: Backend, mesh: &Mesh) -> Function {
    let c = match rule {
        InitialIterate::Zero => 0.0,
        InitialIterate::Constant(c) => c,
    };
    match backend {
        Backend::Fem => NodalFunction::new(vec![c; mesh.n_nodes()]).into(),
        Backend::Dg => BrokenFunction {
            coeffs: vec![c; 2 * mesh.n_elements()],
        }
        .into(),
    }
}

/// Inner solve for the chosen backend.
pub fn inner_solve(
    backend: Backend,
    mesh: &Mesh,
    w: &WeightField,
    signal: &ObservedSignal,
    params: &SolveParams,
) -> Result<Function> {
    Ok(match backend {
        Backend::Fem => fem_solve_step(mesh, w, signal)?.into(),
        Backend::Dg => dg_solve_step(mesh, w, signal, params)?.into(),
    })
}

pub fn run_alternating(config: &RunConfig) -> Result<IterationTrace> {
    config.validate()?;
    let (mesh, signal) = config.discretize()?;
    run_on(config, &mesh, &signal)
}

/// Outer loop on an already discretized problem.
pub fn run_on(config: &RunConfig, mesh: &Mesh, signal: &ObservedSignal) -> Result<IterationTrace> {
    let params = &config.params;
    let InitialWeight::Constant(w0) = config.initial_weight;
    let mut w = WeightField::constant(mesh.n_elements(), w0)?;
    let mut u = initial_iterate(config.initial_iterate, config.backend, mesh);
    let initial_surrogate = surrogate_energy(&u, &w, mesh, signal)?;

    let mut records = Vec::with_capacity(params.n_max);
    let mut converged = false;
    for iteration in 1..=params.n_max {
        let next = inner_solve(config.backend, mesh, &w, signal, params).map_err(|e| {
            Error::InnerSolve {
                iteration,
                source: Box::new(e),
            }
        })?;
        let surrogate_before_update = surrogate_energy(&next, &w, mesh, signal)?;
        let grads = element_gradients(&next, mesh)?;
        let w_next = update_weight_relaxed(&grads, params.epsilon, params.tau)?;
        let report = energy_report(&next, &w_next, mesh, signal)?;
        let change = l2_norm(&difference(&next, &u), mesh.h());
        let size = l2_norm(&next, mesh.h());
        records.push(IterationRecord {
            n: iteration,
            total_j: report.total_j,
            surrogate: report.surrogate.expect("surrogate requested"),
            surrogate_before_update,
            fidelity: report.fidelity,
            tv: report.tv,
            iterate_change: change,
            weight_min: w_next.min(),
            weight_max: w_next.max(),
        });
        u = next;
        w = w_next;
        let stop = change == 0.0 || params.rel_tol.is_some_and(|tol| change < tol * size);
        if stop {
            converged = true;
            break;
        }
    }
    Ok(IterationTrace {
        backend: config.backend,
        initial_surrogate,
        records,
        final_iterate: u,
        final_weight: w.values().to_vec(),
        converged,
    })
}

/// Smallest (1-based) iteration whose energy is within `rel` of the final one.
pub fn iterations_to_converge(trace: &IterationTrace, rel: f64) -> Result<usize> {
    if trace.records.is_empty() {
        return Err(invalid("trace", "no iterations recorded"));
    }
    if !(rel > 0.0 && rel < 1.0) {
        return Err(invalid("rel", format!("must lie in (0, 1), got {rel}")));
    }
    let target = (1.0 + rel) * trace.last().total_j;
    Ok(trace
        .records
        .iter()
        .find(|r| r.total_j <= target)
        .map(|r| r.n)
        .unwrap_or(trace.last().n))
}

/// Discrete L2 distance to the undamaged datum, evaluated at midpoints.
pub fn l2_error(u: &Function, truth: &[f64], h: f64) -> f64 {
    let sum: f64 = u
        .midpoint_values()
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    (sum * h).sqrt()
}

/// Largest single-step change of the reconstruction: interior node jump for
/// broken functions, element increment for nodal ones.
pub fn largest_jump(u: &Function) -> f64 {
    match u {
        Function::Nodal(v) => v
            .values
            .windows(2)
            .map(|p| (p[1] - p[0]).abs())
            .fold(0.0, f64::max),
        Function::Broken(b) => b.interior_jumps().iter().map(|j| j.abs()).fold(0.0, f64::max),
    }
}

/// Largest step between neighbouring element values of the datum.
pub fn true_jump(truth: &[f64]) -> f64 {
    truth
        .windows(2)
        .map(|p| (p[1] - p[0]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub l2_error: f64,
    pub recovered_jump: f64,
    pub true_jump: f64,
    pub jump_retained: f64,
    pub iterations_to_converge: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub trace: IterationTrace,
    pub metrics: RunMetrics,
}

pub const DEFAULT_CONVERGENCE_REL: f64 = 0.01;

/// Run and score against the undamaged datum.
pub fn run_with_metrics(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let (mesh, signal) = config.discretize()?;
    let trace = run_on(config, &mesh, &signal)?;
    let truth = signal.g();
    let recovered = largest_jump(&trace.final_iterate);
    let jump = true_jump(truth);
    let metrics = RunMetrics {
        l2_error: l2_error(&trace.final_iterate, truth, mesh.h()),
        recovered_jump: recovered,
        true_jump: jump,
        jump_retained: if jump > 0.0 { recovered / jump } else { 0.0 },
        iterations_to_converge: iterations_to_converge(&trace, DEFAULT_CONVERGENCE_REL)?,
    };
    Ok(RunOutcome { trace, metrics })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendComparison {
    pub fem: RunOutcome,
    pub dg: RunOutcome,
}

/// Same problem, both discretizations.
pub fn compare_backends(config: &RunConfig) -> Result<BackendComparison> {
    let with = |backend| RunConfig {
        backend,
        ..config.clone()
    };
    Ok(BackendComparison {
        fem: run_with_metrics(&with(Backend::Fem))?,
        dg: run_with_metrics(&with(Backend::Dg))?,
    })
}
