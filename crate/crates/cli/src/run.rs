use rayon::prelude::*;
use tvinpaint::{run_with_metrics, RunOutcome};

use crate::config::RunSpec;
use crate::error::{CliError, CliResult};

pub const THREADS_VAR: &str = "TVINPAINT_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub spec: RunSpec,
    pub outcome: Result<RunOutcome, String>,
}

/// Worker cap from the environment; `None` means available parallelism.
pub fn worker_count() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => Err(CliError::Usage(format!(
                "{THREADS_VAR}={v:?} must be a positive integer"
            ))),
            Ok(n) => Ok(Some(n)),
        },
    }
}

/// Run every spec on a bounded pool. Results keep the input order.
pub fn execute(specs: Vec<RunSpec>, workers: Option<usize>) -> CliResult<Vec<RunResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Solver(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        specs
            .into_par_iter()
            .map(|spec| {
                let outcome = run_with_metrics(&spec.config).map_err(|e| e.to_string());
                RunResult { spec, outcome }
            })
            .collect()
    }))
}
