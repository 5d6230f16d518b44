//! Experiment runner behind the `tvinpaint` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;
pub mod signal;

use std::ffi::OsString;
use std::io::Write;

pub use config::{parse_config, Experiment, Invocation, Parsed, Preset, RunSpec, SignalSpec};
pub use error::{CliError, CliResult};
pub use output::{emit_results, Summary};
pub use run::{execute, worker_count};
pub use signal::{generate_signal, load_signal, Generator, SignalFormat};

/// Parse, run and emit. Progress lines go to `out`.
pub fn run_cli<I, T>(args: I, out: &mut impl Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match parse_config(args)? {
        Parsed::Info(text) => {
            let _ = write!(out, "{text}");
            return Ok(());
        }
        Parsed::Run(inv) => inv,
    };
    let exp = &inv.experiment;
    let workers = worker_count()?;
    let samples = exp.signal.load(exp.seed)?;
    let specs = exp.runs(&samples);
    // catch resolution problems before any work is scheduled
    for spec in &specs {
        spec.config
            .discretize()
            .map_err(|e| CliError::Usage(format!("{}: {e}", spec.label)))?;
    }
    let results = execute(specs, workers)?;
    let summary = emit_results(exp, &results, &inv.out)?;
    for r in &summary.runs {
        let _ = writeln!(
            out,
            "{:<20} {:<3} iterations {:>3}  J {:.6e}  l2 {:.6e}  jump {:.4}",
            r.label,
            r.backend.name(),
            r.iterations,
            r.final_energy.total_j,
            r.l2_error,
            r.recovered_jump
        );
    }
    let _ = writeln!(out, "wrote {}", inv.out.display());
    if !summary.failed.is_empty() {
        let msgs: Vec<String> = summary.failed.iter().map(|f| format!("{}: {}", f.label, f.error)).collect();
        return Err(CliError::Solver(msgs.join("; ")));
    }
    Ok(())
}
