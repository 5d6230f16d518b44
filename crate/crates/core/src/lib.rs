//! Total-variation inpainting of damaged 1-D gray-scale signals.
//!
//! The TV functional is relaxed into a two-variable surrogate in the signal
//! `u` and a clamped gradient weight `w`, which is minimized by alternating
//! an exact linear solve in `u` with a closed-form update of `w`. The inner
//! solve is available as a continuous P1 finite-element discretization
//! ([`fem`]) or a symmetric interior-penalty DG discretization ([`dg`]).

pub mod dg;
pub mod domain;
pub mod driver;
pub mod energy;
pub mod error;
pub mod fem;
pub mod linsolve;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;

pub use domain::{
    build_mesh, rasterize_mask, resample_signal, BoundaryMode, BrokenFunction, DamagedRegion,
    Function, Mesh, NodalFunction, ObservedSignal, SolveParams, WeightField,
};
pub use driver::{
    compare_backends, iterations_to_converge, run_alternating, run_with_metrics, Backend,
    BackendComparison, InitialIterate, InitialWeight, IterationRecord, IterationTrace, RunConfig,
    RunMetrics, RunOutcome,
};
pub use energy::EnergyReport;
pub use error::{Error, Result};
