//! TV energy, the relaxed two-variable surrogate and the closed-form weight
//! updates.
//!
//! Every integral here is exact: on each element `u` is linear and both the
//! datum and the weight are constant, so the integrands are polynomials of
//! degree at most two.

use serde::{Deserialize, Serialize};

use crate::domain::{Function, Mesh, ObservedSignal, WeightField};
use crate::error::{check_len, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// Squared misfit on the observed part of the domain.
    pub fidelity: f64,
    /// Slope contributions plus, for broken functions, interior jump magnitudes.
    pub tv: f64,
    /// `fidelity + 2 * lambda * tv`.
    pub total_j: f64,
    /// Surrogate value, when a weight field was supplied.
    pub surrogate: Option<f64>,
}

/// Constant slope of `u` on every element.
pub fn element_gradients(u: &Function, mesh: &Mesh) -> Result<Vec<f64>> {
    u.check_mesh(mesh)?;
    let h = mesh.h();
    Ok((0..mesh.n_elements())
        .map(|m| {
            let (a, b) = u.element_values(m);
            (b - a) / h
        })
        .collect())
}

#[inline]
fn clamped_inverse(gradient: f64, epsilon: f64) -> f64 {
    let mag = gradient.abs();
    // zero (and NaN) slopes take the `otherwise` branch: 1/|u'| = +inf
    if !(mag > 0.0) {
        return 1.0 / epsilon;
    }
    (1.0 / mag).clamp(epsilon, 1.0 / epsilon)
}

/// Minimizer of the surrogate in `w` for fixed slopes: `1/|u'|` projected onto
/// [epsilon, 1/epsilon].
pub fn update_weight(gradients: &[f64], epsilon: f64) -> Result<WeightField> {
    check_epsilon(epsilon)?;
    Ok(WeightField::from_raw(
        gradients
            .iter()
            .map(|&g| clamped_inverse(g, epsilon))
            .collect(),
    ))
}

/// Relaxed update `clamp(1/|u'|)^(2 - tau)`; identical to [`update_weight`]
/// for `tau == 1`.
pub fn update_weight_relaxed(gradients: &[f64], epsilon: f64, tau: f64) -> Result<WeightField> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(invalid("tau", format!("must lie in (0, 1], got {tau}")));
    }
    if tau == 1.0 {
        return update_weight(gradients, epsilon);
    }
    check_epsilon(epsilon)?;
    let exponent = 2.0 - tau;
    Ok(WeightField::from_raw(
        gradients
            .iter()
            .map(|&g| clamped_inverse(g, epsilon).powf(exponent))
            .collect(),
    ))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("must lie in (0, 1], got {epsilon}")))
    }
}

/// Exact integral of (u - g)^2 over the observed elements.
pub fn fidelity(u: &Function, mesh: &Mesh, signal: &ObservedSignal) -> Result<f64> {
    u.check_mesh(mesh)?;
    signal.check_mesh(mesh)?;
    let h = mesh.h();
    let mut total = 0.0;
    for (m, (&g, &obs)) in signal.g().iter().zip(signal.observed()).enumerate() {
        if !obs {
            continue;
        }
        let (a, b) = u.element_values(m);
        let (p, q) = (a - g, b - g);
        total += h * (p * p + p * q + q * q) / 3.0;
    }
    Ok(total)
}

/// Total variation of `u`: sum of |slope| * h, plus interior jumps for broken
/// functions.
pub fn total_variation(u: &Function, mesh: &Mesh) -> Result<f64> {
    let h = mesh.h();
    let slopes: f64 = element_gradients(u, mesh)?.iter().map(|s| s.abs() * h).sum();
    let jumps = match u {
        Function::Nodal(_) => 0.0,
        Function::Broken(b) => b.interior_jumps().iter().map(|j| j.abs()).sum(),
    };
    Ok(slopes + jumps)
}

pub fn tv_energy(u: &Function, mesh: &Mesh, signal: &ObservedSignal) -> Result<EnergyReport> {
    let fidelity = fidelity(u, mesh, signal)?;
    let tv = total_variation(u, mesh)?;
    Ok(EnergyReport {
        fidelity,
        tv,
        total_j: fidelity + 2.0 * signal.lambda() * tv,
        surrogate: None,
    })
}

/// `2 * fidelity + 2 * lambda * integral(w |u'|^2 + 1/w)`, using element slopes
/// (jumps of broken functions do not enter).
pub fn surrogate_energy(
    u: &Function,
    w: &WeightField,
    mesh: &Mesh,
    signal: &ObservedSignal,
) -> Result<f64> {
    check_len("weight field", mesh.n_elements(), w.len())?;
    if let Some(&bad) = w.values().iter().find(|x| !(**x > 0.0)) {
        return Err(invalid("weight", format!("must be positive, got {bad}")));
    }
    let fid = fidelity(u, mesh, signal)?;
    let h = mesh.h();
    let reg: f64 = element_gradients(u, mesh)?
        .iter()
        .zip(w.values())
        .map(|(s, &wm)| h * (wm * s * s + 1.0 / wm))
        .sum();
    Ok(2.0 * fid + 2.0 * signal.lambda() * reg)
}

/// Energy report with the surrogate filled in.
pub fn energy_report(
    u: &Function,
    w: &WeightField,
    mesh: &Mesh,
    signal: &ObservedSignal,
) -> Result<EnergyReport> {
    let mut report = tv_energy(u, mesh, signal)?;
    report.surrogate = Some(surrogate_energy(u, w, mesh, signal)?);
    Ok(report)
}
