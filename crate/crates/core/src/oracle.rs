//! Dense reference evaluation of the DG bilinear and linear forms, used only
//! to check the block assembly.
//!
//! Every entry a(Phi_j^m, Phi_i^n) is computed from global basis functions:
//! volume terms by Gauss quadrature over every element, node terms from
//! one-sided traces at every node. Nothing here reuses the local face
//! matrices.

use crate::domain::{BoundaryMode, Mesh, ObservedSignal, SolveParams, WeightField};
use crate::error::Result;
use crate::linsolve::DenseSystem;

/// Global basis function `Phi_local^elem`.
#[derive(Debug, Clone, Copy)]
struct Basis {
    elem: usize,
    local: usize,
}

impl Basis {
    /// Value and derivative of the restriction to element `e` at `x`.
    fn eval(&self, mesh: &Mesh, e: usize, x: f64) -> (f64, f64) {
        if e != self.elem {
            return (0.0, 0.0);
        }
        let (a, b) = mesh.element(e);
        let len = b - a;
        match self.local {
            0 => ((b - x) / len, -1.0 / len),
            _ => ((x - a) / len, 1.0 / len),
        }
    }
}

fn gauss3(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    let s = (0.6f64).sqrt();
    r * (5.0 / 9.0 * f(c - r * s) + 8.0 / 9.0 * f(c) + 5.0 / 9.0 * f(c + r * s))
}

struct Forms<'a> {
    mesh: &'a Mesh,
    w: &'a [f64],
    lt: &'a [f64],
    g: &'a [f64],
    alpha: f64,
    beta: f64,
    weak_dirichlet: bool,
    g_left: f64,
    g_right: f64,
}

impl Forms<'_> {
    fn bilinear(&self, u: Basis, v: Basis) -> f64 {
        let mesh = self.mesh;
        let n = mesh.n_elements();
        let h = mesh.h();
        let mut total = 0.0;
        for e in 0..n {
            let (a, b) = mesh.element(e);
            total += gauss3(a, b, |x| {
                let (uv, ud) = u.eval(mesh, e, x);
                let (vv, vd) = v.eval(mesh, e, x);
                self.w[e] * ud * vd + self.lt[e] * uv * vv
            });
        }
        for k in 0..=n {
            let x = mesh.nodes()[k];
            let left = (k > 0).then(|| (u.eval(mesh, k - 1, x), v.eval(mesh, k - 1, x), self.w[k - 1]));
            let right = (k < n).then(|| (u.eval(mesh, k, x), v.eval(mesh, k, x), self.w[k]));
            let (ju, jv, fu, fv) = match (left, right) {
                (Some((ul, vl, wl)), Some((ur, vr, wr))) => (
                    ul.0 - ur.0,
                    vl.0 - vr.0,
                    0.5 * (wl * ul.1 + wr * ur.1),
                    0.5 * (wl * vl.1 + wr * vr.1),
                ),
                (None, Some((ur, vr, wr))) if self.weak_dirichlet => {
                    (-ur.0, -vr.0, wr * ur.1, wr * vr.1)
                }
                (Some((ul, vl, wl)), None) if self.weak_dirichlet => {
                    (ul.0, vl.0, wl * ul.1, wl * vl.1)
                }
                _ => continue,
            };
            total += -fu * jv - self.beta * fv * ju + self.alpha / h * ju * jv;
        }
        total
    }

    fn linear(&self, v: Basis) -> f64 {
        let mesh = self.mesh;
        let n = mesh.n_elements();
        let h = mesh.h();
        let mut total = 0.0;
        for e in 0..n {
            let (a, b) = mesh.element(e);
            total += gauss3(a, b, |x| self.lt[e] * self.g[e] * v.eval(mesh, e, x).0);
        }
        if self.weak_dirichlet {
            let (v0, d0) = v.eval(mesh, 0, 0.0);
            let (vn, dn) = v.eval(mesh, n - 1, 1.0);
            total += self.beta * (self.w[0] * d0 * self.g_left - self.w[n - 1] * dn * self.g_right)
                + self.alpha / h * (self.g_left * v0 + self.g_right * vn);
        }
        total
    }
}

/// Flattened DG system with entries `A[(n,i)][(m,j)] = a(Phi_j^m, Phi_i^n)`.
pub fn dg_dense_system(
    mesh: &Mesh,
    w: &WeightField,
    signal: &ObservedSignal,
    params: &SolveParams,
) -> Result<DenseSystem> {
    let n = mesh.n_elements();
    let weak_dirichlet = params.boundary_mode == BoundaryMode::WeakDirichlet;
    let (g_left, g_right) = if weak_dirichlet {
        crate::dg::boundary_data(signal)?
    } else {
        (0.0, 0.0)
    };
    let forms = Forms {
        mesh,
        w: w.values(),
        lt: signal.lambda_tilde(),
        g: signal.g(),
        alpha: params.penalty_for(w),
        beta: params.beta,
        weak_dirichlet,
        g_left,
        g_right,
    };
    let basis: Vec<Basis> = (0..n)
        .flat_map(|elem| (0..2).map(move |local| Basis { elem, local }))
        .collect();
    let matrix = basis
        .iter()
        .map(|&test| basis.iter().map(|&trial| forms.bilinear(trial, test)).collect())
        .collect();
    let rhs = basis.iter().map(|&test| forms.linear(test)).collect();
    DenseSystem::new(matrix, rhs)
}
