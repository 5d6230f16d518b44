//! Interior-penalty discontinuous Galerkin discretization of the weighted
//! inner problem with piecewise-linear, element-local nodal bases.
//!
//! The bilinear form is
//!
//! ```text
//! a(u, v) = sum_n integral_{I_n} (w u' v' + lt u v)
//!         - sum_nodes {w u'}[v]  -  beta * sum_nodes {w v'}[u]
//!         + sum_nodes (alpha / h) [u][v]
//! ```
//!
//! with `[v] = v(x-) - v(x+)` and `{v} = (v(x-) + v(x+)) / 2` at interior
//! nodes and the one-sided extensions at x_0 and x_N. `beta = 1` is the
//! symmetric interior penalty method and `beta = -1` the nonsymmetric one.
//! Boundary node terms only enter in [`BoundaryMode::WeakDirichlet`]; in the
//! default Neumann mode they are dropped.
//!
//! Face and boundary matrices are not transcribed: they are produced by
//! evaluating the node terms above on every pair of local basis traces.

use crate::domain::{BoundaryMode, BrokenFunction, Mesh, ObservedSignal, SolveParams, WeightField};
use crate::error::{check_len, invalid, Error, Result};
use crate::fem::{check_solvable, SOLVE_RESIDUAL_TOL};
use crate::linsolve::{block_thomas_solve, Block, BlockTridiagonalSystem, ZERO_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    LeftEnd,
    RightEnd,
}

/// `(jump, average)` of a trace pair. At the left end only `v_right` is
/// read, at the right end only `v_left`.
pub fn jump_and_average(v_left: f64, v_right: f64, kind: NodeKind) -> (f64, f64) {
    match kind {
        NodeKind::Interior => (v_left - v_right, 0.5 * (v_left + v_right)),
        NodeKind::LeftEnd => (-v_right, v_right),
        NodeKind::RightEnd => (v_left, v_left),
    }
}

/// Value and derivative of a function at one side of a node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Trace {
    value: f64,
    slope: f64,
}

/// Traces of the two local basis functions at an element's left end (x_n^+).
fn basis_at_left_end(h: f64) -> [Trace; 2] {
    [
        Trace { value: 1.0, slope: -1.0 / h },
        Trace { value: 0.0, slope: 1.0 / h },
    ]
}

/// Traces of the two local basis functions at an element's right end (x_{n+1}^-).
fn basis_at_right_end(h: f64) -> [Trace; 2] {
    [
        Trace { value: 0.0, slope: -1.0 / h },
        Trace { value: 1.0, slope: 1.0 / h },
    ]
}

#[derive(Debug, Clone, Copy)]
struct NodeForm {
    kind: NodeKind,
    w_left: f64,
    w_right: f64,
    alpha: f64,
    beta: f64,
    h: f64,
}

impl NodeForm {
    /// `{w f'}` for a trace pair.
    fn flux(&self, left: Trace, right: Trace) -> f64 {
        let (_, avg) = jump_and_average(self.w_left * left.slope, self.w_right * right.slope, self.kind);
        avg
    }

    fn jump(&self, left: Trace, right: Trace) -> f64 {
        jump_and_average(left.value, right.value, self.kind).0
    }

    /// Node contribution to a(u, v) for trial traces `u` and test traces `v`,
    /// each given as (left, right).
    fn eval(&self, u: (Trace, Trace), v: (Trace, Trace)) -> f64 {
        let ju = self.jump(u.0, u.1);
        let jv = self.jump(v.0, v.1);
        -self.flux(u.0, u.1) * jv - self.beta * self.flux(v.0, v.1) * ju + self.alpha / self.h * ju * jv
    }

    /// 2x2 block `[i][j] = term(trial phi_j, test phi_i)` for a choice of
    /// which side the trial and the test functions live on.
    fn block(&self, trial_on_left: bool, test_on_left: bool) -> Block {
        let left = basis_at_right_end(self.h);
        let right = basis_at_left_end(self.h);
        let place = |on_left: bool, k: usize| {
            if on_left {
                (left[k], Trace::default())
            } else {
                (Trace::default(), right[k])
            }
        };
        let mut out = ZERO_BLOCK;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.eval(place(trial_on_left, j), place(test_on_left, i));
            }
        }
        out
    }
}

/// Coupling blocks of one interior node x_n between element n-1 (left) and
/// element n (right). Rows index the test function, columns the trial one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceMatrices {
    /// right test, right trial: adds to the diagonal block of element n
    pub b: Block,
    /// left test, left trial: adds to the diagonal block of element n-1
    pub c: Block,
    /// left test, right trial: block (n-1, n)
    pub d: Block,
    /// right test, left trial: block (n, n-1)
    pub e: Block,
}

/// Volume block of one element; the same closed form as the FEM element
/// matrix.
pub fn dg_volume_matrix(w: f64, lt: f64, h: f64) -> Result<Block> {
    crate::fem::fem_element_matrix(w, lt, h)
}

pub fn dg_face_matrices(w_left: f64, w_right: f64, alpha: f64, beta: f64, h: f64) -> FaceMatrices {
    let form = NodeForm {
        kind: NodeKind::Interior,
        w_left,
        w_right,
        alpha,
        beta,
        h,
    };
    FaceMatrices {
        b: form.block(false, false),
        c: form.block(true, true),
        d: form.block(false, true),
        e: form.block(true, false),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Boundary block and right-hand-side contribution of one end element.
///
/// In weak Dirichlet mode `datum` is the prescribed boundary value; the rhs
/// collects the terms of the linear form that carry it.
pub fn dg_boundary_matrices(
    w: f64,
    alpha: f64,
    beta: f64,
    h: f64,
    mode: BoundaryMode,
    end: End,
    datum: f64,
) -> (Block, [f64; 2]) {
    if mode == BoundaryMode::Neumann {
        return (ZERO_BLOCK, [0.0; 2]);
    }
    let (kind, basis) = match end {
        End::Left => (NodeKind::LeftEnd, basis_at_left_end(h)),
        End::Right => (NodeKind::RightEnd, basis_at_right_end(h)),
    };
    let form = NodeForm {
        kind,
        w_left: w,
        w_right: w,
        alpha,
        beta,
        h,
    };
    let side = |t: Trace| match end {
        End::Left => (Trace::default(), t),
        End::Right => (t, Trace::default()),
    };
    let mut block = ZERO_BLOCK;
    for (i, row) in block.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = form.eval(side(basis[j]), side(basis[i]));
        }
    }
    // the datum replaces u in the symmetrization and penalty terms
    let datum_trace = Trace {
        value: datum,
        slope: 0.0,
    };
    let mut rhs = [0.0; 2];
    for (i, r) in rhs.iter_mut().enumerate() {
        let (v, g) = (side(basis[i]), side(datum_trace));
        let jg = form.jump(g.0, g.1);
        let jv = form.jump(v.0, v.1);
        *r = -beta * form.flux(v.0, v.1) * jg + alpha / h * jg * jv;
    }
    (block, rhs)
}

/// Boundary values prescribed in weak Dirichlet mode: the datum of each end
/// element, which must be observed.
pub fn boundary_data(signal: &ObservedSignal) -> Result<(f64, f64)> {
    let n = signal.n_elements();
    let obs = signal.observed();
    if !obs[0] {
        return Err(Error::NoBoundaryDatum("left"));
    }
    if !obs[n - 1] {
        return Err(Error::NoBoundaryDatum("right"));
    }
    Ok((signal.g()[0], signal.g()[n - 1]))
}

fn add(a: &Block, b: &Block) -> Block {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

/// Assemble the 2N x 2N block-tridiagonal DG system. Unknowns are ordered
/// (left_0, right_0, left_1, right_1, ...).
pub fn dg_assemble(
    mesh: &Mesh,
    w: &WeightField,
    signal: &ObservedSignal,
    params: &SolveParams,
) -> Result<BlockTridiagonalSystem> {
    let n = mesh.n_elements();
    check_len("weight field", n, w.len())?;
    signal.check_mesh(mesh)?;
    check_solvable(signal.lambda_tilde())?;
    let alpha = params.penalty_for(w);
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
    }
    let (h, beta) = (mesh.h(), params.beta);
    let wv = w.values();
    let lt = signal.lambda_tilde();
    let g = signal.g();

    let mut main = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(2 * n);
    for m in 0..n {
        main.push(dg_volume_matrix(wv[m], lt[m], h)?);
        let b = lt[m] * g[m] * h / 2.0;
        rhs.extend([b, b]);
    }
    let mut lower = Vec::with_capacity(n - 1);
    let mut upper = Vec::with_capacity(n - 1);
    for node in 1..n {
        let f = dg_face_matrices(wv[node - 1], wv[node], alpha, beta, h);
        main[node - 1] = add(&main[node - 1], &f.c);
        main[node] = add(&main[node], &f.b);
        upper.push(f.d);
        lower.push(f.e);
    }
    if params.boundary_mode == BoundaryMode::WeakDirichlet {
        let (g_left, g_right) = boundary_data(signal)?;
        let mode = params.boundary_mode;
        let (f0, r0) = dg_boundary_matrices(wv[0], alpha, beta, h, mode, End::Left, g_left);
        let (f_end, rn) = dg_boundary_matrices(wv[n - 1], alpha, beta, h, mode, End::Right, g_right);
        main[0] = add(&main[0], &f0);
        main[n - 1] = add(&main[n - 1], &f_end);
        rhs[0] += r0[0];
        rhs[1] += r0[1];
        rhs[2 * n - 2] += rn[0];
        rhs[2 * n - 1] += rn[1];
    }
    BlockTridiagonalSystem::new(lower, main, upper, rhs)
}

/// One inner DG solve.
pub fn dg_solve_step(
    mesh: &Mesh,
    w: &WeightField,
    signal: &ObservedSignal,
    params: &SolveParams,
) -> Result<BrokenFunction> {
    let sys = dg_assemble(mesh, w, signal, params)?;
    let x = block_thomas_solve(&sys)?;
    let res = sys.relative_residual(&x);
    if !(res <= SOLVE_RESIDUAL_TOL) {
        return Err(Error::SingularSystem(format!(
            "DG solve residual {res:e} exceeds {SOLVE_RESIDUAL_TOL:e}"
        )));
    }
    BrokenFunction::new(x)
}

/// `a(u, v) - <F, v>` for every basis function v, evaluated through the
/// assembled system.
pub fn dg_residual(
    u: &BrokenFunction,
    mesh: &Mesh,
    w: &WeightField,
    signal: &ObservedSignal,
    params: &SolveParams,
) -> Result<Vec<f64>> {
    check_len("broken function", 2 * mesh.n_elements(), u.coeffs.len())?;
    let sys = dg_assemble(mesh, w, signal, params)?;
    Ok(sys
        .matvec(&u.coeffs)
        .iter()
        .zip(&sys.rhs)
        .map(|(a, b)| a - b)
        .collect())
}
