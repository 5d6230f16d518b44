//! Continuous P1 discretization of the weighted inner problem
//!
//! ```text
//!   find u:  integral( w u' v' + lt (u - g) v ) = 0   for every P1 hat v
//! ```
//!
//! with natural (Neumann) boundary conditions. Element contributions are the
//! closed-form 2x2 stiffness and mass matrices; assembly gives a symmetric
//! tridiagonal matrix over the N+1 nodes.

use crate::domain::{Mesh, NodalFunction, ObservedSignal, WeightField};
use crate::error::{check_len, invalid, Error, Result};
use crate::linsolve::{thomas_solve, Block, TridiagonalSystem};

/// Residual bound accepted from an inner solve, relative to
/// `||A|| ||u|| + ||b||`.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// `w / h * [[1, -1], [-1, 1]]`.
pub fn element_stiffness(w: f64, h: f64) -> Block {
    let k = w / h;
    [[k, -k], [-k, k]]
}

/// `lt * h * [[1/3, 1/6], [1/6, 1/3]]`.
pub fn element_mass(lt: f64, h: f64) -> Block {
    let d = lt * h / 3.0;
    let o = lt * h / 6.0;
    [[d, o], [o, d]]
}

pub fn fem_element_matrix(w: f64, lt: f64, h: f64) -> Result<Block> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("element size must be positive, got {h}")));
    }
    if !(w > 0.0) {
        return Err(invalid("weight", format!("must be positive, got {w}")));
    }
    if !(lt >= 0.0) {
        return Err(invalid("lambda_tilde", format!("must be nonnegative, got {lt}")));
    }
    let k = element_stiffness(w, h);
    let m = element_mass(lt, h);
    Ok([
        [k[0][0] + m[0][0], k[0][1] + m[0][1]],
        [k[1][0] + m[1][0], k[1][1] + m[1][1]],
    ])
}

/// `lt * g * h / 2` for both local nodes.
pub fn fem_element_load(lt: f64, g: f64, h: f64) -> Result<[f64; 2]> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("element size must be positive, got {h}")));
    }
    let b = lt * g * h / 2.0;
    Ok([b, b])
}

/// Pure Neumann stiffness is rank deficient; at least one element needs a
/// positive fidelity weight.
pub fn check_solvable(lambda_tilde: &[f64]) -> Result<()> {
    if lambda_tilde.iter().any(|&lt| lt > 0.0) {
        Ok(())
    } else {
        Err(Error::SingularSystem(
            "fidelity weight vanishes on every element; Neumann operator has constants in its kernel"
                .into(),
        ))
    }
}

/// Scatter element matrices and loads into the global tridiagonal system
/// without any solvability check.
pub fn assemble_elements(
    h: f64,
    w: &[f64],
    lambda_tilde: &[f64],
    g: &[f64],
) -> Result<TridiagonalSystem> {
    let n = w.len();
    if n == 0 {
        return Err(invalid("mesh", "no elements"));
    }
    check_len("lambda_tilde", n, lambda_tilde.len())?;
    check_len("datum", n, g.len())?;
    let mut diag = vec![0.0; n + 1];
    let mut off = vec![0.0; n];
    let mut rhs = vec![0.0; n + 1];
    for m in 0..n {
        let a = fem_element_matrix(w[m], lambda_tilde[m], h)?;
        let b = fem_element_load(lambda_tilde[m], g[m], h)?;
        diag[m] += a[0][0];
        diag[m + 1] += a[1][1];
        off[m] += a[0][1];
        rhs[m] += b[0];
        rhs[m + 1] += b[1];
    }
    TridiagonalSystem::new(off.clone(), diag, off, rhs)
}

pub fn fem_assemble(mesh: &Mesh, w: &WeightField, signal: &ObservedSignal) -> Result<TridiagonalSystem> {
    check_len("weight field", mesh.n_elements(), w.len())?;
    signal.check_mesh(mesh)?;
    check_solvable(signal.lambda_tilde())?;
    assemble_elements(mesh.h(), w.values(), signal.lambda_tilde(), signal.g())
}

/// One inner solve: the P1 minimizer of the weighted quadratic problem.
pub fn fem_solve_step(mesh: &Mesh, w: &WeightField, signal: &ObservedSignal) -> Result<NodalFunction> {
    let sys = fem_assemble(mesh, w, signal)?;
    let u = thomas_solve(&sys)?;
    let res = sys.relative_residual(&u);
    if !(res <= SOLVE_RESIDUAL_TOL) {
        return Err(Error::SingularSystem(format!(
            "FEM solve residual {res:e} exceeds {SOLVE_RESIDUAL_TOL:e}"
        )));
    }
    Ok(NodalFunction::new(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{resample_signal, DamagedRegion};
    use crate::linsolve::{dense_solve, DenseSystem};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // 3-point Gauss rule on [a, b], exact for quintics
    fn gauss3(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        let s = (0.6f64).sqrt();
        r * (5.0 / 9.0 * f(c - r * s) + 8.0 / 9.0 * f(c) + 5.0 / 9.0 * f(c + r * s))
    }

    #[test]
    fn element_matrix_examples() {
        assert_eq!(fem_element_matrix(1.0, 0.0, 1.0).unwrap(), [[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(element_mass(3.0, 1.0), [[1.0, 0.5], [0.5, 1.0]]);
        assert_eq!(fem_element_matrix(2.0, 6.0, 0.5).unwrap(), [[5.0, -3.5], [-3.5, 5.0]]);
        assert!(fem_element_matrix(0.0, 1.0, 1.0).is_err());
        assert!(fem_element_matrix(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn element_matrix_matches_quadrature() {
        let (w, lt, h) = (2.0, 6.0, 0.5);
        let phi = [|x: f64| (0.5 - x) / 0.5, |x: f64| x / 0.5];
        let dphi = [-1.0 / h, 1.0 / h];
        let a = fem_element_matrix(w, lt, h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let q = gauss3(0.0, h, |x| w * dphi[i] * dphi[j] + lt * phi[i](x) * phi[j](x));
                assert_relative_eq!(a[i][j], q, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn load_examples() {
        assert_eq!(fem_element_load(2.0, 3.0, 1.0).unwrap(), [3.0, 3.0]);
        assert_eq!(fem_element_load(0.0, 17.0, 0.1).unwrap(), [0.0, 0.0]);
        let b = fem_element_load(100.0, 1.0, 1.0 / 300.0).unwrap();
        assert_relative_eq!(b[0], 1.0 / 6.0, epsilon = 1e-15);
        let q = gauss3(0.0, 1.0 / 300.0, |x| 100.0 * (x * 300.0));
        assert_relative_eq!(b[1], q, epsilon = 1e-14);
    }

    #[test]
    fn single_element_neumann_is_singular() {
        let sys = assemble_elements(1.0, &[1.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(sys.diag, vec![1.0, 1.0]);
        assert_eq!(sys.sub, vec![-1.0]);
        assert_eq!(sys.rhs, vec![0.0, 0.0]);
        assert!(matches!(check_solvable(&[0.0]), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn two_element_assembly_by_hand() {
        // h = 1/2, w = 1, lt = 1: stiffness 2, mass diag 1/6, mass off 1/12
        let sys = assemble_elements(0.5, &[1.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]).unwrap();
        let (d, o) = (2.0 + 0.5 / 3.0, -2.0 + 0.5 / 6.0);
        assert_relative_eq!(sys.diag[0], d, epsilon = 1e-15);
        assert_relative_eq!(sys.diag[1], 2.0 * d, epsilon = 1e-15);
        assert_relative_eq!(sys.diag[2], d, epsilon = 1e-15);
        assert_relative_eq!(sys.sub[0], o, epsilon = 1e-15);
        assert_relative_eq!(sys.sup[1], o, epsilon = 1e-15);
        assert_eq!(sys.rhs, vec![0.0; 3]);
    }

    fn dense_scatter(h: f64, w: &[f64], lt: &[f64], g: &[f64]) -> DenseSystem {
        let n = w.len();
        let mut a = vec![vec![0.0; n + 1]; n + 1];
        let mut b = vec![0.0; n + 1];
        for m in 0..n {
            let e = fem_element_matrix(w[m], lt[m], h).unwrap();
            let l = fem_element_load(lt[m], g[m], h).unwrap();
            for i in 0..2 {
                b[m + i] += l[i];
                for j in 0..2 {
                    a[m + i][m + j] += e[i][j];
                }
            }
        }
        DenseSystem { matrix: a, rhs: b }
    }

    #[test]
    fn small_solve_matches_dense_oracle() {
        let mesh = Mesh::new(2).unwrap();
        let signal = ObservedSignal::new(vec![1.0, 3.0], vec![true, true], 0.5).unwrap();
        let w = WeightField::new(vec![0.7, 2.0]).unwrap();
        let u = fem_solve_step(&mesh, &w, &signal).unwrap();
        let oracle = dense_scatter(0.5, w.values(), signal.lambda_tilde(), signal.g());
        let v = dense_solve(&oracle).unwrap();
        for (a, b) in u.values.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_datum_reproduced() {
        let mesh = Mesh::new(10).unwrap();
        let signal = ObservedSignal::new(vec![2.5; 10], vec![true; 10], 0.1).unwrap();
        let w = WeightField::constant(10, 1.0).unwrap();
        let u = fem_solve_step(&mesh, &w, &signal).unwrap();
        for v in u.values {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn step_across_damage_is_monotone() {
        let n = 30;
        let mesh = Mesh::new(n).unwrap();
        let samples: Vec<f64> = (0..n).map(|k| if k < n / 2 { 0.0 } else { 1.0 }).collect();
        let region = DamagedRegion::new(vec![(1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        let signal = resample_signal(&samples, &mesh, &region, 0.01).unwrap();
        let w = WeightField::constant(n, 1.0).unwrap();
        let u = fem_solve_step(&mesh, &w, &signal).unwrap();
        let sys = fem_assemble(&mesh, &w, &signal).unwrap();
        let brute = dense_solve(&sys.to_dense()).unwrap();
        for (a, b) in u.values.iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
        for pair in u.values.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-14);
        }
        assert!(u.values[0] >= -1e-14 && *u.values.last().unwrap() <= 1.0 + 1e-14);
    }

    fn weak_residuals(mesh: &Mesh, w: &[f64], signal: &ObservedSignal, u: &[f64]) -> Vec<f64> {
        // independent of assembly: quadrature of the weak form against each hat
        let h = mesh.h();
        let mut r = vec![0.0; mesh.n_nodes()];
        for m in 0..mesh.n_elements() {
            let (a, b) = mesh.element(m);
            let uu = |x: f64| u[m] * (b - x) / h + u[m + 1] * (x - a) / h;
            let du = (u[m + 1] - u[m]) / h;
            let lt = signal.lambda_tilde()[m];
            let g = signal.g()[m];
            let hats: [(usize, f64, Box<dyn Fn(f64) -> f64>); 2] = [
                (m, -1.0 / h, Box::new(move |x| (b - x) / h)),
                (m + 1, 1.0 / h, Box::new(move |x| (x - a) / h)),
            ];
            for (node, dv, v) in hats.iter() {
                r[*node] += gauss3(a, b, |x| w[m] * du * dv + lt * (uu(x) - g) * v(x));
            }
        }
        r
    }

    proptest! {
        #[test]
        fn solution_satisfies_weak_form(
            (w, g, obs) in (2usize..40).prop_flat_map(|n| (
                prop::collection::vec(0.01f64..100.0, n),
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(any::<bool>(), n),
            )),
            lambda in 0.001f64..1.0,
        ) {
            let n = w.len();
            let mut obs = obs;
            obs[n / 2] = true;
            let mesh = Mesh::new(n).unwrap();
            let signal = ObservedSignal::new(g, obs, lambda).unwrap();
            let wf = WeightField::new(w.clone()).unwrap();
            let u = fem_solve_step(&mesh, &wf, &signal).unwrap();
            let r = weak_residuals(&mesh, &w, &signal, &u.values);
            for v in r {
                prop_assert!(v.abs() < 1e-9, "weak residual {}", v);
            }
        }

        #[test]
        fn joint_scaling_invariance(
            (w, g) in (2usize..30).prop_flat_map(|n| (
                prop::collection::vec(0.1f64..10.0, n),
                prop::collection::vec(-1.0f64..1.0, n),
            )),
            c in 0.1f64..10.0,
        ) {
            let n = w.len();
            let h = 1.0 / n as f64;
            let lt = vec![3.0; n];
            let base = assemble_elements(h, &w, &lt, &g).unwrap();
            let ws: Vec<f64> = w.iter().map(|x| c * x).collect();
            let lts: Vec<f64> = lt.iter().map(|x| c * x).collect();
            let scaled = assemble_elements(h, &ws, &lts, &g).unwrap();
            let u = thomas_solve(&base).unwrap();
            let v = thomas_solve(&scaled).unwrap();
            for (a, b) in u.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn assembly_equals_dense_scatter(
            (w, lt, g) in (1usize..20).prop_flat_map(|n| (
                prop::collection::vec(0.01f64..10.0, n),
                prop::collection::vec(0.0f64..10.0, n),
                prop::collection::vec(-2.0f64..2.0, n),
            )),
        ) {
            let h = 1.0 / w.len() as f64;
            let sys = assemble_elements(h, &w, &lt, &g).unwrap();
            let dense = dense_scatter(h, &w, &lt, &g);
            prop_assert_eq!(sys.to_dense(), dense);
            // symmetric, weakly diagonally dominant in the stiffness part
            prop_assert_eq!(&sys.sub, &sys.sup);
        }

        #[test]
        fn element_matrix_psd(w in 1e-3f64..1e3, lt in 0.0f64..1e3, h in 1e-3f64..1.0) {
            let a = fem_element_matrix(w, lt, h).unwrap();
            prop_assert_eq!(a[0][1], a[1][0]);
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            prop_assert!(a[0][0] > 0.0);
            prop_assert!(det >= -1e-12 * a[0][0] * a[0][0]);
            if lt == 0.0 {
                prop_assert_eq!(a[0][0] + a[0][1], 0.0);
                prop_assert_eq!(a[1][0] + a[1][1], 0.0);
            }
        }
    }
}
