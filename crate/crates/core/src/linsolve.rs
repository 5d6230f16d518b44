//! Direct solvers for the two band structures that arise here, plus a small
//! dense Gaussian elimination used as a test oracle.
//!
//! Neither band solver pivots. The assembled systems are symmetric positive
//! definite for valid inputs, so a vanishing pivot means the input is broken
//! and is reported instead of repaired.

use crate::error::{check_len, invalid, Error, Result};

/// 2x2 block, row-major: `b[row][col]`.
pub type Block = [[f64; 2]; 2];

pub const ZERO_BLOCK: Block = [[0.0; 2]; 2];

const PIVOT_TOL: f64 = 1e-14;

/// Tridiagonal system `A x = rhs` stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let sys = Self { sub, diag, sup, rhs };
        sys.check()?;
        Ok(sys)
    }

    fn check(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 {
            return Err(invalid("system", "empty tridiagonal system"));
        }
        check_len("sub-diagonal", n - 1, self.sub.len())?;
        check_len("super-diagonal", n - 1, self.sup.len())?;
        check_len("right-hand side", n, self.rhs.len())
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Infinity norm of the matrix (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.sub[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.sup[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseSystem {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.sup[i];
                a[i + 1][i] = self.sub[i];
            }
        }
        DenseSystem {
            matrix: a,
            rhs: self.rhs.clone(),
        }
    }

    /// `||A x - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        relative_residual(&self.matvec(x), &self.rhs, self.norm_inf(), x)
    }
}

/// Block-tridiagonal system with 2x2 blocks: `lower[k]` couples block row
/// `k + 1` to block column `k`, `upper[k]` couples row `k` to column `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonalSystem {
    pub lower: Vec<Block>,
    pub main: Vec<Block>,
    pub upper: Vec<Block>,
    pub rhs: Vec<f64>,
}

impl BlockTridiagonalSystem {
    pub fn new(
        lower: Vec<Block>,
        main: Vec<Block>,
        upper: Vec<Block>,
        rhs: Vec<f64>,
    ) -> Result<Self> {
        let sys = Self {
            lower,
            main,
            upper,
            rhs,
        };
        sys.check()?;
        Ok(sys)
    }

    fn check(&self) -> Result<()> {
        let n = self.main.len();
        if n == 0 {
            return Err(invalid("system", "empty block system"));
        }
        check_len("lower blocks", n - 1, self.lower.len())?;
        check_len("upper blocks", n - 1, self.upper.len())?;
        check_len("right-hand side", 2 * n, self.rhs.len())
    }

    pub fn n_blocks(&self) -> usize {
        self.main.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_blocks();
        let mut y = vec![0.0; 2 * n];
        for k in 0..n {
            let mut acc = mul_vec(&self.main[k], [x[2 * k], x[2 * k + 1]]);
            if k > 0 {
                add_assign(&mut acc, mul_vec(&self.lower[k - 1], [x[2 * k - 2], x[2 * k - 1]]));
            }
            if k + 1 < n {
                add_assign(&mut acc, mul_vec(&self.upper[k], [x[2 * k + 2], x[2 * k + 3]]));
            }
            y[2 * k] = acc[0];
            y[2 * k + 1] = acc[1];
        }
        y
    }

    pub fn norm_inf(&self) -> f64 {
        let n = self.n_blocks();
        let mut best: f64 = 0.0;
        for k in 0..n {
            for r in 0..2 {
                let mut s = self.main[k][r][0].abs() + self.main[k][r][1].abs();
                if k > 0 {
                    s += self.lower[k - 1][r][0].abs() + self.lower[k - 1][r][1].abs();
                }
                if k + 1 < n {
                    s += self.upper[k][r][0].abs() + self.upper[k][r][1].abs();
                }
                best = best.max(s);
            }
        }
        best
    }

    /// Flattened 2N x 2N matrix, for oracles and symmetry checks.
    pub fn to_dense(&self) -> DenseSystem {
        let n = self.n_blocks();
        let mut a = vec![vec![0.0; 2 * n]; 2 * n];
        let mut scatter = |row: usize, col: usize, b: &Block| {
            for r in 0..2 {
                for c in 0..2 {
                    a[2 * row + r][2 * col + c] = b[r][c];
                }
            }
        };
        for k in 0..n {
            scatter(k, k, &self.main[k]);
            if k + 1 < n {
                scatter(k, k + 1, &self.upper[k]);
                scatter(k + 1, k, &self.lower[k]);
            }
        }
        DenseSystem {
            matrix: a,
            rhs: self.rhs.clone(),
        }
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        relative_residual(&self.matvec(x), &self.rhs, self.norm_inf(), x)
    }
}

/// Square dense system, test scale only.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSystem {
    pub matrix: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl DenseSystem {
    pub const MAX_SIZE: usize = 64;

    pub fn new(matrix: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = rhs.len();
        if n == 0 || n > Self::MAX_SIZE {
            return Err(invalid(
                "dense system",
                format!("size must lie in 1..={}, got {n}", Self::MAX_SIZE),
            ));
        }
        check_len("matrix rows", n, matrix.len())?;
        for row in &matrix {
            check_len("matrix row", n, row.len())?;
        }
        Ok(Self { matrix, rhs })
    }

    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix
            .iter()
            .map(|row| row.iter().map(|a| a.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.matrix
            .iter()
            .flatten()
            .map(|a| a.abs())
            .fold(0.0, f64::max)
    }

    pub fn relative_residual(&self, x: &[f64]) -> f64 {
        relative_residual(&self.matvec(x), &self.rhs, self.norm_inf(), x)
    }
}

fn relative_residual(ax: &[f64], b: &[f64], a_norm: f64, x: &[f64]) -> f64 {
    let r = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let scale = a_norm * inf_norm(x) + inf_norm(b);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

pub(crate) fn inf_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Thomas algorithm. Fails on a pivot smaller than 1e-14 times the scale of
/// its original row.
pub fn thomas_solve(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    sys.check()?;
    let n = sys.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let lower = if i > 0 { sys.sub[i - 1] } else { 0.0 };
        let upper = if i + 1 < n { sys.sup[i] } else { 0.0 };
        let (prev_c, prev_d) = if i > 0 { (c[i - 1], d[i - 1]) } else { (0.0, 0.0) };
        let pivot = sys.diag[i] - lower * prev_c;
        let scale = sys.diag[i].abs().max(lower.abs()).max(upper.abs());
        if !(pivot.abs() >= PIVOT_TOL * scale) || scale == 0.0 {
            return Err(Error::ZeroPivot { row: i, pivot });
        }
        c[i] = upper / pivot;
        d[i] = (sys.rhs[i] - lower * prev_d) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

#[inline]
fn det(b: &Block) -> f64 {
    b[0][0] * b[1][1] - b[0][1] * b[1][0]
}

#[inline]
fn block_scale(b: &Block) -> f64 {
    b.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Inverse by adjugate; `None` if `|det| < 1e-14 * scale^2`.
fn invert(b: &Block) -> Option<Block> {
    let d = det(b);
    let s = block_scale(b);
    if s == 0.0 || !(d.abs() >= PIVOT_TOL * s * s) {
        return None;
    }
    Some([[b[1][1] / d, -b[0][1] / d], [-b[1][0] / d, b[0][0] / d]])
}

#[inline]
fn mul(a: &Block, b: &Block) -> Block {
    let mut out = ZERO_BLOCK;
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

#[inline]
fn mul_vec(a: &Block, v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

#[inline]
fn sub(a: &Block, b: &Block) -> Block {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

#[inline]
fn add_assign(acc: &mut [f64; 2], v: [f64; 2]) {
    acc[0] += v[0];
    acc[1] += v[1];
}

/// Block Thomas algorithm for 2x2-block tridiagonal systems.
pub fn block_thomas_solve(sys: &BlockTridiagonalSystem) -> Result<Vec<f64>> {
    sys.check()?;
    let n = sys.n_blocks();
    // c[k] = P_k^{-1} U_k,  d[k] = P_k^{-1} (r_k - L_{k-1} d[k-1])
    let mut c: Vec<Block> = Vec::with_capacity(n.saturating_sub(1));
    let mut d: Vec<[f64; 2]> = Vec::with_capacity(n);
    for k in 0..n {
        let mut pivot = sys.main[k];
        let mut r = [sys.rhs[2 * k], sys.rhs[2 * k + 1]];
        if k > 0 {
            let l = &sys.lower[k - 1];
            pivot = sub(&pivot, &mul(l, &c[k - 1]));
            let ld = mul_vec(l, d[k - 1]);
            r = [r[0] - ld[0], r[1] - ld[1]];
        }
        let inv = invert(&pivot).ok_or(Error::SingularBlock {
            block: k,
            det: det(&pivot),
        })?;
        if k + 1 < n {
            c.push(mul(&inv, &sys.upper[k]));
        }
        d.push(mul_vec(&inv, r));
    }
    for k in (0..n - 1).rev() {
        let cx = mul_vec(&c[k], d[k + 1]);
        d[k] = [d[k][0] - cx[0], d[k][1] - cx[1]];
    }
    let x: Vec<f64> = d.into_iter().flatten().collect();
    Ok(x)
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(sys: &DenseSystem) -> Result<Vec<f64>> {
    let n = sys.len();
    if n == 0 || n > DenseSystem::MAX_SIZE {
        return Err(invalid(
            "dense system",
            format!("size must lie in 1..={}, got {n}", DenseSystem::MAX_SIZE),
        ));
    }
    let mut a = sys.matrix.clone();
    let mut b = sys.rhs.clone();
    let scale = sys.norm_max();
    if scale == 0.0 {
        return Err(Error::SingularSystem("zero matrix".into()));
    }
    for col in 0..n {
        let (p, pmax) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > PIVOT_TOL * scale) {
            return Err(Error::SingularSystem(format!(
                "no usable pivot in column {col} ({pmax:e})"
            )));
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}
