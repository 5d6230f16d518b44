//! Shared domain types: the uniform mesh on [0, 1], the damaged region and
//! its rasterized mask, the per-element datum, solver parameters and the two
//! discrete function representations.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Error, Result};

/// Uniform partition of [0, 1] into `n_elements` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<f64>,
    h: f64,
}

impl Mesh {
    pub fn new(n_elements: usize) -> Result<Self> {
        if n_elements == 0 {
            return Err(Error::EmptyMesh(0));
        }
        let n = n_elements as f64;
        let nodes = (0..=n_elements).map(|i| i as f64 / n).collect();
        Ok(Self { nodes, h: 1.0 / n })
    }

    #[inline]
    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Endpoints of element `m`, i.e. the interval (x_m, x_{m+1}).
    #[inline]
    pub fn element(&self, m: usize) -> (f64, f64) {
        (self.nodes[m], self.nodes[m + 1])
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}

/// Signed-count constructor used by front ends that accept user integers.
pub fn build_mesh(n_elements: i64) -> Result<Mesh> {
    if n_elements <= 0 {
        return Err(Error::EmptyMesh(n_elements));
    }
    Mesh::new(n_elements as usize)
}

/// Union of disjoint open subintervals of (0, 1) where the datum is missing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct DamagedRegion {
    intervals: Vec<(f64, f64)>,
}

impl DamagedRegion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Intervals are sorted on construction; overlap, sub-interval of zero
    /// length, anything outside [0, 1], or a total length of 1 is rejected.
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite()) || a >= b {
                return Err(Error::InvalidRegion(format!("interval ({a}, {b}) is empty")));
            }
            if a < 0.0 || b > 1.0 {
                return Err(Error::InvalidRegion(format!(
                    "interval ({a}, {b}) is not contained in [0, 1]"
                )));
            }
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for pair in intervals.windows(2) {
            if pair[1].0 < pair[0].1 {
                return Err(Error::InvalidRegion(format!(
                    "intervals ({}, {}) and ({}, {}) overlap",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
        if total >= 1.0 {
            return Err(Error::InvalidRegion(
                "damaged region covers the whole domain".into(),
            ));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < x && x < b)
    }

    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }
}

impl TryFrom<Vec<(f64, f64)>> for DamagedRegion {
    type Error = Error;

    fn try_from(intervals: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(intervals)
    }
}

impl From<DamagedRegion> for Vec<(f64, f64)> {
    fn from(region: DamagedRegion) -> Self {
        region.intervals
    }
}

/// Observed flag per element: an element is damaged iff its midpoint lies in
/// the region.
pub fn rasterize_mask(region: &DamagedRegion, mesh: &Mesh) -> Result<Vec<bool>> {
    let observed: Vec<bool> = mesh.midpoints().map(|x| !region.contains(x)).collect();
    if observed.iter().any(|&o| o) {
        Ok(observed)
    } else {
        Err(Error::AllDamaged)
    }
}

/// Piecewise-constant datum together with the fidelity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSignal {
    g_elem: Vec<f64>,
    observed: Vec<bool>,
    lambda: f64,
    lambda_tilde: Vec<f64>,
}

impl ObservedSignal {
    pub fn new(g_elem: Vec<f64>, observed: Vec<bool>, lambda: f64) -> Result<Self> {
        check_len("observed mask", g_elem.len(), observed.len())?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", format!("must be positive, got {lambda}")));
        }
        if !observed.iter().any(|&o| o) {
            return Err(Error::AllDamaged);
        }
        let inv = 1.0 / lambda;
        let lambda_tilde = observed.iter().map(|&o| if o { inv } else { 0.0 }).collect();
        Ok(Self {
            g_elem,
            observed,
            lambda,
            lambda_tilde,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.g_elem.len()
    }

    pub fn g(&self) -> &[f64] {
        &self.g_elem
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_tilde(&self) -> &[f64] {
        &self.lambda_tilde
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        check_len("signal", mesh.n_elements(), self.g_elem.len())
    }
}

/// Element index holding sample `k` of `count` samples placed at k/(count-1).
fn sample_element(k: usize, count: usize, n_elements: usize) -> usize {
    if count == 1 {
        return 0;
    }
    ((k * n_elements) / (count - 1)).min(n_elements - 1)
}

/// Average uniformly spaced samples into per-element constants and attach the
/// damage mask.
///
/// Sample `k` of `S` sits at abscissa k/(S-1) (a single sample sits at 0), and
/// is assigned to the element containing it, the last element being closed on
/// the right. Damaged elements keep their mean; it never enters a solve since
/// their fidelity weight is zero.
pub fn resample_signal(
    samples: &[f64],
    mesh: &Mesh,
    region: &DamagedRegion,
    lambda: f64,
) -> Result<ObservedSignal> {
    if samples.is_empty() {
        return Err(invalid("samples", "no samples given"));
    }
    let n = mesh.n_elements();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (k, &s) in samples.iter().enumerate() {
        let m = sample_element(k, samples.len(), n);
        sum[m] += s;
        count[m] += 1;
    }
    if let Some(element) = count.iter().position(|&c| c == 0) {
        return Err(Error::Resolution {
            element,
            samples: samples.len(),
            elements: n,
        });
    }
    let g = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let observed = rasterize_mask(region, mesh)?;
    ObservedSignal::new(g, observed, lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// Natural boundary: boundary face terms are dropped.
    #[default]
    Neumann,
    /// Nitsche-type imposition with the end-element data as boundary values.
    WeakDirichlet,
}

/// Parameters of the outer loop and of the DG form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    pub epsilon: f64,
    /// DG penalty. `None` selects `10 * max(w)` per inner solve.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub tau: f64,
    pub n_max: usize,
    /// Stop once ||u_{n+1} - u_n|| < rel_tol * ||u_{n+1}||.
    pub rel_tol: Option<f64>,
    pub boundary_mode: BoundaryMode,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            alpha: None,
            beta: 1.0,
            tau: 1.0,
            n_max: 20,
            rel_tol: Some(1e-8),
            boundary_mode: BoundaryMode::Neumann,
        }
    }
}

impl SolveParams {
    pub const DEFAULT_PENALTY_FACTOR: f64 = 10.0;

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1], got {}", self.epsilon)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid("tau", format!("must lie in (0, 1], got {}", self.tau)));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max", "at least one outer iteration is required"));
        }
        if let Some(alpha) = self.alpha {
            if !(alpha.is_finite() && alpha >= 0.0) {
                return Err(invalid("alpha", format!("must be nonnegative, got {alpha}")));
            }
        }
        if !self.beta.is_finite() {
            return Err(invalid("beta", "must be finite"));
        }
        if let Some(tol) = self.rel_tol {
            if !(tol.is_finite() && tol >= 0.0) {
                return Err(invalid("rel_tol", format!("must be nonnegative, got {tol}")));
            }
        }
        Ok(())
    }

    /// Penalty used for an inner solve with the given weights.
    pub fn penalty_for(&self, w: &WeightField) -> f64 {
        self.alpha
            .unwrap_or_else(|| Self::DEFAULT_PENALTY_FACTOR * w.max())
    }
}

/// Per-element gradient weight.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    w_elem: Vec<f64>,
}

impl WeightField {
    pub fn new(w_elem: Vec<f64>) -> Result<Self> {
        if let Some(&w) = w_elem.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(invalid("weight", format!("must be positive and finite, got {w}")));
        }
        Ok(Self { w_elem })
    }

    pub(crate) fn from_raw(w_elem: Vec<f64>) -> Self {
        Self { w_elem }
    }

    pub fn constant(n_elements: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n_elements])
    }

    pub fn values(&self) -> &[f64] {
        &self.w_elem
    }

    pub fn len(&self) -> usize {
        self.w_elem.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_elem.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.w_elem.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.w_elem.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Continuous piecewise-linear function given by its nodal values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalFunction {
    pub values: Vec<f64>,
}

impl NodalFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self::new(vec![0.0; mesh.n_nodes()])
    }

    /// (left, right) end values on element `m`.
    #[inline]
    pub fn element_values(&self, m: usize) -> (f64, f64) {
        (self.values[m], self.values[m + 1])
    }
}

/// Discontinuous piecewise-linear function: two end values per element,
/// stored as (left_0, right_0, left_1, right_1, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrokenFunction {
    pub coeffs: Vec<f64>,
}

impl BrokenFunction {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() % 2 != 0 {
            return Err(invalid("coeffs", "broken function needs two values per element"));
        }
        Ok(Self { coeffs })
    }

    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            coeffs: vec![0.0; 2 * mesh.n_elements()],
        }
    }

    /// Embed a continuous function into the broken space.
    pub fn from_nodal(u: &NodalFunction) -> Self {
        let coeffs = u
            .values
            .windows(2)
            .flat_map(|w| [w[0], w[1]])
            .collect();
        Self { coeffs }
    }

    pub fn n_elements(&self) -> usize {
        self.coeffs.len() / 2
    }

    #[inline]
    pub fn element_values(&self, m: usize) -> (f64, f64) {
        (self.coeffs[2 * m], self.coeffs[2 * m + 1])
    }

    /// Jumps u(x_n^-) - u(x_n^+) at the interior nodes x_1 .. x_{N-1}.
    pub fn interior_jumps(&self) -> Vec<f64> {
        (1..self.n_elements())
            .map(|n| self.coeffs[2 * n - 1] - self.coeffs[2 * n])
            .collect()
    }
}

/// Either discrete representation, for routines that handle both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Function {
    Nodal(NodalFunction),
    Broken(BrokenFunction),
}

impl Function {
    pub fn n_elements(&self) -> usize {
        match self {
            Function::Nodal(u) => u.values.len().saturating_sub(1),
            Function::Broken(u) => u.n_elements(),
        }
    }

    #[inline]
    pub fn element_values(&self, m: usize) -> (f64, f64) {
        match self {
            Function::Nodal(u) => u.element_values(m),
            Function::Broken(u) => u.element_values(m),
        }
    }

    pub fn midpoint_values(&self) -> Vec<f64> {
        (0..self.n_elements())
            .map(|m| {
                let (a, b) = self.element_values(m);
                0.5 * (a + b)
            })
            .collect()
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        match self {
            Function::Nodal(u) => check_len("nodal function", mesh.n_nodes(), u.values.len()),
            Function::Broken(u) => {
                check_len("broken function", 2 * mesh.n_elements(), u.coeffs.len())
            }
        }
    }
}

impl From<NodalFunction> for Function {
    fn from(u: NodalFunction) -> Self {
        Function::Nodal(u)
    }
}

impl From<BrokenFunction> for Function {
    fn from(u: BrokenFunction) -> Self {
        Function::Broken(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sizes() {
        let m = Mesh::new(1).unwrap();
        assert_eq!(m.nodes(), &[0.0, 1.0]);
        assert_eq!(m.h(), 1.0);

        let m = Mesh::new(3).unwrap();
        assert_eq!(m.nodes(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(m.h(), 1.0 / 3.0);

        let m = Mesh::new(300).unwrap();
        assert_eq!(m.n_nodes(), 301);
        assert_eq!(m.h(), 1.0 / 300.0);
        assert_eq!(*m.nodes().last().unwrap(), 1.0);
        for w in m.nodes().windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - m.h()).abs() < 1e-12);
        }
        assert!((300.0 * m.h() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_rejects_nonpositive() {
        assert_eq!(build_mesh(0), Err(Error::EmptyMesh(0)));
        assert_eq!(build_mesh(-4), Err(Error::EmptyMesh(-4)));
        assert!(Mesh::new(0).is_err());
    }

    #[test]
    fn region_validation() {
        assert!(DamagedRegion::new(vec![(0.5, 0.5)]).is_err());
        assert!(DamagedRegion::new(vec![(-0.1, 0.5)]).is_err());
        assert!(DamagedRegion::new(vec![(0.2, 0.5), (0.4, 0.6)]).is_err());
        assert!(DamagedRegion::new(vec![(0.0, 1.0)]).is_err());
        let r = DamagedRegion::new(vec![(0.6, 0.7), (0.1, 0.2)]).unwrap();
        assert_eq!(r.intervals(), &[(0.1, 0.2), (0.6, 0.7)]);
    }

    #[test]
    fn mask_middle_third() {
        let mesh = Mesh::new(3).unwrap();
        let r = DamagedRegion::new(vec![(1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        assert_eq!(rasterize_mask(&r, &mesh).unwrap(), vec![true, false, true]);
    }

    #[test]
    fn mask_empty_region() {
        let mesh = Mesh::new(4).unwrap();
        assert_eq!(
            rasterize_mask(&DamagedRegion::empty(), &mesh).unwrap(),
            vec![true; 4]
        );
    }

    #[test]
    fn mask_all_damaged() {
        // the whole-domain region is already rejected by the region itself
        assert!(DamagedRegion::new(vec![(0.0, 1.0)]).is_err());
        let mesh = Mesh::new(1).unwrap();
        let r = DamagedRegion::new(vec![(0.1, 0.9)]).unwrap();
        assert_eq!(rasterize_mask(&r, &mesh), Err(Error::AllDamaged));
    }

    #[test]
    fn resample_constant_and_means() {
        let mesh = Mesh::new(2).unwrap();
        let s = resample_signal(&[5.0; 4], &mesh, &DamagedRegion::empty(), 0.1).unwrap();
        assert_eq!(s.g(), &[5.0, 5.0]);
        assert_eq!(s.lambda_tilde(), &[10.0, 10.0]);

        let s = resample_signal(&[0.0, 0.0, 1.0, 1.0], &mesh, &DamagedRegion::empty(), 0.01)
            .unwrap();
        assert_eq!(s.g(), &[0.0, 1.0]);
        assert_eq!(s.lambda_tilde(), &[100.0, 100.0]);
    }

    #[test]
    fn resample_step_mask_by_midpoints() {
        let mesh = Mesh::new(300).unwrap();
        let samples: Vec<f64> = (0..300)
            .map(|k| if (k as f64 / 299.0) < 0.5 { 0.0 } else { 1.0 })
            .collect();
        let region = DamagedRegion::new(vec![(1.0 / 3.0, 2.0 / 3.0)]).unwrap();
        let s = resample_signal(&samples, &mesh, &region, 0.01).unwrap();
        for m in 0..300 {
            let mid = (m as f64 + 0.5) / 300.0;
            let damaged = mid > 1.0 / 3.0 && mid < 2.0 / 3.0;
            assert_eq!(s.observed()[m], !damaged, "element {m}");
            assert_eq!(s.lambda_tilde()[m] > 0.0, s.observed()[m]);
        }
        // elements 100..=199 have midpoints strictly inside (1/3, 2/3)
        assert_eq!(s.observed().iter().filter(|o| !**o).count(), 100);
        assert!(!s.observed()[100] && !s.observed()[199]);
        assert!(s.observed()[99] && s.observed()[200]);
    }

    #[test]
    fn resample_resolution_error() {
        let mesh = Mesh::new(4).unwrap();
        let err = resample_signal(&[1.0, 2.0], &mesh, &DamagedRegion::empty(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Resolution { .. }));
        assert!(resample_signal(&[], &mesh, &DamagedRegion::empty(), 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SolveParams::default().validate().is_ok());
        let bad = |f: fn(&mut SolveParams)| {
            let mut p = SolveParams::default();
            f(&mut p);
            p.validate().is_err()
        };
        assert!(bad(|p| p.epsilon = 0.0));
        assert!(bad(|p| p.epsilon = 1.5));
        assert!(bad(|p| p.tau = 0.0));
        assert!(bad(|p| p.tau = 1.1));
        assert!(bad(|p| p.n_max = 0));
        assert!(bad(|p| p.alpha = Some(-1.0)));
    }

    #[test]
    fn broken_jumps() {
        let u = BrokenFunction::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(u.interior_jumps(), vec![-1.0]);
        let c = BrokenFunction::from_nodal(&NodalFunction::new(vec![0.0, 0.3, 2.0]));
        assert_eq!(c.coeffs, vec![0.0, 0.3, 0.3, 2.0]);
        assert_eq!(c.interior_jumps(), vec![0.0]);
    }
}
