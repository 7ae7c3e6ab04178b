//! Problem descriptions and pre-run validation.
//!
//! A 1D problem reads
//!
//! ```text
//! D_t^alpha U - p U_xx + q U_x + r U + mu int_0^t K(x, t-s) U(x, s) ds = f(x, t)
//! U(x, 0) = g(x),  U(0, t) = h1(t),  U(L, t) = h2(t)
//! ```
//!
//! and the 2D problem on the unit square replaces the spatial operator by
//! `p1 U_xx + p2 U_yy - q1 U_x - q2 U_y - r1 U`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::SpatialGrid1D;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

pub const DEFAULT_COMPATIBILITY_TOL: f64 = 1e-12;

pub fn constant1(c: f64) -> Fn1 {
    Arc::new(move |_| c)
}

pub fn constant2(c: f64) -> Fn2 {
    Arc::new(move |_, _| c)
}

pub fn constant3(c: f64) -> Fn3 {
    Arc::new(move |_, _, _| c)
}

#[derive(Clone)]
pub struct Problem1D {
    pub name: String,
    pub length: f64,
    pub t_final: f64,
    pub alpha: f64,
    /// Diffusion coefficient `p(x)`.
    pub p: Fn1,
    /// Convection coefficient `q(x)`.
    pub q: Fn1,
    /// Reaction coefficient `r(x)`.
    pub r: Fn1,
    pub mu: f64,
    /// Memory kernel `K(x, elapsed)`.
    pub kernel: Fn2,
    /// Source `f(x, t)`.
    pub source: Fn2,
    /// Initial data `g(x)`.
    pub initial: Fn1,
    /// Left boundary `h1(t)`.
    pub left: Fn1,
    /// Right boundary `h2(t)`.
    pub right: Fn1,
    pub exact: Option<Fn2>,
}

impl fmt::Debug for Problem1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem1D")
            .field("name", &self.name)
            .field("length", &self.length)
            .field("t_final", &self.t_final)
            .field("alpha", &self.alpha)
            .field("mu", &self.mu)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

/// Dirichlet data on one side of the unit square, with the tangential
/// derivatives consumed by the wavelet operational relations.
///
/// All three closures take `(s, t)` with `s` the coordinate along the side.
#[derive(Clone)]
pub struct BoundaryFn {
    pub value: Fn2,
    pub d1: Fn2,
    pub d2: Fn2,
}

impl BoundaryFn {
    pub fn new(value: Fn2, d1: Fn2, d2: Fn2) -> Self {
        Self { value, d1, d2 }
    }

    pub fn zero() -> Self {
        Self::new(constant2(0.0), constant2(0.0), constant2(0.0))
    }
}

#[derive(Clone)]
pub struct Problem2D {
    pub name: String,
    pub t_final: f64,
    pub alpha: f64,
    pub p1: Fn2,
    pub p2: Fn2,
    pub q1: Fn2,
    pub q2: Fn2,
    pub r1: Fn2,
    pub mu: f64,
    /// Memory kernel `K(x, y, elapsed)`.
    pub kernel: Fn3,
    /// Source `f(x, y, t)`.
    pub source: Fn3,
    pub initial: Fn2,
    /// `U(0, y, t) = h1(y, t)`.
    pub h1: BoundaryFn,
    /// `U(1, y, t) = h2(y, t)`.
    pub h2: BoundaryFn,
    /// `U(x, 0, t) = h3(x, t)`.
    pub h3: BoundaryFn,
    /// `U(x, 1, t) = h4(x, t)`.
    pub h4: BoundaryFn,
    pub exact: Option<Fn3>,
}

impl fmt::Debug for Problem2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem2D")
            .field("name", &self.name)
            .field("t_final", &self.t_final)
            .field("alpha", &self.alpha)
            .field("mu", &self.mu)
            .field("has_exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, check: &str, detail: String) {
        self.violations.push(Violation {
            check: check.to_string(),
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "ok");
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.check, v.detail))
            .collect();
        write!(f, "{}", parts.join("; "))
    }
}

/// Checks sign conditions, compatibility of initial and boundary data, and
/// the lower bound `M > L ||q||_inf / (2 p0)` that makes the implicit matrix
/// diagonally dominant. `||q||_inf` and `p0` are sampled at the grid nodes.
pub fn validate_problem_1d(prob: &Problem1D, grid: &SpatialGrid1D) -> ValidationReport {
    validate_problem_1d_with_tol(prob, grid, DEFAULT_COMPATIBILITY_TOL)
}

pub fn validate_problem_1d_with_tol(
    prob: &Problem1D,
    grid: &SpatialGrid1D,
    tol: f64,
) -> ValidationReport {
    let mut report = ValidationReport::default();
    let xs = grid.nodes();
    let p0 = xs.iter().map(|&x| (prob.p)(x)).fold(f64::INFINITY, f64::min);
    let q_inf = xs.iter().map(|&x| (prob.q)(x).abs()).fold(0.0, f64::max);
    let r_min = xs.iter().map(|&x| (prob.r)(x)).fold(f64::INFINITY, f64::min);

    if !(p0 > 0.0) {
        report.push("p_positive", format!("min p over nodes = {p0}"));
    }
    if !(r_min >= 0.0) {
        report.push("r_nonnegative", format!("min r over nodes = {r_min}"));
    }
    if !(prob.mu >= 0.0) {
        report.push("mu_nonnegative", format!("mu = {}", prob.mu));
    }
    if (prob.length - grid.length).abs() > 1e-12 * prob.length.max(1.0) {
        report.push(
            "domain_length",
            format!("problem length {} != grid length {}", prob.length, grid.length),
        );
    }
    if p0 > 0.0 {
        let bound = prob.length * q_inf / (2.0 * p0);
        if !((grid.intervals as f64) > bound) {
            report.push(
                "space_partition_bound",
                format!("M = {} must exceed L*|q|/(2 p0) = {bound}", grid.intervals),
            );
        }
    }
    let g0 = (prob.initial)(0.0);
    let h10 = (prob.left)(0.0);
    if !((g0 - h10).abs() <= tol) {
        report.push("compatibility_left", format!("g(0) = {g0}, h1(0) = {h10}"));
    }
    let gl = (prob.initial)(prob.length);
    let h20 = (prob.right)(0.0);
    if !((gl - h20).abs() <= tol) {
        report.push("compatibility_right", format!("g(L) = {gl}, h2(0) = {h20}"));
    }
    report
}

/// Sign conditions sampled at the supplied nodes (normally the collocation
/// grid) and the corner compatibility of `g` with `h1..h4`.
pub fn validate_problem_2d(prob: &Problem2D, xs: &[f64], ys: &[f64]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let tol = DEFAULT_COMPATIBILITY_TOL;
    let mut p1_min = f64::INFINITY;
    let mut p2_min = f64::INFINITY;
    let mut r1_min = f64::INFINITY;
    for &y in ys {
        for &x in xs {
            p1_min = p1_min.min((prob.p1)(x, y));
            p2_min = p2_min.min((prob.p2)(x, y));
            r1_min = r1_min.min((prob.r1)(x, y));
        }
    }
    if !(p1_min > 0.0) {
        report.push("p1_positive", format!("min p1 over nodes = {p1_min}"));
    }
    if !(p2_min > 0.0) {
        report.push("p2_positive", format!("min p2 over nodes = {p2_min}"));
    }
    if !(r1_min >= 0.0) {
        report.push("r1_nonnegative", format!("min r1 over nodes = {r1_min}"));
    }
    if !(prob.mu >= 0.0) {
        report.push("mu_nonnegative", format!("mu = {}", prob.mu));
    }
    let sides: [(&str, &BoundaryFn, Box<dyn Fn(f64) -> (f64, f64)>); 4] = [
        ("h1", &prob.h1, Box::new(|s| (0.0, s))),
        ("h2", &prob.h2, Box::new(|s| (1.0, s))),
        ("h3", &prob.h3, Box::new(|s| (s, 0.0))),
        ("h4", &prob.h4, Box::new(|s| (s, 1.0))),
    ];
    for (name, side, point) in sides.iter() {
        for s in [0.0, 1.0] {
            let (x, y) = point(s);
            let g = (prob.initial)(x, y);
            let h = (side.value)(s, 0.0);
            if !((g - h).abs() <= tol) {
                report.push(
                    "corner_compatibility",
                    format!("{name}({s}, 0) = {h} but g({x}, {y}) = {g}"),
                );
            }
        }
    }
    report
}
