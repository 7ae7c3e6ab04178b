//! 2D solver: L2-1sigma in time, Haar wavelet collocation in space.
//!
//! At every level the semi-discrete equation
//!
//! ```text
//! c U^{n+1} - L U^{n+sigma} = F^n,    c = d_n + mu sigma^2 dt K(x, y, 0) / 2
//! ```
//!
//! is collocated with `U_xxyy^{n+sigma} = H(x)^T D H(y)`. Integrating twice in
//! each direction and imposing the Dirichlet data gives `U^{n+sigma}` and its
//! derivatives as affine functions of `D`:
//!
//! ```text
//! U     = P_x D P_y^T + B_U        U_xx = H_x D P_y^T + B_xx
//! U_x   = Q_x D P_y^T + B_x        U_yy = P_x D H_y^T + B_yy
//! U_y   = P_x D Q_y^T + B_y
//! ```
//!
//! with `P = R_2(s) - s R_2(1)` and `Q = R_1(s) - R_2(1)`. `U^{n+1}` then
//! follows from `U^{n+1} = U^{n+sigma} / sigma - (1 - sigma) / sigma U^n`.
//! Unknowns are ordered `i1` fastest, rows `l1` fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SolutionField, SpaceLayout};
use crate::fracops::{self, CaputoWeights};
use crate::grid::TemporalGrid;
use crate::haar::WaveletSystem2D;
use crate::linalg::{DenseLU, DenseMatrix};
use crate::problem::{validate_problem_2d, Problem2D};
use crate::volterra::{self, KernelTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solve2DOptions {
    pub override_validation: bool,
    pub check_weights: bool,
    pub refactor_each_level: bool,
}

impl Default for Solve2DOptions {
    fn default() -> Self {
        Self {
            override_validation: false,
            check_weights: true,
            refactor_each_level: false,
        }
    }
}

/// Coefficient samples at the collocation nodes, indexed `l1 + nx * l2`.
#[derive(Debug, Clone)]
pub struct NodeCoefficients {
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub r1: Vec<f64>,
}

/// One level of the semi-discrete problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiDiscreteStep {
    pub level: usize,
    /// `c(x, y) = d_n + mu sigma^2 dt K(x, y, 0) / 2`.
    pub implicit: Vec<f64>,
    /// `F^n(x, y)`.
    pub load: Vec<f64>,
}

/// Boundary-data parts of the operational relations at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOffsets {
    pub u: Vec<f64>,
    pub uxx: Vec<f64>,
    pub uyy: Vec<f64>,
    pub ux: Vec<f64>,
    pub uy: Vec<f64>,
}

/// Assembled collocation matrix with its factorization.
#[derive(Debug, Clone)]
pub struct CollocationSystem2D {
    pub matrix: DenseMatrix,
    factor: DenseLU,
    /// `c / sigma + r1` at the nodes, reused for the right-hand side.
    diag_weight: Vec<f64>,
}

impl CollocationSystem2D {
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.factor.solve(rhs)
    }
}

fn finite(v: f64, what: &'static str, at: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, location: at() })
    }
}

fn node(wsys: &WaveletSystem2D, p: usize) -> (f64, f64) {
    let nx = wsys.nx();
    (wsys.x.nodes[p % nx], wsys.y.nodes[p / nx])
}

fn sample(wsys: &WaveletSystem2D, what: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    (0..wsys.unknowns())
        .map(|p| {
            let (x, y) = node(wsys, p);
            finite(f(x, y), what, || format!("x = {x}, y = {y}"))
        })
        .collect()
}

pub fn sample_coefficients(prob: &Problem2D, wsys: &WaveletSystem2D) -> Result<NodeCoefficients> {
    Ok(NodeCoefficients {
        p1: sample(wsys, "p1", |x, y| (prob.p1)(x, y))?,
        p2: sample(wsys, "p2", |x, y| (prob.p2)(x, y))?,
        q1: sample(wsys, "q1", |x, y| (prob.q1)(x, y))?,
        q2: sample(wsys, "q2", |x, y| (prob.q2)(x, y))?,
        r1: sample(wsys, "r1", |x, y| (prob.r1)(x, y))?,
    })
}

/// Boundary offsets `B_U, B_xx, B_yy, B_x, B_y` at time `t`.
pub fn boundary_offsets(prob: &Problem2D, wsys: &WaveletSystem2D, t: f64) -> Result<BoundaryOffsets> {
    let (h1, h2, h3, h4) = (&prob.h1, &prob.h2, &prob.h3, &prob.h4);
    let c = |f: &crate::problem::Fn2, s: f64| f(s, t);
    let (h1_0, h1_1) = (c(&h1.value, 0.0), c(&h1.value, 1.0));
    let (h2_0, h2_1) = (c(&h2.value, 0.0), c(&h2.value, 1.0));
    let (h3_0, h3_1) = (c(&h3.value, 0.0), c(&h3.value, 1.0));
    let (h4_0, h4_1) = (c(&h4.value, 0.0), c(&h4.value, 1.0));
    let s = wsys.unknowns();
    let mut out = BoundaryOffsets {
        u: Vec::with_capacity(s),
        uxx: Vec::with_capacity(s),
        uyy: Vec::with_capacity(s),
        ux: Vec::with_capacity(s),
        uy: Vec::with_capacity(s),
    };
    for p in 0..s {
        let (x, y) = node(wsys, p);
        let (a1, a2) = (c(&h1.value, y), c(&h2.value, y));
        let (a3, a4) = (c(&h3.value, x), c(&h4.value, x));
        out.u.push(
            (1.0 - x) * a1
                + x * a2
                + (1.0 - y) * (a3 - h3_0 - x * h3_1 + x * h3_0)
                + y * (a4 - h4_0 - x * h4_1 + x * h4_0),
        );
        out.uxx.push((1.0 - y) * c(&h3.d2, x) + y * c(&h4.d2, x));
        out.uyy.push((1.0 - x) * c(&h1.d2, y) + x * c(&h2.d2, y));
        out.ux.push(
            -a1 + a2
                + (1.0 - y) * (c(&h3.d1, x) - h3_1 + h3_0)
                + y * (c(&h4.d1, x) - h4_1 + h4_0),
        );
        out.uy.push(
            -a3 + a4
                + (1.0 - x) * (c(&h1.d1, y) - h1_1 + h1_0)
                + x * (c(&h2.d1, y) - h2_1 + h2_0),
        );
    }
    for (what, v) in [
        ("boundary data", &out.u),
        ("boundary second derivative", &out.uxx),
        ("boundary second derivative", &out.uyy),
        ("boundary first derivative", &out.ux),
        ("boundary first derivative", &out.uy),
    ] {
        if let Some(p) = v.iter().position(|a| !a.is_finite()) {
            let (x, y) = node(wsys, p);
            return Err(Error::NonFinite {
                what,
                location: format!("x = {x}, y = {y}, t = {t}"),
            });
        }
    }
    Ok(out)
}

fn check_history<H: AsRef<[f64]>>(history: &[H], levels: usize, points: usize) -> Result<()> {
    if history.len() < levels || history[..levels].iter().any(|h| h.as_ref().len() != points) {
        return Err(Error::DimensionMismatch(format!(
            "need {levels} history levels of {points} collocation nodes"
        )));
    }
    Ok(())
}

fn step_with(
    prob: &Problem2D,
    wsys: &WaveletSystem2D,
    tgrid: &TemporalGrid,
    kernels: &KernelTable,
    w: &CaputoWeights,
    history: &[impl AsRef<[f64]>],
    n: usize,
) -> Result<SemiDiscreteStep> {
    let s = wsys.unknowns();
    check_history(history, n + 1, s)?;
    let (dt, sigma, mu) = (tgrid.dt, tgrid.sigma, prob.mu);
    let mem = volterra::memory_term_l2sigma(kernels, tgrid, history, n)?;
    let t = tgrid.offset_node(n);
    let f = sample(wsys, "source", |x, y| (prob.source)(x, y, t))?;
    let lead = w.leading();
    let k0 = kernels.whole(0);
    let u_n = history[n].as_ref();
    let mut load = Vec::with_capacity(s);
    let mut implicit = Vec::with_capacity(s);
    for p in 0..s {
        let mut hist = 0.0;
        for j in 0..n {
            hist += w.weights[j] * (history[j + 1].as_ref()[p] - history[j].as_ref()[p]);
        }
        load.push(lead * u_n[p] - hist - mu * mem.explicit[p] + f[p]);
        implicit.push(lead + mu * sigma * sigma * dt / 2.0 * k0[p]);
    }
    Ok(SemiDiscreteStep { level: n, implicit, load })
}

fn kernel_table(prob: &Problem2D, wsys: &WaveletSystem2D, tgrid: &TemporalGrid) -> Result<KernelTable> {
    KernelTable::new(wsys.unknowns(), tgrid, |p, s| {
        let (x, y) = node(wsys, p);
        (prob.kernel)(x, y, s)
    })
}

/// `c` and `F^n` at the collocation nodes. `history` holds levels `0..=n`.
pub fn semi_discretize<H: AsRef<[f64]>>(
    prob: &Problem2D,
    wsys: &WaveletSystem2D,
    tgrid: &TemporalGrid,
    history: &[H],
    n: usize,
) -> Result<SemiDiscreteStep> {
    let kernels = kernel_table(prob, wsys, tgrid)?;
    let w = fracops::l2_1sigma_weights(tgrid, n)?;
    step_with(prob, wsys, tgrid, &kernels, &w, history, n)
}

/// Collocation matrix for a level with implicit field `c`:
/// `(c/sigma + r1) P(x)P(y) - p1 H(x)P(y) - p2 P(x)H(y) + q1 Q(x)P(y) + q2 P(x)Q(y)`.
pub fn assemble_collocation(
    wsys: &WaveletSystem2D,
    coef: &NodeCoefficients,
    step: &SemiDiscreteStep,
    sigma: f64,
) -> Result<CollocationSystem2D> {
    let (nx, ny) = (wsys.nx(), wsys.ny());
    let s = nx * ny;
    if step.implicit.len() != s {
        return Err(Error::DimensionMismatch(format!(
            "implicit field has {} values for {s} nodes",
            step.implicit.len()
        )));
    }
    let diag_weight: Vec<f64> = (0..s).map(|p| step.implicit[p] / sigma + coef.r1[p]).collect();
    let (ax, ay) = (&wsys.x, &wsys.y);
    let mut matrix = DenseMatrix::zeros(s, s);
    for l2 in 0..ny {
        for l1 in 0..nx {
            let row = l1 + nx * l2;
            let (dw, p1, p2, q1, q2) = (diag_weight[row], coef.p1[row], coef.p2[row], coef.q1[row], coef.q2[row]);
            let out = matrix.row_mut(row);
            for i2 in 0..ny {
                let (py, hy, qy) = (ay.p[(l2, i2)], ay.h[(l2, i2)], ay.q[(l2, i2)]);
                for i1 in 0..nx {
                    let (px, hx, qx) = (ax.p[(l1, i1)], ax.h[(l1, i1)], ax.q[(l1, i1)]);
                    out[i1 + nx * i2] =
                        dw * px * py - p1 * hx * py - p2 * px * hy + q1 * qx * py + q2 * px * qy;
                }
            }
        }
    }
    let factor = matrix.factor().map_err(|e| Error::LinearSolve {
        level: step.level,
        source: Box::new(e),
    })?;
    Ok(CollocationSystem2D {
        matrix,
        factor,
        diag_weight,
    })
}

/// Right-hand side with every `D`-independent term moved across.
pub fn collocation_rhs(
    coef: &NodeCoefficients,
    sys: &CollocationSystem2D,
    step: &SemiDiscreteStep,
    offsets: &BoundaryOffsets,
    u_n: &[f64],
    sigma: f64,
) -> Vec<f64> {
    (0..step.load.len())
        .map(|p| {
            step.load[p] + step.implicit[p] * (1.0 - sigma) / sigma * u_n[p] - sys.diag_weight[p] * offsets.u[p]
                + coef.p1[p] * offsets.uxx[p]
                + coef.p2[p] * offsets.uyy[p]
                - coef.q1[p] * offsets.ux[p]
                - coef.q2[p] * offsets.uy[p]
        })
        .collect()
}

/// `U^{n+1}` at the nodes from the coefficient vector.
pub fn next_level(wsys: &WaveletSystem2D, d: &[f64], offsets: &BoundaryOffsets, u_n: &[f64], sigma: f64) -> Vec<f64> {
    let u_sigma = wsys.apply(&wsys.x.p, d, &wsys.y.p);
    u_sigma
        .iter()
        .zip(&offsets.u)
        .zip(u_n)
        .map(|((a, b), u)| (a + b) / sigma - (1.0 - sigma) / sigma * u)
        .collect()
}

/// Solve on `2M1 x 2M2 = 2^{J1+1} x 2^{J2+1}` collocation nodes with `N` steps.
/// Level 0 of the field holds `g` at the nodes.
pub fn solve_2d(prob: &Problem2D, j1: u32, j2: u32, steps: usize) -> Result<SolutionField> {
    solve_2d_with(prob, &WaveletSystem2D::new(j1, j2)?, steps, &Solve2DOptions::default())
}

pub fn solve_2d_with(prob: &Problem2D, wsys: &WaveletSystem2D, steps: usize, opts: &Solve2DOptions) -> Result<SolutionField> {
    let tgrid = TemporalGrid::new(prob.t_final, steps, prob.alpha)?;
    let (xs, ys) = wsys.nodes();
    let report = validate_problem_2d(prob, &xs, &ys);
    if !report.passed() && !opts.override_validation {
        return Err(Error::Validation(report));
    }
    let coef = sample_coefficients(prob, wsys)?;
    let kernels = kernel_table(prob, wsys, &tgrid)?;
    let sigma = tgrid.sigma;
    let mut history = vec![sample(wsys, "initial data", |x, y| (prob.initial)(x, y))?];
    let mut cached: Option<CollocationSystem2D> = None;
    for n in 0..steps {
        let w = fracops::l2_1sigma_weights(&tgrid, n)?;
        if opts.check_weights && n > 0 {
            w.check_monotone()?;
        }
        let step = step_with(prob, wsys, &tgrid, &kernels, &w, &history, n)?;
        if n <= 1 || opts.refactor_each_level || cached.is_none() {
            cached = Some(assemble_collocation(wsys, &coef, &step, sigma)?);
        }
        let sys = cached.as_ref().expect("assembled above");
        let offsets = boundary_offsets(prob, wsys, tgrid.offset_node(n))?;
        let rhs = collocation_rhs(&coef, sys, &step, &offsets, &history[n], sigma);
        let d = sys.solve(&rhs).map_err(|e| Error::LinearSolve {
            level: n,
            source: Box::new(e),
        })?;
        let u = next_level(wsys, &d, &offsets, &history[n], sigma);
        if let Some(p) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "linear solve",
                location: format!("node {p}, level {}", n + 1),
            });
        }
        history.push(u);
    }
    SolutionField::from_levels(SpaceLayout::Collocation { x: xs, y: ys }, tgrid.nodes(), history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracops::gamma;
    use crate::problem::{constant2, constant3, BoundaryFn};
    use std::sync::Arc;

    fn zero_problem(alpha: f64) -> Problem2D {
        Problem2D {
            name: "zero".into(),
            t_final: 1.0,
            alpha,
            p1: constant2(1.0),
            p2: constant2(1.0),
            q1: constant2(0.0),
            q2: constant2(0.0),
            r1: constant2(0.0),
            mu: 0.0,
            kernel: constant3(0.0),
            source: constant3(0.0),
            initial: constant2(0.0),
            h1: BoundaryFn::zero(),
            h2: BoundaryFn::zero(),
            h3: BoundaryFn::zero(),
            h4: BoundaryFn::zero(),
            exact: None,
        }
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let f = solve_2d(&zero_problem(0.5), 1, 1, 4).unwrap();
        assert!(f.values().iter().all(|v| *v == 0.0));
        assert_eq!(f.levels(), 5);
        assert_eq!(f.points(), 16);
    }

    #[test]
    fn first_load_without_memory() {
        let mut prob = zero_problem(0.3);
        prob.source = Arc::new(|x, y, t| x + 2.0 * y + 5.0 * t);
        prob.initial = Arc::new(|x, y| x * y);
        let wsys = WaveletSystem2D::new(0, 1).unwrap();
        let t = TemporalGrid::new(1.0, 4, 0.3).unwrap();
        let hist = vec![sample(&wsys, "g", |x, y| x * y).unwrap()];
        let step = semi_discretize(&prob, &wsys, &t, &hist, 0).unwrap();
        let d0 = fracops::l2_1sigma_weights(&t, 0).unwrap().weights[0];
        for p in 0..wsys.unknowns() {
            let (x, y) = node(&wsys, p);
            let expect = d0 * x * y + x + 2.0 * y + 5.0 * t.sigma * t.dt;
            assert!((step.load[p] - expect).abs() < 1e-13);
            assert_eq!(step.implicit[p], d0);
        }
    }

    #[test]
    fn zero_coefficients_leave_boundary_terms() {
        // With D = 0 the reconstructed U^{n+sigma} is the boundary interpolant.
        let mut prob = zero_problem(0.5);
        prob.h1 = BoundaryFn::new(Arc::new(|y, _| 1.0 + y), constant2(1.0), constant2(0.0));
        prob.h3 = BoundaryFn::new(Arc::new(|x, _| 1.0 - x), constant2(-1.0), constant2(0.0));
        prob.h4 = BoundaryFn::new(Arc::new(|x, _| 2.0 * (1.0 - x)), constant2(-2.0), constant2(0.0));
        let wsys = WaveletSystem2D::new(1, 1).unwrap();
        let off = boundary_offsets(&prob, &wsys, 0.4).unwrap();
        let u = next_level(&wsys, &vec![0.0; 16], &off, &vec![0.0; 16], 1.0);
        for p in 0..16 {
            let (x, y) = node(&wsys, p);
            assert!((u[p] - (1.0 - x) * (1.0 + y)).abs() < 1e-14);
            assert!((off.ux[p] + 1.0 + y).abs() < 1e-14);
            assert!((off.uy[p] - (1.0 - x)).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_in_time_bilinear_in_space_is_exact() {
        // U = (1 + t)(1 + x + 2y + xy): U_xxyy = 0, every relation is exact and
        // the L2-1sigma sum and trapezoid are exact on linear-in-time data.
        let alpha = 0.6;
        let shape = |x: f64, y: f64| 1.0 + x + 2.0 * y + x * y;
        let exact = move |x: f64, y: f64, t: f64| (1.0 + t) * shape(x, y);
        let mut prob = zero_problem(alpha);
        prob.p1 = Arc::new(|x, _| 1.0 + x);
        prob.q1 = constant2(0.5);
        prob.q2 = Arc::new(|_, y| -y);
        prob.r1 = constant2(0.25);
        prob.mu = 0.5;
        prob.kernel = constant3(2.0);
        prob.source = Arc::new(move |x, y, t| {
            let ux = (1.0 + t) * (1.0 + y);
            let uy = (1.0 + t) * (2.0 + x);
            shape(x, y) * t.powf(1.0 - alpha) / gamma(2.0 - alpha) + 0.5 * ux - y * uy
                + 0.25 * exact(x, y, t)
                + 0.5 * 2.0 * shape(x, y) * (t + t * t / 2.0)
        });
        prob.initial = Arc::new(move |x, y| exact(x, y, 0.0));
        prob.h1 = BoundaryFn::new(
            Arc::new(move |y, t| exact(0.0, y, t)),
            Arc::new(|_, t| 2.0 * (1.0 + t)),
            constant2(0.0),
        );
        prob.h2 = BoundaryFn::new(
            Arc::new(move |y, t| exact(1.0, y, t)),
            Arc::new(|_, t| 3.0 * (1.0 + t)),
            constant2(0.0),
        );
        prob.h3 = BoundaryFn::new(
            Arc::new(move |x, t| exact(x, 0.0, t)),
            Arc::new(|_, t| 1.0 + t),
            constant2(0.0),
        );
        prob.h4 = BoundaryFn::new(
            Arc::new(move |x, t| exact(x, 1.0, t)),
            Arc::new(|_, t| 2.0 * (1.0 + t)),
            constant2(0.0),
        );
        let f = solve_2d(&prob, 1, 2, 6).unwrap();
        for n in 0..f.levels() {
            for p in 0..f.points() {
                let (x, y) = f.coords(p);
                let e = (f.value(p, n) - exact(x, y.unwrap(), f.times[n])).abs();
                assert!(e < 1e-11, "level {n}, node {p}: {e}");
            }
        }
    }

    #[test]
    fn reuse_matches_refactoring() {
        let prob = crate::problems::example4(0.4);
        let wsys = WaveletSystem2D::new(1, 1).unwrap();
        let a = solve_2d_with(&prob, &wsys, 6, &Solve2DOptions::default()).unwrap();
        let opts = Solve2DOptions {
            refactor_each_level: true,
            ..Default::default()
        };
        let b = solve_2d_with(&prob, &wsys, 6, &opts).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn matrix_is_level_independent_after_first_step() {
        let prob = crate::problems::example4(0.7);
        let wsys = WaveletSystem2D::new(1, 1).unwrap();
        let t = TemporalGrid::new(1.0, 9, 0.7).unwrap();
        let coef = sample_coefficients(&prob, &wsys).unwrap();
        let hist: Vec<Vec<f64>> = (0..9).map(|n| vec![n as f64 * 0.1; 16]).collect();
        let m1 = assemble_collocation(&wsys, &coef, &semi_discretize(&prob, &wsys, &t, &hist, 1).unwrap(), t.sigma).unwrap();
        let m7 = assemble_collocation(&wsys, &coef, &semi_discretize(&prob, &wsys, &t, &hist, 7).unwrap(), t.sigma).unwrap();
        assert_eq!(m1.matrix, m7.matrix);
        let m0 = assemble_collocation(&wsys, &coef, &semi_discretize(&prob, &wsys, &t, &hist, 0).unwrap(), t.sigma).unwrap();
        assert!(m0.matrix.max_abs_diff(&m1.matrix) > 0.0);
    }

    #[test]
    fn validation_blocks_bad_corners() {
        let mut prob = zero_problem(0.5);
        prob.initial = constant2(1.0);
        assert!(matches!(solve_2d(&prob, 0, 0, 2), Err(Error::Validation(_))));
    }
}
