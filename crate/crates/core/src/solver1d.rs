//! Fully discrete 1D schemes.
//!
//! L2-1sigma collocates the equation at `t_{n+sigma}` and solves
//! `H U^{n+1} = H~ U^n + F^n` for the interior nodes at every level; L1
//! collocates at `t_n`. Both keep the whole history, since the Caputo sum and
//! the memory sum run over every past level.
//!
//! The matrix `H` depends on the level only through the leading weight,
//! which takes one value at `n = 0` and another for all `n >= 1`, so each run
//! factors at most two tridiagonal matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SolutionField, SpaceLayout};
use crate::fracops::{self, gamma, CaputoScheme, CaputoWeights};
use crate::grid::{SpatialGrid1D, TemporalGrid};
use crate::linalg::{BandedFactor, Tridiag};
use crate::problem::{validate_problem_1d, Problem1D};
use crate::volterra::{self, KernelTable};

/// How the `U^n` coefficient of the memory term is formed at the first level.
///
/// The printed explicit coefficient carries `(mu dt / 2) K(x, sigma dt)` at
/// every level. For `n >= 1` that is the `j = n - 1` panel of the trapezoid
/// sum moved onto the diagonal, and both variants coincide. At `n = 0` the sum
/// is empty and only `AsPrinted` keeps the term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaVariant {
    #[default]
    AsPrinted,
    QuadratureConsistent,
}

impl std::str::FromStr for SigmaVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "as-printed" => Ok(SigmaVariant::AsPrinted),
            "quadrature-consistent" => Ok(SigmaVariant::QuadratureConsistent),
            other => Err(format!(
                "unknown sigma variant '{other}' (expected as-printed or quadrature-consistent)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solve1DOptions {
    pub scheme: CaputoScheme,
    pub sigma_variant: SigmaVariant,
    /// Run even when [`validate_problem_1d`] reports violations.
    pub override_validation: bool,
    /// Verify `d_n > ... > d_0 > 0` at every L2-1sigma level.
    pub check_weights: bool,
    /// Factor `H` again at every level instead of reusing it.
    pub refactor_each_level: bool,
}

impl Default for Solve1DOptions {
    fn default() -> Self {
        Self {
            scheme: CaputoScheme::L21Sigma,
            sigma_variant: SigmaVariant::default(),
            override_validation: false,
            check_weights: true,
            refactor_each_level: false,
        }
    }
}

impl Solve1DOptions {
    pub fn with_scheme(scheme: CaputoScheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

/// Coefficients of `H U^{n+1} = H~ U^n + F^n` at the interior nodes
/// `m = 1..M-1` (index `m - 1` in every vector).
#[derive(Debug, Clone, PartialEq)]
pub struct StepSystem1D {
    pub level: usize,
    /// Coefficient of `U_{m-1}^{n+1}`.
    pub a: Vec<f64>,
    /// Coefficient of `U_m^{n+1}`.
    pub b: Vec<f64>,
    /// Coefficient of `U_{m+1}^{n+1}`.
    pub c: Vec<f64>,
    pub at: Vec<f64>,
    pub bt: Vec<f64>,
    pub ct: Vec<f64>,
}

impl StepSystem1D {
    pub fn matrix(&self) -> Tridiag {
        Tridiag {
            sub: self.a.clone(),
            diag: self.b.clone(),
            sup: self.c.clone(),
        }
    }

    /// `H~ U^n` at the interior nodes; `u` holds all `M + 1` nodes.
    pub fn apply_explicit(&self, u: &[f64]) -> Vec<f64> {
        (0..self.b.len())
            .map(|i| self.at[i] * u[i] + self.bt[i] * u[i + 1] + self.ct[i] * u[i + 2])
            .collect()
    }

    /// Strict diagonal dominance of `H` (boundary rows drop the missing band).
    pub fn is_diagonally_dominant(&self) -> bool {
        self.matrix().is_diagonally_dominant()
    }
}

/// Right-hand side pieces of one L2-1sigma step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRhs {
    /// `F^n`.
    pub load: Vec<f64>,
    /// `H~ U^n`.
    pub explicit: Vec<f64>,
    /// Known `U^{n+1}` boundary values moved across: `-A_1 h1`, `-C_{M-1} h2`.
    pub boundary: Vec<f64>,
}

impl StepRhs {
    pub fn total(&self) -> Vec<f64> {
        self.load
            .iter()
            .zip(&self.explicit)
            .zip(&self.boundary)
            .map(|((a, b), c)| a + b + c)
            .collect()
    }
}

fn finite(v: f64, what: &'static str, at: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, location: at() })
    }
}

/// Spatial samples and kernel values reused by every level of one run.
struct Context<'a> {
    prob: &'a Problem1D,
    tgrid: TemporalGrid,
    xs: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    r: Vec<f64>,
    kernels: KernelTable,
    inv_dx2: f64,
    inv_2dx: f64,
}

impl<'a> Context<'a> {
    fn new(prob: &'a Problem1D, sgrid: &SpatialGrid1D, tgrid: TemporalGrid) -> Result<Self> {
        let xs = sgrid.nodes();
        let sample = |f: &crate::problem::Fn1, what: &'static str| -> Result<Vec<f64>> {
            xs.iter()
                .map(|&x| finite(f(x), what, || format!("x = {x}")))
                .collect()
        };
        let p = sample(&prob.p, "p")?;
        let q = sample(&prob.q, "q")?;
        let r = sample(&prob.r, "r")?;
        let kernels = KernelTable::new(xs.len(), &tgrid, |i, s| (prob.kernel)(xs[i], s))?;
        Ok(Self {
            prob,
            tgrid,
            p,
            q,
            r,
            kernels,
            inv_dx2: 1.0 / (sgrid.dx * sgrid.dx),
            inv_2dx: 0.5 / sgrid.dx,
            xs,
        })
    }

    fn interior(&self) -> usize {
        self.xs.len() - 2
    }

    /// `-p delta^2 u + q D0 u + r u` at interior node `m`.
    fn spatial(&self, u: &[f64], m: usize) -> f64 {
        let lap = (u[m + 1] - 2.0 * u[m] + u[m - 1]) * self.inv_dx2;
        let grad = (u[m + 1] - u[m - 1]) * self.inv_2dx;
        -self.p[m] * lap + self.q[m] * grad + self.r[m] * u[m]
    }

    fn source(&self, t: f64) -> Result<Vec<f64>> {
        (1..self.xs.len() - 1)
            .map(|m| {
                let x = self.xs[m];
                finite((self.prob.source)(x, t), "source", || format!("x = {x}, t = {t}"))
            })
            .collect()
    }

    fn boundary(&self, t: f64) -> Result<(f64, f64)> {
        let l = finite((self.prob.left)(t), "left boundary", || format!("t = {t}"))?;
        let r = finite((self.prob.right)(t), "right boundary", || format!("t = {t}"))?;
        Ok((l, r))
    }

    /// Tridiagonal matrix of a level whose leading weight is `lead` and whose
    /// implicit memory coefficient is `theta * K(x, 0)`.
    /// `weight` scales the spatial operator (`sigma` or 1).
    fn implicit_matrix(&self, lead: f64, weight: f64, theta: f64) -> Tridiag {
        let n = self.interior();
        let k0 = self.kernels.whole(0);
        let mu = self.prob.mu;
        let mut sub = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        let mut sup = Vec::with_capacity(n);
        for m in 1..=n {
            let (p, q) = (self.p[m], self.q[m]);
            sub.push(weight * (-q * self.inv_2dx - p * self.inv_dx2));
            diag.push(lead + weight * (2.0 * p * self.inv_dx2 + self.r[m]) + mu * theta * k0[m]);
            sup.push(weight * (q * self.inv_2dx - p * self.inv_dx2));
        }
        Tridiag { sub, diag, sup }
    }

    fn l2_system(&self, n: usize, variant: SigmaVariant) -> Result<StepSystem1D> {
        let g = &self.tgrid;
        let (dt, sigma, mu) = (g.dt, g.sigma, self.prob.mu);
        let w = fracops::l2_1sigma_weights(g, n)?;
        let lead = w.leading();
        let h = self.implicit_matrix(lead, sigma, sigma * sigma * dt / 2.0);
        let (k_sigma, k0) = (self.kernels.offset(0), self.kernels.whole(0));
        let first_panel = if n > 0 || variant == SigmaVariant::AsPrinted { 1.0 } else { 0.0 };
        let s1 = 1.0 - sigma;
        let mut at = Vec::with_capacity(h.len());
        let mut bt = Vec::with_capacity(h.len());
        let mut ct = Vec::with_capacity(h.len());
        for m in 1..=h.len() {
            let (p, q) = (self.p[m], self.q[m]);
            at.push(q * s1 * self.inv_2dx + p * s1 * self.inv_dx2);
            bt.push(
                lead - 2.0 * p * s1 * self.inv_dx2
                    - self.r[m] * s1
                    - first_panel * mu * dt / 2.0 * k_sigma[m]
                    - mu * sigma * dt / 2.0 * k_sigma[m]
                    - mu * dt * sigma * s1 / 2.0 * k0[m],
            );
            ct.push(-q * s1 * self.inv_2dx + p * s1 * self.inv_dx2);
        }
        Ok(StepSystem1D {
            level: n,
            a: h.sub,
            b: h.diag,
            c: h.sup,
            at,
            bt,
            ct,
        })
    }

    /// `F^n` in the printed three-case form.
    fn l2_load<H: AsRef<[f64]>>(&self, w: &CaputoWeights, history: &[H], n: usize) -> Result<Vec<f64>> {
        let g = &self.tgrid;
        let (dt, mu) = (g.dt, self.prob.mu);
        let mut load = self.source(g.offset_node(n))?;
        if n == 0 {
            return Ok(load);
        }
        for (i, out) in load.iter_mut().enumerate() {
            let m = i + 1;
            let mut hist = 0.0;
            for j in 0..n {
                hist += w.weights[j] * (history[j + 1].as_ref()[m] - history[j].as_ref()[m]);
            }
            let mut mem = self.kernels.offset(1)[m] * history[n - 1].as_ref()[m];
            for j in 0..n.saturating_sub(1) {
                mem += self.kernels.offset(n - j - 1)[m] * history[j + 1].as_ref()[m]
                    + self.kernels.offset(n - j)[m] * history[j].as_ref()[m];
            }
            *out += -hist - mu * dt / 2.0 * mem;
        }
        Ok(load)
    }

    /// Right-hand side of the L2-1sigma step in compact form: history sum,
    /// memory term and spatial operator on `U^n` taken directly.
    fn l2_rhs<H: AsRef<[f64]>>(
        &self,
        w: &CaputoWeights,
        history: &[H],
        n: usize,
        variant: SigmaVariant,
        matrix: &Tridiag,
    ) -> Result<Vec<f64>> {
        let g = &self.tgrid;
        let (dt, sigma, mu) = (g.dt, g.sigma, self.prob.mu);
        let mem = volterra::memory_term_l2sigma(&self.kernels, g, history, n)?;
        let u_n = history[n].as_ref();
        let lead = w.leading();
        let mut rhs = self.source(g.offset_node(n))?;
        let spurious = if n == 0 && variant == SigmaVariant::AsPrinted { dt / 2.0 } else { 0.0 };
        let k_sigma = self.kernels.offset(0);
        for (i, out) in rhs.iter_mut().enumerate() {
            let m = i + 1;
            let mut hist = 0.0;
            for j in 0..n {
                hist += w.weights[j] * (history[j + 1].as_ref()[m] - history[j].as_ref()[m]);
            }
            *out += lead * u_n[m] - hist
                - (1.0 - sigma) * self.spatial(u_n, m)
                - mu * (mem.explicit[m] + spurious * k_sigma[m] * u_n[m]);
        }
        let (left, right) = self.boundary(g.node(n + 1))?;
        let last = rhs.len() - 1;
        rhs[0] -= matrix.sub[0] * left;
        rhs[last] -= matrix.sup[last] * right;
        Ok(rhs)
    }
}

fn prepare(prob: &Problem1D, intervals: usize, steps: usize, override_validation: bool) -> Result<(SpatialGrid1D, TemporalGrid)> {
    let sgrid = SpatialGrid1D::new(prob.length, intervals)?;
    if intervals < 2 {
        return Err(Error::InvalidGrid("need at least two space intervals".into()));
    }
    let tgrid = TemporalGrid::new(prob.t_final, steps, prob.alpha)?;
    let report = validate_problem_1d(prob, &sgrid);
    if !report.passed() && !override_validation {
        return Err(Error::Validation(report));
    }
    Ok((sgrid, tgrid))
}

fn check_history<H: AsRef<[f64]>>(history: &[H], levels: usize, nodes: usize) -> Result<()> {
    if history.len() < levels || history[..levels].iter().any(|h| h.as_ref().len() != nodes) {
        return Err(Error::DimensionMismatch(format!(
            "need {levels} history levels of {nodes} nodes"
        )));
    }
    Ok(())
}

/// Implicit and explicit coefficients of the L2-1sigma step `t_n -> t_{n+1}`.
pub fn assemble_step(
    prob: &Problem1D,
    sgrid: &SpatialGrid1D,
    tgrid: &TemporalGrid,
    n: usize,
    variant: SigmaVariant,
) -> Result<StepSystem1D> {
    Context::new(prob, sgrid, *tgrid)?.l2_system(n, variant)
}

/// `F^n`, `H~ U^n` and the boundary contributions for the step `t_n -> t_{n+1}`.
/// `history` holds levels `0..=n` on all `M + 1` nodes.
pub fn build_rhs<H: AsRef<[f64]>>(
    prob: &Problem1D,
    sgrid: &SpatialGrid1D,
    tgrid: &TemporalGrid,
    history: &[H],
    n: usize,
    variant: SigmaVariant,
) -> Result<StepRhs> {
    let ctx = Context::new(prob, sgrid, *tgrid)?;
    check_history(history, n + 1, ctx.xs.len())?;
    let sys = ctx.l2_system(n, variant)?;
    let w = fracops::l2_1sigma_weights(tgrid, n)?;
    let load = ctx.l2_load(&w, history, n)?;
    let explicit = sys.apply_explicit(history[n].as_ref());
    let (left, right) = ctx.boundary(tgrid.node(n + 1))?;
    let mut boundary = vec![0.0; load.len()];
    let last = boundary.len() - 1;
    boundary[0] -= sys.a[0] * left;
    boundary[last] -= sys.c[last] * right;
    Ok(StepRhs {
        load,
        explicit,
        boundary,
    })
}

fn initial_level(ctx: &Context, tgrid: &TemporalGrid) -> Result<Vec<f64>> {
    let mut u0: Vec<f64> = ctx
        .xs
        .iter()
        .map(|&x| finite((ctx.prob.initial)(x), "initial data", || format!("x = {x}")))
        .collect::<Result<_>>()?;
    // Boundary rows follow h1, h2 at every level including t = 0.
    let (l, r) = ctx.boundary(tgrid.node(0))?;
    u0[0] = l;
    *u0.last_mut().expect("at least three nodes") = r;
    Ok(u0)
}

fn with_boundary(ctx: &Context, interior: Vec<f64>, t: f64) -> Result<Vec<f64>> {
    let (l, r) = ctx.boundary(t)?;
    let mut u = Vec::with_capacity(interior.len() + 2);
    u.push(l);
    u.extend(interior);
    u.push(r);
    Ok(u)
}

fn solve_level(factor: &BandedFactor, rhs: &[f64], level: usize) -> Result<Vec<f64>> {
    let x = factor.solve(rhs).map_err(|e| Error::LinearSolve {
        level,
        source: Box::new(e),
    })?;
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "linear solve",
            location: format!("interior node {}, level {level}", i + 1),
        });
    }
    Ok(x)
}

fn factor_level(matrix: &Tridiag, level: usize) -> Result<BandedFactor> {
    BandedFactor::new(matrix).map_err(|e| Error::LinearSolve {
        level,
        source: Box::new(e),
    })
}

fn run_l2sigma(ctx: &Context, opts: &Solve1DOptions) -> Result<Vec<Vec<f64>>> {
    let g = ctx.tgrid;
    let mut history = vec![initial_level(ctx, &g)?];
    let mut cached: Option<(Tridiag, BandedFactor)> = None;
    for n in 0..g.steps {
        let w = fracops::l2_1sigma_weights(&g, n)?;
        if opts.check_weights && n > 0 {
            w.check_monotone()?;
        }
        let fresh = n <= 1 || opts.refactor_each_level || cached.is_none();
        if fresh {
            let m = ctx.implicit_matrix(w.leading(), g.sigma, g.sigma * g.sigma * g.dt / 2.0);
            let f = factor_level(&m, n)?;
            cached = Some((m, f));
        }
        let (matrix, factor) = cached.as_ref().expect("factor cached above");
        let rhs = ctx.l2_rhs(&w, &history, n, opts.sigma_variant, matrix)?;
        let interior = solve_level(factor, &rhs, n + 1)?;
        history.push(with_boundary(ctx, interior, g.node(n + 1))?);
    }
    Ok(history)
}

fn run_l1(ctx: &Context, opts: &Solve1DOptions) -> Result<Vec<Vec<f64>>> {
    let g = ctx.tgrid;
    let mut history = vec![initial_level(ctx, &g)?];
    let scale = fracops::weight_scale(&g);
    let matrix = ctx.implicit_matrix(1.0 / scale, 1.0, g.dt / 2.0);
    let mut factor = factor_level(&matrix, 1)?;
    let mu = ctx.prob.mu;
    for n in 1..=g.steps {
        if opts.refactor_each_level && n > 1 {
            factor = factor_level(&matrix, n)?;
        }
        let w = fracops::l1_weights(&g, n)?;
        let mem = volterra::memory_term_l1(&ctx.kernels, &g, &history, n)?;
        let lead = w.leading();
        let mut rhs = ctx.source(g.node(n))?;
        for (i, out) in rhs.iter_mut().enumerate() {
            let m = i + 1;
            let mut hist = 0.0;
            for j in 0..n - 1 {
                hist += w.weights[j] * (history[j + 1][m] - history[j][m]);
            }
            *out += lead * history[n - 1][m] - hist - mu * mem.explicit[m];
        }
        let (left, right) = ctx.boundary(g.node(n))?;
        let last = rhs.len() - 1;
        rhs[0] -= matrix.sub[0] * left;
        rhs[last] -= matrix.sup[last] * right;
        let interior = solve_level(&factor, &rhs, n)?;
        history.push(with_boundary(ctx, interior, g.node(n))?);
    }
    Ok(history)
}

/// Solve on `M` space intervals and `N` time steps with the selected scheme.
pub fn solve_1d(prob: &Problem1D, intervals: usize, steps: usize, opts: &Solve1DOptions) -> Result<SolutionField> {
    let (sgrid, tgrid) = prepare(prob, intervals, steps, opts.override_validation)?;
    let ctx = Context::new(prob, &sgrid, tgrid)?;
    let levels = match opts.scheme {
        CaputoScheme::L21Sigma => run_l2sigma(&ctx, opts)?,
        CaputoScheme::L1 => run_l1(&ctx, opts)?,
    };
    SolutionField::from_levels(SpaceLayout::Line { x: ctx.xs.clone() }, tgrid.nodes(), levels)
}

/// L2-1sigma with default options.
pub fn solve_l2sigma(prob: &Problem1D, intervals: usize, steps: usize) -> Result<SolutionField> {
    solve_1d(prob, intervals, steps, &Solve1DOptions::with_scheme(CaputoScheme::L21Sigma))
}

/// L1 with default options.
pub fn solve_l1(prob: &Problem1D, intervals: usize, steps: usize) -> Result<SolutionField> {
    solve_1d(prob, intervals, steps, &Solve1DOptions::with_scheme(CaputoScheme::L1))
}

/// Outcome of the discrete stability estimate
/// `||U^{n+1}|| <= ||U^0|| + 2 T^alpha Gamma(1 - alpha) max_n ||f^{n+sigma}||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCheck {
    pub bound: f64,
    pub max_norm: f64,
    /// Weights decrease monotonically and `d_0 >= 1 / (2 T^alpha Gamma(1-alpha))`
    /// at every level, i.e. the estimate's hypothesis holds.
    pub hypothesis_holds: bool,
    pub holds: bool,
}

/// Evaluate the stability estimate for an L2-1sigma solution field.
pub fn check_stability(prob: &Problem1D, field: &SolutionField) -> Result<StabilityCheck> {
    let steps = field.levels() - 1;
    let tgrid = TemporalGrid::new(prob.t_final, steps, prob.alpha)?;
    let xs = match &field.layout {
        SpaceLayout::Line { x } => x.clone(),
        SpaceLayout::Collocation { .. } => {
            return Err(Error::DimensionMismatch("stability check needs a 1D field".into()))
        }
    };
    let c = 2.0 * prob.t_final.powf(prob.alpha) * gamma(1.0 - prob.alpha);
    let mut f_max = 0.0f64;
    let mut hypothesis = true;
    for n in 0..steps {
        let t = tgrid.offset_node(n);
        for &x in &xs {
            f_max = f_max.max((prob.source)(x, t).abs());
        }
        let w = fracops::l2_1sigma_weights(&tgrid, n)?;
        hypothesis &= w.check_monotone().is_ok() && w.weights[0] >= 1.0 / c;
    }
    let bound = field.max_abs(0) + c * f_max;
    let max_norm = (1..field.levels()).map(|n| field.max_abs(n)).fold(0.0, f64::max);
    Ok(StabilityCheck {
        bound,
        max_norm,
        hypothesis_holds: hypothesis,
        holds: max_norm <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{constant1, constant2};
    use std::sync::Arc;

    fn heat(alpha: f64) -> Problem1D {
        Problem1D {
            name: "heat".into(),
            length: 1.0,
            t_final: 1.0,
            alpha,
            p: constant1(1.0),
            q: constant1(0.0),
            r: constant1(0.0),
            mu: 0.0,
            kernel: constant2(0.0),
            source: constant2(0.0),
            initial: constant1(0.0),
            left: constant1(0.0),
            right: constant1(0.0),
            exact: None,
        }
    }

    #[test]
    fn pure_diffusion_coefficients() {
        let prob = heat(0.5);
        let s = SpatialGrid1D::new(1.0, 4).unwrap();
        let t = TemporalGrid::new(1.0, 4, 0.5).unwrap();
        for n in [0, 2] {
            let sys = assemble_step(&prob, &s, &t, n, SigmaVariant::AsPrinted).unwrap();
            let d_n = fracops::l2_1sigma_weights(&t, n).unwrap().leading();
            for i in 0..3 {
                assert!((sys.a[i] + t.sigma * 16.0).abs() < 1e-12);
                assert!((sys.c[i] + t.sigma * 16.0).abs() < 1e-12);
                assert!((sys.b[i] - d_n - 2.0 * t.sigma * 16.0).abs() < 1e-12);
            }
            assert!(sys.is_diagonally_dominant());
        }
    }

    #[test]
    fn zero_data_gives_zero_field() {
        for scheme in [CaputoScheme::L21Sigma, CaputoScheme::L1] {
            let f = solve_1d(&heat(0.4), 8, 8, &Solve1DOptions::with_scheme(scheme)).unwrap();
            assert!(f.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn first_load_is_source_at_offset() {
        let mut prob = heat(0.5);
        prob.source = Arc::new(|x, t| x + 10.0 * t);
        let s = SpatialGrid1D::new(1.0, 4).unwrap();
        let t = TemporalGrid::new(1.0, 4, 0.5).unwrap();
        let hist = vec![vec![0.0; 5]];
        let rhs = build_rhs(&prob, &s, &t, &hist, 0, SigmaVariant::AsPrinted).unwrap();
        for (i, v) in rhs.load.iter().enumerate() {
            let x = (i + 1) as f64 * 0.25;
            assert!((v - (x + 10.0 * t.sigma * t.dt)).abs() < 1e-14);
        }
    }

    fn coupled(alpha: f64) -> Problem1D {
        Problem1D {
            name: "coupled".into(),
            length: 1.0,
            t_final: 1.0,
            alpha,
            p: Arc::new(|x| 1.0 + x),
            q: Arc::new(|x| 0.5 - x),
            r: Arc::new(|x| x * x),
            mu: 0.7,
            kernel: Arc::new(|x, s| (1.0 + x) * (-s).exp()),
            source: Arc::new(|x, t| (x * t).sin() + 1.0),
            initial: Arc::new(|x| (std::f64::consts::PI * x).sin()),
            left: Arc::new(|t| t * t),
            right: Arc::new(|t| t),
            exact: None,
        }
    }

    #[test]
    fn printed_form_matches_solver_rhs() {
        // The printed H~ / F^n split must agree with the compact form used by
        // the stepper, for both variants and at the special levels 0, 1, 2.
        let prob = coupled(0.6);
        let s = SpatialGrid1D::new(1.0, 6).unwrap();
        let t = TemporalGrid::new(1.0, 5, 0.6).unwrap();
        let hist: Vec<Vec<f64>> = (0..6)
            .map(|n| (0..7).map(|m| ((n * 7 + m) as f64 * 0.37).cos()).collect())
            .collect();
        let ctx = Context::new(&prob, &s, t).unwrap();
        for variant in [SigmaVariant::AsPrinted, SigmaVariant::QuadratureConsistent] {
            for n in 0..5 {
                let printed = build_rhs(&prob, &s, &t, &hist[..=n], n, variant).unwrap().total();
                let w = fracops::l2_1sigma_weights(&t, n).unwrap();
                let sys = ctx.l2_system(n, variant).unwrap();
                let compact = ctx.l2_rhs(&w, &hist[..=n], n, variant, &sys.matrix()).unwrap();
                for (a, b) in printed.iter().zip(&compact) {
                    assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()), "n={n} {variant:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn variants_differ_only_at_first_level() {
        let prob = coupled(0.5);
        let s = SpatialGrid1D::new(1.0, 4).unwrap();
        let t = TemporalGrid::new(1.0, 4, 0.5).unwrap();
        let a0 = assemble_step(&prob, &s, &t, 0, SigmaVariant::AsPrinted).unwrap();
        let b0 = assemble_step(&prob, &s, &t, 0, SigmaVariant::QuadratureConsistent).unwrap();
        assert_ne!(a0.bt, b0.bt);
        let a2 = assemble_step(&prob, &s, &t, 2, SigmaVariant::AsPrinted).unwrap();
        let b2 = assemble_step(&prob, &s, &t, 2, SigmaVariant::QuadratureConsistent).unwrap();
        assert_eq!(a2, b2);
    }

    #[test]
    fn reuse_is_bit_identical() {
        let prob = coupled(0.3);
        for scheme in [CaputoScheme::L21Sigma, CaputoScheme::L1] {
            let mut opts = Solve1DOptions::with_scheme(scheme);
            let a = solve_1d(&prob, 10, 12, &opts).unwrap();
            opts.refactor_each_level = true;
            let b = solve_1d(&prob, 10, 12, &opts).unwrap();
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn quadratic_in_space_linear_in_time_is_exact() {
        // U = (1 + t)(x^2 + 1) with a constant kernel: every discrete operator
        // involved is exact on this U, so both schemes reproduce it.
        let alpha = 0.45;
        let exact = |x: f64, t: f64| (1.0 + t) * (x * x + 1.0);
        let mut prob = coupled(alpha);
        prob.kernel = constant2(0.8);
        prob.q = constant1(0.3);
        prob.p = constant1(1.2);
        prob.r = constant1(0.4);
        prob.source = Arc::new(move |x, t| {
            let caputo = (x * x + 1.0) * t.powf(1.0 - alpha) / gamma(2.0 - alpha);
            let mem = 0.7 * 0.8 * (x * x + 1.0) * (t + t * t / 2.0);
            caputo - 1.2 * 2.0 * (1.0 + t) + 0.3 * 2.0 * x * (1.0 + t) + 0.4 * exact(x, t) + mem
        });
        prob.initial = Arc::new(move |x| exact(x, 0.0));
        prob.left = Arc::new(move |t| exact(0.0, t));
        prob.right = Arc::new(move |t| exact(1.0, t));
        let max_err = |opts: Solve1DOptions| {
            let f = solve_1d(&prob, 8, 16, &opts).unwrap();
            let mut e = 0.0f64;
            for n in 0..f.levels() {
                for m in 0..f.points() {
                    let (x, _) = f.coords(m);
                    e = e.max((f.value(m, n) - exact(x, f.times[n])).abs());
                }
            }
            e
        };
        let consistent = Solve1DOptions {
            sigma_variant: SigmaVariant::QuadratureConsistent,
            ..Default::default()
        };
        assert!(max_err(consistent) < 1e-11);
        assert!(max_err(Solve1DOptions::with_scheme(CaputoScheme::L1)) < 1e-11);
        // The extra first-level panel of the printed coefficient is not exact.
        let printed = Solve1DOptions {
            sigma_variant: SigmaVariant::AsPrinted,
            ..Default::default()
        };
        assert!(max_err(printed) > 1e-6);
    }

    #[test]
    fn refuses_invalid_problem_unless_overridden() {
        let mut prob = heat(0.5);
        prob.q = constant1(10.0);
        let err = solve_l2sigma(&prob, 4, 4).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let opts = Solve1DOptions {
            override_validation: true,
            ..Default::default()
        };
        assert!(solve_1d(&prob, 4, 4, &opts).is_ok());
    }

    #[test]
    fn nan_in_source_is_reported() {
        let mut prob = heat(0.5);
        prob.source = Arc::new(|x, t| if x > 0.6 && t > 0.5 { f64::NAN } else { 0.0 });
        match solve_l2sigma(&prob, 4, 4).unwrap_err() {
            Error::NonFinite { what, location } => {
                assert_eq!(what, "source");
                assert!(location.contains("x = 0.75"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn stability_estimate_on_coupled_problem() {
        let prob = coupled(0.7);
        let f = solve_l2sigma(&prob, 16, 32).unwrap();
        let check = check_stability(&prob, &f).unwrap();
        assert!(check.hypothesis_holds);
        assert!(check.holds, "{check:?}");
    }
}
