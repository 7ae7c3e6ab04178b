//! Error norms, observed orders, double-mesh estimates and refinement ladders.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SolutionField, SpaceLayout};
use crate::fracops::CaputoScheme;
use crate::haar::WaveletSystem2D;
use crate::problem::{Problem1D, Problem2D};
use crate::problems::{self, Builtin};
use crate::solver1d::{self, SigmaVariant, Solve1DOptions};
use crate::solver2d::{self, Solve2DOptions};

/// Max over every node and level of `|exact - numeric|`. `exact` receives
/// `(x, y, t)`; `y` is `None` on a line.
pub fn max_error(field: &SolutionField, exact: impl Fn(f64, Option<f64>, f64) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for n in 0..field.levels() {
        let t = field.times[n];
        for (p, v) in field.level(n).iter().enumerate() {
            let (x, y) = field.coords(p);
            worst = worst.max((exact(x, y, t) - v).abs());
        }
    }
    worst
}

pub fn max_error_1d(prob: &Problem1D, field: &SolutionField) -> Result<f64> {
    let exact = prob.exact.as_ref().ok_or_else(|| Error::NoExactSolution(prob.name.clone()))?;
    Ok(max_error(field, |x, _, t| exact(x, t)))
}

/// Double-mesh estimate: max over coarse nodes `(m, n)` of
/// `|coarse(m, n) - fine(2m, 2n)|`.
pub fn double_mesh_error(coarse: &SolutionField, fine: &SolutionField) -> Result<f64> {
    let (cx, fx) = match (&coarse.layout, &fine.layout) {
        (SpaceLayout::Line { x: a }, SpaceLayout::Line { x: b }) => (a.len(), b.len()),
        _ => return Err(Error::DimensionMismatch("double-mesh estimate needs two 1D fields".into())),
    };
    if fx != 2 * cx - 1 || fine.levels() != 2 * coarse.levels() - 1 {
        return Err(Error::DimensionMismatch(format!(
            "fine field ({fx} nodes, {} levels) is not the uniform refinement of ({cx} nodes, {} levels)",
            fine.levels(),
            coarse.levels()
        )));
    }
    let mut worst = 0.0f64;
    for n in 0..coarse.levels() {
        let (c, f) = (coarse.level(n), fine.level(2 * n));
        for m in 0..cx {
            worst = worst.max((c[m] - f[2 * m]).abs());
        }
    }
    Ok(worst)
}

/// Solve on `(M, N)` and `(2M, 2N)` and compare at coincident nodes.
pub fn double_mesh_estimate(prob: &Problem1D, intervals: usize, steps: usize, opts: &Solve1DOptions) -> Result<f64> {
    let coarse = solver1d::solve_1d(prob, intervals, steps, opts)?;
    let fine = solver1d::solve_1d(prob, 2 * intervals, 2 * steps, opts)?;
    double_mesh_error(&coarse, &fine)
}

/// Which levels enter the 2D mean-square error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum L2Samples {
    /// Levels `1..=N`, divided by `2M1 * 2M2 * N`.
    #[default]
    AsPrinted,
    /// Levels `0..=N`, divided by `2M1 * 2M2 * (N + 1)`.
    IncludeInitial,
}

impl std::str::FromStr for L2Samples {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "as-printed" => Ok(L2Samples::AsPrinted),
            "include-initial" => Ok(L2Samples::IncludeInitial),
            other => Err(format!("unknown L2 sampling '{other}' (expected as-printed or include-initial)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub linf: f64,
    pub l2: f64,
}

/// `L_inf` over levels `1..=N` and all nodes, and the root-mean-square error.
pub fn errors_2d(field: &SolutionField, exact: impl Fn(f64, f64, f64) -> f64, samples: L2Samples) -> Result<ErrorNorms> {
    if !matches!(field.layout, SpaceLayout::Collocation { .. }) {
        return Err(Error::DimensionMismatch("2D error norms need a collocation field".into()));
    }
    let steps = field.levels() - 1;
    let (mut linf, mut sum) = (0.0f64, 0.0);
    for n in 1..=steps {
        let t = field.times[n];
        for (p, v) in field.level(n).iter().enumerate() {
            let (x, y) = field.coords(p);
            let e = (exact(x, y.unwrap_or(0.0), t) - v).abs();
            linf = linf.max(e);
            sum += e * e;
        }
    }
    let levels = match samples {
        L2Samples::AsPrinted => steps.max(1),
        L2Samples::IncludeInitial => steps + 1,
    };
    Ok(ErrorNorms {
        linf,
        l2: (sum / (field.points() * levels) as f64).sqrt(),
    })
}

pub fn errors_2d_problem(prob: &Problem2D, field: &SolutionField, samples: L2Samples) -> Result<ErrorNorms> {
    let exact = prob.exact.as_ref().ok_or_else(|| Error::NoExactSolution(prob.name.clone()))?;
    errors_2d(field, |x, y, t| exact(x, y, t), samples)
}

/// `log2(e_k / e_{k+1})` for adjacent entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// One refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Rung {
    /// `M` space intervals, `N` time steps.
    OneD { intervals: usize, steps: usize },
    /// `2^{J1+1} x 2^{J2+1}` collocation nodes, `N` time steps.
    TwoD { j1: u32, j2: u32, steps: usize },
}

impl Rung {
    pub fn steps(&self) -> usize {
        match *self {
            Rung::OneD { steps, .. } | Rung::TwoD { steps, .. } => steps,
        }
    }

    /// `M` in 1D, `2M1` in 2D.
    pub fn space(&self) -> usize {
        match *self {
            Rung::OneD { intervals, .. } => intervals,
            Rung::TwoD { j1, .. } => 1 << (j1 + 1),
        }
    }

    /// `N/M` as the tables print it; `2M1xN` in 2D.
    pub fn label(&self) -> String {
        match *self {
            Rung::OneD { intervals, steps } => format!("{steps}/{intervals}"),
            Rung::TwoD { j1, j2, steps } => format!("{}x{}/{steps}", 1 << (j1 + 1), 1 << (j2 + 1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMeasure {
    /// Against the exact solution.
    #[default]
    Exact,
    /// Against the solution on the doubled mesh (1D only).
    DoubleMesh,
}

/// Everything needed to reproduce a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderSpec {
    pub problem: String,
    pub alpha: f64,
    #[serde(default = "default_scheme")]
    pub scheme: CaputoScheme,
    #[serde(default)]
    pub sigma_variant: SigmaVariant,
    #[serde(default)]
    pub measure: ErrorMeasure,
    #[serde(default)]
    pub l2_samples: L2Samples,
    #[serde(default)]
    pub override_validation: bool,
    pub rungs: Vec<Rung>,
}

fn default_scheme() -> CaputoScheme {
    CaputoScheme::L21Sigma
}

impl LadderSpec {
    pub fn new(problem: &str, alpha: f64, scheme: CaputoScheme, rungs: Vec<Rung>) -> Self {
        Self {
            problem: problem.to_string(),
            alpha,
            scheme,
            sigma_variant: SigmaVariant::default(),
            measure: ErrorMeasure::Exact,
            l2_samples: L2Samples::default(),
            override_validation: false,
            rungs,
        }
    }

    /// `(N, M) = (n0 2^k, m0 2^k)` for `k = 0..count`.
    pub fn doubling_1d(n0: usize, m0: usize, count: usize) -> Vec<Rung> {
        (0..count)
            .map(|k| Rung::OneD {
                intervals: m0 << k,
                steps: n0 << k,
            })
            .collect()
    }

    /// Fixed `2M1 = 2M2 = 2^{j+1}` with `N = n0 2^k`.
    pub fn halving_dt_2d(j: u32, n0: usize, count: usize) -> Vec<Rung> {
        (0..count).map(|k| Rung::TwoD { j1: j, j2: j, steps: n0 << k }).collect()
    }

    pub fn solve1d_options(&self) -> Solve1DOptions {
        Solve1DOptions {
            scheme: self.scheme,
            sigma_variant: self.sigma_variant,
            override_validation: self.override_validation,
            ..Solve1DOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungReport {
    pub rung: Rung,
    pub dt: f64,
    /// Max error (1D) or `L_inf` error (2D); `None` when the rung failed.
    pub linf: Option<f64>,
    /// 2D only.
    pub l2: Option<f64>,
    /// Order between this rung and the next one.
    pub linf_order: Option<f64>,
    pub l2_order: Option<f64>,
    pub seconds: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub spec: LadderSpec,
    pub rungs: Vec<RungReport>,
}

struct RungErrors {
    linf: f64,
    l2: Option<f64>,
}

fn run_rung(spec: &LadderSpec, builtin: &Builtin, rung: Rung) -> Result<RungErrors> {
    match (builtin, rung) {
        (Builtin::OneD(prob), Rung::OneD { intervals, steps }) => {
            let opts = spec.solve1d_options();
            let linf = match spec.measure {
                ErrorMeasure::Exact => max_error_1d(prob, &solver1d::solve_1d(prob, intervals, steps, &opts)?)?,
                ErrorMeasure::DoubleMesh => double_mesh_estimate(prob, intervals, steps, &opts)?,
            };
            Ok(RungErrors { linf, l2: None })
        }
        (Builtin::TwoD(prob), Rung::TwoD { j1, j2, steps }) => {
            if spec.measure == ErrorMeasure::DoubleMesh {
                return Err(Error::InvalidGrid("double-mesh estimates are 1D only".into()));
            }
            if spec.scheme != CaputoScheme::L21Sigma {
                return Err(Error::InvalidGrid("the 2D solver uses L2-1sigma only".into()));
            }
            let opts = Solve2DOptions {
                override_validation: spec.override_validation,
                ..Solve2DOptions::default()
            };
            let field = solver2d::solve_2d_with(prob, &WaveletSystem2D::new(j1, j2)?, steps, &opts)?;
            let norms = errors_2d_problem(prob, &field, spec.l2_samples)?;
            Ok(RungErrors {
                linf: norms.linf,
                l2: Some(norms.l2),
            })
        }
        (Builtin::OneD(_), Rung::TwoD { .. }) | (Builtin::TwoD(_), Rung::OneD { .. }) => Err(Error::InvalidGrid(
            format!("rung {} does not match the dimension of {}", rung.label(), spec.problem),
        )),
    }
}

fn order(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
        _ => None,
    }
}

/// Run every rung, possibly in parallel. A failing rung is recorded and the
/// ladder continues; rung order in the report always follows the spec.
pub fn run_ladder(spec: &LadderSpec, parallel: bool) -> Result<ConvergenceReport> {
    let builtin = problems::example(&spec.problem, spec.alpha)?;
    run_ladder_with(spec, &builtin, parallel)
}

/// [`run_ladder`] on a caller-supplied problem; `spec.problem` is only a label.
pub fn run_ladder_with(spec: &LadderSpec, builtin: &Builtin, parallel: bool) -> Result<ConvergenceReport> {
    if spec.rungs.is_empty() {
        return Err(Error::InvalidGrid("ladder has no rungs".into()));
    }
    let t_final = match builtin {
        Builtin::OneD(p) => p.t_final,
        Builtin::TwoD(p) => p.t_final,
    };
    let one = |rung: &Rung| {
        let start = Instant::now();
        let out = run_rung(spec, builtin, *rung);
        (out, start.elapsed().as_secs_f64())
    };
    let results: Vec<_> = if parallel {
        spec.rungs.par_iter().map(one).collect()
    } else {
        spec.rungs.iter().map(one).collect()
    };
    let mut rungs: Vec<RungReport> = spec
        .rungs
        .iter()
        .zip(results)
        .map(|(rung, (out, secs))| {
            let dt = t_final / rung.steps().max(1) as f64;
            match out {
                Ok(e) => RungReport {
                    rung: *rung,
                    dt,
                    linf: Some(e.linf),
                    l2: e.l2,
                    linf_order: None,
                    l2_order: None,
                    seconds: Some(secs),
                    failure: None,
                },
                Err(e) => RungReport {
                    rung: *rung,
                    dt,
                    linf: None,
                    l2: None,
                    linf_order: None,
                    l2_order: None,
                    seconds: Some(secs),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect();
    for k in 0..rungs.len().saturating_sub(1) {
        rungs[k].linf_order = order(rungs[k].linf, rungs[k + 1].linf);
        rungs[k].l2_order = order(rungs[k].l2, rungs[k + 1].l2);
    }
    Ok(ConvergenceReport { spec: spec.clone(), rungs })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.17e}")).unwrap_or_default()
}

impl ConvergenceReport {
    pub fn linf_errors(&self) -> Vec<Option<f64>> {
        self.rungs.iter().map(|r| r.linf).collect()
    }

    pub fn all_succeeded(&self) -> bool {
        self.rungs.iter().all(|r| r.failure.is_none())
    }

    /// Drop wall-clock times so that identical specs serialize identically.
    pub fn without_timings(mut self) -> Self {
        for r in &mut self.rungs {
            r.seconds = None;
        }
        self
    }

    /// One row per rung. Timings are left out so the bytes are reproducible.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record([
            "problem", "alpha", "scheme", "rung", "space", "steps", "dt", "linf", "linf_order", "l2", "l2_order",
            "status",
        ])
        .map_err(csv_err)?;
        for r in &self.rungs {
            w.write_record([
                self.spec.problem.clone(),
                format!("{}", self.spec.alpha),
                self.spec.scheme.tag().to_string(),
                r.rung.label(),
                r.rung.space().to_string(),
                r.rung.steps().to_string(),
                format!("{:.17e}", r.dt),
                fmt_opt(r.linf),
                fmt_opt(r.linf_order),
                fmt_opt(r.l2),
                fmt_opt(r.l2_order),
                r.failure.clone().unwrap_or_else(|| "ok".into()),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpaceLayout;

    fn line(values: Vec<Vec<f64>>, x: Vec<f64>) -> SolutionField {
        let times = (0..values.len()).map(|n| n as f64).collect();
        SolutionField::from_levels(SpaceLayout::Line { x }, times, values).unwrap()
    }

    #[test]
    fn max_error_of_exact_samples_and_shift() {
        let f = line(vec![vec![0.0, 0.5, 1.0], vec![1.0, 1.5, 2.0]], vec![0.0, 0.5, 1.0]);
        assert_eq!(max_error(&f, |x, _, t| x + t), 0.0);
        assert_eq!(max_error(&f, |x, _, t| x + t + 0.25), 0.25);
    }

    #[test]
    fn double_mesh_of_converged_field() {
        let c = line(vec![vec![1.0; 3]; 3], vec![0.0, 0.5, 1.0]);
        let f = line(vec![vec![1.0; 5]; 5], vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(double_mesh_error(&c, &f).unwrap(), 0.0);
        assert!(double_mesh_error(&c, &c).is_err());
    }

    #[test]
    fn norms_2d_definitions() {
        let layout = SpaceLayout::Collocation { x: vec![0.25, 0.75], y: vec![0.25, 0.75] };
        let zero = SolutionField::from_levels(layout.clone(), vec![0.0, 0.5, 1.0], vec![vec![0.0; 4]; 3]).unwrap();
        let n = errors_2d(&zero, |_, _, _| 0.0, L2Samples::AsPrinted).unwrap();
        assert_eq!((n.linf, n.l2), (0.0, 0.0));
        let eps = 1e-3;
        let mut levels = vec![vec![0.0; 4]; 3];
        levels[2][1] = eps;
        let one = SolutionField::from_levels(layout, vec![0.0, 0.5, 1.0], levels).unwrap();
        let n = errors_2d(&one, |_, _, _| 0.0, L2Samples::AsPrinted).unwrap();
        assert_eq!(n.linf, eps);
        assert!((n.l2 - eps / 8f64.sqrt()).abs() < 1e-18);
        let m = errors_2d(&one, |_, _, _| 0.0, L2Samples::IncludeInitial).unwrap();
        assert!((m.l2 - eps / 12f64.sqrt()).abs() < 1e-18);
        assert!(n.l2 <= n.linf);
    }

    #[test]
    fn orders_of_power_law() {
        for p in [1.0, 1.5, 2.0, 2.7] {
            let e: Vec<f64> = (0..5).map(|k| 3.0 * 0.5f64.powi(k).powf(p)).collect();
            for o in observed_orders(&e) {
                assert!((o - p).abs() < 1e-12);
            }
        }
        assert!(observed_orders(&[1.0]).is_empty());
    }

    #[test]
    fn one_rung_ladder_has_no_order() {
        let spec = LadderSpec::new("example2", 0.5, CaputoScheme::L21Sigma, LadderSpec::doubling_1d(8, 8, 1));
        let r = run_ladder(&spec, false).unwrap();
        assert_eq!(r.rungs.len(), 1);
        assert!(r.rungs[0].linf.unwrap() > 0.0);
        assert!(r.rungs[0].linf_order.is_none());
    }

    #[test]
    fn failing_rung_is_recorded() {
        let rungs = vec![
            Rung::OneD { intervals: 8, steps: 8 },
            Rung::TwoD { j1: 0, j2: 0, steps: 2 },
            Rung::OneD { intervals: 16, steps: 16 },
        ];
        let r = run_ladder(&LadderSpec::new("example2", 0.5, CaputoScheme::L1, rungs), false).unwrap();
        assert!(r.rungs[1].failure.is_some());
        assert!(r.rungs[0].linf.is_some() && r.rungs[2].linf.is_some());
        assert!(r.rungs[0].linf_order.is_none());
        assert!(!r.all_succeeded());
    }

    #[test]
    fn parallel_matches_serial() {
        let spec = LadderSpec::new("example1", 0.4, CaputoScheme::L21Sigma, LadderSpec::doubling_1d(8, 4, 4));
        let a = run_ladder(&spec, false).unwrap().without_timings();
        let b = run_ladder(&spec, true).unwrap().without_timings();
        assert_eq!(a, b);
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.to_csv().unwrap().lines().count(), 5);
    }

    #[test]
    fn two_d_ladder_reports_both_norms() {
        let spec = LadderSpec::new("example4", 0.5, CaputoScheme::L21Sigma, LadderSpec::halving_dt_2d(0, 4, 2));
        let r = run_ladder(&spec, false).unwrap();
        assert!(r.rungs[0].l2.unwrap() <= r.rungs[0].linf.unwrap());
        assert!(r.rungs[0].l2_order.is_some());
        let back: ConvergenceReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
