//! Run configuration: a JSON file merged with command-line flags.
//!
//! A problem is either a built-in name or an inline description whose
//! functions are sums of monomials. Each term is `[coef, e1, e2, ...]` with one
//! exponent per argument, so `[[2.0, 1.0, 0.5]]` in `f(x, t)` is `2 x t^0.5`.
//! A bare number is a constant.

use std::sync::Arc;

use fracint::analysis::{ErrorMeasure, L2Samples, Rung};
use fracint::fracops::CaputoScheme;
use fracint::haar::level_for_size;
use fracint::problem::{BoundaryFn, Fn1, Fn2, Fn3, Problem1D, Problem2D};
use fracint::problems::{self, Builtin};
use fracint::solver1d::SigmaVariant;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub problem: Option<ProblemSpec>,
    pub alpha: Option<f64>,
    /// Space intervals `M` (1D).
    pub intervals: Option<usize>,
    /// Time steps `N`.
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub j1: Option<u32>,
    pub j2: Option<u32>,
    pub scheme: Option<CaputoScheme>,
    pub sigma_variant: Option<SigmaVariant>,
    pub l2_samples: Option<L2Samples>,
    pub measure: Option<ErrorMeasure>,
    /// Comma-separated rung labels, `N/M` (1D) or `2Mx2M/N` (2D).
    pub rungs: Option<String>,
    pub n0: Option<usize>,
    pub m0: Option<usize>,
    pub j: Option<u32>,
    pub count: Option<usize>,
    pub id: Option<u32>,
    pub out: Option<String>,
    pub json: Option<String>,
    #[serde(default)]
    pub parallel: bool,
    #[serde(default)]
    pub override_validation: bool,
    #[serde(default)]
    pub no_timestamp: bool,
    #[serde(default)]
    pub timings: bool,
}

macro_rules! take {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $(if $src.$f.is_some() { $dst.$f = $src.$f; })*
    };
}

impl RunConfig {
    /// Fields set in `flags` win.
    pub fn merge(mut self, flags: RunConfig) -> RunConfig {
        take!(
            self, flags, problem, alpha, intervals, steps, dt, j1, j2, scheme, sigma_variant, l2_samples, measure,
            rungs, n0, m0, j, count, id, out, json
        );
        self.parallel |= flags.parallel;
        self.override_validation |= flags.override_validation;
        self.no_timestamp |= flags.no_timestamp;
        self.timings |= flags.timings;
        self
    }

    pub fn require<T: Copy>(v: Option<T>, name: &str) -> Result<T, String> {
        v.ok_or_else(|| format!("missing required setting '{name}'"))
    }

    pub fn build_problem(&self) -> Result<Builtin, String> {
        let alpha = Self::require(self.alpha, "alpha")?;
        match self.problem.as_ref().ok_or("missing required setting 'problem'")? {
            ProblemSpec::Named(name) => problems::example(name, alpha).map_err(|e| e.to_string()),
            ProblemSpec::Inline(p) => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(fracint::Error::InvalidAlpha(alpha).to_string());
                }
                p.build(alpha)
            }
        }
    }

    /// Time steps from `steps`, or from `dt` when it divides `t_final`.
    pub fn time_steps(&self, t_final: f64) -> Result<usize, String> {
        if let Some(n) = self.steps {
            return Ok(n);
        }
        let dt = self.dt.ok_or("missing required setting 'steps' (or 'dt')")?;
        let n = (t_final / dt).round();
        if !n.is_finite() || n < 1.0 || (n * dt - t_final).abs() > 1e-9 * t_final {
            return Err(format!("dt = {dt} does not divide T = {t_final}"));
        }
        Ok(n as usize)
    }

    pub fn ladder_rungs(&self, two_d: bool) -> Result<Vec<Rung>, String> {
        if let Some(list) = &self.rungs {
            return list.split(',').map(|s| parse_rung(s.trim())).collect();
        }
        let count = Self::require(self.count, "count")?;
        let n0 = Self::require(self.n0, "n0")?;
        if two_d {
            let j = Self::require(self.j, "j")?;
            Ok(fracint::analysis::LadderSpec::halving_dt_2d(j, n0, count))
        } else {
            let m0 = Self::require(self.m0, "m0")?;
            Ok(fracint::analysis::LadderSpec::doubling_1d(n0, m0, count))
        }
    }
}

/// `N/M` or `2M1x2M2/N`.
pub fn parse_rung(s: &str) -> Result<Rung, String> {
    let bad = || format!("cannot parse rung '{s}' (expected N/M or 2Mx2M/N)");
    let (a, b) = s.split_once('/').ok_or_else(bad)?;
    if let Some((x, y)) = a.split_once('x') {
        let size = |v: &str| -> Result<u32, String> {
            let n: usize = v.parse().map_err(|_| bad())?;
            level_for_size(n).map_err(|e| e.to_string())
        };
        Ok(Rung::TwoD {
            j1: size(x)?,
            j2: size(y)?,
            steps: b.parse().map_err(|_| bad())?,
        })
    } else {
        Ok(Rung::OneD {
            steps: a.parse().map_err(|_| bad())?,
            intervals: b.parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "serde_json::Value", into = "serde_json::Value")]
pub enum ProblemSpec {
    Named(String),
    Inline(Box<InlineProblem>),
}

impl TryFrom<serde_json::Value> for ProblemSpec {
    type Error = String;

    fn try_from(v: serde_json::Value) -> Result<Self, String> {
        match v {
            serde_json::Value::String(s) => Ok(ProblemSpec::Named(s)),
            other => serde_json::from_value(other)
                .map(|p| ProblemSpec::Inline(Box::new(p)))
                .map_err(|e| format!("inline problem: {e}")),
        }
    }
}

impl From<ProblemSpec> for serde_json::Value {
    fn from(p: ProblemSpec) -> Self {
        match p {
            ProblemSpec::Named(s) => serde_json::Value::String(s),
            ProblemSpec::Inline(p) => serde_json::to_value(p).expect("inline problems serialize"),
        }
    }
}

/// Sum of monomials, or a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Constant(f64),
    Terms(Vec<Vec<f64>>),
}

impl Default for Expr {
    fn default() -> Self {
        Expr::Constant(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Poly {
    terms: Vec<(f64, Vec<f64>)>,
}

impl Poly {
    fn new(e: &Expr, arity: usize, what: &str) -> Result<Self, String> {
        let terms = match e {
            Expr::Constant(c) => vec![(*c, vec![0.0; arity])],
            Expr::Terms(ts) => ts
                .iter()
                .map(|t| {
                    if t.len() != arity + 1 {
                        return Err(format!(
                            "{what}: term {t:?} needs a coefficient and {arity} exponent(s)"
                        ));
                    }
                    Ok((t[0], t[1..].to_vec()))
                })
                .collect::<Result<_, _>>()?,
        };
        Ok(Self { terms })
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(c, es)| es.iter().zip(x).fold(*c, |acc, (e, v)| if *e == 0.0 { acc } else { acc * v.powf(*e) }))
            .sum()
    }

    /// Derivative in the first argument.
    fn d0(&self) -> Poly {
        let terms = self
            .terms
            .iter()
            .filter(|(_, es)| es[0] != 0.0)
            .map(|(c, es)| {
                let mut es = es.clone();
                let k = es[0];
                es[0] -= 1.0;
                (c * k, es)
            })
            .collect();
        Poly { terms }
    }

    fn f1(self) -> Fn1 {
        Arc::new(move |a| self.eval(&[a]))
    }

    fn f2(self) -> Fn2 {
        Arc::new(move |a, b| self.eval(&[a, b]))
    }

    fn f3(self) -> Fn3 {
        Arc::new(move |a, b, c| self.eval(&[a, b, c]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dim", deny_unknown_fields)]
pub enum InlineProblem {
    #[serde(rename = "1d")]
    OneD(Inline1D),
    #[serde(rename = "2d")]
    TwoD(Inline2D),
}

fn one() -> Expr {
    Expr::Constant(1.0)
}

fn unit() -> f64 {
    1.0
}

fn inline_name() -> String {
    "inline".into()
}

/// `D^a U - p U_xx + q U_x + r U + mu int K(x, t-s) U ds = f(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inline1D {
    #[serde(default = "inline_name")]
    pub name: String,
    #[serde(default = "unit")]
    pub length: f64,
    #[serde(default = "unit")]
    pub t_final: f64,
    #[serde(default = "one")]
    pub p: Expr,
    #[serde(default)]
    pub q: Expr,
    #[serde(default)]
    pub r: Expr,
    #[serde(default)]
    pub mu: f64,
    /// `K(x, elapsed)`.
    #[serde(default)]
    pub kernel: Expr,
    /// `f(x, t)`.
    #[serde(default)]
    pub source: Expr,
    #[serde(default)]
    pub initial: Expr,
    #[serde(default)]
    pub left: Expr,
    #[serde(default)]
    pub right: Expr,
    /// `U(x, t)`, enables exact errors.
    #[serde(default)]
    pub exact: Option<Expr>,
}

/// `D^a U - (p1 U_xx + p2 U_yy - q1 U_x - q2 U_y - r1 U) + mu int K U ds = f`
/// on the unit square. Boundary data take `(s, t)` along the side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inline2D {
    #[serde(default = "inline_name")]
    pub name: String,
    #[serde(default = "unit")]
    pub t_final: f64,
    #[serde(default = "one")]
    pub p1: Expr,
    #[serde(default = "one")]
    pub p2: Expr,
    #[serde(default)]
    pub q1: Expr,
    #[serde(default)]
    pub q2: Expr,
    #[serde(default)]
    pub r1: Expr,
    #[serde(default)]
    pub mu: f64,
    #[serde(default)]
    pub kernel: Expr,
    #[serde(default)]
    pub source: Expr,
    #[serde(default)]
    pub initial: Expr,
    /// `U(0, y, t)`.
    #[serde(default)]
    pub h1: Expr,
    /// `U(1, y, t)`.
    #[serde(default)]
    pub h2: Expr,
    /// `U(x, 0, t)`.
    #[serde(default)]
    pub h3: Expr,
    /// `U(x, 1, t)`.
    #[serde(default)]
    pub h4: Expr,
    #[serde(default)]
    pub exact: Option<Expr>,
}

fn boundary(e: &Expr, what: &str) -> Result<BoundaryFn, String> {
    let p = Poly::new(e, 2, what)?;
    let d1 = p.d0();
    let d2 = d1.d0();
    Ok(BoundaryFn::new(p.f2(), d1.f2(), d2.f2()))
}

impl InlineProblem {
    pub fn build(&self, alpha: f64) -> Result<Builtin, String> {
        match self {
            InlineProblem::OneD(p) => Ok(Builtin::OneD(Problem1D {
                name: p.name.clone(),
                length: p.length,
                t_final: p.t_final,
                alpha,
                p: Poly::new(&p.p, 1, "p")?.f1(),
                q: Poly::new(&p.q, 1, "q")?.f1(),
                r: Poly::new(&p.r, 1, "r")?.f1(),
                mu: p.mu,
                kernel: Poly::new(&p.kernel, 2, "kernel")?.f2(),
                source: Poly::new(&p.source, 2, "source")?.f2(),
                initial: Poly::new(&p.initial, 1, "initial")?.f1(),
                left: Poly::new(&p.left, 1, "left")?.f1(),
                right: Poly::new(&p.right, 1, "right")?.f1(),
                exact: p.exact.as_ref().map(|e| Poly::new(e, 2, "exact").map(Poly::f2)).transpose()?,
            })),
            InlineProblem::TwoD(p) => Ok(Builtin::TwoD(Problem2D {
                name: p.name.clone(),
                t_final: p.t_final,
                alpha,
                p1: Poly::new(&p.p1, 2, "p1")?.f2(),
                p2: Poly::new(&p.p2, 2, "p2")?.f2(),
                q1: Poly::new(&p.q1, 2, "q1")?.f2(),
                q2: Poly::new(&p.q2, 2, "q2")?.f2(),
                r1: Poly::new(&p.r1, 2, "r1")?.f2(),
                mu: p.mu,
                kernel: Poly::new(&p.kernel, 3, "kernel")?.f3(),
                source: Poly::new(&p.source, 3, "source")?.f3(),
                initial: Poly::new(&p.initial, 2, "initial")?.f2(),
                h1: boundary(&p.h1, "h1")?,
                h2: boundary(&p.h2, "h2")?,
                h3: boundary(&p.h3, "h3")?,
                h4: boundary(&p.h4, "h4")?,
                exact: p.exact.as_ref().map(|e| Poly::new(e, 3, "exact").map(Poly::f3)).transpose()?,
            })),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpha": 0.5, "colour": 1}"#).is_err());
        let bad = r#"{"problem": {"dim": "1d", "p": 1.0, "wobble": 2}}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn flags_win() {
        let file: RunConfig = serde_json::from_str(r#"{"alpha": 0.3, "steps": 8, "parallel": true}"#).unwrap();
        let flags = RunConfig {
            alpha: Some(0.7),
            ..Default::default()
        };
        let m = file.merge(flags);
        assert_eq!(m.alpha, Some(0.7));
        assert_eq!(m.steps, Some(8));
        assert!(m.parallel);
    }

    #[test]
    fn inline_polynomials() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"alpha": 0.5, "problem": {"dim": "2d", "h1": [[2.0, 2.0, 1.0], [1.0, 0.0, 0.0]]}}"#,
        )
        .unwrap();
        let Builtin::TwoD(p) = cfg.build_problem().unwrap() else { panic!("2d") };
        assert_eq!((p.h1.value)(3.0, 2.0), 37.0);
        assert_eq!((p.h1.d1)(3.0, 2.0), 24.0);
        assert_eq!((p.h1.d2)(3.0, 2.0), 8.0);
        assert_eq!((p.p1)(0.1, 0.2), 1.0);
        let bad = r#"{"alpha": 0.5, "problem": {"dim": "1d", "source": [[1.0, 2.0]]}}"#;
        let cfg: RunConfig = serde_json::from_str(bad).unwrap();
        assert!(cfg.build_problem().is_err());
    }

    #[test]
    fn rung_labels() {
        assert_eq!(parse_rung("32/16").unwrap(), Rung::OneD { intervals: 16, steps: 32 });
        assert_eq!(parse_rung("16x32/5").unwrap(), Rung::TwoD { j1: 3, j2: 4, steps: 5 });
        assert!(parse_rung("12x16/5").is_err());
        assert!(parse_rung("32").is_err());
        for r in [parse_rung("64/32").unwrap(), parse_rung("8x8/10").unwrap()] {
            assert_eq!(parse_rung(&r.label()).unwrap(), r);
        }
    }

    #[test]
    fn dt_must_divide() {
        let c = RunConfig {
            dt: Some(0.25),
            ..Default::default()
        };
        assert_eq!(c.time_steps(1.0).unwrap(), 4);
        let c = RunConfig {
            dt: Some(0.3),
            ..Default::default()
        };
        assert!(c.time_steps(1.0).is_err());
    }
}
