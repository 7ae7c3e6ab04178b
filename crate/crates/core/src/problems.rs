//! Built-in test problems, all on `t in (0, 1]`.
//!
//! | name       | dim | exact solution                         |
//! |------------|-----|----------------------------------------|
//! | `example1` | 1D  | `(1 + t^{a+4}) sin(pi x)`              |
//! | `example2` | 1D  | `(1 - x^2)(t + t^{a+3})`               |
//! | `example3` | 1D  | unknown (double-mesh estimates only)   |
//! | `example4` | 2D  | `(1 + t^{a+3}) x y (x - 1)(y - 1)`     |

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fracops::gamma;
use crate::problem::{constant1, constant2, BoundaryFn, Problem1D, Problem2D};

pub const NAMES: [&str; 4] = ["example1", "example2", "example3", "example4"];

#[derive(Debug, Clone)]
pub enum Builtin {
    OneD(Problem1D),
    TwoD(Problem2D),
}

impl Builtin {
    pub fn name(&self) -> &str {
        match self {
            Builtin::OneD(p) => &p.name,
            Builtin::TwoD(p) => &p.name,
        }
    }
}

pub fn example(name: &str, alpha: f64) -> Result<Builtin> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    match name {
        "example1" => Ok(Builtin::OneD(example1(alpha))),
        "example2" => Ok(Builtin::OneD(example2(alpha))),
        "example3" => Ok(Builtin::OneD(example3(alpha))),
        "example4" => Ok(Builtin::TwoD(example4(alpha))),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

pub fn example_1d(name: &str, alpha: f64) -> Result<Problem1D> {
    match example(name, alpha)? {
        Builtin::OneD(p) => Ok(p),
        Builtin::TwoD(_) => Err(Error::UnknownProblem(format!("{name} is not a 1D problem"))),
    }
}

pub fn example_2d(name: &str, alpha: f64) -> Result<Problem2D> {
    match example(name, alpha)? {
        Builtin::TwoD(p) => Ok(p),
        Builtin::OneD(_) => Err(Error::UnknownProblem(format!("{name} is not a 2D problem"))),
    }
}

/// `D^a U - (1 + x) U_xx + U + int (t - s) sin(x) U ds = f`, zero boundaries.
pub fn example1(alpha: f64) -> Problem1D {
    let c_time = gamma(alpha + 5.0) / 24.0;
    let c_mem = 1.0 / ((alpha + 5.0) * (alpha + 6.0));
    Problem1D {
        name: "example1".into(),
        length: 1.0,
        t_final: 1.0,
        alpha,
        p: Arc::new(|x| 1.0 + x),
        q: constant1(0.0),
        r: constant1(1.0),
        mu: 1.0,
        kernel: Arc::new(|x, s| s * x.sin()),
        source: Arc::new(move |x, t| {
            let s = (PI * x).sin();
            let amp = 1.0 + t.powf(alpha + 4.0);
            c_time * t.powi(4) * s
                + PI * PI * amp * (1.0 + x) * s
                + amp * s
                + (t * t / 2.0 + t.powf(alpha + 6.0) * c_mem) * x.sin() * s
        }),
        initial: Arc::new(|x| (PI * x).sin()),
        left: constant1(0.0),
        right: constant1(0.0),
        exact: Some(Arc::new(move |x, t| (1.0 + t.powf(alpha + 4.0)) * (PI * x).sin())),
    }
}

/// `D^a U - U_xx + int x (t - s) U ds = f`, `U(0, t) = t + t^{a+3}`.
pub fn example2(alpha: f64) -> Problem1D {
    let g2a = gamma(2.0 - alpha);
    let c_time = gamma(alpha + 4.0) / 6.0;
    let c_mem = 1.0 / ((alpha + 4.0) * (alpha + 5.0));
    Problem1D {
        name: "example2".into(),
        length: 1.0,
        t_final: 1.0,
        alpha,
        p: constant1(1.0),
        q: constant1(0.0),
        r: constant1(0.0),
        mu: 1.0,
        kernel: Arc::new(|x, s| x * s),
        source: Arc::new(move |x, t| {
            let w = 1.0 - x * x;
            w * (t.powf(1.0 - alpha) / g2a + c_time * t.powi(3))
                + 2.0 * (t + t.powf(alpha + 3.0))
                + x * w * (t.powi(3) / 6.0 + t.powf(alpha + 5.0) * c_mem)
        }),
        initial: constant1(0.0),
        left: Arc::new(move |t| t + t.powf(alpha + 3.0)),
        right: constant1(0.0),
        exact: Some(Arc::new(move |x, t| (1.0 - x * x) * (t + t.powf(alpha + 3.0)))),
    }
}

/// `D^a U - U_xx + x U + int e^{x (t - s)} U ds = x t^{4+a}`, zero data.
pub fn example3(alpha: f64) -> Problem1D {
    Problem1D {
        name: "example3".into(),
        length: 1.0,
        t_final: 1.0,
        alpha,
        p: constant1(1.0),
        q: constant1(0.0),
        r: Arc::new(|x| x),
        mu: 1.0,
        kernel: Arc::new(|x, s| (x * s).exp()),
        source: Arc::new(move |x, t| x * t.powf(4.0 + alpha)),
        initial: constant1(0.0),
        left: constant1(0.0),
        right: constant1(0.0),
        exact: None,
    }
}

/// `D^a U - U_xx - U_yy + U_x + int x y (t - s) U ds = f` on the unit square
/// with homogeneous Dirichlet data.
pub fn example4(alpha: f64) -> Problem2D {
    let c_time = gamma(alpha + 4.0) / 6.0;
    let c_mem = 1.0 / ((alpha + 4.0) * (alpha + 5.0));
    let shape = |x: f64, y: f64| x * y * (x - 1.0) * (y - 1.0);
    Problem2D {
        name: "example4".into(),
        t_final: 1.0,
        alpha,
        p1: constant2(1.0),
        p2: constant2(1.0),
        q1: constant2(1.0),
        q2: constant2(0.0),
        r1: constant2(0.0),
        mu: 1.0,
        kernel: Arc::new(|x, y, s| x * y * s),
        source: Arc::new(move |x, y, t| {
            let amp = 1.0 + t.powf(alpha + 3.0);
            c_time * shape(x, y) * t.powi(3) - 2.0 * amp * (x * x + y * y - x - y)
                + amp * (2.0 * x - 1.0) * (y * y - y)
                + (t * t / 2.0 + t.powf(alpha + 5.0) * c_mem) * x * y * shape(x, y)
        }),
        initial: Arc::new(shape),
        h1: BoundaryFn::zero(),
        h2: BoundaryFn::zero(),
        h3: BoundaryFn::zero(),
        h4: BoundaryFn::zero(),
        exact: Some(Arc::new(move |x, y, t| (1.0 + t.powf(alpha + 3.0)) * shape(x, y))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid1D;
    use crate::problem::validate_problem_1d;

    #[test]
    fn catalog_lookup() {
        for name in NAMES {
            assert_eq!(example(name, 0.5).unwrap().name(), name);
        }
        assert!(matches!(example("example9", 0.5), Err(Error::UnknownProblem(_))));
        assert!(example("example1", 1.0).is_err());
        assert!(example_1d("example4", 0.5).is_err());
        assert!(example_2d("example1", 0.5).is_err());
    }

    #[test]
    fn printed_values() {
        let e1 = example1(0.3);
        assert!(((e1.exact.unwrap())(0.5, 1.0) - 2.0).abs() < 1e-15);
        let e2 = example2(0.4);
        assert!(((e2.left)(0.5) - (0.5 + 0.5f64.powf(3.4))).abs() < 1e-15);
        let e4 = example4(0.2);
        assert_eq!((e4.initial)(0.5, 0.5), 1.0 / 16.0);
        assert!(example3(0.3).exact.is_none());
    }

    #[test]
    fn builtins_validate() {
        for name in ["example1", "example2", "example3"] {
            let p = example_1d(name, 0.5).unwrap();
            for m in [1, 16, 64] {
                assert!(validate_problem_1d(&p, &SpatialGrid1D::new(1.0, m).unwrap()).passed());
            }
        }
    }
}
