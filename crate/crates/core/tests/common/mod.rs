#![allow(dead_code)]

use fracint::haar::{psi, HaarIndex};
use fracint::linalg::DenseMatrix;

/// Second Haar integral with homogeneous end values, built by cumulative
/// quadrature of `psi` on a fine aligned grid instead of the closed forms.
pub struct NumericP {
    h: f64,
    /// `[basis][grid point]`
    p: Vec<Vec<f64>>,
}

impl NumericP {
    pub fn new(basis: usize, cells: usize) -> Self {
        let h = 1.0 / cells as f64;
        let p = (1..=basis)
            .map(|i| {
                let idx = HaarIndex::new(i);
                let mut r1 = vec![0.0; cells + 1];
                for c in 0..cells {
                    r1[c + 1] = r1[c] + h * psi(idx, (c as f64 + 0.5) * h);
                }
                let mut r2 = vec![0.0; cells + 1];
                for c in 0..cells {
                    r2[c + 1] = r2[c] + h * (r1[c] + r1[c + 1]) / 2.0;
                }
                let end = r2[cells];
                (0..=cells).map(|c| r2[c] - c as f64 * h * end).collect()
            })
            .collect();
        Self { h, p }
    }

    /// Value at a grid-aligned abscissa.
    pub fn at(&self, i: usize, x: f64) -> f64 {
        let c = (x / self.h).round() as usize;
        assert!(((c as f64) * self.h - x).abs() < 1e-14, "{x} is not on the grid");
        self.p[i][c]
    }

    /// `(P, P', P'')` by central differences of width `delta`.
    pub fn jets(&self, i: usize, x: f64, delta: f64) -> (f64, f64, f64) {
        let (a, b, c) = (self.at(i, x - delta), self.at(i, x), self.at(i, x + delta));
        (b, (c - a) / (2.0 * delta), (c - 2.0 * b + a) / (delta * delta))
    }
}

pub struct OracleCoefficients<'a> {
    pub diag_weight: &'a dyn Fn(f64, f64) -> f64,
    pub p1: &'a dyn Fn(f64, f64) -> f64,
    pub p2: &'a dyn Fn(f64, f64) -> f64,
    pub q1: &'a dyn Fn(f64, f64) -> f64,
    pub q2: &'a dyn Fn(f64, f64) -> f64,
}

/// Collocation matrix assembled from first principles: apply the operator to
/// every tensor basis function `P_{i1}(x) P_{i2}(y)` at every node.
pub fn brute_force_matrix(nodes: &[f64], coef: &OracleCoefficients) -> DenseMatrix {
    let n = nodes.len();
    let basis = NumericP::new(n, 1024);
    let delta = 1.0 / 16.0;
    let mut out = DenseMatrix::zeros(n * n, n * n);
    for l2 in 0..n {
        for l1 in 0..n {
            let (x, y) = (nodes[l1], nodes[l2]);
            for i2 in 0..n {
                let (py, dpy, ddpy) = basis.jets(i2, y, delta);
                for i1 in 0..n {
                    let (px, dpx, ddpx) = basis.jets(i1, x, delta);
                    out[(l1 + n * l2, i1 + n * i2)] = (coef.diag_weight)(x, y) * px * py
                        - (coef.p1)(x, y) * ddpx * py
                        - (coef.p2)(x, y) * px * ddpy
                        + (coef.q1)(x, y) * dpx * py
                        + (coef.q2)(x, y) * px * dpy;
                }
            }
        }
    }
    out
}
