//! Haar wavelets on `[0, 1]`, their repeated integrals, and the operational
//! matrices used by the 2D collocation solver.
//!
//! Wavelet `i >= 2` is written `i = m + k + 1` with `m = 2^j`, `0 <= k < m`,
//! and lives on `[k/m, (k+1)/m)` with breakpoints
//! `zeta1 = k/m`, `zeta2 = (k + 1/2)/m`, `zeta3 = (k + 1)/m`. Index `i = 1` is
//! the scaling function. A resolution `J` gives `2M = 2^{J+1}` basis
//! functions and as many collocation nodes `(l - 1/2) / (2M)`.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarIndex {
    pub i: usize,
    pub j: u32,
    pub k: usize,
    pub m: usize,
}

impl HaarIndex {
    /// Panics on `i = 0`; indices are 1-based.
    pub fn new(i: usize) -> Self {
        assert!(i >= 1, "Haar indices start at 1");
        if i == 1 {
            return Self { i, j: 0, k: 0, m: 0 };
        }
        let j = (i - 1).ilog2();
        let m = 1usize << j;
        Self { i, j, k: i - m - 1, m }
    }

    pub fn is_scaling(&self) -> bool {
        self.i == 1
    }

    /// `(zeta1, zeta2, zeta3)`; `(0, 1, 1)` for the scaling function.
    pub fn breakpoints(&self) -> (f64, f64, f64) {
        if self.is_scaling() {
            return (0.0, 1.0, 1.0);
        }
        let m = self.m as f64;
        let k = self.k as f64;
        (k / m, (k + 0.5) / m, (k + 1.0) / m)
    }
}

/// Value of `psi_i(x)`. The scaling function is 1 on all of `[0, 1]`, and the
/// last wavelet of each level keeps its `-1` at `x = 1`.
pub fn psi(idx: HaarIndex, x: f64) -> f64 {
    if idx.is_scaling() {
        return if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 };
    }
    let (z1, z2, z3) = idx.breakpoints();
    if x >= z1 && x < z2 {
        1.0
    } else if x >= z2 && (x < z3 || (z3 == 1.0 && x == 1.0)) {
        -1.0
    } else {
        0.0
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Closed-form `n`-fold integral `R_{n,i}(x) = int_0^x ... int_0 psi_i`.
pub fn haar_integral(n: u32, idx: HaarIndex, x: f64) -> f64 {
    assert!(n >= 1, "integral order starts at 1");
    let nf = factorial(n);
    if idx.is_scaling() {
        return x.powi(n as i32) / nf;
    }
    let (z1, z2, z3) = idx.breakpoints();
    let p = |z: f64| (x - z).powi(n as i32);
    let v = if x < z1 {
        0.0
    } else if x < z2 {
        p(z1)
    } else if x < z3 {
        p(z1) - 2.0 * p(z2)
    } else {
        p(z1) - 2.0 * p(z2) + p(z3)
    };
    v / nf
}

/// Bound constant `8 / (3 (floor((n+1)/2)!)^2)` of `|R_{n,i}| <= C(n) 4^{-(j+1)}`.
pub fn integral_bound_constant(n: u32) -> f64 {
    let f = factorial(n.div_ceil(2));
    8.0 / (3.0 * f * f)
}

/// Exact `int_0^1 psi_a psi_b dx` from the breakpoints.
pub fn inner_product(a: HaarIndex, b: HaarIndex) -> f64 {
    let (a1, a2, a3) = a.breakpoints();
    let (b1, b2, b3) = b.breakpoints();
    let mut cuts = vec![0.0, 1.0, a1, a2, a3, b1, b2, b3];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[1] - w[0]) * psi(a, mid) * psi(b, mid)
        })
        .sum()
}

/// `2^{J+1}` checked against overflow; returns `2M`.
fn basis_size(level: u32) -> Result<usize> {
    if level > 20 {
        return Err(Error::InvalidGrid(format!("resolution J = {level} is too large")));
    }
    Ok(1usize << (level + 1))
}

/// Resolution `J` for `2M` basis functions.
pub fn level_for_size(two_m: usize) -> Result<u32> {
    if two_m < 2 || !two_m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(two_m));
    }
    Ok(two_m.ilog2() - 1)
}

/// `x_l = (l - 1/2) / (2M)`, `l = 1..2M`. `m` must be a power of two.
pub fn collocation_nodes(m: usize) -> Result<Vec<f64>> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    let n = 2 * m;
    Ok((1..=n).map(|l| (l as f64 - 0.5) / n as f64).collect())
}

/// Values of one family of basis-indexed functions at the nodes:
/// `rows = nodes`, `cols = basis`.
fn table(nodes: &[f64], size: usize, f: impl Fn(HaarIndex, f64) -> f64) -> DenseMatrix {
    let mut t = DenseMatrix::zeros(nodes.len(), size);
    for (l, &x) in nodes.iter().enumerate() {
        for i in 1..=size {
            t[(l, i - 1)] = f(HaarIndex::new(i), x);
        }
    }
    t
}

/// Operational tables in one direction.
#[derive(Debug, Clone)]
pub struct Axis {
    pub level: u32,
    pub nodes: Vec<f64>,
    /// `psi_i(x_l)`.
    pub h: DenseMatrix,
    /// `R_{1,i}(x_l)`.
    pub r1: DenseMatrix,
    /// `R_{2,i}(x_l)`.
    pub r2: DenseMatrix,
    /// `R_{2,i}(1)`.
    pub r2_at_one: Vec<f64>,
    /// `R_{2,i}(x_l) - x_l R_{2,i}(1)`: maps second-derivative coefficients to
    /// values with the end values removed.
    pub p: DenseMatrix,
    /// `R_{1,i}(x_l) - R_{2,i}(1)`: derivative of `p`.
    pub q: DenseMatrix,
}

impl Axis {
    pub fn new(level: u32) -> Result<Self> {
        let size = basis_size(level)?;
        let nodes = collocation_nodes(size / 2)?;
        let h = table(&nodes, size, psi);
        let r1 = table(&nodes, size, |i, x| haar_integral(1, i, x));
        let r2 = table(&nodes, size, |i, x| haar_integral(2, i, x));
        let r2_at_one: Vec<f64> = (1..=size).map(|i| haar_integral(2, HaarIndex::new(i), 1.0)).collect();
        let mut p = DenseMatrix::zeros(size, size);
        let mut q = DenseMatrix::zeros(size, size);
        for l in 0..size {
            for i in 0..size {
                p[(l, i)] = r2[(l, i)] - nodes[l] * r2_at_one[i];
                q[(l, i)] = r1[(l, i)] - r2_at_one[i];
            }
        }
        Ok(Self {
            level,
            nodes,
            h,
            r1,
            r2,
            r2_at_one,
            p,
            q,
        })
    }

    /// `2M`, the number of basis functions and of nodes.
    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

/// Tensor-product Haar system on the unit square.
#[derive(Debug, Clone)]
pub struct WaveletSystem2D {
    pub x: Axis,
    pub y: Axis,
}

impl WaveletSystem2D {
    /// Resolutions `J1`, `J2`, i.e. `2M1 = 2^{J1+1}` nodes in `x`.
    pub fn new(j1: u32, j2: u32) -> Result<Self> {
        Ok(Self {
            x: Axis::new(j1)?,
            y: Axis::new(j2)?,
        })
    }

    /// System with `2M1 x 2M2` collocation nodes.
    pub fn with_nodes(nx: usize, ny: usize) -> Result<Self> {
        Self::new(level_for_size(nx)?, level_for_size(ny)?)
    }

    pub fn nx(&self) -> usize {
        self.x.size()
    }

    pub fn ny(&self) -> usize {
        self.y.size()
    }

    /// Number of unknowns `2M1 * 2M2`.
    pub fn unknowns(&self) -> usize {
        self.nx() * self.ny()
    }

    /// `A D B^T` at the nodes, with `D` stored `i1` fastest: `d[i1 + nx * i2]`.
    /// Output is indexed `l1 + nx * l2`.
    pub fn apply(&self, ax: &DenseMatrix, d: &[f64], by: &DenseMatrix) -> Vec<f64> {
        let (nx, ny) = (self.nx(), self.ny());
        // t[l1, i2] = sum_i1 A[l1, i1] D[i1, i2]
        let mut t = vec![0.0; nx * ny];
        for i2 in 0..ny {
            for i1 in 0..nx {
                let dv = d[i1 + nx * i2];
                if dv == 0.0 {
                    continue;
                }
                for l1 in 0..nx {
                    t[l1 + nx * i2] += ax[(l1, i1)] * dv;
                }
            }
        }
        let mut out = vec![0.0; nx * ny];
        for l2 in 0..ny {
            for i2 in 0..ny {
                let b = by[(l2, i2)];
                if b == 0.0 {
                    continue;
                }
                for l1 in 0..nx {
                    out[l1 + nx * l2] += t[l1 + nx * i2] * b;
                }
            }
        }
        out
    }

    /// `z(x, y) = H(x)^T D H(y)` at the nodes.
    pub fn reconstruct(&self, d: &[f64]) -> Vec<f64> {
        self.apply(&self.x.h, d, &self.y.h)
    }

    pub fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        (self.x.nodes.clone(), self.y.nodes.clone())
    }
}

/// Coefficients with `z = H(x)^T D H(y)`, i.e.
/// `D[i1, i2] = 2^{j1} 2^{j2} int int z psi_i1 psi_i2`, computed by the
/// midpoint rule on the collocation grid. The result reproduces `z` exactly
/// at the nodes. Layout `d[i1 + 2M1 * i2]`.
pub fn decompose_2d(z: impl Fn(f64, f64) -> f64, j1: u32, j2: u32) -> Result<Vec<f64>> {
    let sys = WaveletSystem2D::new(j1, j2)?;
    let (nx, ny) = (sys.nx(), sys.ny());
    let samples: Vec<f64> = (0..nx * ny)
        .map(|p| z(sys.x.nodes[p % nx], sys.y.nodes[p / nx]))
        .collect();
    project(&sys, |i1, i2| {
        let mut s = 0.0;
        for l2 in 0..ny {
            let hy = sys.y.h[(l2, i2)];
            if hy == 0.0 {
                continue;
            }
            for l1 in 0..nx {
                s += samples[l1 + nx * l2] * sys.x.h[(l1, i1)] * hy;
            }
        }
        s / (nx * ny) as f64
    })
}

/// Same normalization as [`decompose_2d`] but integrating `z` with a
/// `gauss`-point Gauss-Legendre rule on every cell between consecutive
/// breakpoints, where all basis functions are constant.
pub fn decompose_2d_exact(z: impl Fn(f64, f64) -> f64, j1: u32, j2: u32, gauss: usize) -> Result<Vec<f64>> {
    let sys = WaveletSystem2D::new(j1, j2)?;
    let (nx, ny) = (sys.nx(), sys.ny());
    let (gx, gw) = gauss_legendre(gauss);
    // Cell c in x covers [c/nx, (c+1)/nx] and contains node c.
    let mut cell = vec![0.0; nx * ny];
    for cy in 0..ny {
        for cx in 0..nx {
            let mut s = 0.0;
            for (a, wa) in gx.iter().zip(&gw) {
                let x = (cx as f64 + 0.5 + 0.5 * a) / nx as f64;
                for (b, wb) in gx.iter().zip(&gw) {
                    let y = (cy as f64 + 0.5 + 0.5 * b) / ny as f64;
                    s += wa * wb * z(x, y);
                }
            }
            cell[cx + nx * cy] = s * 0.25 / (nx * ny) as f64;
        }
    }
    project(&sys, |i1, i2| {
        let mut s = 0.0;
        for cy in 0..ny {
            let hy = sys.y.h[(cy, i2)];
            if hy == 0.0 {
                continue;
            }
            for cx in 0..nx {
                s += cell[cx + nx * cy] * sys.x.h[(cx, i1)] * hy;
            }
        }
        s
    })
}

fn project(sys: &WaveletSystem2D, integral: impl Fn(usize, usize) -> f64) -> Result<Vec<f64>> {
    let (nx, ny) = (sys.nx(), sys.ny());
    let norm = |i: usize| {
        let idx = HaarIndex::new(i + 1);
        if idx.is_scaling() {
            1.0
        } else {
            idx.m as f64
        }
    };
    let mut d = vec![0.0; nx * ny];
    for i2 in 0..ny {
        for i1 in 0..nx {
            d[i1 + nx * i2] = norm(i1) * norm(i2) * integral(i1, i2);
        }
    }
    Ok(d)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = n.max(1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let prev = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}
