//! Composite trapezoidal discretization of `int_0^t K(., t - s) U(., s) ds`.
//!
//! Kernel values are only ever needed at elapsed times `(k + sigma) dt`
//! (L2-1sigma) and `k dt` (L1), so a run tabulates them once per spatial
//! point in a [`KernelTable`]. The 1D and 2D solvers share this module; a
//! point is just an index into whatever node list the caller uses.

use crate::error::{Error, Result};
use crate::grid::TemporalGrid;

/// `K(point, (k + sigma) dt)` and `K(point, k dt)` for `k = 0..=N`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    points: usize,
    offset: Vec<f64>,
    whole: Vec<f64>,
}

impl KernelTable {
    /// `kernel(point_index, elapsed)`.
    pub fn new<K>(points: usize, grid: &TemporalGrid, kernel: K) -> Result<Self>
    where
        K: Fn(usize, f64) -> f64,
    {
        let levels = grid.steps + 1;
        let mut offset = Vec::with_capacity(levels * points);
        let mut whole = Vec::with_capacity(levels * points);
        for k in 0..levels {
            let s_off = (k as f64 + grid.sigma) * grid.dt;
            let s_whole = k as f64 * grid.dt;
            for i in 0..points {
                let a = kernel(i, s_off);
                let b = kernel(i, s_whole);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite {
                        what: "kernel",
                        location: format!("point {i}, elapsed {}", if a.is_finite() { s_whole } else { s_off }),
                    });
                }
                offset.push(a);
                whole.push(b);
            }
        }
        Ok(Self { points, offset, whole })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `K(., (k + sigma) dt)` at every point.
    #[inline]
    pub fn offset(&self, k: usize) -> &[f64] {
        &self.offset[k * self.points..(k + 1) * self.points]
    }

    /// `K(., k dt)` at every point.
    #[inline]
    pub fn whole(&self, k: usize) -> &[f64] {
        &self.whole[k * self.points..(k + 1) * self.points]
    }
}

/// Discrete memory term split into its known part and the coefficient of the
/// unknown level. `mu` is applied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryTerm {
    pub explicit: Vec<f64>,
    pub implicit: Vec<f64>,
}

fn check_history<H: AsRef<[f64]>>(history: &[H], needed: usize, points: usize) -> Result<()> {
    if history.len() < needed {
        return Err(Error::DimensionMismatch(format!(
            "memory term needs {needed} history levels, got {}",
            history.len()
        )));
    }
    if let Some(bad) = history[..needed].iter().position(|h| h.as_ref().len() != points) {
        return Err(Error::DimensionMismatch(format!(
            "history level {bad} has {} nodes, kernel table has {points}",
            history[bad].as_ref().len()
        )));
    }
    Ok(())
}

/// Trapezoidal rule on `[0, t_{n+sigma}]` with nodes `t_0..t_n, t_{n+sigma}`,
/// where `U^{n+sigma}` is replaced by `sigma U^{n+1} + (1 - sigma) U^n`.
///
/// `history` must hold levels `0..=n`; the `U^{n+1}` contribution is returned
/// as `implicit = sigma^2 dt K(., 0) / 2`.
pub fn memory_term_l2sigma<H: AsRef<[f64]>>(
    table: &KernelTable,
    grid: &TemporalGrid,
    history: &[H],
    n: usize,
) -> Result<MemoryTerm> {
    let points = table.points();
    check_history(history, n + 1, points)?;
    let (dt, sigma) = (grid.dt, grid.sigma);
    let half = 0.5 * dt;
    let mut explicit = vec![0.0; points];
    for j in 0..n {
        let k_next = table.offset(n - j - 1);
        let k_here = table.offset(n - j);
        let (u_here, u_next) = (history[j].as_ref(), history[j + 1].as_ref());
        for i in 0..points {
            explicit[i] += half * (k_next[i] * u_next[i] + k_here[i] * u_here[i]);
        }
    }
    let k_sigma = table.offset(0);
    let k_zero = table.whole(0);
    let u_n = history[n].as_ref();
    let mut implicit = Vec::with_capacity(points);
    for i in 0..points {
        explicit[i] += sigma * half * k_sigma[i] * u_n[i];
        explicit[i] += sigma * half * k_zero[i] * (1.0 - sigma) * u_n[i];
        implicit.push(sigma * sigma * half * k_zero[i]);
    }
    Ok(MemoryTerm { explicit, implicit })
}

/// Trapezoidal rule on `[0, t_n]`, `n >= 1`, with the `K(., 0) U^n` endpoint
/// treated implicitly (`implicit = dt K(., 0) / 2`). `history` must hold
/// levels `0..n`.
pub fn memory_term_l1<H: AsRef<[f64]>>(
    table: &KernelTable,
    grid: &TemporalGrid,
    history: &[H],
    n: usize,
) -> Result<MemoryTerm> {
    if n == 0 {
        return Err(Error::LevelOutOfRange {
            level: 0,
            min: 1,
            max: grid.steps,
        });
    }
    let points = table.points();
    check_history(history, n, points)?;
    let half = 0.5 * grid.dt;
    let mut explicit = vec![0.0; points];
    for j in 0..n {
        let k_here = table.whole(n - j);
        let u_here = history[j].as_ref();
        for i in 0..points {
            explicit[i] += half * k_here[i] * u_here[i];
        }
        if j + 1 < n {
            let k_next = table.whole(n - j - 1);
            let u_next = history[j + 1].as_ref();
            for i in 0..points {
                explicit[i] += half * k_next[i] * u_next[i];
            }
        }
    }
    let implicit = table.whole(0).iter().map(|k| half * k).collect();
    Ok(MemoryTerm { explicit, implicit })
}
