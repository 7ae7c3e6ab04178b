//! Convolution weights for the Caputo derivative.
//!
//! Both schemes write the discrete derivative as `sum_j w[j] (U^{j+1} - U^j)`:
//!
//! * L2-1sigma at `t_{n+sigma}`: `j = 0..=n`, quadratic interpolation on the
//!   past intervals and linear interpolation on `[t_n, t_{n+1}]`.
//! * L1 at `t_n`: `j = 0..n`, `w[j] = d~_{n-j} / (dt^alpha Gamma(2-alpha))` with
//!   `d~_k = k^{1-alpha} - (k-1)^{1-alpha}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TemporalGrid;

pub use statrs::function::gamma::gamma;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaputoScheme {
    #[serde(rename = "l2-1sigma")]
    L21Sigma,
    #[serde(rename = "l1")]
    L1,
}

impl CaputoScheme {
    pub fn tag(self) -> &'static str {
        match self {
            CaputoScheme::L21Sigma => "l2-1sigma",
            CaputoScheme::L1 => "l1",
        }
    }
}

impl std::fmt::Display for CaputoScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for CaputoScheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l2-1sigma" | "l21sigma" | "l2sigma" | "l2-1s" => Ok(CaputoScheme::L21Sigma),
            "l1" => Ok(CaputoScheme::L1),
            other => Err(format!("unknown scheme '{other}' (expected l2-1sigma or l1)")),
        }
    }
}

/// Weights of one time level. `weights[j]` multiplies `U^{j+1} - U^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaputoWeights {
    pub scheme: CaputoScheme,
    pub level: usize,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub dt: f64,
}

impl CaputoWeights {
    /// Number of history levels consumed by [`apply_caputo`].
    pub fn history_len(&self) -> usize {
        self.weights.len() + 1
    }

    /// Weight of the newest increment (`d_n^{n+1}` for L2-1sigma).
    pub fn leading(&self) -> f64 {
        *self.weights.last().expect("weights are never empty")
    }

    /// `Ok` when `w[n] > w[n-1] > ... > w[0] > 0`.
    pub fn check_monotone(&self) -> Result<()> {
        if let Some(i) = self.weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::WeightMonotonicity {
                level: self.level,
                index: i,
                lower: self.weights[i],
                upper: self.weights.get(i + 1).copied().unwrap_or(f64::NAN),
            });
        }
        for (i, pair) in self.weights.windows(2).enumerate() {
            if !(pair[1] > pair[0]) {
                return Err(Error::WeightMonotonicity {
                    level: self.level,
                    index: i,
                    lower: pair[0],
                    upper: pair[1],
                });
            }
        }
        Ok(())
    }
}

fn a_coef(k: usize, sigma: f64, alpha: f64) -> f64 {
    if k == 0 {
        sigma.powf(1.0 - alpha)
    } else {
        let k = k as f64;
        (k + sigma).powf(1.0 - alpha) - (k - 1.0 + sigma).powf(1.0 - alpha)
    }
}

fn b_coef(k: usize, sigma: f64, alpha: f64) -> f64 {
    debug_assert!(k >= 1);
    let k = k as f64;
    let hi = k + sigma;
    let lo = k - 1.0 + sigma;
    (hi.powf(2.0 - alpha) - lo.powf(2.0 - alpha)) / (2.0 - alpha)
        - (hi.powf(1.0 - alpha) + lo.powf(1.0 - alpha)) / 2.0
}

/// `dt^alpha Gamma(2 - alpha)`, the common denominator of both schemes.
pub fn weight_scale(grid: &TemporalGrid) -> f64 {
    grid.dt.powf(grid.alpha) * gamma(2.0 - grid.alpha)
}

/// L2-1sigma weights `d_j^{n+1}`, `j = 0..=n`, for the step `t_n -> t_{n+1}`.
pub fn l2_1sigma_weights(grid: &TemporalGrid, n: usize) -> Result<CaputoWeights> {
    if n >= grid.steps {
        return Err(Error::LevelOutOfRange {
            level: n,
            min: 0,
            max: grid.steps - 1,
        });
    }
    let (alpha, sigma) = (grid.alpha, grid.sigma);
    let scale = weight_scale(grid);
    let weights = if n == 0 {
        vec![a_coef(0, sigma, alpha) / scale]
    } else {
        let mut w = Vec::with_capacity(n + 1);
        w.push((a_coef(n, sigma, alpha) - b_coef(n, sigma, alpha)) / scale);
        for j in 1..n {
            w.push(
                (b_coef(n - j + 1, sigma, alpha) + a_coef(n - j, sigma, alpha)
                    - b_coef(n - j, sigma, alpha))
                    / scale,
            );
        }
        w.push((a_coef(0, sigma, alpha) + b_coef(1, sigma, alpha)) / scale);
        w
    };
    Ok(CaputoWeights {
        scheme: CaputoScheme::L21Sigma,
        level: n,
        weights,
        alpha,
        dt: grid.dt,
    })
}

/// `d~_k = k^{1-alpha} - (k-1)^{1-alpha}` for `k >= 1`.
pub fn l1_coefficient(k: usize, alpha: f64) -> f64 {
    debug_assert!(k >= 1);
    let k = k as f64;
    k.powf(1.0 - alpha) - (k - 1.0).powf(1.0 - alpha)
}

/// L1 weights at `t_n`, `n = 1..=N`: `w[j] = d~_{n-j} / (dt^alpha Gamma(2-alpha))`.
pub fn l1_weights(grid: &TemporalGrid, n: usize) -> Result<CaputoWeights> {
    if n == 0 || n > grid.steps {
        return Err(Error::LevelOutOfRange {
            level: n,
            min: 1,
            max: grid.steps,
        });
    }
    let scale = weight_scale(grid);
    let weights = (0..n).map(|j| l1_coefficient(n - j, grid.alpha) / scale).collect();
    Ok(CaputoWeights {
        scheme: CaputoScheme::L1,
        level: n,
        weights,
        alpha: grid.alpha,
        dt: grid.dt,
    })
}

/// `sum_j w[j] (history[j+1] - history[j])` at every spatial node.
pub fn apply_caputo<H: AsRef<[f64]>>(weights: &CaputoWeights, history: &[H]) -> Result<Vec<f64>> {
    if history.len() != weights.history_len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights need {} history levels, got {}",
            weights.weights.len(),
            weights.history_len(),
            history.len()
        )));
    }
    let points = history[0].as_ref().len();
    if let Some(bad) = history.iter().position(|h| h.as_ref().len() != points) {
        return Err(Error::DimensionMismatch(format!(
            "history level {bad} has {} nodes, expected {points}",
            history[bad].as_ref().len()
        )));
    }
    let mut out = vec![0.0; points];
    for (j, w) in weights.weights.iter().enumerate() {
        let (lo, hi) = (history[j].as_ref(), history[j + 1].as_ref());
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o += w * (b - a);
        }
    }
    Ok(out)
}

/// Closed-form Caputo derivative of `t^m`: `Gamma(m+1)/Gamma(m+1-alpha) t^{m-alpha}`.
pub fn caputo_monomial_oracle(alpha: f64, m: f64, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    gamma(m + 1.0) / gamma(m + 1.0 - alpha) * t.powf(m - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize, alpha: f64) -> TemporalGrid {
        TemporalGrid::new(t, n, alpha).unwrap()
    }

    #[test]
    fn first_level_has_single_weight() {
        // sigma = 0.75, dt = 1: 0.75^0.5 / Gamma(1.5)
        let w = l2_1sigma_weights(&grid(1.0, 1, 0.5), 0).unwrap();
        assert_eq!(w.weights.len(), 1);
        assert!((w.weights[0] - 0.977_205_023_805_839_8).abs() < 1e-13);
        for alpha in [0.1, 0.37, 0.9] {
            let g = grid(0.3, 7, alpha);
            let w = l2_1sigma_weights(&g, 0).unwrap();
            let expect = g.sigma.powf(1.0 - alpha) / (g.dt.powf(alpha) * gamma(2.0 - alpha));
            assert_eq!(w.weights, vec![expect]);
        }
    }

    #[test]
    fn weights_increase_with_j() {
        let g = grid(2.0, 20, 0.3);
        let w = l2_1sigma_weights(&g, 19).unwrap();
        assert_eq!(w.weights.len(), 20);
        w.check_monotone().unwrap();
    }

    #[test]
    fn level_range_is_enforced() {
        let g = grid(1.0, 4, 0.5);
        assert!(l2_1sigma_weights(&g, 4).is_err());
        assert!(l1_weights(&g, 0).is_err());
        assert!(l1_weights(&g, 5).is_err());
        assert!(l1_weights(&g, 4).is_ok());
    }

    #[test]
    fn l1_coefficients() {
        for alpha in [0.05, 0.5, 0.95] {
            assert_eq!(l1_coefficient(1, alpha), 1.0);
            for k in 1..50 {
                assert!(l1_coefficient(k + 1, alpha) < l1_coefficient(k, alpha));
            }
        }
        assert!((l1_coefficient(2, 0.5) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((l1_coefficient(2, 0.5) - 0.414_214).abs() < 1e-6);
    }

    #[test]
    fn apply_caputo_basic() {
        let g = grid(1.0, 4, 0.5);
        let w = l2_1sigma_weights(&g, 2).unwrap();
        let constant = vec![vec![3.0, -1.0]; 4];
        assert_eq!(apply_caputo(&w, &constant).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            apply_caputo(&w, &constant[..3]),
            Err(Error::DimensionMismatch(_))
        ));
        let w0 = l2_1sigma_weights(&g, 0).unwrap();
        let out = apply_caputo(&w0, &[vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(out, w0.weights);
    }

    #[test]
    fn monomial_oracle_values() {
        assert!((caputo_monomial_oracle(0.5, 1.0, 1.0) - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-13);
        assert_eq!(caputo_monomial_oracle(0.3, 1.0, 0.0), 0.0);
        let v = caputo_monomial_oracle(0.2, 4.0, 1.0);
        assert!((v - 24.0 / gamma(4.8)).abs() < 1e-12);
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [CaputoScheme::L21Sigma, CaputoScheme::L1] {
            assert_eq!(s.tag().parse::<CaputoScheme>().unwrap(), s);
        }
        assert!("l3".parse::<CaputoScheme>().is_err());
    }
}
