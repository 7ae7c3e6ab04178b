//! Uniform temporal and spatial meshes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time mesh on `[0, T]` together with the fractional order and the
/// collocation offset `sigma = 1 - alpha/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalGrid {
    pub t_final: f64,
    pub steps: usize,
    pub dt: f64,
    pub alpha: f64,
    pub sigma: f64,
}

impl TemporalGrid {
    pub fn new(t_final: f64, steps: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("number of time steps must be positive".into()));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidGrid(format!("final time {t_final} must be positive")));
        }
        Ok(Self {
            t_final,
            steps,
            dt: t_final / steps as f64,
            alpha,
            sigma: 1.0 - alpha / 2.0,
        })
    }

    /// `t_n = n dt`.
    #[inline]
    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// `t_{n+sigma} = t_n + sigma dt`.
    #[inline]
    pub fn offset_node(&self, n: usize) -> f64 {
        self.node(n) + self.sigma * self.dt
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.node(n)).collect()
    }
}

/// Uniform mesh `x_m = m dx` on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid1D {
    pub length: f64,
    pub intervals: usize,
    pub dx: f64,
}

impl SpatialGrid1D {
    pub fn new(length: f64, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidGrid("number of space intervals must be positive".into()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("domain length {length} must be positive")));
        }
        Ok(Self {
            length,
            intervals,
            dx: length / intervals as f64,
        })
    }

    #[inline]
    pub fn node(&self, m: usize) -> f64 {
        m as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals).map(|m| self.node(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_and_step() {
        let g = TemporalGrid::new(1.0, 10, 0.5).unwrap();
        assert_eq!(g.sigma, 0.75);
        assert!((g.dt - 0.1).abs() < 1e-16);
    }

    #[test]
    fn sigma_near_unit_alpha() {
        let g = TemporalGrid::new(1.0, 1, 0.999).unwrap();
        assert!((g.sigma - 0.5005).abs() < 1e-15);
    }

    #[test]
    fn offset_node_arithmetic() {
        let g = TemporalGrid::new(2.0, 4, 0.2).unwrap();
        assert_eq!(g.dt, 0.5);
        assert!((g.offset_node(3) - 1.95).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(TemporalGrid::new(1.0, 4, 0.0), Err(Error::InvalidAlpha(_))));
        assert!(matches!(TemporalGrid::new(1.0, 4, 1.0), Err(Error::InvalidAlpha(_))));
        assert!(TemporalGrid::new(1.0, 0, 0.5).is_err());
        assert!(TemporalGrid::new(0.0, 4, 0.5).is_err());
        assert!(TemporalGrid::new(-1.0, 4, 0.5).is_err());
        assert!(SpatialGrid1D::new(1.0, 0).is_err());
        assert!(SpatialGrid1D::new(0.0, 3).is_err());
    }

    #[test]
    fn step_times_count_recovers_length() {
        for n in [1usize, 3, 7, 10, 33, 1000] {
            let g = TemporalGrid::new(1.0, n, 0.3).unwrap();
            assert!((g.dt * n as f64 - 1.0).abs() <= f64::EPSILON);
            let s = SpatialGrid1D::new(1.0, n).unwrap();
            assert!((s.dx * n as f64 - 1.0).abs() <= f64::EPSILON);
        }
    }

    proptest::proptest! {
        #[test]
        fn offset_is_sigma_dt(t in 0.1f64..10.0, steps in 1usize..2000, alpha in 0.01f64..0.99, n in 0usize..2000) {
            let g = TemporalGrid::new(t, steps, alpha).unwrap();
            let d = g.offset_node(n) - g.node(n);
            proptest::prop_assert!((d - g.sigma * g.dt).abs() <= 4.0 * f64::EPSILON * g.node(n).max(1.0));
        }
    }
}
