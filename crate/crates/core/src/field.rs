//! Space-time solution containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SpaceLayout {
    /// Finite-difference nodes `x_0..x_M`, boundaries included.
    Line { x: Vec<f64> },
    /// Tensor collocation grid; point index is `l1 + nx * l2`.
    Collocation { x: Vec<f64>, y: Vec<f64> },
}

impl SpaceLayout {
    pub fn points(&self) -> usize {
        match self {
            SpaceLayout::Line { x } => x.len(),
            SpaceLayout::Collocation { x, y } => x.len() * y.len(),
        }
    }
}

/// Solution samples stored level by level: `values[n * points + i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub layout: SpaceLayout,
    pub times: Vec<f64>,
    values: Vec<f64>,
}

impl SolutionField {
    pub fn from_levels(layout: SpaceLayout, times: Vec<f64>, levels: Vec<Vec<f64>>) -> Result<Self> {
        let points = layout.points();
        if levels.len() != times.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} levels for {} time nodes",
                levels.len(),
                times.len()
            )));
        }
        let mut values = Vec::with_capacity(points * levels.len());
        for (n, level) in levels.into_iter().enumerate() {
            if level.len() != points {
                return Err(Error::DimensionMismatch(format!(
                    "level {n} has {} values, layout has {points} points",
                    level.len()
                )));
            }
            if let Some(i) = level.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "solution",
                    location: format!("point {i}, level {n}"),
                });
            }
            values.extend(level);
        }
        Ok(Self { layout, times, values })
    }

    pub fn points(&self) -> usize {
        self.layout.points()
    }

    pub fn levels(&self) -> usize {
        self.times.len()
    }

    pub fn level(&self, n: usize) -> &[f64] {
        let p = self.points();
        &self.values[n * p..(n + 1) * p]
    }

    pub fn value(&self, point: usize, n: usize) -> f64 {
        self.values[n * self.points() + point]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Spatial coordinates of a point: `(x, None)` on a line, `(x, Some(y))`
    /// on a collocation grid.
    pub fn coords(&self, point: usize) -> (f64, Option<f64>) {
        match &self.layout {
            SpaceLayout::Line { x } => (x[point], None),
            SpaceLayout::Collocation { x, y } => {
                let nx = x.len();
                (x[point % nx], Some(y[point / nx]))
            }
        }
    }

    pub fn max_abs(&self, n: usize) -> f64 {
        self.level(n).iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_inconsistent_levels() {
        let layout = SpaceLayout::Line { x: vec![0.0, 0.5, 1.0] };
        let err = SolutionField::from_levels(layout.clone(), vec![0.0, 1.0], vec![vec![0.0; 3]]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = SolutionField::from_levels(layout.clone(), vec![0.0], vec![vec![0.0; 2]]);
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = SolutionField::from_levels(layout, vec![0.0], vec![vec![0.0, f64::NAN, 1.0]]);
        assert!(matches!(err, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn collocation_indexing() {
        let layout = SpaceLayout::Collocation {
            x: vec![0.25, 0.75],
            y: vec![0.1, 0.5, 0.9],
        };
        let lvl: Vec<f64> = (0..6).map(|i| i as f64).collect();
        let f = SolutionField::from_levels(layout, vec![0.0], vec![lvl]).unwrap();
        assert_eq!(f.coords(3), (0.75, Some(0.5)));
        assert_eq!(f.value(5, 0), 5.0);
        assert_eq!(f.max_abs(0), 5.0);
    }
}
