use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equidistant grid t_k = k·T/N, k = 0..=N, on [0, T].
///
/// t_0 = 0 is a path node but never a kernel column; discretized kernels and
/// sampled functions live on t_1..t_N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "horizon",
                value: horizon,
                constraint: "horizon must be positive and finite",
            });
        }
        if steps < 2 {
            return Err(Error::InvalidParameter {
                name: "steps",
                value: steps as f64,
                constraint: "grid needs at least 2 steps",
            });
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Node t_k for k = 0..=steps.
    pub fn node(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        k as f64 * self.horizon / self.steps as f64
    }

    /// All nodes t_0..t_N.
    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.node(k)).collect()
    }

    /// Index k with t_k == t, if t is a grid node (up to rounding slack).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t / self.dt()).round();
        if k < 0.0 || k > self.steps as f64 {
            return None;
        }
        let k = k as usize;
        let tol = 1e-9 * self.horizon.max(1.0);
        if (self.node(k) - t).abs() <= tol {
            Some(k)
        } else {
            None
        }
    }

    /// The grid on [0, t_k] sharing this grid's spacing.
    pub fn truncated(&self, k: usize) -> Result<TimeGrid> {
        if k < 2 || k > self.steps {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k as f64,
                constraint: "truncation index must lie in [2, steps]",
            });
        }
        TimeGrid::new(self.node(k), k)
    }
}

/// A function known at the kernel nodes t_1..t_N of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() {
            return Err(Error::GridMismatch(format!(
                "expected {} values at t_1..t_N, got {}",
                grid.steps(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample a closure at t_1..t_N.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (1..=grid.steps()).map(|k| f(grid.node(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at node t_k, k = 1..=N.
    pub fn value_at_node(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    /// Discrete L^2([0,T]) norm squared: sum f(t_k)^2 dt.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_and_lookup() {
        let g = TimeGrid::new(1.0, 500).unwrap();
        assert_eq!(g.node(0), 0.0);
        assert_eq!(g.node(500), 1.0);
        assert_eq!(g.index_of(g.node(250)), Some(250));
        assert_eq!(g.index_of(0.2501), None);
        assert_eq!(g.index_of(-0.1), None);
    }

    #[test]
    fn truncation_keeps_spacing() {
        let g = TimeGrid::new(2.0, 8).unwrap();
        let sub = g.truncated(4).unwrap();
        assert_eq!(sub.steps(), 4);
        assert_eq!(sub.dt(), g.dt());
        assert_eq!(sub.horizon(), 1.0);
    }

    #[test]
    fn sampled_function_length_checked() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        assert!(SampledFunction::new(g, vec![0.0; 3]).is_err());
        let f = SampledFunction::from_fn(g, |t| t * t);
        assert_eq!(f.values().len(), 4);
        assert_eq!(f.value_at_node(4), 1.0);
    }
}
