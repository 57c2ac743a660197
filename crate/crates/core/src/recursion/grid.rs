use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// A value function sampled on a uniform 1-D grid, read back by linear
/// interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl ValueGrid {
    /// Grid of `nodes` points spanning `[x_min, x_max]`, values zeroed.
    pub fn new(x_min: f64, x_max: f64, nodes: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return input(format!("grid needs finite x_min < x_max, got [{x_min}, {x_max}]"));
        }
        if nodes < 2 {
            return input("grid needs at least two nodes");
        }
        Ok(Self {
            x_min,
            x_max,
            spacing: (x_max - x_min) / (nodes - 1) as f64,
            values: vec![0.0; nodes],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.values.len() {
            self.x_max
        } else {
            self.x_min + self.spacing * k as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(|k| self.node(k))
    }

    /// Linear interpolation; points outside the grid take the value at the
    /// nearest end.
    #[inline]
    pub fn interpolate(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let t = (x - self.x_min) / self.spacing;
        if !(t > 0.0) {
            return self.values[0];
        }
        if t >= last as f64 {
            return self.values[last];
        }
        let k = t.floor() as usize;
        let w = t - k as f64;
        (1.0 - w) * self.values[k] + w * self.values[k + 1]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_for_linear_data() {
        let mut g = ValueGrid::new(-1.0, 3.0, 9).unwrap();
        let xs: Vec<f64> = g.nodes().collect();
        for (v, x) in g.values.iter_mut().zip(&xs) {
            *v = 2.0 * x - 1.0;
        }
        for x in [-1.0, -0.3, 0.0, 1.26, 2.999, 3.0] {
            assert!((g.interpolate(x) - (2.0 * x - 1.0)).abs() < 1e-14);
        }
        assert_eq!(g.interpolate(-5.0), -3.0);
        assert_eq!(g.interpolate(7.0), 5.0);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(ValueGrid::new(1.0, 1.0, 10).is_err());
        assert!(ValueGrid::new(0.0, 1.0, 1).is_err());
    }
}
