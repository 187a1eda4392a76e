use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Uniform grid on the box `[-L/2, L/2)^d`, read as a torus of side `L`.
///
/// Nodes are stored row-major with the last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    l: f64,
    n: usize,
    h: f64,
    centered: bool,
}

/// Centered grid: `x_k = -L/2 + k h`.
pub fn make_grid(d: usize, l: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(d, l, n, true)
}

impl GridSpec {
    pub fn new(d: usize, l: f64, n: usize, centered: bool) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return param(format!("dimension d={d} not in 1..=3"));
        }
        if n < 8 || !n.is_power_of_two() {
            return param(format!("N={n} must be a power of two >= 8"));
        }
        if !(l.is_finite() && l > 0.0) {
            return param(format!("box length L={l} must be positive"));
        }
        Ok(Self { d, l, n, h: l / n as f64, centered })
    }

    pub fn d(&self) -> usize {
        self.d
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn centered(&self) -> bool {
        self.centered
    }

    /// Number of nodes, `N^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight of one node, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn volume(&self) -> f64 {
        self.l.powi(self.d as i32)
    }

    fn origin(&self) -> f64 {
        if self.centered {
            -0.5 * self.l
        } else {
            0.0
        }
    }

    /// Coordinate of axis index `k`.
    pub fn coord(&self, k: usize) -> f64 {
        self.origin() + k as f64 * self.h
    }

    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rest = idx;
        for a in (0..self.d).rev() {
            out[a] = rest % self.n;
            rest /= self.n;
        }
        out
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        mi[..self.d].iter().fold(0, |acc, &k| acc * self.n + k)
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.d {
            x[a] = self.coord(mi[a]);
        }
        x
    }

    /// Signed wavenumber of DFT index `k`, in `-N/2..N/2`.
    pub fn wavenumber(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// Frequency vector `k/L` (cycles per unit length) of node `idx`.
    pub fn frequency(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut xi = [0.0; 3];
        for a in 0..self.d {
            xi[a] = self.wavenumber(mi[a]) as f64 / self.l;
        }
        xi
    }

    /// True if any index of the node equals -N/2.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        mi[..self.d].iter().any(|&k| k == self.n / 2)
    }

    pub fn on_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        mi[..self.d].iter().any(|&k| k == 0 || k == self.n - 1)
    }

    /// Same box with every `factor`-th node; keeps the node set nested.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n % factor != 0 {
            return param(format!("cannot coarsen N={} by {factor}", self.n));
        }
        Self::new(self.d, self.l, self.n / factor, self.centered)
    }
}
