use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::reduce::pairwise_sum;

/// Boundary magnitude (relative) above which a compact field counts as truncated.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    /// Family descriptor, empty for ad-hoc fields.
    pub family: String,
    /// The field is meant as one period of a periodic function.
    pub periodic: bool,
    /// Largest boundary magnitude relative to the field maximum.
    pub boundary_leak: f64,
}

impl FieldMeta {
    pub fn truncation_warning(&self) -> Option<f64> {
        (!self.periodic && self.boundary_leak > BOUNDARY_TOLERANCE).then_some(self.boundary_leak)
    }
}

/// Real field with `m` components sampled on a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
    meta: FieldMeta,
}

impl VectorField {
    pub fn new(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::Shape("field needs at least one component".into()));
        }
        for (j, c) in comps.iter().enumerate() {
            if c.len() != grid.len() {
                return Err(Error::Shape(format!(
                    "component {j} has {} values, grid has {}",
                    c.len(),
                    grid.len()
                )));
            }
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite value at node {i}, component {j}")));
            }
        }
        let mut f = Self { grid, comps, meta: FieldMeta::default() };
        f.meta.boundary_leak = f.boundary_leak();
        Ok(f)
    }

    pub fn zeros(grid: GridSpec, m: usize) -> Self {
        Self { grid, comps: vec![vec![0.0; grid.len()]; m], meta: FieldMeta::default() }
    }

    /// Samples `f(x, out)` at every node; `x` has length `d`, `out` length `m`.
    pub fn from_fn(grid: GridSpec, m: usize, f: impl Fn(&[f64], &mut [f64])) -> Result<Self> {
        let d = grid.d();
        let mut comps = vec![vec![0.0; grid.len()]; m];
        let mut out = vec![0.0; m];
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            out.iter_mut().for_each(|v| *v = 0.0);
            f(&x[..d], &mut out);
            for j in 0..m {
                comps[j][idx] = out[j];
            }
        }
        Self::new(grid, comps)
    }

    pub fn with_meta(mut self, family: impl Into<String>, periodic: bool) -> Self {
        self.meta.family = family.into();
        self.meta.periodic = periodic;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.comps.len()
    }
    pub fn meta(&self) -> &FieldMeta {
        &self.meta
    }
    pub fn component(&self, j: usize) -> &[f64] {
        &self.comps[j]
    }
    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }
    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    pub fn value(&self, idx: usize, j: usize) -> f64 {
        self.comps[j][idx]
    }

    /// Euclidean length of the vector at node `idx`.
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.magnitude(i)).fold(0.0, f64::max)
    }

    fn boundary_leak(&self) -> f64 {
        let peak = self.max_abs();
        if peak == 0.0 {
            return 0.0;
        }
        let edge = (0..self.grid.len())
            .filter(|&i| self.grid.on_boundary(i))
            .map(|i| self.magnitude(i))
            .fold(0.0, f64::max);
        edge / peak
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid || self.m() != other.m() {
            return Err(Error::Shape("fields live on different grids or component counts".into()));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Self { grid: self.grid, comps, meta: self.meta.clone() })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let comps = self.comps.iter().map(|c| c.iter().map(|v| alpha * v).collect()).collect();
        Self { grid: self.grid, comps, meta: self.meta.clone() }
    }

    /// Nodewise product with a scalar weight (e.g. a cutoff).
    pub fn weighted(&self, w: &[f64]) -> Result<Self> {
        if w.len() != self.grid.len() {
            return Err(Error::Shape("weight length differs from grid".into()));
        }
        let comps = self.comps.iter().map(|c| c.iter().zip(w).map(|(v, a)| v * a).collect()).collect();
        let mut f = Self { grid: self.grid, comps, meta: self.meta.clone() };
        f.meta.boundary_leak = f.boundary_leak();
        Ok(f)
    }

    /// `(f, 0)`: appends a zero component; requires `m = d`.
    pub fn augmented(&self) -> Result<Self> {
        if self.m() != self.grid.d() {
            return Err(Error::Shape(format!("augmentation needs m = d, got m = {}", self.m())));
        }
        let mut comps = self.comps.clone();
        comps.push(vec![0.0; self.grid.len()]);
        Ok(Self { grid: self.grid, comps, meta: self.meta.clone() })
    }

    /// Components `range` as a new field.
    pub fn select(&self, range: std::ops::Range<usize>) -> Self {
        Self { grid: self.grid, comps: self.comps[range].to_vec(), meta: self.meta.clone() }
    }

    /// Keeps every `factor`-th node per axis.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        let coarse = self.grid.coarsened(factor)?;
        let comps = self
            .comps
            .iter()
            .map(|c| {
                (0..coarse.len())
                    .map(|i| {
                        let mut mi = coarse.multi_index(i);
                        mi.iter_mut().for_each(|k| *k *= factor);
                        c[self.grid.linear_index(&mi)]
                    })
                    .collect()
            })
            .collect();
        Ok(Self { grid: coarse, comps, meta: self.meta.clone() })
    }

    /// Periodic shift by whole nodes: `g(x) = f(x - shift h)`.
    pub fn rolled(&self, shift: &[i64]) -> Self {
        let n = self.grid.n() as i64;
        let d = self.grid.d();
        let comps = self
            .comps
            .iter()
            .map(|c| {
                (0..self.grid.len())
                    .map(|i| {
                        let mut mi = self.grid.multi_index(i);
                        for a in 0..d {
                            mi[a] = (mi[a] as i64 - shift[a]).rem_euclid(n) as usize;
                        }
                        c[self.grid.linear_index(&mi)]
                    })
                    .collect()
            })
            .collect();
        let mut f = Self { grid: self.grid, comps, meta: self.meta.clone() };
        f.meta.boundary_leak = f.boundary_leak();
        f
    }
}

/// `(h^d sum |f(x)|^p)^{1/p}` with `|.|` the Euclidean length; `p = inf` gives the max.
pub fn lp_norm(f: &VectorField, p: f64) -> f64 {
    let n = f.grid().len();
    if p.is_infinite() {
        return f.max_abs();
    }
    let terms: Vec<f64> = (0..n).map(|i| f.magnitude(i).powf(p)).collect();
    (f.grid().cell_volume() * pairwise_sum(&terms)).powf(1.0 / p)
}

/// Spectrum of a [`VectorField`] on the frequency lattice `k/L`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Vec<Complex64>>,
}

impl SpectralField {
    pub fn new(grid: GridSpec, coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.iter().any(|c| c.len() != grid.len()) || coeffs.is_empty() {
            return Err(Error::Shape("spectral components must match the grid".into()));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.coeffs.len()
    }
    pub fn component(&self, j: usize) -> &[Complex64] {
        &self.coeffs[j]
    }
    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }
    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.coeffs
    }

    /// Index of the frequency `-k` for node index `idx`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let g = &self.grid;
        let mut mi = g.multi_index(idx);
        for k in mi[..g.d()].iter_mut() {
            *k = (g.n() - *k) % g.n();
        }
        g.linear_index(&mi)
    }

    /// Largest `|c(-k) - conj c(k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let mut peak = 0.0f64;
        let mut defect = 0.0f64;
        for c in &self.coeffs {
            for (i, v) in c.iter().enumerate() {
                peak = peak.max(v.norm());
                defect = defect.max((c[self.mirror_index(i)] - v.conj()).norm());
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            defect / peak
        }
    }
}
