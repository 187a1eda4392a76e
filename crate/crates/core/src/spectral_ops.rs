//! Fourier multipliers on the frequency lattice: Riesz transforms, fractional
//! Laplacian, derivatives, and the Poisson / Poisson-type extensions.
//!
//! Every convolution here is a multiplication by a closed-form symbol.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::fields::{to_spatial, to_spectral, GridSpec, SpectralField, VectorField};
use crate::kernels::nilpotent_part;

pub enum Symbol<'a> {
    Scalar(&'a (dyn Fn(&[f64]) -> Complex64 + Sync)),
    Matrix(&'a (dyn Fn(&[f64]) -> DMatrix<Complex64> + Sync)),
}

fn non_finite(xi: &[f64]) -> Error {
    Error::NonFiniteSymbol { frequency: xi.to_vec() }
}

/// Multiplies every component by a scalar symbol.
pub fn multiply(fh: &SpectralField, sym: impl Fn(&[f64]) -> Complex64 + Sync) -> Result<SpectralField> {
    let g = *fh.grid();
    let d = g.d();
    let factors: Vec<Complex64> = (0..g.len()).into_par_iter().map(|i| sym(&g.frequency(i)[..d])).collect();
    if let Some(i) = factors.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(non_finite(&g.frequency(i)[..d]));
    }
    let coeffs = fh.components().iter().map(|c| c.iter().zip(&factors).map(|(a, b)| a * b).collect()).collect();
    SpectralField::new(g, coeffs)
}

/// Matrix symbol with `rows` outputs; `fill(xi, out)` writes the row-major matrix.
pub fn multiply_matrix(
    fh: &SpectralField,
    rows: usize,
    fill: impl Fn(&[f64], &mut [Complex64]) + Sync,
) -> Result<SpectralField> {
    let g = *fh.grid();
    let d = g.d();
    let cols = fh.m();
    let out: Vec<Vec<Complex64>> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let xi = g.frequency(i);
            let mut mat = vec![Complex64::default(); rows * cols];
            fill(&xi[..d], &mut mat);
            (0..rows).map(|r| (0..cols).map(|c| mat[r * cols + c] * fh.component(c)[i]).sum()).collect()
        })
        .collect();
    if let Some(i) = out.iter().position(|row| row.iter().any(|z| !(z.re.is_finite() && z.im.is_finite()))) {
        return Err(non_finite(&g.frequency(i)[..d]));
    }
    let coeffs = (0..rows).map(|r| out.iter().map(|row| row[r]).collect()).collect();
    SpectralField::new(g, coeffs)
}

pub fn apply_symbol(fh: &SpectralField, symbol: Symbol) -> Result<SpectralField> {
    match symbol {
        Symbol::Scalar(f) => multiply(fh, f),
        Symbol::Matrix(f) => {
            let d = fh.grid().d();
            let probe = f(&vec![0.0; d]);
            if probe.ncols() != fh.m() {
                return Err(Error::Shape(format!(
                    "symbol has {} columns, field has {} components",
                    probe.ncols(),
                    fh.m()
                )));
            }
            let rows = probe.nrows();
            multiply_matrix(fh, rows, |xi, out| {
                let s = f(xi);
                for r in 0..rows {
                    for c in 0..s.ncols() {
                        out[r * s.ncols() + c] = s[(r, c)];
                    }
                }
            })
        }
    }
}

fn norm(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `-i xi_j / |xi|`, zero at the origin.
pub fn riesz_symbol(xi: &[f64], axis: usize) -> Complex64 {
    let r = norm(xi);
    if r == 0.0 {
        Complex64::default()
    } else {
        Complex64::new(0.0, -xi[axis] / r)
    }
}

/// `2 pi i xi_j`.
pub fn derivative_symbol(xi: &[f64], axis: usize) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * xi[axis])
}

/// `(2 pi |xi|)^{2 beta}`, zero at the origin.
pub fn fractional_symbol(xi: &[f64], beta: f64) -> f64 {
    let r = norm(xi);
    if r == 0.0 {
        0.0
    } else {
        (2.0 * PI * r).powf(2.0 * beta)
    }
}

fn check_axis(grid: &GridSpec, axis: usize) -> Result<()> {
    if axis < grid.d() {
        Ok(())
    } else {
        param(format!("axis {axis} out of range for d={}", grid.d()))
    }
}

/// Riesz transform `R_{axis+1}` of every component (axes are 0-based).
pub fn riesz_transform(f: &VectorField, axis: usize) -> Result<VectorField> {
    check_axis(f.grid(), axis)?;
    to_spatial(&multiply(&to_spectral(f), |xi| riesz_symbol(xi, axis))?)
}

/// `(-Delta)^beta` with multiplier `(2 pi |xi|)^{2 beta}`, `beta` in `(0,1)`.
pub fn fractional_laplacian(f: &VectorField, beta: f64) -> Result<VectorField> {
    if !(beta > 0.0 && beta < 1.0) {
        return param(format!("beta={beta} not in (0,1)"));
    }
    fractional_power(f, beta)
}

/// Same multiplier without the range restriction (`beta >= 0`).
pub fn fractional_power(f: &VectorField, beta: f64) -> Result<VectorField> {
    if !(beta >= 0.0) {
        return param(format!("beta={beta} must be non-negative"));
    }
    to_spatial(&multiply(&to_spectral(f), |xi| Complex64::new(fractional_symbol(xi, beta), 0.0))?)
}

pub fn spatial_derivative(f: &VectorField, axis: usize) -> Result<VectorField> {
    check_axis(f.grid(), axis)?;
    to_spatial(&multiply(&to_spectral(f), |xi| derivative_symbol(xi, axis))?)
}

/// `sum_j d_j f_j` for a field with `m = d`.
pub fn divergence(f: &VectorField) -> Result<VectorField> {
    let d = f.grid().d();
    if f.m() != d {
        return Err(Error::Shape(format!("divergence needs m = d, got {}", f.m())));
    }
    let fh = to_spectral(f);
    let out = multiply_matrix(&fh, 1, |xi, row| {
        for j in 0..d {
            row[j] = derivative_symbol(xi, j);
        }
    })?;
    to_spatial(&out)
}

/// 48 geometric levels from `h/2` to `L`.
pub fn default_t_levels(grid: &GridSpec) -> Vec<f64> {
    geometric_levels(0.5 * grid.h(), grid.l(), 48)
}

pub fn geometric_levels(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![t_min];
    }
    let ratio = (t_max / t_min).ln() / (count - 1) as f64;
    (0..count).map(|i| t_min * (ratio * i as f64).exp()).collect()
}

fn check_levels(t_levels: &[f64]) -> Result<()> {
    if t_levels.is_empty() {
        return param("t_levels is empty");
    }
    if t_levels[0] <= 0.0 || t_levels.windows(2).any(|w| w[1] <= w[0]) {
        return param("t_levels must be positive and increasing");
    }
    Ok(())
}

/// Spectra of `u(.,t)` and `d_t u(.,t)` for the scalar Poisson extension.
pub fn poisson_level(fh: &SpectralField, t: f64) -> Result<(SpectralField, SpectralField)> {
    let u = multiply(fh, |xi| Complex64::new((-2.0 * PI * norm(xi) * t).exp(), 0.0))?;
    let du = multiply(fh, |xi| {
        let w = 2.0 * PI * norm(xi);
        Complex64::new(-w * (-w * t).exp(), 0.0)
    })?;
    Ok((u, du))
}

fn poisson_type_fill(xi: &[f64], t: f64, out: &mut [Complex64]) {
    let d = xi.len();
    let a = 2.0 * PI * norm(xi) * t;
    let e = (-a).exp();
    let m = nilpotent_part(xi);
    for r in 0..=d {
        for c in 0..=d {
            let id = if r == c { 1.0 } else { 0.0 };
            out[r * (d + 1) + c] = (m[(r, c)] * a + id) * e;
        }
    }
}

fn dt_poisson_type_fill(xi: &[f64], t: f64, out: &mut [Complex64]) {
    let d = xi.len();
    let w = 2.0 * PI * norm(xi);
    let e = w * (-w * t).exp();
    let m = nilpotent_part(xi);
    for r in 0..=d {
        for c in 0..=d {
            let id = if r == c { 1.0 } else { 0.0 };
            out[r * (d + 1) + c] = (m[(r, c)] * (1.0 - w * t) - id) * e;
        }
    }
}

/// Spectra of `U(.,t)` and `d_t U(.,t)` for `m = d+1` input.
pub fn poisson_type_level(fh: &SpectralField, t: f64) -> Result<(SpectralField, SpectralField)> {
    let d = fh.grid().d();
    if fh.m() != d + 1 {
        return Err(Error::Shape(format!("Poisson-type extension needs m = d+1, got {}", fh.m())));
    }
    let u = multiply_matrix(fh, d + 1, |xi, out| poisson_type_fill(xi, t, out))?;
    let du = multiply_matrix(fh, d + 1, |xi, out| dt_poisson_type_fill(xi, t, out))?;
    Ok((u, du))
}

#[derive(Clone, Debug)]
pub struct PoissonExtension {
    pub base: VectorField,
    pub t_levels: Vec<f64>,
    pub u_levels: Vec<VectorField>,
    pub dt_levels: Vec<VectorField>,
}

#[derive(Clone, Debug)]
pub struct PoissonTypeExtension {
    pub base: VectorField,
    pub t_levels: Vec<f64>,
    pub u_levels: Vec<VectorField>,
    pub dt_levels: Vec<VectorField>,
}

type LevelFn = fn(&SpectralField, f64) -> Result<(SpectralField, SpectralField)>;

fn extend(f: &VectorField, t_levels: &[f64], level: LevelFn) -> Result<(Vec<VectorField>, Vec<VectorField>)> {
    check_levels(t_levels)?;
    let fh = to_spectral(f);
    let mut us = Vec::with_capacity(t_levels.len());
    let mut dts = Vec::with_capacity(t_levels.len());
    for &t in t_levels {
        let (u, du) = level(&fh, t)?;
        us.push(to_spatial(&u)?);
        dts.push(to_spatial(&du)?);
    }
    Ok((us, dts))
}

pub fn poisson_extend(f: &VectorField, t_levels: &[f64]) -> Result<PoissonExtension> {
    let (u_levels, dt_levels) = extend(f, t_levels, poisson_level)?;
    Ok(PoissonExtension { base: f.clone(), t_levels: t_levels.to_vec(), u_levels, dt_levels })
}

/// `F` must have `m = d+1`; build it with [`VectorField::augmented`].
pub fn poisson_type_extend(big_f: &VectorField, t_levels: &[f64]) -> Result<PoissonTypeExtension> {
    let (u_levels, dt_levels) = extend(big_f, t_levels, poisson_type_level)?;
    Ok(PoissonTypeExtension { base: big_f.clone(), t_levels: t_levels.to_vec(), u_levels, dt_levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, sample_family, Family};

    fn wave(g: GridSpec, k: [f64; 2]) -> VectorField {
        let l = g.l();
        VectorField::from_fn(g, 1, |x, o| o[0] = (2.0 * PI * (k[0] * x[0] + k[1] * x[1]) / l).cos()).unwrap()
    }

    #[test]
    fn riesz_on_a_cosine() {
        // R_1 cos(2 pi k.x/L) = (k_1/|k|) sin(2 pi k.x/L)
        let g = make_grid(2, 4.0, 16).unwrap();
        let f = wave(g, [3.0, 4.0]);
        let r = riesz_transform(&f, 0).unwrap();
        for i in 0..g.len() {
            let x = g.point(i);
            let want = 0.6 * (2.0 * PI * (3.0 * x[0] + 4.0 * x[1]) / 4.0).sin();
            assert!((r.value(i, 0) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn riesz_squares_sum_to_minus_identity() {
        let g = make_grid(2, 6.0, 32).unwrap();
        let f = sample_family(&Family::BandlimitedRandom { seed: 3, kmax: 8 }, &g).unwrap();
        let mut acc = VectorField::zeros(g, 2);
        for j in 0..2 {
            acc = acc.add(&riesz_transform(&riesz_transform(&f, j).unwrap(), j).unwrap()).unwrap();
        }
        assert!(acc.add(&f).unwrap().max_abs() < 1e-12 * f.max_abs());
    }

    #[test]
    fn fractional_laplacian_of_constant_vanishes() {
        let g = make_grid(1, 2.0, 16).unwrap();
        let f = VectorField::from_fn(g, 1, |_, o| o[0] = 3.0).unwrap();
        assert!(fractional_laplacian(&f, 0.4).unwrap().max_abs() < 1e-14);
        assert!(fractional_laplacian(&f, 1.0).is_err());
    }

    #[test]
    fn extension_of_plane_wave_decays_exactly() {
        let g = make_grid(2, 4.0, 16).unwrap();
        let f = wave(g, [1.0, 2.0]);
        let ext = poisson_extend(&f, &[0.1, 0.5]).unwrap();
        let rate = 2.0 * PI * 5f64.sqrt() / 4.0;
        for (k, &t) in ext.t_levels.iter().enumerate() {
            let want = f.scaled((-rate * t).exp());
            assert!(ext.u_levels[k].sub(&want).unwrap().max_abs() < 1e-13);
            let want_dt = f.scaled(-rate * (-rate * t).exp());
            assert!(ext.dt_levels[k].sub(&want_dt).unwrap().max_abs() < 1e-12);
        }
        assert!(poisson_extend(&f, &[]).is_err());
        assert!(poisson_extend(&f, &[0.5, 0.1]).is_err());
    }

    #[test]
    fn matrix_symbol_shape_checked() {
        let g = make_grid(2, 4.0, 8).unwrap();
        let fh = to_spectral(&VectorField::zeros(g, 2));
        let s = |_: &[f64]| DMatrix::<Complex64>::identity(3, 3);
        assert!(apply_symbol(&fh, Symbol::Matrix(&s)).is_err());
        let bad = |_: &[f64]| Complex64::new(f64::NAN, 0.0);
        assert!(matches!(apply_symbol(&fh, Symbol::Scalar(&bad)), Err(Error::NonFiniteSymbol { .. })));
    }
}
