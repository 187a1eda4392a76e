//! Discrete stand-in for `F(g)(xi) = int e^{-2 pi i xi.x} g(x) dx`.
//!
//! On the centered grid, `F(k) = h^d (-1)^{k_1+..+k_d} DFT[f](k)` and
//! `f(x) = L^{-d} sum_k F(k) e^{2 pi i k.x/L}`, so that
//! `h^d sum |f|^2 = L^{-d} sum |F|^2`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, SpectralField, VectorField};
use crate::error::Result;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized d-dimensional transform, in place.
pub(crate) fn fft_nd(buf: &mut [Complex64], n: usize, d: usize, inverse: bool) {
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    let mut tmp = vec![Complex64::default(); buf.len()];
    for axis in 0..d - 1 {
        let stride = n.pow((d - 1 - axis) as u32);
        let block = n * stride;
        for b in (0..buf.len()).step_by(block) {
            let src = &mut buf[b..b + block];
            let dst = &mut tmp[..block];
            for i in 0..n {
                for j in 0..stride {
                    dst[j * n + i] = src[i * stride + j];
                }
            }
            fft.process_with_scratch(dst, &mut scratch);
            for i in 0..n {
                for j in 0..stride {
                    src[i * stride + j] = dst[j * n + i];
                }
            }
        }
    }
}

fn checkerboard_sign(grid: &GridSpec, idx: usize) -> f64 {
    if !grid.centered() {
        return 1.0;
    }
    let mi = grid.multi_index(idx);
    if mi[..grid.d()].iter().sum::<usize>() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Continuum-scaled spectrum of one real component.
pub fn spectrum_of(grid: &GridSpec, values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut buf, grid.n(), grid.d(), false);
    let hd = grid.cell_volume();
    for (i, c) in buf.iter_mut().enumerate() {
        *c *= hd * checkerboard_sign(grid, i);
    }
    buf
}

/// Complex samples of the inverse transform of one component.
pub fn inverse_of(grid: &GridSpec, coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> =
        coeffs.iter().enumerate().map(|(i, &c)| c * checkerboard_sign(grid, i)).collect();
    fft_nd(&mut buf, grid.n(), grid.d(), true);
    let scale = 1.0 / grid.volume();
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub fn to_spectral(f: &VectorField) -> SpectralField {
    let grid = *f.grid();
    let coeffs = f.components().iter().map(|c| spectrum_of(&grid, c)).collect();
    SpectralField::new(grid, coeffs).expect("shapes match by construction")
}

/// Real part of the inverse transform.
pub fn to_spatial(fh: &SpectralField) -> Result<VectorField> {
    let grid = *fh.grid();
    let comps = fh
        .components()
        .iter()
        .map(|c| inverse_of(&grid, c).into_iter().map(|z| z.re).collect())
        .collect();
    VectorField::new(grid, comps)
}

/// Largest imaginary part left by [`to_spatial`], relative to the real peak.
pub fn imaginary_residue(fh: &SpectralField) -> f64 {
    let grid = *fh.grid();
    let (mut im, mut re) = (0.0f64, 0.0f64);
    for c in fh.components() {
        for z in inverse_of(&grid, c) {
            im = im.max(z.im.abs());
            re = re.max(z.re.abs());
        }
    }
    if re == 0.0 {
        im
    } else {
        im / re
    }
}
