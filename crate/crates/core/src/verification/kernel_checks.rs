//! Kernel normalization, symbol match, semigroup and nilpotency.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CheckId, CheckReport, CheckSettings};
use crate::error::{param, Result};
use crate::fields::{make_grid, spectrum_of, GridSpec};
use crate::kernels::{nilpotent_part, poisson_kernel, poisson_symbol, poisson_type_symbol, PoissonTypeKernelEval};
use crate::quad::box_exterior_integral;
use crate::reduce::par_sum_k;

/// Image shells `|n|_inf <= IMAGES` summed explicitly.
const IMAGES: i64 = 4;

fn image_offsets(d: usize, m: i64) -> Vec<[f64; 3]> {
    let side = 2 * m + 1;
    let count = side.pow(d as u32);
    (0..count)
        .map(|mut k| {
            let mut n = [0.0; 3];
            for slot in n.iter_mut().take(d) {
                *slot = (k % side - m) as f64;
                k /= side;
            }
            n
        })
        .collect()
}

/// Samples of the periodized kernels `sum_n p_t(x + nL)` and `sum_n P_t(x + nL)`.
///
/// Images with `|n|_inf <= 4` are summed; the rest of `R^d` enters as the
/// exact exterior integral spread uniformly over the cell, which is all the
/// lattice sum and the transform at nonzero frequencies can see of it up to
/// exponentially small terms. Returns `(scalar, entries)` with `entries` in
/// row-major `(d+1)^2` order.
pub fn periodized_poisson_type(grid: &GridSpec, t: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let d = grid.d();
    let m = d + 1;
    let ev = PoissonTypeKernelEval::new(d)?;
    poisson_kernel(&vec![0.0; d], t)?;
    let l = grid.l();
    let images = image_offsets(d, IMAGES);
    let samples: Vec<(f64, [f64; 16])> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            let mut acc = (0.0, [0.0; 16]);
            let mut buf = [0.0; 16];
            let mut y = [0.0; 3];
            for n in &images {
                for a in 0..d {
                    y[a] = x[a] + n[a] * l;
                }
                acc.0 += poisson_kernel(&y[..d], t).unwrap_or(0.0);
                ev.fill(&y[..d], t, &mut buf[..m * m]);
                for k in 0..m * m {
                    acc.1[k] += buf[k];
                }
            }
            acc
        })
        .collect();
    let half = (IMAGES as f64 + 0.5) * l;
    let lo = vec![-half; d];
    let hi = vec![half; d];
    let vol = l.powi(d as i32);
    let ext_p = box_exterior_integral(&lo, &hi, 24, |y| poisson_kernel(y, t).unwrap_or(0.0)) / vol;
    let ext: Vec<f64> = (0..m * m)
        .map(|k| {
            box_exterior_integral(&lo, &hi, 24, |y| {
                let mut b = [0.0; 16];
                ev.fill(y, t, &mut b[..m * m]);
                b[k]
            }) / vol
        })
        .collect();
    let scalar = samples.iter().map(|s| s.0 + ext_p).collect();
    let entries = (0..m * m).map(|k| samples.iter().map(|s| s.1[k] + ext[k]).collect()).collect();
    Ok((scalar, entries))
}

fn grid_of(st: &CheckSettings) -> Result<GridSpec> {
    make_grid(st.d, st.l, st.n)
}

/// Cell sums of `p_t` and `P_t` against `1` and `I_{d+1}`.
pub fn check_kernel_normalization(st: &CheckSettings) -> Result<CheckReport> {
    let grid = grid_of(st)?;
    let d = grid.d();
    let m = d + 1;
    let (scalar, entries) = periodized_poisson_type(&grid, st.t)?;
    let hd = grid.cell_volume();
    let err_p = (hd * scalar.iter().sum::<f64>() - 1.0).abs();
    let mut err_m = 0.0f64;
    for (k, col) in entries.iter().enumerate() {
        let id = if k / m == k % m { 1.0 } else { 0.0 };
        err_m = err_m.max((hd * col.iter().sum::<f64>() - id).abs());
    }
    // plain truncated sum, for the record
    let ev = PoissonTypeKernelEval::new(d)?;
    let plain = par_sum_k::<2>(grid.len(), |i| {
        let x = grid.point(i);
        let mut b = [0.0; 16];
        ev.fill(&x[..d], st.t, &mut b[..m * m]);
        [poisson_kernel(&x[..d], st.t).unwrap_or(0.0), b[0]]
    });
    let mut r = CheckReport::new(CheckId::KernelNormalization, st, format!("poisson_type_t{}", st.t));
    r.constant("int_p_error", err_p)
        .constant("int_P_max_error", err_m)
        .constant("plain_sum_p_error", (hd * plain[0] - 1.0).abs())
        .constant("plain_sum_P11_error", (hd * plain[1] - 1.0).abs())
        .constant("tol_p", 1e-3)
        .constant("tol_P", 5e-3);
    r.samples = vec![err_p, err_m];
    // both tolerances folded into one residual
    Ok(r.decide((err_p / 1e-3).max(err_m / 5e-3), 1.0))
}

/// Transform of the sampled periodized `P_t` against the closed-form symbol
/// at every lattice frequency with `|xi| <= N/(4L)`.
pub fn check_symbol_match(st: &CheckSettings) -> Result<CheckReport> {
    let grid = grid_of(st)?;
    let d = grid.d();
    let m = d + 1;
    let (_, entries) = periodized_poisson_type(&grid, st.t)?;
    let spectra: Vec<Vec<Complex64>> = entries.iter().map(|e| spectrum_of(&grid, e)).collect();
    let cutoff = grid.n() as f64 / (4.0 * grid.l());
    let mut worst = 0.0f64;
    let mut count = 0usize;
    let mut samples = Vec::new();
    for i in 0..grid.len() {
        let xi = grid.frequency(i);
        let r = xi[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > cutoff {
            continue;
        }
        let sym = poisson_type_symbol(&xi[..d], st.t)?.value;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..m * m {
            let s = sym[(k / m, k % m)];
            num += (spectra[k][i] - s).norm_sqr();
            den += s.norm_sqr();
        }
        let rel = (num / den).sqrt();
        worst = worst.max(rel);
        samples.push(rel);
        count += 1;
    }
    let mut r = CheckReport::new(CheckId::SymbolMatch, st, format!("poisson_type_t{}", st.t));
    r.constant("max_rel_frobenius", worst).constant("frequencies", count as f64);
    r.samples = samples;
    Ok(r.decide(worst, 1e-2))
}

/// Semigroup of both symbols and `M(xi)^2 = 0` at 1000 seeded random `xi`.
pub fn check_semigroup_nilpotency(st: &CheckSettings) -> Result<CheckReport> {
    let d = st.d;
    if !(1..=3).contains(&d) {
        return param(format!("dimension d={d} not in 1..=3"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let (mut semi, mut nil, mut scalar) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let xi: Vec<f64> = (0..d).map(|_| 4.0 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        let t1 = 2.0 * rng.gen::<f64>();
        let t2 = 2.0 * rng.gen::<f64>();
        let a = poisson_type_symbol(&xi, t1)?.value;
        let b = poisson_type_symbol(&xi, t2)?.value;
        let c = poisson_type_symbol(&xi, t1 + t2)?.value;
        semi = semi.max((a * b - c).iter().map(|z| z.norm()).fold(0.0, f64::max));
        let mm = nilpotent_part(&xi);
        nil = nil.max((&mm * &mm).iter().map(|z| z.norm()).fold(0.0, f64::max));
        scalar = scalar.max((poisson_symbol(&xi, t1) * poisson_symbol(&xi, t2) - poisson_symbol(&xi, t1 + t2)).abs());
    }
    let mut r = CheckReport::new(CheckId::SemigroupNilpotency, st, "random_frequencies");
    r.constant("semigroup_max", semi).constant("nilpotency_max", nil).constant("scalar_semigroup_max", scalar);
    Ok(r.decide(semi.max(nil).max(scalar), 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_offsets_cover_the_block() {
        let o = image_offsets(2, 1);
        assert_eq!(o.len(), 9);
        assert!(o.contains(&[-1.0, 1.0, 0.0]));
    }

    #[test]
    fn periodized_kernel_small_grid() {
        // coarse d=1 grid: the periodized cell sum is exact up to quadrature
        let st = CheckSettings { d: 1, l: 16.0, n: 64, ..CheckSettings::default() };
        let r = check_kernel_normalization(&st).unwrap();
        assert!(r.passed, "{:?}", r.constants);
        assert!(r.constants["plain_sum_p_error"] > r.constants["int_p_error"]);
    }

    #[test]
    fn semigroup_symbols() {
        let st = CheckSettings { d: 3, ..CheckSettings::default() };
        assert!(check_semigroup_nilpotency(&st).unwrap().passed);
    }
}
