//! Lattice pair sums for `int int G(x,y) |x-y|^{-d-sp}`.
//!
//! Three geometries:
//! * whole space, zero extension off the grid, with the far region
//!   (one endpoint outside the support) added in closed form;
//! * one period of a periodic field (`p = 2` only), kernel periodized by
//!   explicit images plus an Euler-Maclaurin remainder;
//! * a node subset, summed directly.
//!
//! Every geometry is evaluated on the grid and on its 2x and 4x subsamplings,
//! and the excluded diagonal shell (`O(h^{p(1-s)})`, then `+2`) is removed by
//! Richardson extrapolation.

use num_complex::Complex64;
use rayon::prelude::*;

use super::symbol::{sphere_area, sphere_moment};
use crate::error::{param, Error, Result};
use crate::fields::{fft_nd, radial_window, GridSpec, VectorField};
use crate::quad::{box_exterior_homogeneous_with, gauss_legendre, gauss_on};
use crate::reduce::{pairwise_sum, par_sum_k};

/// Relative magnitude that defines the support: pairs with both endpoints
/// below it are dropped, and beyond twice its radius one endpoint is taken as zero.
const SUPPORT_CUT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Integrand {
    /// `[|du|^p, |du.e|^p, violation]`; `projected = false` skips the second entry.
    Seminorms { p: f64, projected: bool },
    /// `|a|^{p-2} a b` with `a = du.e`, `b = dv.e`.
    Pairing { p: f64 },
}

#[inline]
fn pow_half(x2: f64, p: f64) -> f64 {
    // |x|^p from x^2
    if p == 2.0 {
        x2
    } else if p == 3.0 {
        x2 * x2.sqrt()
    } else {
        x2.powf(0.5 * p)
    }
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Integrand {
    fn p(&self) -> f64 {
        match *self {
            Integrand::Seminorms { p, .. } | Integrand::Pairing { p } => p,
        }
    }

    #[inline]
    fn eval(&self, du: &[f64; 3], dv: &[f64; 3], e: &[f64; 3]) -> [f64; 3] {
        match *self {
            Integrand::Seminorms { p, projected } => {
                let w = pow_half(dot(du, du), p);
                if !projected {
                    return [w, 0.0, 0.0];
                }
                let a = dot(du, e);
                let x = pow_half(a * a, p);
                [w, x, (x > w * (1.0 + 1e-12)) as u8 as f64]
            }
            Integrand::Pairing { p } => {
                let a = dot(du, e);
                let b = dot(dv, e);
                let v = if p == 2.0 {
                    a * b
                } else if a == 0.0 {
                    0.0
                } else {
                    a.abs().powf(p - 2.0) * a * b
                };
                [v, 0.0, 0.0]
            }
        }
    }

    /// `int_{S^{d-1}} G(0, w)` with the partner value zero, `G` evaluated at `(u, v)`.
    fn sphere(&self, d: usize, u: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
        let p = self.p();
        let uu = dot(u, u);
        match *self {
            Integrand::Seminorms { projected, .. } => {
                let a = pow_half(uu, p);
                [a * sphere_area(d), if projected { a * sphere_moment(d, p, 0.0) } else { 0.0 }, 0.0]
            }
            Integrand::Pairing { .. } => {
                if uu == 0.0 {
                    return [0.0; 3];
                }
                [pow_half(uu, p - 2.0) * dot(u, v) * sphere_moment(d, p, 0.0), 0.0, 0.0]
            }
        }
    }
}

/// Node values as fixed-width vectors.
fn nodes3(f: &VectorField) -> Vec<[f64; 3]> {
    let m = f.m().min(3);
    (0..f.grid().len())
        .map(|i| {
            let mut v = [0.0; 3];
            for (j, slot) in v.iter_mut().enumerate().take(m) {
                *slot = f.value(i, j);
            }
            v
        })
        .collect()
}

/// Raw lattice sums at each resolution, finest first.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSums {
    pub h: Vec<f64>,
    pub sums: Vec<[f64; 3]>,
}

/// Extrapolated value of a `p`-th power sum and its half-width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Extrapolated {
    pub value: f64,
    pub err: f64,
}

/// Two-stage Richardson in `h, 2h, 4h` with exponents `gamma` and `gamma + 2`.
pub fn richardson(sums: &[f64], gamma: f64) -> Extrapolated {
    let step = |fine: f64, coarse: f64, g: f64| {
        let r = 2f64.powf(g);
        (r * fine - coarse) / (r - 1.0)
    };
    let floor = |v: f64, e: f64| e.max(1e-12 * v.abs());
    match sums.len() {
        0 => Extrapolated { value: 0.0, err: 0.0 },
        1 => Extrapolated { value: sums[0], err: sums[0].abs() },
        2 => {
            let r = step(sums[0], sums[1], gamma);
            Extrapolated { value: r, err: floor(r, (r - sums[0]).abs()) }
        }
        _ => {
            let ra = step(sums[0], sums[1], gamma);
            let rb = step(sums[1], sums[2], gamma);
            let r2 = step(ra, rb, gamma + 2.0);
            // |ra - rb| exceeds |r2 - ra| (by 2^{gamma+2} - 1) only when the
            // coarse level is not yet asymptotic; keep whichever is larger
            Extrapolated { value: r2, err: floor(r2, (r2 - ra).abs().max((ra - rb).abs())) }
        }
    }
}

/// Subsampling factors `1, 2, 4` that keep at least 8 nodes per axis.
fn level_factors(n: usize) -> Vec<usize> {
    [1, 2, 4].into_iter().filter(|f| n / f >= 8 && n % f == 0).collect()
}

struct Offset {
    delta: isize,
    z: [i64; 3],
    e: [f64; 3],
    weight: f64,
}

/// Support geometry shared by all levels of the whole-space sum.
#[derive(Clone, Copy, Debug)]
struct Geometry {
    r0: f64,
    r1: f64,
    /// `int_0^inf (1 - w(r)) r^{-1-sp} dr`.
    far_weight: f64,
}

fn geometry(grid: &GridSpec, fields: &[&[[f64; 3]]], sp: f64) -> Geometry {
    let d = grid.d();
    let peak = fields.iter().flat_map(|f| f.iter()).map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for i in 0..grid.len() {
        if fields.iter().any(|f| dot(&f[i], &f[i]).sqrt() > SUPPORT_CUT * peak) {
            let x = grid.point(i);
            for a in 0..d {
                lo[a] = lo[a].min(x[a]);
                hi[a] = hi[a].max(x[a]);
            }
        }
    }
    let mut rho = 0.0f64;
    for i in 0..grid.len() {
        if fields.iter().any(|f| dot(&f[i], &f[i]).sqrt() > SUPPORT_CUT * peak) {
            let x = grid.point(i);
            let r2: f64 = (0..d).map(|a| (x[a] - 0.5 * (lo[a] + hi[a])).powi(2)).sum();
            rho = rho.max(r2.sqrt());
        }
    }
    let r0 = (2.0 * rho).max(4.0 * grid.h());
    let tau = (0.5 * r0).max(16.0 * grid.h());
    let r1 = r0 + tau;
    let band: f64 = gauss_on(r0, r1, 128)
        .iter()
        .map(|&(r, w)| w * (1.0 - radial_window(r, r0, r1)) * r.powf(-1.0 - sp))
        .sum();
    Geometry { r0, r1, far_weight: band + r1.powf(-sp) / sp }
}

/// Index box `[lo, hi)` of nodes above the support cut.
fn support_box(grid: &GridSpec, fields: &[&[[f64; 3]]]) -> Option<([usize; 3], [usize; 3])> {
    let d = grid.d();
    let peak = fields.iter().flat_map(|f| f.iter()).map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    if peak == 0.0 {
        return None;
    }
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for i in 0..grid.len() {
        if fields.iter().any(|f| dot(&f[i], &f[i]).sqrt() > SUPPORT_CUT * peak) {
            let mi = grid.multi_index(i);
            for a in 0..d {
                lo[a] = lo[a].min(mi[a]);
                hi[a] = hi[a].max(mi[a] + 1);
            }
        }
    }
    for a in d..3 {
        lo[a] = 0;
        hi[a] = 1;
    }
    Some((lo, hi))
}

/// One level of the whole-space sum.
///
/// `S` is the support box of `u`; every pair with an endpoint in `S` is
/// summed, pairs with both endpoints outside are dropped (`D(u)` vanishes there).
/// Partner values come from the grid, zero beyond it.
fn whole_level(
    grid: &GridSpec,
    u: &[[f64; 3]],
    v: &[[f64; 3]],
    integrand: Integrand,
    sp: f64,
    geo: Geometry,
) -> [f64; 3] {
    let d = grid.d();
    let h = grid.h();
    let Some((lo, hi)) = support_box(grid, &[u]) else {
        return [0.0; 3];
    };
    let pad = (geo.r1 / h).ceil() as usize + 1;
    let mut ext = [1usize; 3];
    let mut sbox = [1usize; 3];
    for a in 0..d {
        sbox[a] = hi[a] - lo[a];
        ext[a] = sbox[a] + 2 * pad;
    }
    let total: usize = ext.iter().product();
    let stride = [ext[1] * ext[2], ext[2], 1];
    let mut pu = vec![[0.0; 3]; total];
    let mut pv = vec![[0.0; 3]; total];
    let shift = |a: usize| if a < d { pad } else { 0 };
    let n = grid.n() as i64;
    for flat in 0..total {
        let pm = [flat / stride[0], (flat / stride[1]) % ext[1], flat % ext[2]];
        let mut gi = [0usize; 3];
        let mut inside = true;
        for a in 0..d {
            let k = lo[a] as i64 + pm[a] as i64 - pad as i64;
            inside &= (0..n).contains(&k);
            gi[a] = k.max(0) as usize;
        }
        if inside {
            let src = grid.linear_index(&gi[..d]);
            pu[flat] = u[src];
            pv[flat] = v[src];
        }
    }

    let k = (geo.r1 / h).floor() as i64;
    let side = (2 * k + 1) as usize;
    let mut offsets = Vec::new();
    for flat in 0..side.pow(d as u32) {
        let mut z = [0i64; 3];
        let mut rest = flat;
        for a in (0..d).rev() {
            z[a] = (rest % side) as i64 - k;
            rest /= side;
        }
        match z[..d].iter().find(|&&c| c != 0) {
            Some(&c) if c > 0 => {}
            _ => continue,
        }
        let r = h * (z.iter().map(|c| (c * c) as f64).sum::<f64>()).sqrt();
        let w = radial_window(r, geo.r0, geo.r1);
        if w == 0.0 {
            continue;
        }
        let mut e = [0.0; 3];
        for a in 0..d {
            e[a] = z[a] as f64 * h / r;
        }
        let delta = (0..3).map(|a| z[a] as isize * stride[a] as isize).sum();
        let weight = 2.0 * h.powi(2 * d as i32) * w * r.powf(-(d as f64) - sp);
        offsets.push(Offset { delta, z, e, weight });
    }

    let count = sbox[0] * sbox[1] * sbox[2];
    let near = par_sum_k::<3>(count, |flat| {
        let mi = [flat / (sbox[1] * sbox[2]), (flat / sbox[2]) % sbox[1], flat % sbox[2]];
        let px = (mi[0] + shift(0)) * stride[0] + (mi[1] + shift(1)) * stride[1] + (mi[2] + shift(2)) * stride[2];
        let (ux, vx) = (pu[px], pv[px]);
        let mut acc = [0.0; 3];
        for o in &offsets {
            let py = (px as isize + o.delta) as usize;
            let (uy, vy) = (pu[py], pv[py]);
            let du = [uy[0] - ux[0], uy[1] - ux[1], uy[2] - ux[2]];
            let dv = [vy[0] - vx[0], vy[1] - vx[1], vy[2] - vx[2]];
            let g = integrand.eval(&du, &dv, &o.e);
            let mut outside = false;
            for a in 0..d {
                let back = mi[a] as i64 - o.z[a];
                outside |= back < 0 || back >= sbox[a] as i64;
            }
            if outside {
                let pz = (px as isize - o.delta) as usize;
                let (uz, vz) = (pu[pz], pv[pz]);
                let du = [uz[0] - ux[0], uz[1] - ux[1], uz[2] - ux[2]];
                let dv = [vz[0] - vx[0], vz[1] - vx[1], vz[2] - vx[2]];
                let g2 = integrand.eval(&du, &dv, &o.e);
                for j in 0..3 {
                    acc[j] += o.weight * (g[j] + g2[j]);
                }
            } else {
                for j in 0..3 {
                    acc[j] += o.weight * g[j];
                }
            }
        }
        acc
    });

    let far = par_sum_k::<3>(count, |flat| {
        let mi = [flat / (sbox[1] * sbox[2]), (flat / sbox[2]) % sbox[1], flat % sbox[2]];
        let px = (mi[0] + shift(0)) * stride[0] + (mi[1] + shift(1)) * stride[1] + (mi[2] + shift(2)) * stride[2];
        integrand.sphere(d, &pu[px], &pv[px])
    });
    let scale = grid.cell_volume() * 2.0 * geo.far_weight;
    [near[0] + scale * far[0], near[1] + scale * far[1], near[2]]
}

/// Whole-space sums at every level; `u` must be compact.
///
/// For a pairing, `v` may have tails: it is zero-extended off the grid and
/// its values beyond the cutoff radius `R0` of `u`'s support are not seen by the far term.
pub(crate) fn whole_space_levels(u: &VectorField, v: &VectorField, integrand: Integrand, sp: f64) -> Result<LevelSums> {
    if let Some(leak) = u.meta().truncation_warning() {
        return Err(Error::Numerical(format!(
            "field not negligible at the box boundary (relative {leak:.2e}); whole-space sums need compact fields"
        )));
    }
    let grid = *u.grid();
    let geo = geometry(&grid, &[&nodes3(u)], sp);
    let mut out = LevelSums { h: Vec::new(), sums: Vec::new() };
    for f in level_factors(grid.n()) {
        let (uc, vc) = (u.coarsened(f)?, v.coarsened(f)?);
        let g = *uc.grid();
        out.sums.push(whole_level(&g, &nodes3(&uc), &nodes3(&vc), integrand, sp, geo));
        out.h.push(g.h());
    }
    Ok(out)
}

/// Direct sum over ordered pairs of distinct masked nodes.
pub(crate) fn masked_levels(
    u: &VectorField,
    v: &VectorField,
    mask: &[bool],
    integrand: Integrand,
    sp: f64,
) -> Result<LevelSums> {
    let grid = *u.grid();
    if mask.len() != grid.len() {
        return Err(Error::Shape("mask length differs from grid".into()));
    }
    if !mask.iter().any(|&b| b) {
        return Err(Error::EmptyMask);
    }
    let d = grid.d();
    let (un, vn) = (nodes3(u), nodes3(v));
    let mut out = LevelSums { h: Vec::new(), sums: Vec::new() };
    for f in level_factors(grid.n()) {
        let idx: Vec<usize> = (0..grid.len())
            .filter(|&i| mask[i] && grid.multi_index(i)[..d].iter().all(|k| k % f == 0))
            .collect();
        let h = grid.h() * f as f64;
        let pts: Vec<[f64; 3]> = idx.iter().map(|&i| grid.point(i)).collect();
        let w = 2.0 * h.powi(2 * d as i32);
        let sums = par_sum_k::<3>(idx.len(), |a| {
            let mut acc = [0.0; 3];
            for b in a + 1..idx.len() {
                let mut e = [0.0; 3];
                let mut r2 = 0.0;
                for c in 0..d {
                    e[c] = pts[b][c] - pts[a][c];
                    r2 += e[c] * e[c];
                }
                let r = r2.sqrt();
                e.iter_mut().for_each(|c| *c /= r);
                let (ia, ib) = (idx[a], idx[b]);
                let du = [un[ib][0] - un[ia][0], un[ib][1] - un[ia][1], un[ib][2] - un[ia][2]];
                let dv = [vn[ib][0] - vn[ia][0], vn[ib][1] - vn[ia][1], vn[ib][2] - vn[ia][2]];
                let g = integrand.eval(&du, &dv, &e);
                let k = w * r.powf(-(d as f64) - sp);
                for j in 0..3 {
                    acc[j] += k * g[j];
                }
            }
            acc
        });
        out.sums.push(sums);
        out.h.push(h);
    }
    Ok(out)
}

/// Number of explicit image shells per dimension.
fn image_shells(d: usize) -> i64 {
    match d {
        1 => 32,
        2 => 8,
        _ => 4,
    }
}

/// `sum_n G(z0 + n L)` for `G = |y|^{-d-2s}` (gagliardo) or `y y^T |y|^{-d-2s-2}` (projected),
/// returned as the full `d x d` matrix (isotropic case on the diagonal).
fn periodized_kernel(z0: &[f64], l: f64, s: f64, projected: bool, rule: &[(f64, f64)]) -> [[f64; 3]; 3] {
    let d = z0.len();
    let m = image_shells(d);
    let beta = d as f64 + 2.0 * s;
    let side = (2 * m + 1) as usize;
    let mut g = [[0.0; 3]; 3];
    for flat in 0..side.pow(d as u32) {
        let mut y = [0.0; 3];
        let mut rest = flat;
        for a in 0..d {
            y[a] = z0[a] + l * ((rest % side) as i64 - m) as f64;
            rest /= side;
        }
        let r2 = dot(&y, &y);
        if r2 == 0.0 {
            continue;
        }
        let k = r2.powf(-0.5 * beta);
        if projected {
            for i in 0..d {
                for j in 0..d {
                    g[i][j] += k * y[i] * y[j] / r2;
                }
            }
        } else {
            for (i, row) in g.iter_mut().enumerate().take(d) {
                row[i] += k;
            }
        }
    }
    // Cells of side L around the remaining images tile the exterior of this box;
    // midpoint rule with its h^2 correction.
    let a = (m as f64 + 0.5) * l;
    let lo: Vec<f64> = z0.iter().map(|c| c - a).collect();
    let hi: Vec<f64> = z0.iter().map(|c| c + a).collect();
    let vol = l.powi(d as i32);
    let corr = l * l / 24.0;
    if projected {
        for i in 0..d {
            for j in i..d {
                let delta = if i == j { 2.0 } else { 0.0 };
                let e0 = box_exterior_homogeneous_with(rule, &lo, &hi, 2.0 * s, |w| w[i] * w[j]);
                let e2 = box_exterior_homogeneous_with(rule, &lo, &hi, 2.0 * s + 2.0, |w| {
                    delta + w[i] * w[j] * (beta + 2.0) * (beta - d as f64)
                });
                let v = (e0 - corr * e2) / vol;
                g[i][j] += v;
                if i != j {
                    g[j][i] += v;
                }
            }
        }
    } else {
        let e0 = box_exterior_homogeneous_with(rule, &lo, &hi, 2.0 * s, |_| 1.0);
        let e2 = box_exterior_homogeneous_with(rule, &lo, &hi, 2.0 * s + 2.0, |_| beta * (beta + 2.0 - d as f64));
        let v = (e0 - corr * e2) / vol;
        for (i, row) in g.iter_mut().enumerate().take(d) {
            row[i] += v;
        }
    }
    g
}

/// One period of a periodic field, `p = 2`: returns `[W^2, X^2, 0]` at this level.
fn periodic_level(f: &VectorField, s: f64, projected: bool) -> [f64; 3] {
    let grid = *f.grid();
    let d = grid.d();
    let n = grid.n();
    let m = f.m();
    let len = grid.len();
    let spectra: Vec<Vec<Complex64>> = f
        .components()
        .iter()
        .map(|c| {
            let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_nd(&mut buf, n, d, false);
            buf
        })
        .collect();
    // corr[i][j][z] = sum_x u_i(x+z) u_j(x)
    let mut corr = vec![vec![Vec::new(); m]; m];
    for i in 0..m {
        for j in 0..m {
            if !projected && i != j {
                continue;
            }
            let mut buf: Vec<Complex64> = spectra[i].iter().zip(&spectra[j]).map(|(a, b)| a * b.conj()).collect();
            fft_nd(&mut buf, n, d, true);
            corr[i][j] = buf.iter().map(|z| z.re / len as f64).collect();
        }
    }
    let hd = grid.cell_volume();
    let rule = gauss_legendre(16);
    let terms: Vec<[f64; 2]> = (1..len)
        .into_par_iter()
        .map(|idx| {
            let mi = grid.multi_index(idx);
            let mut z0 = [0.0; 3];
            for a in 0..d {
                let k = if mi[a] >= n / 2 { mi[a] as i64 - n as i64 } else { mi[a] as i64 };
                z0[a] = k as f64 * grid.h();
            }
            let phi = |i: usize, j: usize| hd * (2.0 * corr[i][j][0] - corr[i][j][idx] - corr[j][i][idx]);
            let trace: f64 = (0..m).map(|i| phi(i, i)).sum();
            let iso = periodized_kernel(&z0[..d], grid.l(), s, false, &rule)[0][0];
            let w = hd * trace * iso;
            let x = if projected {
                let g = periodized_kernel(&z0[..d], grid.l(), s, true, &rule);
                let mut acc = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        acc += phi(i, j) * g[i][j];
                    }
                }
                hd * acc
            } else {
                0.0
            };
            [w, x]
        })
        .collect();
    let w: Vec<f64> = terms.iter().map(|t| t[0]).collect();
    let x: Vec<f64> = terms.iter().map(|t| t[1]).collect();
    [pairwise_sum(&w), pairwise_sum(&x), 0.0]
}

pub(crate) fn periodic_levels(f: &VectorField, s: f64, projected: bool) -> Result<LevelSums> {
    let n = f.grid().n();
    let mut out = LevelSums { h: Vec::new(), sums: Vec::new() };
    for fac in level_factors(n) {
        let c = f.coarsened(fac)?;
        out.sums.push(periodic_level(&c, s, projected));
        out.h.push(c.grid().h());
    }
    Ok(out)
}

pub(crate) fn require_projectable(f: &VectorField) -> Result<()> {
    if f.m() != f.grid().d() {
        return param(format!("projected form needs m = d, got m = {}", f.m()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, sample_family, Family};

    #[test]
    fn richardson_removes_known_powers() {
        let (a, b, c) = (2.0, 0.7, -0.3);
        let gamma = 1.0;
        let t = |h: f64| a + b * h.powf(gamma) + c * h.powf(gamma + 2.0);
        let r = richardson(&[t(0.1), t(0.2), t(0.4)], gamma);
        assert!((r.value - a).abs() < 1e-12);
    }

    #[test]
    fn far_weight_matches_sharp_tail_when_window_is_narrow() {
        let g = make_grid(2, 16.0, 64).unwrap();
        let f = sample_family(&Family::gaussian(1.0, vec![1.0, 0.0]), &g).unwrap();
        let un = nodes3(&f);
        let geo = geometry(&g, &[&un], 1.0);
        // int_{r0}^{inf} r^{-2} dr <= J <= int_{r1}^{inf}... reversed: (1-w) <= 1 on [r0, r1]
        assert!(geo.far_weight <= 1.0 / geo.r0 && geo.far_weight >= 1.0 / geo.r1);
    }

    #[test]
    fn masked_and_whole_agree_on_the_near_part() {
        // zero field outside a mask: masked sum is the near part of the whole sum without the far tail
        let g = make_grid(1, 16.0, 32).unwrap();
        let f = sample_family(&Family::gaussian(1.0, vec![1.0]), &g).unwrap();
        let mask = vec![true; g.len()];
        let it = Integrand::Seminorms { p: 2.0, projected: true };
        let m = masked_levels(&f, &f, &mask, it, 1.0).unwrap();
        let w = whole_space_levels(&f, &f, it, 1.0).unwrap();
        // the whole-space value adds pairs leaving the box, so it dominates
        assert!(w.sums[0][0] > m.sums[0][0]);
        assert_eq!(m.sums[0][0], m.sums[0][1]);
    }
}
