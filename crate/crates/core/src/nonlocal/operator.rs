//! Pair sums of the nonlocal operator, energy and gradient.
//!
//! With `W_ij = w_i w_j A(x_i, x_j) K_ij` and `D_ij = (u_i - u_j) . e_ij`,
//! `e_ij = (x_i - x_j)/|x_i - x_j|`:
//!
//! - `<L u, v> = sum_{i != j} W_ij |D_ij(u)|^{p-2} D_ij(u) D_ij(v)`
//! - `E(u) = (1/p) sum_{i != j} W_ij |D_ij(u)|^p - sum_i w_i F_i . u_i`
//! - `dE/du_i = sum_j 2 W_ij |D_ij|^{p-2} D_ij e_ij - w_i F_i`

use rayon::prelude::*;

use super::problem::NonlocalProblem;
use crate::error::{param, Error, Result};
use crate::quad::gauss_on;
use crate::reduce::{pairwise_sum, par_sum_k};

/// Gauss points per axis in the cell average of the kernel.
const CELL_GAUSS: usize = 16;

/// `D(u)(x, y) = (u(x) - u(y)) . (x - y)/|x - y|`.
pub fn projected_difference(ux: &[f64], uy: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    if !(r2 > 0.0) {
        return param("projected difference needs distinct points");
    }
    let dot: f64 = (0..x.len()).map(|a| (ux[a] - uy[a]) * (x[a] - y[a])).sum();
    Ok(dot / r2.sqrt())
}

/// `h^{-d} int_{z + [-h/2, h/2]^d} |y|^{-beta} dy` for a cell that misses the origin.
pub fn cell_averaged_kernel(z: &[f64], h: f64, beta: f64) -> f64 {
    let d = z.len();
    let rules: Vec<Vec<(f64, f64)>> = z.iter().map(|c| gauss_on(c - 0.5 * h, c + 0.5 * h, CELL_GAUSS)).collect();
    let mut acc = 0.0;
    let total = CELL_GAUSS.pow(d as u32);
    for flat in 0..total {
        let mut rest = flat;
        let (mut r2, mut w) = (0.0, 1.0);
        for rule in &rules {
            let (x, wx) = rule[rest % CELL_GAUSS];
            rest /= CELL_GAUSS;
            r2 += x * x;
            w *= wx;
        }
        acc += w * r2.powf(-beta / 2.0);
    }
    acc / h.powi(d as i32)
}

/// Kernel and direction for every lattice offset in `[-m, m]^d`.
struct OffsetTable {
    m: i64,
    side: i64,
    /// Table index of the zero offset.
    center: i64,
    entries: Vec<Entry>,
}

#[derive(Clone, Copy, Default)]
struct Entry {
    kernel: f64,
    e: [f64; 3],
}

impl OffsetTable {
    fn new(d: usize, h: f64, m: i64, beta: f64) -> Self {
        let side = 2 * m + 1;
        let total = side.pow(d as u32) as usize;
        let unit = {
            let mut z = vec![0.0; d];
            z[0] = 1.0;
            cell_averaged_kernel(&z, 1.0, beta)
        };
        let entries = (0..total)
            .map(|flat| {
                let mut k = [0i64; 3];
                let mut rest = flat as i64;
                for slot in k.iter_mut().take(d) {
                    *slot = rest % side - m;
                    rest /= side;
                }
                let k2: i64 = k.iter().map(|v| v * v).sum();
                if k2 == 0 {
                    return Entry::default();
                }
                let r = (k2 as f64).sqrt();
                // nearest neighbours: the cell average, the same for every axis direction
                let kernel = if k2 == 1 { unit * h.powf(-beta) } else { (r * h).powf(-beta) };
                Entry { kernel, e: [k[0] as f64 / r, k[1] as f64 / r, k[2] as f64 / r] }
            })
            .collect();
        let center = (0..d).map(|a| m * side.pow(a as u32)).sum();
        Self { m, side, center, entries }
    }

    /// Packed coordinate; differences of packed values index the table.
    fn pack(&self, k: &[i64; 3], d: usize) -> i64 {
        (0..d).map(|a| k[a] * self.side.pow(a as u32)).sum()
    }
}

/// `|t|^{p-2} t`.
#[inline]
fn phi(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else if p == 3.0 {
        t.abs() * t
    } else {
        t.abs().powf(p - 2.0) * t
    }
}

#[inline]
fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else if p == 3.0 {
        t.abs() * t * t
    } else {
        t.abs().powf(p)
    }
}

/// `|a + delta|^p - |a|^p` without cancellation.
#[inline]
fn pow_increment(a: f64, delta: f64, p: f64) -> f64 {
    if p == 2.0 {
        return delta * (2.0 * a + delta);
    }
    if a != 0.0 && delta.abs() < 0.5 * a.abs() {
        abs_pow(a, p) * (p * (delta / a).ln_1p()).exp_m1()
    } else {
        abs_pow(a + delta, p) - abs_pow(a, p)
    }
}

/// Pair weights and directions of a problem, ready for repeated sweeps.
pub struct Operator<'a> {
    pub problem: &'a NonlocalProblem,
    site: Vec<f64>,
    table: Option<OffsetTable>,
    packed: Vec<i64>,
    beta: f64,
}

impl<'a> Operator<'a> {
    pub fn new(problem: &'a NonlocalProblem) -> Result<Self> {
        problem.validate()?;
        let d = problem.d;
        let beta = problem.params.kernel_exponent();
        let site = problem.nodes.iter().map(|x| problem.coeff.site(&x[..d])).collect();
        let table = problem.lattice.as_ref().map(|lat| {
            let m = (0..d)
                .map(|a| {
                    let lo = lat.coords.iter().map(|k| k[a]).min().unwrap_or(0);
                    let hi = lat.coords.iter().map(|k| k[a]).max().unwrap_or(0);
                    hi - lo
                })
                .max()
                .unwrap_or(0);
            OffsetTable::new(d, lat.h, m, beta)
        });
        let packed = match (&table, &problem.lattice) {
            (Some(t), Some(lat)) => lat.coords.iter().map(|k| t.pack(k, d)).collect(),
            _ => Vec::new(),
        };
        Ok(Self { problem, site, table, packed, beta })
    }

    /// `(W_ij, e_ij)` for `i != j`.
    pub fn pair(&self, i: usize, j: usize) -> (f64, [f64; 3]) {
        let pb = self.problem;
        let d = pb.d;
        let wa = pb.weights[i] * pb.weights[j] * 0.5 * (self.site[i] + self.site[j]);
        match &self.table {
            Some(t) => {
                debug_assert!(self.packed[i] - self.packed[j] + t.center >= 0 && t.m >= 0);
                let e = &t.entries[(self.packed[i] - self.packed[j] + t.center) as usize];
                (wa * e.kernel, e.e)
            }
            None => {
                let (x, y) = (&pb.nodes[i], &pb.nodes[j]);
                let mut z = [0.0; 3];
                for a in 0..d {
                    z[a] = x[a] - y[a];
                }
                let r2: f64 = z.iter().map(|v| v * v).sum();
                let r = r2.sqrt();
                (wa * r2.powf(-self.beta / 2.0), [z[0] / r, z[1] / r, z[2] / r])
            }
        }
    }

    /// Calls `f(j, W_ij, e_ij)` for every `j != i`.
    #[inline(always)]
    fn row(&self, i: usize, mut f: impl FnMut(usize, f64, &[f64; 3])) {
        let pb = self.problem;
        let n = pb.len();
        match &self.table {
            Some(t) => {
                let wi = 0.5 * pb.weights[i];
                let si = self.site[i];
                let base = self.packed[i] + t.center;
                for j in 0..n {
                    if j != i {
                        let e = &t.entries[(base - self.packed[j]) as usize];
                        f(j, wi * pb.weights[j] * (si + self.site[j]) * e.kernel, &e.e);
                    }
                }
            }
            None => {
                for j in 0..n {
                    if j != i {
                        let (w, e) = self.pair(i, j);
                        f(j, w, &e);
                    }
                }
            }
        }
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        let want = self.problem.len() * self.problem.d;
        if u.len() != want {
            return Err(Error::Shape(format!("nodal vector has {} entries, expected {want}", u.len())));
        }
        Ok(())
    }

    /// Nodal values zero-padded to three components.
    fn padded(&self, u: &[f64]) -> Result<Vec<[f64; 3]>> {
        self.check(u)?;
        let d = self.problem.d;
        Ok(u.chunks_exact(d)
            .map(|c| {
                let mut v = [0.0; 3];
                v[..d].copy_from_slice(c);
                v
            })
            .collect())
    }

    /// Row sums of `f(W, D_ij(u), D_ij(v))` over `j != i`, in parallel over `i`,
    /// reduced deterministically.
    fn pair_sum<const K: usize>(
        &self,
        u: &[[f64; 3]],
        v: &[[f64; 3]],
        f: impl Fn(f64, f64, f64) -> [f64; K] + Sync + Send,
    ) -> [f64; K] {
        par_sum_k::<K>(self.problem.len(), |i| {
            let mut acc = [0.0; K];
            let (ui, vi) = (u[i], v[i]);
            self.row(i, |j, w, e| {
                let r = f(w, proj(&ui, &u[j], e), proj(&vi, &v[j], e));
                for k in 0..K {
                    acc[k] += r[k];
                }
            });
            acc
        })
    }

    pub fn apply(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let (u, v) = (self.padded(u)?, self.padded(v)?);
        let p = self.problem.params.p;
        Ok(self.pair_sum(&u, &v, |w, a, b| [w * phi(a, p) * b])[0])
    }

    /// `(1/p) sum W |D|^p`.
    pub fn stored_energy(&self, u: &[f64]) -> Result<f64> {
        let u = self.padded(u)?;
        let p = self.problem.params.p;
        Ok(self.pair_sum(&u, &u, |w, a, _| [w * abs_pow(a, p)])[0] / p)
    }

    /// `sum_i w_i F_i . v_i`.
    pub fn load(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let pb = self.problem;
        let d = pb.d;
        let terms: Vec<f64> = (0..pb.len())
            .map(|i| pb.weights[i] * (0..d).map(|a| pb.forcing[i * d + a] * v[i * d + a]).sum::<f64>())
            .collect();
        Ok(pairwise_sum(&terms))
    }

    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let e = self.stored_energy(u)? - self.load(u)?;
        if !e.is_finite() {
            return Err(Error::Numerical("energy is not finite".into()));
        }
        Ok(e)
    }

    /// `E(u + alpha v) - E(u)`, summed pair by pair so small steps keep their digits.
    pub fn energy_increment(&self, u: &[f64], v: &[f64], alpha: f64) -> Result<f64> {
        let (uu, vv) = (self.padded(u)?, self.padded(v)?);
        let p = self.problem.params.p;
        let stored = self.pair_sum(&uu, &vv, |w, a, b| [w * pow_increment(a, alpha * b, p)])[0] / p;
        Ok(stored - alpha * self.load(v)?)
    }

    /// `(sum W D(u) D(v), sum W D(v)^2)`: for `p = 2` the energy along `u + alpha v`
    /// is `E(u) + alpha m0 + alpha^2 m1 / 2 - alpha <F, v>`.
    pub fn quadratic_moments(&self, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
        let (u, v) = (self.padded(u)?, self.padded(v)?);
        let [m0, m1] = self.pair_sum(&u, &v, |w, a, b| [w * a * b, w * b * b]);
        Ok((m0, m1))
    }

    /// Full gradient of `E`, collar entries included.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let uu = self.padded(u)?;
        let pb = self.problem;
        let (n, d, p) = (pb.len(), pb.d, pb.params.p);
        let rows: Vec<[f64; 3]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut g = [0.0; 3];
                let ui = uu[i];
                self.row(i, |j, w, e| {
                    let c = 2.0 * w * phi(proj(&ui, &uu[j], e), p);
                    g[0] += c * e[0];
                    g[1] += c * e[1];
                    g[2] += c * e[2];
                });
                for a in 0..d {
                    g[a] -= pb.weights[i] * pb.forcing[i * d + a];
                }
                g
            })
            .collect();
        Ok(rows.iter().flat_map(|g| g[..d].to_vec()).collect())
    }
}

/// `(a - b) . e`.
#[inline(always)]
fn proj(a: &[f64; 3], b: &[f64; 3], e: &[f64; 3]) -> f64 {
    (a[0] - b[0]) * e[0] + (a[1] - b[1]) * e[1] + (a[2] - b[2]) * e[2]
}

/// `<L u, v>` on the problem's nodes.
pub fn apply_operator(u: &[f64], v: &[f64], problem: &NonlocalProblem) -> Result<f64> {
    Operator::new(problem)?.apply(u, v)
}

/// `E(u) = (1/p) sum W |D(u)|^p - <F, u>`.
pub fn energy(u: &[f64], problem: &NonlocalProblem) -> Result<f64> {
    Operator::new(problem)?.energy(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FracParams;
    use crate::nonlocal::Coefficient;

    #[test]
    fn projected_difference_basics() {
        let (x, y) = ([0.3, -0.2], [1.0, 0.5]);
        let r = ((0.7f64).powi(2) + (0.7f64).powi(2)).sqrt();
        assert!((projected_difference(&x, &y, &x, &y).unwrap() - r).abs() < 1e-15);
        // skew W
        let w = |v: &[f64]| [-0.8 * v[1], 0.8 * v[0]];
        assert!(projected_difference(&w(&x), &w(&y), &x, &y).unwrap().abs() < 1e-15);
        assert!(projected_difference(&[1.0, 1.0], &[1.0, 1.0], &x, &y).unwrap() == 0.0);
        assert!(projected_difference(&x, &x, &x, &x).is_err());
    }

    #[test]
    fn cell_average_tends_to_pointwise_far_away() {
        let near = cell_averaged_kernel(&[1.0, 0.0], 1.0, 2.5);
        assert!(near > 1.0, "convexity pushes the average above the centre value: {near}");
        let far = cell_averaged_kernel(&[30.0, 0.0], 1.0, 2.5);
        assert!((far * 30f64.powf(2.5) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn increment_matches_difference() {
        for &p in &[2.0, 2.5, 3.0, 4.0] {
            for &(a, dl) in &[(1.0, 0.1), (-0.3, 0.7), (0.0, 0.2), (2.0, -1e-9)] {
                let direct = abs_pow(a + dl, p) - abs_pow(a, p);
                assert!((pow_increment(a, dl, p) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn lattice_and_cloud_agree_off_the_nearest_shell() {
        let params = FracParams::new(0.4, 2.0, 0.0, 2).unwrap();
        let c = Coefficient::Smooth { alpha1: 1.0, alpha2: 2.0 };
        let lat = NonlocalProblem::lattice_ball(0.25, 1.0, c, |_, _| {}, params).unwrap();
        let mut cloud = lat.clone();
        cloud.lattice = None;
        let (a, b) = (Operator::new(&lat).unwrap(), Operator::new(&cloud).unwrap());
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                if i == j {
                    continue;
                }
                let (wa, ea) = a.pair(i, j);
                let (wb, eb) = b.pair(i, j);
                let k = lat.lattice.as_ref().unwrap();
                let dist2: i64 = (0..2).map(|x| (k.coords[i][x] - k.coords[j][x]).pow(2)).sum();
                if dist2 > 1 {
                    assert!((wa / wb - 1.0).abs() < 1e-12);
                } else {
                    assert!(wa > wb);
                }
                assert!((0..3).all(|x| (ea[x] - eb[x]).abs() < 1e-15));
            }
        }
    }
}
