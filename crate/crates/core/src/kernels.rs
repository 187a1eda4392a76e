//! Poisson kernel, the matrix Poisson-type kernel, their t-derivatives and symbols.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{param, Result};

/// Surface measure of the unit sphere `S^d` in `R^{d+1}`.
pub fn omega(d: usize) -> f64 {
    let a = (d as f64 + 1.0) / 2.0;
    2.0 * PI.powf(a) / libm::tgamma(a)
}

fn check_t(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        param(format!("t={t} must be positive"))
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `p_t(x) = (2/omega_d) t / (|x|^2 + t^2)^{(d+1)/2}`, with `d = x.len()`.
pub fn poisson_kernel(x: &[f64], t: f64) -> Result<f64> {
    check_t(t)?;
    let d = x.len();
    Ok(2.0 / omega(d) * t / (norm2(x) + t * t).powf((d as f64 + 1.0) / 2.0))
}

/// Evaluator for the `(d+1) x (d+1)` Poisson-type kernel
/// `P_t(x) = c t (|x|^2+t^2)^{-(d+3)/2} (x,t) (x,t)^T`, `c = 2(d+1)/omega_d`.
#[derive(Clone, Copy, Debug)]
pub struct PoissonTypeKernelEval {
    pub d: usize,
    pub omega_d: f64,
}

impl PoissonTypeKernelEval {
    pub fn new(d: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return param(format!("dimension d={d} not in 1..=3"));
        }
        Ok(Self { d, omega_d: omega(d) })
    }

    fn c(&self) -> f64 {
        2.0 * (self.d as f64 + 1.0) / self.omega_d
    }

    fn lifted(&self, x: &[f64], t: f64) -> [f64; 4] {
        let mut y = [0.0; 4];
        y[..self.d].copy_from_slice(&x[..self.d]);
        y[self.d] = t;
        y
    }

    /// Row-major entries into `out` (length `(d+1)^2`), no allocation.
    pub fn fill(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let m = self.d + 1;
        let q = norm2(&x[..self.d]) + t * t;
        let scale = self.c() * t * q.powf(-(self.d as f64 + 3.0) / 2.0);
        let y = self.lifted(x, t);
        for j in 0..m {
            for k in 0..m {
                out[j * m + k] = scale * y[j] * y[k];
            }
        }
    }

    /// `d/dt` of [`fill`](Self::fill): entry `(j,k)` is
    /// `c y_j y_k t^{-1} q^{-a-1} (n_jk q - (d+3) t^2)` with `n_jk` the power of `t` in `t y_j y_k`.
    pub fn fill_dt(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let m = self.d + 1;
        let d = self.d as f64;
        let q = norm2(&x[..self.d]) + t * t;
        let base = self.c() * q.powf(-(d + 3.0) / 2.0 - 1.0);
        let y = self.lifted(x, t);
        for j in 0..m {
            for k in 0..m {
                let tpow = 1 + (j == self.d) as i32 + (k == self.d) as i32;
                let mut xy = 1.0;
                if j < self.d {
                    xy *= y[j];
                }
                if k < self.d {
                    xy *= y[k];
                }
                let tp = t.powi(tpow - 1);
                out[j * m + k] = base * xy * tp * (tpow as f64 * q - (d + 3.0) * t * t);
            }
        }
    }

    pub fn kernel(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        check_t(t)?;
        let m = self.d + 1;
        let mut out = vec![0.0; m * m];
        self.fill(x, t, &mut out);
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    pub fn dt_kernel(&self, x: &[f64], t: f64) -> Result<DMatrix<f64>> {
        check_t(t)?;
        let m = self.d + 1;
        let mut out = vec![0.0; m * m];
        self.fill_dt(x, t, &mut out);
        Ok(DMatrix::from_row_slice(m, m, &out))
    }

    /// `Pbar(x,t)` with `P_t(x) (z,0) = Pbar(x,t) (z.x/|x|)` for `x != 0`.
    pub fn directional_factor(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        check_t(t)?;
        let r2 = norm2(&x[..self.d]);
        if r2 == 0.0 {
            return param("directional factor needs x != 0");
        }
        let r = r2.sqrt();
        let scale = self.c() * t * r * (r2 + t * t).powf(-(self.d as f64 + 3.0) / 2.0);
        Ok(self.lifted(x, t)[..=self.d].iter().map(|v| scale * v).collect())
    }

    /// Smallest `c` with `|dt P^{jk}_t(x)| <= c min(|x|^{-d-1}, t^{-d-1})` for all entries.
    ///
    /// By scaling the ratio depends only on `y = x/t`; the entry maxima sit on
    /// coordinate axes (diagonal entries) or on the diagonal of a coordinate
    /// plane (off-diagonal entries), so a radial scan along those suffices.
    pub fn dt_bound_constant(&self) -> f64 {
        let m = self.d + 1;
        let mut out = vec![0.0; m * m];
        let mut best = 0.0f64;
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..=4000 {
            let r = 10f64.powf(-3.0 + 6.0 * i as f64 / 4000.0);
            for dir in [[1.0, 0.0, 0.0], [inv, inv, 0.0]] {
                let x: Vec<f64> = dir[..self.d].iter().map(|v| v * r).collect();
                self.fill_dt(&x, 1.0, &mut out);
                let e = out.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                best = best.max(e * r.max(1.0).powi(self.d as i32 + 1));
            }
        }
        best
    }
}

pub fn poisson_type_kernel(x: &[f64], t: f64) -> Result<DMatrix<f64>> {
    PoissonTypeKernelEval::new(x.len())?.kernel(x, t)
}

pub fn dt_poisson_type_kernel(x: &[f64], t: f64) -> Result<DMatrix<f64>> {
    PoissonTypeKernelEval::new(x.len())?.dt_kernel(x, t)
}

/// `e^{-2 pi |xi| t}`.
pub fn poisson_symbol(xi: &[f64], t: f64) -> f64 {
    (-2.0 * PI * norm2(xi).sqrt() * t).exp()
}

/// Exact Fourier symbol of `P_t` at one frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub xi: Vec<f64>,
    pub t: f64,
    pub value: DMatrix<Complex64>,
}

/// `M(xi) = [[-e e^T, -i e], [-i e^T, 1]]` with `e = xi/|xi|`; zero at `xi = 0`.
pub fn nilpotent_part(xi: &[f64]) -> DMatrix<Complex64> {
    let d = xi.len();
    let r = norm2(xi).sqrt();
    let mut m = DMatrix::zeros(d + 1, d + 1);
    if r == 0.0 {
        return m;
    }
    let e: Vec<f64> = xi.iter().map(|v| v / r).collect();
    for j in 0..d {
        for k in 0..d {
            m[(j, k)] = Complex64::new(-e[j] * e[k], 0.0);
        }
        m[(j, d)] = Complex64::new(0.0, -e[j]);
        m[(d, j)] = Complex64::new(0.0, -e[j]);
    }
    m[(d, d)] = Complex64::new(1.0, 0.0);
    m
}

/// `e^{-2 pi |xi| t} (I + 2 pi |xi| t M(xi))`; equals `I` at `xi = 0`.
pub fn poisson_type_symbol(xi: &[f64], t: f64) -> Result<SymbolMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return param(format!("t={t} must be non-negative"));
    }
    let d = xi.len();
    let a = 2.0 * PI * norm2(xi).sqrt() * t;
    let value = (DMatrix::identity(d + 1, d + 1) + nilpotent_part(xi) * Complex64::new(a, 0.0))
        * Complex64::new((-a).exp(), 0.0);
    Ok(SymbolMatrix { xi: xi.to_vec(), t, value })
}

/// `d/dt` of [`poisson_type_symbol`]: `w e^{-wt} (M - I - w t M)`, `w = 2 pi |xi|`.
pub fn dt_poisson_type_symbol(xi: &[f64], t: f64) -> Result<DMatrix<Complex64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return param(format!("t={t} must be non-negative"));
    }
    let d = xi.len();
    let w = 2.0 * PI * norm2(xi).sqrt();
    let m = nilpotent_part(xi);
    let id = DMatrix::<Complex64>::identity(d + 1, d + 1);
    Ok((m.clone() - id - m * Complex64::new(w * t, 0.0)) * Complex64::new(w * (-w * t).exp(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_values() {
        assert!((omega(1) - 2.0 * PI).abs() < 1e-14);
        assert!((omega(2) - 4.0 * PI).abs() < 1e-13);
        assert!((omega(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn poisson_at_origin() {
        let v = poisson_kernel(&[0.0, 0.0], 1.0).unwrap();
        assert!((v - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(poisson_kernel(&[0.0], 0.0).is_err());
        assert_eq!(poisson_kernel(&[0.3, -1.2], 0.7).unwrap(), poisson_kernel(&[-0.3, 1.2], 0.7).unwrap());
    }

    #[test]
    fn poisson_type_at_origin() {
        let k = poisson_type_kernel(&[0.0, 0.0], 1.0).unwrap();
        for j in 0..3 {
            for l in 0..3 {
                let want = if (j, l) == (2, 2) { 3.0 / (2.0 * PI) } else { 0.0 };
                assert!((k[(j, l)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_d_nilpotent_example() {
        let m = nilpotent_part(&[1.0]);
        let i = Complex64::i();
        assert_eq!(m[(0, 0)], Complex64::new(-1.0, 0.0));
        assert_eq!(m[(0, 1)], -i);
        assert_eq!(m[(1, 0)], -i);
        assert_eq!(m[(1, 1)], Complex64::new(1.0, 0.0));
        assert!((&m * &m).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn symbol_at_zero_time_is_identity() {
        let s = poisson_type_symbol(&[0.4, -2.0], 0.0).unwrap();
        assert_eq!(s.value, DMatrix::identity(3, 3));
        let s = poisson_type_symbol(&[0.0, 0.0], 3.0).unwrap();
        assert_eq!(s.value, DMatrix::identity(3, 3));
    }

    #[test]
    fn dt_bound_constant_is_finite() {
        let e = PoissonTypeKernelEval::new(2).unwrap();
        let c = e.dt_bound_constant();
        assert!(c.is_finite() && c > 0.0);
        let dk = e.dt_kernel(&[2.0, 0.0], 1.0).unwrap();
        assert!(dk.iter().all(|v| v.abs() <= c * 2f64.powi(-3) * (1.0 + 1e-9)));
    }
}
