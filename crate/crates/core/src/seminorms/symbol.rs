//! Closed forms for `p = 2`: the semi-norms are Fourier multipliers.
//!
//! For `w = 2 pi xi`,
//! `int |a.e_z|^2 |e^{i w.z}-1|^2 |z|^{-d-2s} dz = B_s |w|^{2s} a* (M_perp I + (M_par - M_perp) e_w e_w^T) a`
//! with `B_s = 2 int_0^inf (1 - cos r) r^{-1-2s} dr` and the sphere moments
//! `M_par = int |w.o|^{2+2s}`, `M_perp = int (e.o)^2 |w.o|^{2s}` (`e` orthogonal to `w`).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::{to_spectral, VectorField};
use crate::reduce::pairwise_sum;

fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `int_{S^{d-1}} |o_1|^a |o_2|^b do`; for `d = 1` only `b = 0` is meaningful.
pub fn sphere_moment(d: usize, a: f64, b: f64) -> f64 {
    if d == 1 {
        return if b == 0.0 { 2.0 } else { 0.0 };
    }
    2.0 * gamma((a + 1.0) / 2.0) * gamma((b + 1.0) / 2.0) * PI.powf((d as f64 - 2.0) / 2.0)
        / gamma((a + b + d as f64) / 2.0)
}

/// `|S^{d-1}|`.
pub fn sphere_area(d: usize) -> f64 {
    sphere_moment(d, 0.0, 0.0)
}

/// `2 int_0^inf (1 - cos r) r^{-1-2s} dr = pi / (2 s Gamma(2s) sin(pi s))`.
pub fn radial_constant(s: f64) -> f64 {
    PI / (2.0 * s * gamma(2.0 * s) * (PI * s).sin())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct P2Constants {
    pub s: f64,
    pub d: usize,
    pub b_s: f64,
    pub m_par: f64,
    pub m_perp: f64,
}

impl P2Constants {
    pub fn new(s: f64, d: usize) -> Self {
        let m_par = sphere_moment(d, 2.0 + 2.0 * s, 0.0);
        let m_perp = if d == 1 { 0.0 } else { sphere_moment(d, 2.0 * s, 2.0) };
        Self { s, d, b_s: radial_constant(s), m_par, m_perp }
    }

    /// Coefficient of `I` in the projected symbol.
    pub fn l1(&self) -> f64 {
        self.b_s * self.m_perp
    }

    /// Coefficient of `xi xi^T / |xi|^2` in the projected symbol.
    pub fn l2(&self) -> f64 {
        self.b_s * (self.m_par - self.m_perp)
    }

    /// Scalar symbol coefficient of the Gagliardo form.
    pub fn full(&self) -> f64 {
        self.b_s * (self.m_par + (self.d as f64 - 1.0) * self.m_perp)
    }

    /// Range of `[f]_W^2 / [f]_X^2` over all fields: generalized eigenvalues of the two symbols.
    pub fn korn_ratio_bounds(&self) -> (f64, f64) {
        let lo = self.full() / (self.l1() + self.l2());
        let hi = if self.l1() > 0.0 { self.full() / self.l1() } else { lo };
        (lo, hi)
    }
}

/// Spectral `[f]^2` for `p = 2`: the projected form if `projected`, else Gagliardo.
pub fn spectral_seminorm_sq(f: &VectorField, s: f64, projected: bool) -> Result<f64> {
    spectral_pairing(f, f, s, 0.0, projected)
}

/// `<L^{s} u, (-Delta)^{beta} v>` for `p = 2` evaluated on the frequency lattice,
/// `L^s` the projected (or Gagliardo) operator.
pub fn spectral_pairing(u: &VectorField, v: &VectorField, s: f64, beta: f64, projected: bool) -> Result<f64> {
    let g = *u.grid();
    if g != *v.grid() || u.m() != v.m() {
        return Err(Error::Shape("pairing operands differ in shape".into()));
    }
    let d = g.d();
    if projected && u.m() != d {
        return Err(Error::Shape("projected form needs m = d".into()));
    }
    let c = P2Constants::new(s, d);
    let (uh, vh) = (to_spectral(u), to_spectral(v));
    let terms: Vec<f64> = (0..g.len())
        .map(|i| {
            let xi = g.frequency(i);
            let r = xi[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
            if r == 0.0 {
                return 0.0;
            }
            let w = 2.0 * PI * r;
            let mult = w.powf(2.0 * s) * w.powf(2.0 * beta);
            let mut acc = Complex64::default();
            if projected {
                let e: Vec<f64> = xi[..d].iter().map(|x| x / r).collect();
                let mut ue = Complex64::default();
                let mut ve = Complex64::default();
                for j in 0..d {
                    acc += uh.component(j)[i].conj() * vh.component(j)[i] * c.l1();
                    ue += uh.component(j)[i] * e[j];
                    ve += vh.component(j)[i] * e[j];
                }
                acc += ue.conj() * ve * c.l2();
            } else {
                for j in 0..u.m() {
                    acc += uh.component(j)[i].conj() * vh.component(j)[i] * c.full();
                }
            }
            mult * acc.re
        })
        .collect();
    Ok(pairwise_sum(&terms) / g.volume())
}
