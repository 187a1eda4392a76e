use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Smoothness `s`, integrability `p`, regularity gain `eps`, dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub s: f64,
    pub p: f64,
    pub eps: f64,
    pub d: usize,
}

impl FracParams {
    pub fn new(s: f64, p: f64, eps: f64, d: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return param(format!("s={s} not in (0,1)"));
        }
        if !(p > 1.0 && p.is_finite()) {
            return param(format!("p={p} not in (1,inf)"));
        }
        if !(eps >= 0.0 && s + eps < 1.0) {
            return param(format!("eps={eps} must satisfy eps >= 0 and s+eps < 1"));
        }
        if !(1..=3).contains(&d) {
            return param(format!("dimension d={d} not in 1..=3"));
        }
        Ok(Self { s, p, eps, d })
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.s, self.p, eps, self.d)
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        Self::new(s, self.p, self.eps, self.d)
    }

    pub fn sp(&self) -> f64 {
        self.s * self.p
    }

    /// Kernel exponent `d + sp` of `|x-y|^{-(d+sp)}`.
    pub fn kernel_exponent(&self) -> f64 {
        self.d as f64 + self.sp()
    }

    /// Order of the excluded near-diagonal shell for smooth fields.
    pub fn shell_order(&self) -> f64 {
        self.p * (1.0 - self.s)
    }

    /// Dual index `s - eps(p-1)`; must stay positive.
    pub fn dual_index(&self) -> Result<f64> {
        let t = self.s - self.eps * (self.p - 1.0);
        if t > 0.0 {
            Ok(t)
        } else {
            param(format!("s - eps(p-1) = {t} must be positive"))
        }
    }

    pub fn require_solver(&self) -> Result<()> {
        if self.p >= 2.0 {
            Ok(())
        } else {
            param(format!("solver needs p >= 2, got {}", self.p))
        }
    }

    /// Sobolev exponent `dp/(d - sp)`.
    pub fn sobolev_exponent(&self) -> Result<f64> {
        let d = self.d as f64;
        if self.sp() >= d {
            return param(format!("sp={} must be below d={d}", self.sp()));
        }
        Ok(d * self.p / (d - self.sp()))
    }

    /// Default `eps_0` guess, `min(1-s, s/(p-1))/4`.
    pub fn eps0_guess(&self) -> f64 {
        (1.0 - self.s).min(self.s / (self.p - 1.0)) / 4.0
    }
}
