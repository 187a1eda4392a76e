//! Lower bounds for `sup |F(phi)|` over `[phi]_{X^t_p(R^d)} <= 1`.
//!
//! The supremum runs over a fixed seeded dictionary; probe `k` depends only on
//! `(seed, k)`, so a larger budget extends the set and never lowers the bound.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{projected_seminorm, DomainMask};
use crate::error::{param, Result};
use crate::fields::{radial_window, FracParams, GridSpec, VectorField};

/// Ball that contains the support of every probe.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRegion {
    pub center: Vec<f64>,
    pub radius: f64,
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Probe `k` of the dictionary, unnormalized.
///
/// Even `k`: Gaussian times a random quadratic per component.
/// Odd `k`: a few random plane waves under a smooth radial window.
pub fn probe(grid: &GridSpec, region: &ProbeRegion, seed: u64, k: usize) -> Result<VectorField> {
    let d = grid.d();
    if region.center.len() != d || !(region.radius > 0.0) {
        return param("probe region needs a d-dimensional center and positive radius");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let r = region.radius;
    let c0 = &region.center;
    let field = if k % 2 == 0 {
        let sigma = r * (0.12 + 0.18 * rng.gen::<f64>());
        let center: Vec<f64> = loop {
            let off: Vec<f64> = (0..d).map(|_| 0.35 * r * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            if off.iter().map(|v| v * v).sum::<f64>() <= (0.35 * r).powi(2) {
                break off.iter().zip(c0).map(|(a, b)| a + b).collect();
            }
        };
        // per component: a + b.y + y^T C y with y = (x - center)/sigma
        let coef: Vec<f64> = (0..d * (1 + d + d * d)).map(|_| rng.sample(StandardNormal)).collect();
        VectorField::from_fn(*grid, d, |x, o| {
            let y: Vec<f64> = (0..d).map(|a| (x[a] - center[a]) / sigma).collect();
            let g = (-0.5 * y.iter().map(|v| v * v).sum::<f64>()).exp()
                * radial_window(dist(x, c0), 0.8 * r, r);
            for j in 0..d {
                let base = j * (1 + d + d * d);
                let mut v = coef[base];
                for a in 0..d {
                    v += coef[base + 1 + a] * y[a];
                    for b in 0..d {
                        v += 0.5 * coef[base + 1 + d + a * d + b] * y[a] * y[b];
                    }
                }
                o[j] = v * g;
            }
        })?
    } else {
        let modes = 6;
        let waves: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..modes)
            .map(|_| {
                let kv: Vec<f64> = (0..d).map(|_| 3.0 * (2.0 * rng.gen::<f64>() - 1.0) / r).collect();
                let phase = std::f64::consts::TAU * rng.gen::<f64>();
                let amp: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                (kv, phase, amp)
            })
            .collect();
        VectorField::from_fn(*grid, d, |x, o| {
            let w = radial_window(dist(x, c0), 0.3 * r, 0.9 * r);
            if w == 0.0 {
                return;
            }
            for (kv, phase, amp) in &waves {
                let arg: f64 = std::f64::consts::TAU * kv.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phase;
                let c = arg.cos() * w;
                for j in 0..d {
                    o[j] += amp[j] * c;
                }
            }
        })?
    };
    Ok(field.with_meta(format!("probe:{seed}:{k}"), false))
}

/// Probes normalized to unit whole-space projected semi-norm at index `t`.
#[derive(Clone, Debug)]
pub struct ProbeDictionary {
    pub region: ProbeRegion,
    pub index: f64,
    pub p: f64,
    pub seed: u64,
    pub probes: Vec<VectorField>,
    /// Semi-norms of the raw probes.
    pub raw_norms: Vec<f64>,
}

impl ProbeDictionary {
    pub fn build(grid: &GridSpec, region: ProbeRegion, index: f64, p: f64, seed: u64, budget: usize) -> Result<Self> {
        if budget < 32 {
            return param(format!("probe budget {budget} below the minimum of 32"));
        }
        let params = FracParams::new(index, p, 0.0, grid.d())?;
        let mut probes = Vec::with_capacity(budget);
        let mut raw_norms = Vec::with_capacity(budget);
        for k in 0..budget {
            let phi = probe(grid, &region, seed, k)?;
            let n = projected_seminorm(&phi, &params, &DomainMask::Whole)?.value;
            if !(n > 0.0) {
                return Err(crate::Error::Numerical(format!("probe {k} has zero semi-norm")));
            }
            probes.push(phi.scaled(1.0 / n));
            raw_norms.push(n);
        }
        Ok(Self { region, index, p, seed, probes, raw_norms })
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualEstimate {
    pub value: f64,
    /// Index of the maximizing probe.
    pub best: usize,
    pub probes_used: usize,
}

/// `max_k |F(phi_k)|` over the first `budget` dictionary probes.
pub fn dual_norm_estimate(
    functional: impl Fn(&VectorField) -> Result<f64>,
    dict: &ProbeDictionary,
    budget: usize,
) -> Result<DualEstimate> {
    if budget < 32 {
        return param(format!("probe budget {budget} below the minimum of 32"));
    }
    if budget > dict.len() {
        return param(format!("budget {budget} exceeds the dictionary size {}", dict.len()));
    }
    let mut best = DualEstimate { value: 0.0, best: 0, probes_used: budget };
    for (k, phi) in dict.probes[..budget].iter().enumerate() {
        let v = functional(phi)?.abs();
        if v > best.value {
            best.value = v;
            best.best = k;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::make_grid;

    fn dict(budget: usize) -> ProbeDictionary {
        let g = make_grid(2, 8.0, 32).unwrap();
        let region = ProbeRegion { center: vec![0.0, 0.0], radius: 2.0 };
        ProbeDictionary::build(&g, region, 0.4, 2.0, 11, budget).unwrap()
    }

    #[test]
    fn probes_are_prefix_stable_and_compact() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let region = ProbeRegion { center: vec![0.5, 0.0], radius: 2.0 };
        let a = probe(&g, &region, 3, 5).unwrap();
        let b = probe(&g, &region, 3, 5).unwrap();
        assert_eq!(a, b);
        for i in 0..g.len() {
            if dist(&g.point(i)[..2], &region.center) >= 2.0 {
                assert_eq!(a.magnitude(i), 0.0);
            }
        }
    }

    #[test]
    fn zero_functional_and_self_pairing() {
        let d = dict(32);
        assert_eq!(dual_norm_estimate(|_| Ok(0.0), &d, 32).unwrap().value, 0.0);
        let g0 = d.probes[3].clone();
        let hd = g0.grid().cell_volume();
        let pair = |phi: &VectorField| -> Result<f64> {
            Ok(hd * (0..phi.grid().len()).map(|i| (0..2).map(|j| g0.value(i, j) * phi.value(i, j)).sum::<f64>()).sum::<f64>())
        };
        let self_pair = pair(&g0).unwrap();
        assert!(dual_norm_estimate(pair, &d, 32).unwrap().value >= self_pair);
        assert!(dual_norm_estimate(|_| Ok(1.0), &d, 16).is_err());
    }
}
