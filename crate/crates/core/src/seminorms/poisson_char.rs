//! `int_0^inf t^{p(1-s)} ||d_t u(.,t)||_p^p dt/t` over a geometric `t` grid.

use serde::{Deserialize, Serialize};

use super::{Domain, Extrapolated, Method, SemiNormEstimate};
use crate::error::{param, Error, Result};
use crate::fields::{lp_norm, to_spatial, to_spectral, FracParams, VectorField};
use crate::spectral_ops::{poisson_level, poisson_type_level};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonVariant {
    /// `u = p_t * f`, componentwise.
    ScalarPoisson,
    /// `U = P_t * (f, 0)`.
    MatrixPoisson,
}

/// Samples `g(t) = t^{p(1-s)} ||d_t u(.,t)||_p^p` at each level.
pub fn integrand_samples(f: &VectorField, params: &FracParams, t_levels: &[f64], variant: PoissonVariant) -> Result<Vec<f64>> {
    let base = match variant {
        PoissonVariant::ScalarPoisson => f.clone(),
        PoissonVariant::MatrixPoisson => f.augmented()?,
    };
    let fh = to_spectral(&base);
    let p = params.p;
    t_levels
        .iter()
        .map(|&t| {
            let (_, du) = match variant {
                PoissonVariant::ScalarPoisson => poisson_level(&fh, t)?,
                PoissonVariant::MatrixPoisson => poisson_type_level(&fh, t)?,
            };
            let du = to_spatial(&du)?;
            Ok(t.powf(p * (1.0 - params.s)) * lp_norm(&du, p).powf(p))
        })
        .collect()
}

fn log_trapezoid(t: &[f64], g: &[f64]) -> f64 {
    t.windows(2).zip(g.windows(2)).map(|(tw, gw)| 0.5 * (gw[0] + gw[1]) * (tw[1] / tw[0]).ln()).sum()
}

/// `p`-th power of the characterization integral with head and tail corrections.
///
/// Head: `||d_t u||_p` is bounded as `t -> 0`, so `g ~ t^{p(1-s)}` below `t_1`.
/// Tail: power law `g ~ t^{-kappa}` fitted on the last two levels.
pub fn characterization_power(t: &[f64], g: &[f64], params: &FracParams) -> Result<Extrapolated> {
    if t.len() < 3 {
        return param("need at least three t-levels");
    }
    if t[0] <= 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
        return param("t_levels must be positive and increasing");
    }
    let body = log_trapezoid(t, g);
    if body == 0.0 {
        return Ok(Extrapolated { value: 0.0, err: 0.0 });
    }
    let head = g[0] / params.shell_order();
    let k = t.len() - 1;
    let tail = if g[k] == 0.0 {
        0.0
    } else {
        let kappa = -(g[k] / g[k - 1]).ln() / (t[k] / t[k - 1]).ln();
        if !(kappa > 0.0) {
            return Err(Error::Truncation(g[k] / g[k - 1]));
        }
        g[k] / kappa
    };
    // same rule on every other level
    let (te, ge): (Vec<f64>, Vec<f64>) = t.iter().zip(g).step_by(2).map(|(a, b)| (*a, *b)).unzip();
    let mut coarse = log_trapezoid(&te, &ge);
    if k % 2 == 1 {
        coarse += 0.5 * (g[k - 1] + g[k]) * (t[k] / t[k - 1]).ln();
    }
    let err = head + tail + (body - coarse).abs();
    Ok(Extrapolated { value: body + head + tail, err: err.max(1e-12 * body) })
}

/// `(int_0^inf t^{p(1-s)} ||d_t u||_p^p dt/t)^{1/p}`.
pub fn poisson_char_seminorm(
    f: &VectorField,
    params: &FracParams,
    t_levels: &[f64],
    variant: PoissonVariant,
) -> Result<SemiNormEstimate> {
    if f.max_abs() == 0.0 {
        return Ok(SemiNormEstimate::zero(Method::SpectralTIntegral, *params, Domain::Periodic));
    }
    let g = integrand_samples(f, params, t_levels, variant)?;
    let ex = characterization_power(t_levels, &g, params)?;
    let levels = t_levels.iter().copied().zip(g).collect();
    Ok(SemiNormEstimate::from_power(ex, Method::SpectralTIntegral, *params, Domain::Periodic, levels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_grid, sample_family, Family};
    use crate::spectral_ops::{default_t_levels, geometric_levels};

    #[test]
    fn zero_field() {
        let g = make_grid(2, 8.0, 16).unwrap();
        let p = FracParams::new(0.5, 2.0, 0.0, 2).unwrap();
        let e = poisson_char_seminorm(&VectorField::zeros(g, 2), &p, &default_t_levels(&g), PoissonVariant::ScalarPoisson)
            .unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn power_law_tail_is_integrated() {
        // g = t^a on [0,1], t^{-1} beyond: exact integral 1/a + 1
        let params = FracParams::new(0.5, 2.0, 0.0, 1).unwrap();
        let a = params.shell_order();
        let t = geometric_levels(1e-3, 1e3, 400);
        let g: Vec<f64> = t.iter().map(|&x| if x < 1.0 { x.powf(a) } else { 1.0 / x }).collect();
        let ex = characterization_power(&t, &g, &params).unwrap();
        assert!((ex.value - (1.0 / a + 1.0)).abs() < 1e-3, "{}", ex.value);
    }

    #[test]
    fn growing_integrand_is_flagged() {
        let params = FracParams::new(0.5, 2.0, 0.0, 1).unwrap();
        let t = geometric_levels(0.1, 10.0, 10);
        let g: Vec<f64> = t.to_vec();
        assert!(matches!(characterization_power(&t, &g, &params), Err(Error::Truncation(_))));
    }

    #[test]
    fn homogeneous_in_amplitude() {
        let g = make_grid(2, 16.0, 32).unwrap();
        let f = sample_family(&Family::gaussian(1.0, vec![1.0, -0.5]), &g).unwrap();
        let p = FracParams::new(0.3, 3.0, 0.0, 2).unwrap();
        let t = default_t_levels(&g);
        let a = poisson_char_seminorm(&f, &p, &t, PoissonVariant::MatrixPoisson).unwrap();
        let b = poisson_char_seminorm(&f.scaled(-2.5), &p, &t, PoissonVariant::MatrixPoisson).unwrap();
        assert!((b.value / a.value - 2.5).abs() < 1e-10);
    }
}
