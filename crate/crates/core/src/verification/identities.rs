//! Riesz and `u`/`U` identities, Riesz bounds, derivative comparisons.

use super::{compact_family, drift, CheckId, CheckReport, CheckSettings};
use crate::error::Result;
use crate::fields::{lp_norm, make_grid, sample_family, Family, GridSpec, VectorField};
use crate::spectral_ops::{
    divergence, geometric_levels, poisson_extend, poisson_type_extend, riesz_transform, spatial_derivative,
};

fn l2_rel(a: &VectorField, b: &VectorField) -> Result<f64> {
    let diff = lp_norm(&a.sub(b)?, 2.0);
    let scale = lp_norm(a, 2.0).max(lp_norm(b, 2.0));
    Ok(if scale == 0.0 { diff } else { diff / scale })
}

fn identity_levels(grid: &GridSpec) -> Vec<f64> {
    geometric_levels(2.0 * grid.h(), grid.l() / 8.0, 5)
}

/// Residuals of the five identities at one field, max over levels:
/// `[d_t u = -sum R_j d_j u, d_j u = R_j d_t u, (3.6), (3.7), (3.8)]`.
fn identity_residuals(f: &VectorField, t_levels: &[f64]) -> Result<[f64; 5]> {
    let d = f.grid().d();
    let ext = poisson_extend(f, t_levels)?;
    let big = poisson_type_extend(&f.augmented()?, t_levels)?;
    let mut out = [0.0f64; 5];
    for k in 0..t_levels.len() {
        let (u, du) = (&ext.u_levels[k], &ext.dt_levels[k]);
        let (uu, duu) = (&big.u_levels[k], &big.dt_levels[k]);
        let last = uu.select(d..d + 1);
        let dlast = duu.select(d..d + 1);

        let mut rhs = VectorField::zeros(*f.grid(), d);
        for j in 0..d {
            let dj = spatial_derivative(u, j)?;
            rhs = rhs.sub(&riesz_transform(&dj, j)?)?;
            out[1] = out[1].max(l2_rel(&dj, &riesz_transform(du, j)?)?);
        }
        out[0] = out[0].max(l2_rel(du, &rhs)?);

        // U_j = u_j + R_j U_{d+1}
        let comps: Vec<Vec<f64>> = (0..d)
            .map(|j| riesz_transform(&last, j).map(|r| r.component(0).to_vec()))
            .collect::<Result<_>>()?;
        let r_last = VectorField::new(*f.grid(), comps)?;
        out[2] = out[2].max(l2_rel(&uu.select(0..d), &u.add(&r_last)?)?);

        // d_t U_{d+1} = -div u - sum_j R_j d_j U_{d+1}
        let mut rhs = divergence(u)?.scaled(-1.0);
        for j in 0..d {
            rhs = rhs.sub(&riesz_transform(&spatial_derivative(&last, j)?, j)?)?;
        }
        out[3] = out[3].max(l2_rel(&dlast, &rhs)?);

        // d_j U_{d+1} = R_j (d_t U_{d+1} + sum_l R_l d_t u_l)
        let mut inner = dlast.clone();
        for l in 0..d {
            inner = inner.add(&riesz_transform(&du.select(l..l + 1), l)?)?;
        }
        for j in 0..d {
            out[4] = out[4].max(l2_rel(&spatial_derivative(&last, j)?, &riesz_transform(&inner, j)?)?);
        }
    }
    Ok(out)
}

/// Riesz/derivative exchange and the `u`/`U` relations on seeded band-limited fields.
pub fn check_riesz_identities(st: &CheckSettings) -> Result<CheckReport> {
    let grid = make_grid(st.d, st.l, st.n)?;
    let levels = identity_levels(&grid);
    let mut worst = [0.0f64; 5];
    let mut samples = Vec::new();
    for k in 0..st.n_fields {
        let f = sample_family(&Family::BandlimitedRandom { seed: st.seed + k as u64, kmax: 6 }, &grid)?;
        let r = identity_residuals(&f, &levels)?;
        for i in 0..5 {
            worst[i] = worst[i].max(r[i]);
        }
        samples.push(r.iter().copied().fold(0.0, f64::max));
    }
    let mut rep = CheckReport::new(CheckId::RieszIdentities, st, "bandlimited_random(kmax=6)");
    for (name, v) in ["dt_u_riesz", "dx_u_riesz", "u_U_components", "dt_U_last", "dx_U_last"].iter().zip(worst) {
        rep.constant(name, v);
    }
    rep.samples = samples;
    Ok(rep.decide(worst.iter().copied().fold(0.0, f64::max), 1e-10))
}

/// Compact fields at `N/2` and `N`.
fn two_resolutions(st: &CheckSettings) -> Result<[GridSpec; 2]> {
    Ok([make_grid(st.d, st.l, st.n / 2)?, make_grid(st.d, st.l, st.n)?])
}

fn comparison_levels(grid: &GridSpec) -> Vec<f64> {
    geometric_levels(0.1, grid.l() / 4.0, 12)
}

/// `max_j ||R_j f||_p / ||f||_p` over the compact family, stable across resolutions.
pub fn check_riesz_bound(st: &CheckSettings) -> Result<CheckReport> {
    let mut est = [0.0f64; 2];
    let mut samples = Vec::new();
    for (r, grid) in two_resolutions(st)?.iter().enumerate() {
        for k in 0..st.n_fields {
            let f = sample_family(&compact_family(st.d, st.seed, k), grid)?;
            let nf = lp_norm(&f, st.p);
            for j in 0..st.d {
                let ratio = lp_norm(&riesz_transform(&f, j)?, st.p) / nf;
                est[r] = est[r].max(ratio);
                if r == 1 {
                    samples.push(ratio);
                }
            }
        }
    }
    let mut rep = CheckReport::new(CheckId::RieszBound, st, "bump_mixture");
    rep.constant("C_p_coarse", est[0]).constant("C_p", est[1]);
    rep.samples = samples;
    Ok(rep.decide(drift(est[1], est[0]), 0.25))
}

/// `||d_t u||_p / sum_j ||d_j u||_p` stays in a bracket `[c, C]` across resolutions.
pub fn check_norm_comparability(st: &CheckSettings) -> Result<CheckReport> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [0.0f64; 2];
    let mut samples = Vec::new();
    for (r, grid) in two_resolutions(st)?.iter().enumerate() {
        let levels = comparison_levels(grid);
        for k in 0..st.n_fields {
            let f = sample_family(&compact_family(st.d, st.seed, k), grid)?;
            let ext = poisson_extend(&f, &levels)?;
            for (u, du) in ext.u_levels.iter().zip(&ext.dt_levels) {
                let mut sx = 0.0;
                for j in 0..st.d {
                    sx += lp_norm(&spatial_derivative(u, j)?, st.p);
                }
                let ratio = lp_norm(du, st.p) / sx;
                lo[r] = lo[r].min(ratio);
                hi[r] = hi[r].max(ratio);
                if r == 1 {
                    samples.push(ratio);
                }
            }
        }
    }
    let mut rep = CheckReport::new(CheckId::NormComparability, st, "bump_mixture");
    rep.constant("c", lo[1]).constant("C", hi[1]).constant("c_coarse", lo[0]).constant("C_coarse", hi[0]);
    rep.samples = samples;
    Ok(rep.decide(drift(lo[1], lo[0]).max(drift(hi[1], hi[0])), 0.25))
}

/// `||d_t u||_p <= C ||d_t U||_p` and `||d_k u||_p <= C ||d_k U||_p` per level;
/// the estimated constants must drift less than 25% from `N/2` to `N`.
pub fn check_derivative_comparison(st: &CheckSettings) -> Result<CheckReport> {
    let mut ct = [0.0f64; 2];
    let mut cx = [0.0f64; 2];
    let mut samples = Vec::new();
    for (r, grid) in two_resolutions(st)?.iter().enumerate() {
        let levels = comparison_levels(grid);
        for k in 0..st.n_fields {
            let f = sample_family(&compact_family(st.d, st.seed, k), grid)?;
            let ext = poisson_extend(&f, &levels)?;
            let big = poisson_type_extend(&f.augmented()?, &levels)?;
            for i in 0..levels.len() {
                let ratio = lp_norm(&ext.dt_levels[i], st.p) / lp_norm(&big.dt_levels[i], st.p);
                ct[r] = ct[r].max(ratio);
                if r == 1 {
                    samples.push(ratio);
                }
                for j in 0..st.d {
                    let a = lp_norm(&spatial_derivative(&ext.u_levels[i], j)?, st.p);
                    let b = lp_norm(&spatial_derivative(&big.u_levels[i], j)?, st.p);
                    cx[r] = cx[r].max(a / b);
                }
            }
        }
    }
    let mut rep = CheckReport::new(CheckId::DerivativeComparison, st, "bump_mixture");
    rep.constant("C_t", ct[1]).constant("C_t_coarse", ct[0]).constant("C_x", cx[1]).constant("C_x_coarse", cx[0]);
    rep.samples = samples;
    Ok(rep.decide(drift(ct[1], ct[0]).max(drift(cx[1], cx[0])), 0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_on_a_small_grid() {
        let st = CheckSettings { n: 32, l: 8.0, n_fields: 2, ..CheckSettings::default() };
        let r = check_riesz_identities(&st).unwrap();
        assert!(r.passed, "{:?}", r.constants);
    }

    #[test]
    fn riesz_is_an_l2_contraction() {
        let st = CheckSettings { n: 64, n_fields: 3, ..CheckSettings::default() };
        let r = check_riesz_bound(&st).unwrap();
        assert!(r.constants["C_p"] <= 1.0 + 1e-12);
    }
}
