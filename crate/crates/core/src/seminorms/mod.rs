//! Gagliardo and projected semi-norms, the Poisson characterization, dual norms.

pub mod dual;
mod pair;
pub mod poisson_char;
pub mod symbol;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::fields::{FracParams, GridSpec, VectorField};
use pair::{masked_levels, periodic_levels, require_projectable, whole_space_levels, Integrand};

pub use dual::{dual_norm_estimate, DualEstimate, ProbeDictionary, ProbeRegion};
pub use pair::{richardson, Extrapolated, LevelSums};
pub use poisson_char::{poisson_char_seminorm, PoissonVariant};
pub use symbol::{radial_constant, spectral_pairing, spectral_seminorm_sq, sphere_area, sphere_moment, P2Constants};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PairSum,
    SpectralTIntegral,
    DualProbe,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::PairSum => "pair_sum",
            Method::SpectralTIntegral => "spectral_t_integral",
            Method::DualProbe => "dual_probe",
        }
    }
}

/// Which pairs enter the double integral.
#[derive(Clone, Debug, PartialEq)]
pub enum DomainMask {
    /// All of `R^d` (compact fields) or one period (periodic fields).
    Whole,
    /// Pairs of grid nodes with `true` entries.
    Nodes(Vec<bool>),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Whole,
    Periodic,
    Masked { nodes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemiNormEstimate {
    pub value: f64,
    pub method: Method,
    pub error_bracket: (f64, f64),
    pub params: FracParams,
    pub domain: Domain,
    /// `(h, raw p-th power sum)` per resolution, finest first.
    pub levels: Vec<(f64, f64)>,
}

impl SemiNormEstimate {
    pub fn zero(method: Method, params: FracParams, domain: Domain) -> Self {
        Self { value: 0.0, method, error_bracket: (0.0, 0.0), params, domain, levels: Vec::new() }
    }

    /// Estimate from an extrapolated `p`-th power.
    pub(crate) fn from_power(
        ex: Extrapolated,
        method: Method,
        params: FracParams,
        domain: Domain,
        levels: Vec<(f64, f64)>,
    ) -> Self {
        let root = |v: f64| v.max(0.0).powf(1.0 / params.p);
        Self {
            value: root(ex.value),
            method,
            error_bracket: (root(ex.value - ex.err), root(ex.value + ex.err)),
            params,
            domain,
            levels,
        }
    }

    pub fn csv_header() -> &'static str {
        "family,seed,d,s,p,method,value,low,high,N,L"
    }

    pub fn csv_row(&self, family: &str, seed: u64, grid: &GridSpec) -> String {
        format!(
            "{},{},{},{},{},{},{:e},{:e},{:e},{},{}",
            family.replace(',', ";"),
            seed,
            self.params.d,
            self.params.s,
            self.params.p,
            self.method.tag(),
            self.value,
            self.error_bracket.0,
            self.error_bracket.1,
            grid.n(),
            grid.l()
        )
    }
}

/// Both semi-norms from one pass, plus the count of pairs with `|D| > |du|`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeminormPair {
    pub gagliardo: SemiNormEstimate,
    pub projected: SemiNormEstimate,
    /// Pairs (finest level) where the projected integrand exceeded the full one.
    pub violations: u64,
}

fn levels_for(f: &VectorField, params: &FracParams, mask: &DomainMask, projected: bool) -> Result<(LevelSums, Domain)> {
    if f.grid().d() != params.d {
        return param(format!("field dimension {} differs from params d={}", f.grid().d(), params.d));
    }
    let it = Integrand::Seminorms { p: params.p, projected };
    match mask {
        DomainMask::Nodes(m) => {
            let count = m.iter().filter(|&&b| b).count();
            Ok((masked_levels(f, f, m, it, params.sp())?, Domain::Masked { nodes: count }))
        }
        DomainMask::Whole if f.meta().periodic => {
            if params.p != 2.0 {
                return param("periodic whole-space semi-norms are only available for p = 2");
            }
            Ok((periodic_levels(f, params.s, projected)?, Domain::Periodic))
        }
        DomainMask::Whole => Ok((whole_space_levels(f, f, it, params.sp())?, Domain::Whole)),
    }
}

fn column(levels: &LevelSums, k: usize) -> (Vec<f64>, Vec<(f64, f64)>) {
    let col: Vec<f64> = levels.sums.iter().map(|s| s[k]).collect();
    let raw = levels.h.iter().copied().zip(col.iter().copied()).collect();
    (col, raw)
}

fn estimate(levels: &LevelSums, k: usize, params: &FracParams, domain: Domain) -> SemiNormEstimate {
    let (col, raw) = column(levels, k);
    SemiNormEstimate::from_power(richardson(&col, params.shell_order()), Method::PairSum, *params, domain, raw)
}

/// `[f]_{W^{s,p}}` by lattice pair sums.
pub fn gagliardo_seminorm(f: &VectorField, params: &FracParams, mask: &DomainMask) -> Result<SemiNormEstimate> {
    let (lv, dom) = levels_for(f, params, mask, false)?;
    Ok(estimate(&lv, 0, params, dom))
}

/// `[f]_{X^s_p}` by lattice pair sums; needs `m = d`.
pub fn projected_seminorm(f: &VectorField, params: &FracParams, mask: &DomainMask) -> Result<SemiNormEstimate> {
    require_projectable(f)?;
    let (lv, dom) = levels_for(f, params, mask, true)?;
    Ok(estimate(&lv, 1, params, dom))
}

/// Both semi-norms sharing the pair loop.
pub fn seminorm_pair(f: &VectorField, params: &FracParams, mask: &DomainMask) -> Result<SeminormPair> {
    require_projectable(f)?;
    let (lv, dom) = levels_for(f, params, mask, true)?;
    Ok(SeminormPair {
        gagliardo: estimate(&lv, 0, params, dom),
        projected: estimate(&lv, 1, params, dom),
        violations: lv.sums.first().map_or(0, |s| s[2] as u64),
    })
}

/// `<L^s_p u, v> = int int |D(u)|^{p-2} D(u) D(v) |x-y|^{-d-sp}` over `R^d x R^d`
/// for compact `u`, `v` (coefficient `A = 1`).
pub fn whole_space_pairing(u: &VectorField, v: &VectorField, s: f64, p: f64) -> Result<Extrapolated> {
    require_projectable(u)?;
    if u.grid() != v.grid() || u.m() != v.m() {
        return Err(crate::Error::Shape("pairing operands differ in shape".into()));
    }
    let lv = whole_space_levels(u, v, Integrand::Pairing { p }, s * p)?;
    let (col, _) = column(&lv, 0);
    Ok(richardson(&col, p * (1.0 - s)))
}

/// Masked variant of [`whole_space_pairing`]: pairs inside the node set only.
pub fn masked_pairing(u: &VectorField, v: &VectorField, mask: &[bool], s: f64, p: f64) -> Result<Extrapolated> {
    require_projectable(u)?;
    let lv = masked_levels(u, v, mask, Integrand::Pairing { p }, s * p)?;
    let (col, _) = column(&lv, 0);
    Ok(richardson(&col, p * (1.0 - s)))
}
