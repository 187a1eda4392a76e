//! Numerical checks of the kernel identities and inequalities, with constant
//! estimates and CSV evidence.

mod campaign;
mod commutator;
mod identities;
mod kernel_checks;
mod korn;
mod quasi_local;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::Family;

pub use campaign::{render_svg, run_campaign, summary_text, write_csv, CampaignConfig, CampaignEntry};
pub use commutator::{commutator_probes, commutator_study, estimate_commutator, CommutatorRow, CommutatorStudy};
pub use identities::{
    check_derivative_comparison, check_norm_comparability, check_riesz_identities, check_riesz_bound,
};
pub use kernel_checks::{
    check_kernel_normalization, check_semigroup_nilpotency, check_symbol_match, periodized_poisson_type,
};
pub use korn::{
    check_korn_chain, check_null_space, check_poincare_korn, check_poisson_char, check_sobolev_embedding,
    chain_quantities, ChainRow,
};
pub use quasi_local::{check_quasi_locality, quasi_local_sides, singular_integral_constant, Ball, QuasiLocalSides};

/// Every check the campaign knows about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    KernelNormalization,
    SymbolMatch,
    SemigroupNilpotency,
    RieszIdentities,
    RieszBound,
    NormComparability,
    DerivativeComparison,
    KornChain,
    NullSpace,
    PoissonChar,
    PoincareKorn,
    SobolevEmbedding,
    QuasiLocality,
    Commutator,
}

impl CheckId {
    pub const ALL: [CheckId; 14] = [
        CheckId::KernelNormalization,
        CheckId::SymbolMatch,
        CheckId::SemigroupNilpotency,
        CheckId::RieszIdentities,
        CheckId::RieszBound,
        CheckId::NormComparability,
        CheckId::DerivativeComparison,
        CheckId::KornChain,
        CheckId::NullSpace,
        CheckId::PoissonChar,
        CheckId::PoincareKorn,
        CheckId::SobolevEmbedding,
        CheckId::QuasiLocality,
        CheckId::Commutator,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckId::KernelNormalization => "kernel_normalization",
            CheckId::SymbolMatch => "symbol_match",
            CheckId::SemigroupNilpotency => "semigroup_nilpotency",
            CheckId::RieszIdentities => "riesz_identities",
            CheckId::RieszBound => "riesz_bound",
            CheckId::NormComparability => "norm_comparability",
            CheckId::DerivativeComparison => "derivative_comparison",
            CheckId::KornChain => "korn_chain",
            CheckId::NullSpace => "null_space",
            CheckId::PoissonChar => "poisson_char",
            CheckId::PoincareKorn => "poincare_korn",
            CheckId::SobolevEmbedding => "sobolev_embedding",
            CheckId::QuasiLocality => "quasi_locality",
            CheckId::Commutator => "commutator",
        }
    }

    /// Runs the check under `settings`, timing it.
    pub fn run(&self, settings: &CheckSettings) -> Result<CheckReport> {
        let start = Instant::now();
        let mut report = match self {
            CheckId::KernelNormalization => check_kernel_normalization(settings),
            CheckId::SymbolMatch => check_symbol_match(settings),
            CheckId::SemigroupNilpotency => check_semigroup_nilpotency(settings),
            CheckId::RieszIdentities => check_riesz_identities(settings),
            CheckId::RieszBound => check_riesz_bound(settings),
            CheckId::NormComparability => check_norm_comparability(settings),
            CheckId::DerivativeComparison => check_derivative_comparison(settings),
            CheckId::KornChain => check_korn_chain(settings),
            CheckId::NullSpace => check_null_space(settings),
            CheckId::PoissonChar => check_poisson_char(settings),
            CheckId::PoincareKorn => check_poincare_korn(settings),
            CheckId::SobolevEmbedding => check_sobolev_embedding(settings),
            CheckId::QuasiLocality => check_quasi_locality(settings),
            CheckId::Commutator => estimate_commutator(settings),
        }?;
        report.runtime_ms = if settings.timing { start.elapsed().as_millis() as u64 } else { 0 };
        Ok(report)
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        CheckId::ALL.iter().copied().find(|c| c.as_str() == key).ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

impl std::fmt::Display for CheckId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inputs shared by all checks; each check reads the fields it needs and
/// ignores the rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckSettings {
    pub seed: u64,
    pub d: usize,
    /// Finest points per axis; checks with a resolution sweep also use `n/2`.
    pub n: usize,
    pub l: f64,
    pub s: f64,
    pub p: f64,
    pub eps: Vec<f64>,
    pub n_fields: usize,
    /// Kernel time for the kernel checks.
    pub t: f64,
    /// Test family of the Korn chain.
    pub family: ChainFamily,
    /// Write `runtime_ms`; off for byte-identical reruns.
    pub timing: bool,
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            d: 2,
            n: 128,
            l: 20.0,
            s: 0.5,
            p: 2.0,
            eps: vec![0.01, 0.02, 0.04, 0.08],
            n_fields: 10,
            t: 1.0,
            family: ChainFamily::Compact,
            timing: true,
        }
    }
}

/// Field family driving the Korn chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainFamily {
    /// Bump mixtures, whole space, any `p`.
    #[default]
    Compact,
    /// Random trigonometric polynomials on one period; `p = 2` only.
    Bandlimited,
}

impl FromStr for ChainFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "compact" => Ok(Self::Compact),
            "bandlimited" => Ok(Self::Bandlimited),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: CheckId,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub s: f64,
    pub p: f64,
    pub eps: f64,
    pub family: String,
    pub residual: f64,
    pub threshold: f64,
    pub constants: BTreeMap<String, f64>,
    pub passed: bool,
    pub runtime_ms: u64,
    /// Per-field ratios or residuals, for plots; not written to CSV.
    #[serde(skip)]
    pub samples: Vec<f64>,
    /// Free-form remarks for the summary.
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check_id: CheckId, settings: &CheckSettings, family: impl Into<String>) -> Self {
        Self {
            check_id,
            seed: settings.seed,
            d: settings.d,
            n: settings.n,
            l: settings.l,
            s: settings.s,
            p: settings.p,
            eps: 0.0,
            family: family.into(),
            residual: 0.0,
            threshold: 0.0,
            constants: BTreeMap::new(),
            passed: false,
            runtime_ms: 0,
            samples: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn constant(&mut self, name: &str, value: f64) -> &mut Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    /// Sets residual and threshold; a NaN residual never passes.
    pub fn decide(mut self, residual: f64, threshold: f64) -> Self {
        self.residual = residual;
        self.threshold = threshold;
        self.passed = residual <= threshold;
        self
    }

    pub fn csv_header() -> &'static str {
        "check_id,seed,d,N,L,s,p,eps,residual,threshold,passed,constants_json,runtime_ms"
    }

    pub fn csv_row(&self) -> String {
        let constants: BTreeMap<&str, f64> =
            self.constants.iter().map(|(k, v)| (k.as_str(), if v.is_finite() { *v } else { f64::NAN })).collect();
        let json = serde_json::to_string(&constants).unwrap_or_else(|_| "{}".into());
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{},{},{},{},{},{},{},{:e},{:e},{},\"{}\",{}",
            self.check_id,
            self.seed,
            self.d,
            self.n,
            self.l,
            self.s,
            self.p,
            self.eps,
            self.residual,
            self.threshold,
            self.passed,
            json.replace('"', "\"\""),
            self.runtime_ms
        );
        row
    }
}

/// Member `k` of the compact test family used by the inequality checks:
/// three Gaussian-times-affine bumps near the origin, widths in `[0.6, 0.9]`.
pub fn compact_family(d: usize, seed: u64, k: usize) -> Family {
    let _ = d;
    Family::BumpMixture {
        seed: seed.wrapping_mul(1_000_003).wrapping_add(k as u64),
        count: 3,
        sigma_min: 0.6,
        sigma_max: 0.9,
        center_radius: 1.5,
    }
}

/// `|a/b - 1|`, infinite when either side is not positive and finite.
pub(crate) fn drift(a: f64, b: f64) -> f64 {
    if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
        (a / b - 1.0).abs()
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in CheckId::ALL {
            assert_eq!(id.as_str().parse::<CheckId>().unwrap(), id);
        }
        assert_eq!("korn-chain".parse::<CheckId>().unwrap(), CheckId::KornChain);
        assert!(matches!("nope".parse::<CheckId>(), Err(Error::UnknownCheck(_))));
    }

    #[test]
    fn decide_and_csv() {
        let st = CheckSettings::default();
        let mut r = CheckReport::new(CheckId::NullSpace, &st, "x");
        r.constant("c", 1.5);
        let r = r.decide(0.5, 1.0);
        assert!(r.passed);
        assert!(!r.clone().decide(f64::NAN, 1.0).passed);
        let row = r.csv_row();
        assert_eq!(row.matches(',').count(), CheckReport::csv_header().matches(',').count());
        assert!(row.contains("{\"\"c\"\":1.5}"));
    }

    #[test]
    fn drift_guards() {
        assert!((drift(1.2, 1.0) - 0.2).abs() < 1e-15);
        assert!(drift(0.0, 1.0).is_infinite());
    }
}
