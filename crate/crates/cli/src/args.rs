//! Flags and the TOML config file. Every flag has a config key of the same
//! name; a flag given on the command line wins over the file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use fractional_korn::nonlocal::Scenario;
use fractional_korn::verification::{CampaignConfig, ChainFamily, CheckSettings};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "fkorn", version, about = "Fractional Korn checks and the nonlocal p-Laplacian solver")]
pub struct Cli {
    /// Seed for every random test family.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory; nothing is written outside it [default: fkorn-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write runtime_ms = 0 so reruns produce identical bytes.
    #[arg(long, global = true)]
    pub no_timing: bool,
    /// Skip the SVG plots.
    #[arg(long, global = true)]
    pub no_plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel normalization, symbol match, semigroup and Riesz identities.
    KernelsCheck(CheckArgs),
    /// Riesz identities and bound, norm comparability, derivative comparison.
    IdentitiesCheck(CheckArgs),
    /// Korn chain, null space and Poisson characterization.
    Korn(CheckArgs),
    /// Poincare-Korn inequality on a ball.
    Poincare(CheckArgs),
    /// Sobolev embedding.
    Embed(CheckArgs),
    /// Off-support quasi-locality of the fractional Laplacian.
    Quasilocal(CheckArgs),
    /// Commutator rate in eps.
    Commutator(CheckArgs),
    /// Solve the nonlocal system on a built-in scenario or a node cloud.
    Solve(SolveArgs),
    /// Measure the gain of regularity of solutions.
    Selfimprove(SelfImproveArgs),
    /// Every check, or the `[campaign]` entries of the config file.
    Campaign(CheckArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckArgs {
    /// Dimension.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub d: Option<u64>,
    /// Finest points per axis.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub grid_n: Option<usize>,
    /// Box side length.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub box_l: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of test fields.
    #[arg(long = "n")]
    #[serde(rename = "n")]
    pub fields: Option<usize>,
    /// Kernel time.
    #[arg(long)]
    pub t: Option<f64>,
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Korn chain family: compact or bandlimited.
    #[arg(long)]
    pub family: Option<ChainFamily>,
}

impl CheckArgs {
    pub fn or(self, base: Self) -> Self {
        Self {
            d: self.d.or(base.d),
            grid_n: self.grid_n.or(base.grid_n),
            box_l: self.box_l.or(base.box_l),
            s: self.s.or(base.s),
            p: self.p.or(base.p),
            fields: self.fields.or(base.fields),
            t: self.t.or(base.t),
            eps: self.eps.or(base.eps),
            family: self.family.or(base.family),
        }
    }

    /// Overrides the given fields; `N` only when `with_n`.
    pub fn apply(&self, st: &mut CheckSettings, with_n: bool) {
        if let Some(v) = self.d {
            st.d = v as usize;
        }
        if let (Some(v), true) = (self.grid_n, with_n) {
            st.n = v;
        }
        if let Some(v) = self.box_l {
            st.l = v;
        }
        if let Some(v) = self.s {
            st.s = v;
        }
        if let Some(v) = self.p {
            st.p = v;
        }
        if let Some(v) = self.fields {
            st.n_fields = v;
        }
        if let Some(v) = self.t {
            st.t = v;
        }
        if let Some(v) = &self.eps {
            st.eps = v.clone();
        }
        if let Some(v) = self.family {
            st.family = v;
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    /// Built-in problem on the unit ball: constant, smooth or checkerboard.
    #[arg(long, conflicts_with = "problem")]
    pub scenario: Option<Scenario>,
    /// Node cloud CSV with columns x0.., weight, collar and optional f0...
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Coefficient for --problem: constant:V, smooth:A1:A2 or checkerboard:SCALE:A1:A2.
    #[arg(long)]
    pub coeff: Option<String>,
    /// Dimension of the built-in scenario.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub d: Option<u64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Lattice spacing of the built-in scenario.
    #[arg(long)]
    pub h: Option<f64>,
    /// Relative residual target.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Also solve directly (p = 2) and require a mismatch below 1e-6.
    #[arg(long)]
    #[serde(default)]
    pub check_against_dense: bool,
}

impl SolveArgs {
    pub fn or(self, base: Self) -> Self {
        Self {
            scenario: self.scenario.or(base.scenario),
            problem: self.problem.or(base.problem),
            coeff: self.coeff.or(base.coeff),
            d: self.d.or(base.d),
            s: self.s.or(base.s),
            p: self.p.or(base.p),
            h: self.h.or(base.h),
            tol: self.tol.or(base.tol),
            max_iter: self.max_iter.or(base.max_iter),
            check_against_dense: self.check_against_dense || base.check_against_dense,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfImproveArgs {
    /// Comma-separated scenarios [default: smooth,checkerboard].
    #[arg(long, value_delimiter = ',')]
    pub scenario: Option<Vec<Scenario>>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=3))]
    pub d: Option<u64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated eps values [default: 0.01,0.02,0.04].
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Comma-separated grid sizes of the box [default: 64,128].
    #[arg(long = "N", value_delimiter = ',')]
    #[serde(rename = "N")]
    pub grid_n: Option<Vec<usize>>,
    /// Dual-norm probes per eps.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl SelfImproveArgs {
    pub fn or(self, base: Self) -> Self {
        Self {
            scenario: self.scenario.or(base.scenario),
            d: self.d.or(base.d),
            s: self.s.or(base.s),
            p: self.p.or(base.p),
            eps: self.eps.or(base.eps),
            grid_n: self.grid_n.or(base.grid_n),
            budget: self.budget.or(base.budget),
            tol: self.tol.or(base.tol),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub no_timing: bool,
    #[serde(default)]
    pub no_plots: bool,
    /// Defaults for the check subcommands.
    #[serde(default)]
    pub check: CheckArgs,
    #[serde(default)]
    pub solve: SolveArgs,
    #[serde(default)]
    pub selfimprove: SelfImproveArgs,
    pub campaign: Option<CampaignConfig>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn flags_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flag_wins_over_file() {
        let flag = CheckArgs { p: Some(3.0), ..Default::default() };
        let file = CheckArgs { p: Some(2.0), s: Some(0.3), ..Default::default() };
        let m = flag.or(file);
        assert_eq!((m.p, m.s), (Some(3.0), Some(0.3)));
    }

    #[test]
    fn config_keys_mirror_flags() {
        let cfg: ConfigFile = toml::from_str(
            "seed = 4\n[check]\nN = 64\nn = 5\nfamily = \"bandlimited\"\n[solve]\nscenario = \"checkerboard\"\n\
             [[campaign.entries]]\nid = \"null_space\"\n[campaign.entries.settings]\nn = 64\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(4));
        assert_eq!((cfg.check.grid_n, cfg.check.fields), (Some(64), Some(5)));
        assert_eq!(cfg.check.family, Some(ChainFamily::Bandlimited));
        assert_eq!(cfg.solve.scenario, Some(Scenario::Checkerboard));
        assert_eq!(cfg.campaign.unwrap().entries[0].settings.n, 64);
        assert!(toml::from_str::<ConfigFile>("[check]\nbogus = 1\n").is_err());
    }
}
