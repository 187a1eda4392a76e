use std::fmt::{self, Write as _};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use fractional_korn::nonlocal::{
    dense_solve, relative_l2_difference, self_improvement_sweep, solve, write_solution_csv, Coefficient,
    NonlocalProblem, Scenario, SelfImprovementSetup, SelfImprovementStudy, SolveOptions,
};
use fractional_korn::verification::{
    render_svg, run_campaign, summary_text, write_csv, CampaignConfig, CampaignEntry, CheckId, CheckReport,
};
use fractional_korn::Error;

use crate::args::{CheckArgs, Cli, Command, ConfigFile, SelfImproveArgs, SolveArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    /// A computation broke down (counts as a failed check).
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::Truncation(_) | Error::NonFiniteSymbol { .. } => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

struct Ctx {
    seed: u64,
    seed_given: bool,
    timing: bool,
    plots: bool,
    out: PathBuf,
}

impl Ctx {
    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Returns whether everything that ran passed.
pub fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    if let Some(t) = cli.threads.or(file.threads) {
        if t == 0 {
            return usage("--threads must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let seed = cli.seed.or(file.seed);
    let ctx = Ctx {
        seed: seed.unwrap_or(1),
        seed_given: seed.is_some(),
        timing: !(cli.no_timing || file.no_timing),
        plots: !(cli.no_plots || file.no_plots),
        out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("fkorn-out")),
    };
    fs::create_dir_all(&ctx.out).map_err(|e| CliError::Usage(format!("{}: {e}", ctx.out.display())))?;
    use CheckId::*;
    let check = file.check;
    match cli.command {
        Command::KernelsCheck(a) => {
            run_checks(&ctx, "kernels_check", &[KernelNormalization, SymbolMatch, SemigroupNilpotency, RieszIdentities], a.or(check))
        }
        Command::IdentitiesCheck(a) => run_checks(
            &ctx,
            "identities_check",
            &[RieszIdentities, RieszBound, NormComparability, DerivativeComparison],
            a.or(check),
        ),
        Command::Korn(a) => run_checks(&ctx, "korn", &[KornChain, NullSpace, PoissonChar], a.or(check)),
        Command::Poincare(a) => run_checks(&ctx, "poincare", &[PoincareKorn], a.or(check)),
        Command::Embed(a) => run_checks(&ctx, "embed", &[SobolevEmbedding], a.or(check)),
        Command::Quasilocal(a) => run_checks(&ctx, "quasilocal", &[QuasiLocality], a.or(check)),
        Command::Commutator(a) => run_checks(&ctx, "commutator", &[Commutator], a.or(check)),
        Command::Campaign(a) => campaign(&ctx, a.or(check), file.campaign),
        Command::Solve(a) => solve_cmd(&ctx, a.or(file.solve)),
        Command::Selfimprove(a) => selfimprove_cmd(&ctx, a.or(file.selfimprove)),
    }
}

fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn check_dimension(d: Option<u64>) -> Result<usize> {
    match d.unwrap_or(2) {
        d @ 1..=3 => Ok(d as usize),
        d => usage(format!("dimension {d} not in 1..=3")),
    }
}

fn run_checks(ctx: &Ctx, name: &str, ids: &[CheckId], args: CheckArgs) -> Result<bool> {
    let d = check_dimension(args.d)?;
    let base = CampaignConfig::default_campaign(d, 128, ctx.seed, ctx.timing);
    let entries = ids
        .iter()
        .map(|&id| {
            let mut settings = base.entries.iter().find(|e| e.id == id).map(|e| e.settings.clone()).unwrap_or_default();
            args.apply(&mut settings, true);
            CampaignEntry { id, settings }
        })
        .collect();
    let reports = run_campaign(&CampaignConfig { entries })?;
    emit(ctx, name, &reports)
}

fn campaign(ctx: &Ctx, args: CheckArgs, from_file: Option<CampaignConfig>) -> Result<bool> {
    let d = check_dimension(args.d)?;
    let (mut config, explicit) = match from_file {
        Some(c) if !c.entries.is_empty() => (c, true),
        _ => (CampaignConfig::default_campaign(d, args.grid_n.unwrap_or(128), ctx.seed, ctx.timing), false),
    };
    for e in &mut config.entries {
        args.apply(&mut e.settings, explicit);
        if ctx.seed_given {
            e.settings.seed = ctx.seed;
        }
        e.settings.timing &= ctx.timing;
        check_dimension(Some(e.settings.d as u64))?;
    }
    let reports = run_campaign(&config)?;
    emit(ctx, "campaign", &reports)
}

fn emit(ctx: &Ctx, name: &str, reports: &[CheckReport]) -> Result<bool> {
    let mut csv = Vec::new();
    write_csv(reports, &mut csv)?;
    ctx.write(&format!("{name}.csv"), csv)?;
    let summary = summary_text(reports);
    ctx.write(&format!("{name}_summary.txt"), &summary)?;
    print!("{summary}");
    if ctx.plots {
        plot(ctx, reports);
    }
    Ok(reports.iter().all(|r| r.passed))
}

/// Plot failures are reported and otherwise ignored.
fn plot(ctx: &Ctx, reports: &[CheckReport]) {
    let dir = ctx.out.join("plots");
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("fkorn: warning: no plots ({e})");
        return;
    }
    for r in reports {
        if let Err(e) = fs::write(dir.join(format!("{}.svg", r.check_id)), render_svg(r)) {
            eprintln!("fkorn: warning: plot {}: {e}", r.check_id);
        }
    }
}

fn solve_cmd(ctx: &Ctx, a: SolveArgs) -> Result<bool> {
    let s = a.s.unwrap_or(0.5);
    let p = a.p.unwrap_or(2.0);
    let problem = match (&a.problem, a.scenario) {
        (Some(_), Some(_)) => return usage("--problem and --scenario are exclusive"),
        (Some(path), None) => {
            let coeff: Coefficient = a.coeff.as_deref().unwrap_or("constant:1").parse()?;
            let f = fs::File::open(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            NonlocalProblem::read_csv(BufReader::new(f), coeff, s, p)?
        }
        (None, scenario) => {
            if a.coeff.is_some() {
                return usage("--coeff applies to --problem only");
            }
            let d = check_dimension(a.d)?;
            scenario.unwrap_or(Scenario::Smooth).problem(d, a.h.unwrap_or(0.1), 1.0, s, p)?
        }
    };
    let defaults = SolveOptions::default();
    let opts = SolveOptions { tol: a.tol.unwrap_or(defaults.tol), max_iter: a.max_iter.unwrap_or(defaults.max_iter) };
    let report = solve(&problem, &opts)?;
    let mut text = format!("nodes = {}\nfree_nodes = {}\n", problem.len(), problem.free_count());
    text.push_str(&report.to_key_values());
    let mut ok = report.converged && !report.line_search_failed;
    if a.check_against_dense {
        let dense = dense_solve(&problem)?;
        let gap = relative_l2_difference(&problem, &report.solution, &dense);
        let _ = writeln!(text, "dense_relative_l2 = {}", serde_json::json!(gap));
        ok &= gap < 1e-6;
    }
    let _ = writeln!(text, "passed = {ok}");

    let mut sol = Vec::new();
    write_solution_csv(&problem, &report.solution, &mut sol)?;
    ctx.write("solution.csv", sol)?;
    let mut trace = String::from("iteration,energy\n");
    for (k, e) in report.energy_trace.iter().enumerate() {
        let _ = writeln!(trace, "{k},{e:e}");
    }
    ctx.write("energy_trace.csv", trace)?;
    ctx.write("solve_report.txt", &text)?;
    print!("{text}");
    Ok(ok)
}

fn selfimprove_cmd(ctx: &Ctx, a: SelfImproveArgs) -> Result<bool> {
    let scenarios = a.scenario.unwrap_or_else(|| vec![Scenario::Smooth, Scenario::Checkerboard]);
    let eps = a.eps.unwrap_or_else(|| vec![0.01, 0.02, 0.04]);
    let sizes = a.grid_n.unwrap_or_else(|| vec![64, 128]);
    if scenarios.is_empty() || eps.is_empty() || sizes.is_empty() {
        return usage("scenario, eps and N lists must be nonempty");
    }
    let defaults = SelfImprovementSetup::default();
    let mut setup = SelfImprovementSetup {
        d: check_dimension(a.d)?,
        s: a.s.unwrap_or(defaults.s),
        p: a.p.unwrap_or(defaults.p),
        seed: ctx.seed,
        budget: a.budget.unwrap_or(defaults.budget),
        solve: SolveOptions { tol: a.tol.unwrap_or(defaults.solve.tol), ..defaults.solve },
        ..defaults
    };
    let mut csv = format!("{}\n", SelfImprovementStudy::csv_header());
    let mut summary = String::new();
    let mut constants = vec![Vec::new(); scenarios.len()];
    let mut ok = true;
    for &n in &sizes {
        setup.n = n;
        for (k, st) in self_improvement_sweep(&scenarios, &setup, &eps)?.iter().enumerate() {
            for row in st.csv_rows() {
                let _ = writeln!(csv, "{row}");
            }
            let pass = st.spread < 0.25;
            ok &= pass;
            let _ = writeln!(
                summary,
                "{} {} N={n} C={:.6} spread={:.4} iterations={}",
                if pass { "PASS" } else { "FAIL" },
                st.scenario,
                st.constant,
                st.spread,
                st.report.iterations
            );
            constants[k].push((n, st.constant));
        }
    }
    for (scenario, cs) in scenarios.iter().zip(&constants) {
        for w in cs.windows(2) {
            let drift = (w[1].1 / w[0].1 - 1.0).abs();
            let pass = drift < 0.25;
            ok &= pass;
            let _ = writeln!(
                summary,
                "{} {scenario} drift N={}->{}: {drift:.4}",
                if pass { "PASS" } else { "FAIL" },
                w[0].0,
                w[1].0
            );
        }
    }
    ctx.write("selfimprove.csv", csv)?;
    ctx.write("selfimprove_summary.txt", &summary)?;
    print!("{summary}");
    Ok(ok)
}
