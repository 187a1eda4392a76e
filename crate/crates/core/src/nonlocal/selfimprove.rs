//! Measured gain of regularity: `[eta u]_{W^{s+eps,p}}` against
//! `|F|_*^{1/(p-1)} + |u|_{X^s_p(Omega)}` over an `eps` grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::problem::{Coefficient, NonlocalProblem};
use super::solve::{solve, RegularityRow, SolveOptions, SolveReport};
use crate::error::{param, Error, Result};
use crate::fields::{lp_norm, make_grid, radial_window, FracParams, GridSpec, VectorField};
use crate::seminorms::{dual_norm_estimate, gagliardo_seminorm, projected_seminorm, DomainMask, ProbeDictionary, ProbeRegion};

/// `eta = 1` for `|x| <= inner`, `0` for `|x| >= outer`, smooth between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub inner: f64,
    pub outer: f64,
}

impl Cutoff {
    pub fn eval(&self, x: &[f64]) -> f64 {
        radial_window(x.iter().map(|v| v * v).sum::<f64>().sqrt(), self.inner, self.outer)
    }
}

/// Built-in problems on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `A = 1`.
    Constant,
    /// Smooth `A` between 1 and 2.
    Smooth,
    /// Piecewise constant `A` in `{1, 10}` on cells of side 1/4.
    Checkerboard,
}

impl Scenario {
    pub fn coefficient(&self) -> Coefficient {
        match self {
            Scenario::Constant => Coefficient::Constant { value: 1.0 },
            Scenario::Smooth => Coefficient::Smooth { alpha1: 1.0, alpha2: 2.0 },
            Scenario::Checkerboard => Coefficient::Checkerboard { scale: 0.25, alpha1: 1.0, alpha2: 10.0 },
        }
    }

    /// Smooth force density shared by all scenarios.
    pub fn forcing(x: &[f64], f: &mut [f64]) {
        let d = x.len();
        let amp = [1.0, 0.5, 0.25];
        for a in 0..d {
            f[a] = amp[a] * (1.0 + 0.5 * (std::f64::consts::PI * x[(a + 1) % d]).sin());
        }
    }

    /// Lattice ball of `radius` with spacing `h`.
    pub fn problem(&self, d: usize, h: f64, radius: f64, s: f64, p: f64) -> Result<NonlocalProblem> {
        let params = FracParams::new(s, p, 0.0, d)?;
        NonlocalProblem::lattice_ball(h, radius, self.coefficient(), Self::forcing, params)
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Constant => "constant",
            Scenario::Smooth => "smooth",
            Scenario::Checkerboard => "checkerboard",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Scenario::Constant),
            "smooth" => Ok(Scenario::Smooth),
            "checkerboard" => Ok(Scenario::Checkerboard),
            _ => param(format!("unknown scenario `{s}` (constant, smooth, checkerboard)")),
        }
    }
}

/// Where the lattice lives on a centered grid: node `h k` sits at index `k + N/2`.
fn grid_slots(problem: &NonlocalProblem, grid: &GridSpec) -> Result<Vec<usize>> {
    let lat = problem.lattice.as_ref().ok_or_else(|| Error::Parameter("embedding needs a lattice problem".into()))?;
    if grid.d() != problem.d || !grid.centered() || ((lat.h - grid.h()) / grid.h()).abs() > 1e-12 {
        return param(format!("grid (d={}, h={}) does not carry the lattice (d={}, h={})", grid.d(), grid.h(), problem.d, lat.h));
    }
    let half = (grid.n() / 2) as i64;
    lat.coords
        .iter()
        .map(|k| {
            let mut mi = [0usize; 3];
            for a in 0..problem.d {
                let v = k[a] + half;
                // keep one empty layer so the whole-space sums see a compact field
                if v < 1 || v >= grid.n() as i64 - 1 {
                    return param("lattice does not fit inside the grid");
                }
                mi[a] = v as usize;
            }
            Ok(grid.linear_index(&mi[..problem.d]))
        })
        .collect()
}

/// Zero extension of nodal values onto the grid.
pub fn embed_nodal(problem: &NonlocalProblem, u: &[f64], grid: &GridSpec) -> Result<VectorField> {
    let d = problem.d;
    if u.len() != problem.len() * d {
        return Err(Error::Shape(format!("{} values for {} nodes", u.len(), problem.len())));
    }
    let slots = grid_slots(problem, grid)?;
    let mut comps = vec![vec![0.0; grid.len()]; d];
    for (i, &idx) in slots.iter().enumerate() {
        for a in 0..d {
            comps[a][idx] = u[i * d + a];
        }
    }
    Ok(VectorField::new(*grid, comps)?.with_meta("nodal", false))
}

/// Probe dictionaries for the dual norm of `F`, one per `eps`, at index
/// `s - eps(p-1)` and supported in the ball of `probe_radius` about 0.
pub fn dual_dictionaries(
    grid: &GridSpec,
    params: &FracParams,
    eps_grid: &[f64],
    probe_radius: f64,
    seed: u64,
    budget: usize,
) -> Result<Vec<ProbeDictionary>> {
    let region = ProbeRegion { center: vec![0.0; grid.d()], radius: probe_radius };
    eps_grid
        .iter()
        .map(|&e| ProbeDictionary::build(grid, region.clone(), params.with_eps(e)?.dual_index()?, params.p, seed, budget))
        .collect()
}

/// Fills the report's regularity table and returns it.
///
/// Per `eps`: `lhs = [eta u]_{W^{s+eps,p}(R^d)}`, the dual norm of
/// `phi -> sum_i w_i F_i . phi(x_i)` over a probe dictionary at index
/// `s - eps(p-1)` supported in the ball of radius `probe_radius`, and
/// `|u|_{X^s_p(Omega)} = (|u|_p^p + [u]_{X^s_p(Omega)}^p)^{1/p}`.
#[allow(clippy::too_many_arguments)]
pub fn measure_self_improvement(
    report: &mut SolveReport,
    problem: &NonlocalProblem,
    eps_grid: &[f64],
    cutoff: &Cutoff,
    grid: &GridSpec,
    probe_radius: f64,
    seed: u64,
    budget: usize,
) -> Result<Vec<RegularityRow>> {
    check_eps(&problem.params, eps_grid)?;
    let dicts = dual_dictionaries(grid, &problem.params, eps_grid, probe_radius, seed, budget)?;
    measure_with_dictionaries(report, problem, eps_grid, cutoff, grid, &dicts)
}

fn check_eps(base: &FracParams, eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() {
        return param("empty eps grid");
    }
    for &e in eps_grid {
        base.with_eps(e)?.dual_index()?;
    }
    Ok(())
}

/// [`measure_self_improvement`] with prebuilt dictionaries, `dicts[k]` for `eps_grid[k]`.
pub fn measure_with_dictionaries(
    report: &mut SolveReport,
    problem: &NonlocalProblem,
    eps_grid: &[f64],
    cutoff: &Cutoff,
    grid: &GridSpec,
    dicts: &[ProbeDictionary],
) -> Result<Vec<RegularityRow>> {
    let d = problem.d;
    let base = problem.params;
    check_eps(&base, eps_grid)?;
    if dicts.len() != eps_grid.len() {
        return Err(Error::Shape(format!("{} dictionaries for {} eps values", dicts.len(), eps_grid.len())));
    }
    for (dict, &e) in dicts.iter().zip(eps_grid) {
        if (dict.index - base.with_eps(e)?.dual_index()?).abs() > 1e-12 || dict.p != base.p {
            return param(format!("dictionary at index {} does not match eps={e}", dict.index));
        }
    }
    let slots = grid_slots(problem, grid)?;
    let u = embed_nodal(problem, &report.solution, grid)?;
    let eta: Vec<f64> = (0..grid.len()).map(|i| cutoff.eval(&grid.point(i)[..d])).collect();
    let eta_u = VectorField::new(
        *grid,
        (0..d).map(|a| u.component(a).iter().zip(&eta).map(|(x, y)| x * y).collect()).collect(),
    )?
    .with_meta("eta_u", false);
    let mut mask = vec![false; grid.len()];
    for &idx in &slots {
        mask[idx] = true;
    }
    let bracket = projected_seminorm(&u, &base, &DomainMask::Nodes(mask))?.value;
    let lp = lp_norm(&u, base.p);
    let x_norm = (lp.powf(base.p) + bracket.powf(base.p)).powf(1.0 / base.p);
    let functional = |phi: &VectorField| -> Result<f64> {
        let mut acc = 0.0;
        for (i, &idx) in slots.iter().enumerate() {
            for a in 0..d {
                acc += problem.weights[i] * problem.forcing[i * d + a] * phi.value(idx, a);
            }
        }
        Ok(acc)
    };
    let mut rows = Vec::with_capacity(eps_grid.len());
    for (&eps, dict) in eps_grid.iter().zip(dicts) {
        let lifted = FracParams::new(base.s + eps, base.p, 0.0, d)?;
        let lhs = gagliardo_seminorm(&eta_u, &lifted, &DomainMask::Whole)?.value;
        let dual = dual_norm_estimate(functional, dict, dict.len())?.value;
        let rhs = dual.powf(1.0 / (base.p - 1.0)) + x_norm;
        rows.push(RegularityRow { eps, lhs, dual_norm: dual, x_norm, rhs, ratio: lhs / rhs });
    }
    report.dual_data_norm = rows.first().map(|r| r.dual_norm);
    report.seminorm_table = rows.clone();
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelfImprovementSetup {
    pub d: usize,
    pub s: f64,
    pub p: f64,
    /// Box side of the embedding grid; `Omega` is the unit ball.
    pub l_box: f64,
    pub n: usize,
    pub cutoff: Cutoff,
    pub seed: u64,
    pub budget: usize,
    pub solve: SolveOptions,
}

impl Default for SelfImprovementSetup {
    fn default() -> Self {
        Self {
            d: 2,
            s: 0.5,
            p: 2.0,
            l_box: 4.0,
            n: 64,
            cutoff: Cutoff { inner: 0.4, outer: 0.7 },
            seed: 1,
            budget: 32,
            solve: SolveOptions { tol: 1e-8, max_iter: 20_000 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfImprovementStudy {
    pub scenario: Scenario,
    pub setup: SelfImprovementSetup,
    pub report: SolveReport,
    pub rows: Vec<RegularityRow>,
    /// Largest ratio over the eps grid.
    pub constant: f64,
    /// `max/min - 1` of the ratios.
    pub spread: f64,
}

impl SelfImprovementStudy {
    pub fn csv_header() -> &'static str {
        "scenario,d,N,s,p,eps,lhs,dual_norm,x_norm,rhs,ratio,iterations,grad_norm"
    }

    pub fn csv_rows(&self) -> Vec<String> {
        let st = &self.setup;
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{},{:e},{:e},{:e},{:e},{:e},{},{:e}",
                    self.scenario,
                    st.d,
                    st.n,
                    st.s,
                    st.p,
                    r.eps,
                    r.lhs,
                    r.dual_norm,
                    r.x_norm,
                    r.rhs,
                    r.ratio,
                    self.report.iterations,
                    self.report.grad_norm
                )
            })
            .collect()
    }
}

/// Solves the scenario on the unit ball at spacing `l_box / n` and measures the ratios.
pub fn self_improvement_study(scenario: Scenario, setup: &SelfImprovementSetup, eps_grid: &[f64]) -> Result<SelfImprovementStudy> {
    Ok(self_improvement_sweep(&[scenario], setup, eps_grid)?.remove(0))
}

/// Several scenarios sharing one set of dual dictionaries.
pub fn self_improvement_sweep(
    scenarios: &[Scenario],
    setup: &SelfImprovementSetup,
    eps_grid: &[f64],
) -> Result<Vec<SelfImprovementStudy>> {
    if setup.l_box < 2.5 {
        return param("the box must leave room around the unit ball");
    }
    let grid = make_grid(setup.d, setup.l_box, setup.n)?;
    let params = FracParams::new(setup.s, setup.p, 0.0, setup.d)?;
    check_eps(&params, eps_grid)?;
    let dicts = dual_dictionaries(&grid, &params, eps_grid, 1.0, setup.seed, setup.budget)?;
    scenarios
        .iter()
        .map(|&scenario| {
            let problem = scenario.problem(setup.d, grid.h(), 1.0, setup.s, setup.p)?;
            let mut report = solve(&problem, &setup.solve)?;
            if !report.converged {
                return Err(Error::Numerical(format!(
                    "solver stopped at residual {:.3e} after {} iterations",
                    report.grad_norm, report.iterations
                )));
            }
            let rows = measure_with_dictionaries(&mut report, &problem, eps_grid, &setup.cutoff, &grid, &dicts)?;
            let hi = rows.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
            let lo = rows.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
            Ok(SelfImprovementStudy { scenario, setup: *setup, report, rows, constant: hi, spread: hi / lo - 1.0 })
        })
        .collect()
}
