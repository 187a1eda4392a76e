//! Discrete strongly coupled nonlocal p-Laplacian system on a node cloud:
//! assembly, energy minimization, and the measured gain of regularity.

mod operator;
mod problem;
mod selfimprove;
mod solve;

pub use operator::{apply_operator, cell_averaged_kernel, energy, projected_difference, Operator};
pub use problem::{write_solution_csv, Coefficient, Lattice, NonlocalProblem};
pub use selfimprove::{
    dual_dictionaries, embed_nodal, measure_self_improvement, measure_with_dictionaries, self_improvement_study,
    self_improvement_sweep, Cutoff, Scenario, SelfImprovementSetup,
    SelfImprovementStudy,
};
pub use solve::{dense_solve, relative_l2_difference, solve, solve_from, RegularityRow, SolveOptions, SolveReport};
