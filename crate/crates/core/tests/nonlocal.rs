use fractional_korn::fields::FracParams;
use fractional_korn::nonlocal::{
    apply_operator, dense_solve, energy, projected_difference, relative_l2_difference, solve, Coefficient,
    NonlocalProblem, Operator, SolveOptions,
};
use proptest::prelude::*;

fn forcing(x: &[f64], f: &mut [f64]) {
    f[0] = 1.0 + x[1];
    f[1] = 0.5 - x[0] * x[0];
}

fn ball(h: f64, p: f64, coeff: Coefficient) -> NonlocalProblem {
    NonlocalProblem::lattice_ball(h, 1.0, coeff, forcing, FracParams::new(0.5, p, 0.0, 2).unwrap()).unwrap()
}

/// Scattered nodes: a jittered grid, so the pointwise kernel path is used.
fn cloud(p: f64) -> NonlocalProblem {
    let mut nodes = Vec::new();
    let mut collar = Vec::new();
    for a in -4i32..=4 {
        for b in -4i32..=4 {
            let (x, y) = (0.2 * a as f64 + 0.013 * (b * b) as f64, 0.2 * b as f64 - 0.011 * a as f64);
            nodes.push(vec![x, y]);
            collar.push(a.abs() == 4 || b.abs() == 4);
        }
    }
    let n = nodes.len();
    let forcing: Vec<f64> = (0..2 * n).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.3).collect();
    NonlocalProblem::from_cloud(
        nodes,
        vec![0.04; n],
        collar,
        Coefficient::Smooth { alpha1: 1.0, alpha2: 2.5 },
        forcing,
        FracParams::new(0.4, p, 0.0, 2).unwrap(),
    )
    .unwrap()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn load(pb: &NonlocalProblem, v: &[f64]) -> f64 {
    (0..v.len()).map(|k| pb.weights[k / pb.d] * pb.forcing[k] * v[k]).sum()
}

#[test]
fn energy_is_half_the_pairing_minus_load() {
    for pb in [ball(0.2, 2.0, Coefficient::Checkerboard { scale: 0.25, alpha1: 1.0, alpha2: 10.0 }), cloud(2.0)] {
        let u: Vec<f64> = (0..pb.len() * 2).map(|k| ((k * 13 % 17) as f64 - 8.0) / 9.0).collect();
        let lhs = energy(&u, &pb).unwrap();
        let rhs = 0.5 * apply_operator(&u, &u, &pb).unwrap() - load(&pb, &u);
        assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn energy_is_pairing_over_p_for_p3() {
    let pb = cloud(3.0);
    let u: Vec<f64> = (0..pb.len() * 2).map(|k| ((k * 5 % 11) as f64 - 5.0) / 7.0).collect();
    let lhs = energy(&u, &pb).unwrap();
    let rhs = apply_operator(&u, &u, &pb).unwrap() / 3.0 - load(&pb, &u);
    assert!((lhs - rhs).abs() <= 1e-13 * rhs.abs().max(1.0));
}

#[test]
fn swapped_summation_order_agrees() {
    for pb in [ball(0.2, 3.0, Coefficient::Smooth { alpha1: 1.0, alpha2: 2.0 }), cloud(3.0)] {
        let op = Operator::new(&pb).unwrap();
        let n = pb.len();
        let u: Vec<f64> = (0..2 * n).map(|k| ((k * 3 % 7) as f64 - 3.0) / 4.0).collect();
        let v: Vec<f64> = (0..2 * n).map(|k| ((k * 11 % 9) as f64 - 4.0) / 5.0).collect();
        let mut swapped = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let (w, e) = op.pair(i, j);
                let du = (u[2 * i] - u[2 * j]) * e[0] + (u[2 * i + 1] - u[2 * j + 1]) * e[1];
                let dv = (v[2 * i] - v[2 * j]) * e[0] + (v[2 * i + 1] - v[2 * j + 1]) * e[1];
                swapped += w * du.abs() * du * dv;
            }
        }
        let fast = apply_operator(&u, &v, &pb).unwrap();
        assert!(((fast - swapped) / swapped).abs() < 1e-14, "{fast} vs {swapped}");
    }
}

#[test]
fn pair_direction_and_weight_are_symmetric() {
    let pb = ball(0.25, 2.0, Coefficient::Checkerboard { scale: 0.25, alpha1: 1.0, alpha2: 4.0 });
    let op = Operator::new(&pb).unwrap();
    for (i, j) in [(0, 5), (3, 17), (10, 11)] {
        let (wij, eij) = op.pair(i, j);
        let (wji, eji) = op.pair(j, i);
        assert!((wij - wji).abs() <= 1e-15 * wij);
        for a in 0..2 {
            assert!((eij[a] + eji[a]).abs() < 1e-15);
        }
        let d = projected_difference(&[1.0, 0.0], &[0.0, 0.0], &pb.nodes[i][..2], &pb.nodes[j][..2]).unwrap();
        assert!((d - eij[0]).abs() < 1e-14);
    }
}

#[test]
fn doubling_the_coefficient_scales_the_solution() {
    let coeff = Coefficient::Smooth { alpha1: 1.0, alpha2: 3.0 };
    let pb = ball(0.125, 2.0, coeff.clone());
    let u = dense_solve(&pb).unwrap();
    let u2 = dense_solve(&pb.clone().with_coeff(coeff.scaled(2.0)).unwrap()).unwrap();
    let halved: Vec<f64> = u.iter().map(|v| 0.5 * v).collect();
    assert!(relative_l2_difference(&pb, &u2, &halved) < 1e-10);

    // p = 3: u scales by 2^{-1/(p-1)}
    let pb = ball(0.2, 3.0, coeff.clone());
    let opts = SolveOptions { tol: 1e-12, max_iter: 50_000 };
    let r = solve(&pb, &opts).unwrap();
    let r2 = solve(&pb.clone().with_coeff(coeff.scaled(2.0)).unwrap(), &opts).unwrap();
    assert!(r.converged && r2.converged);
    let scaled: Vec<f64> = r.solution.iter().map(|v| v / 2f64.sqrt()).collect();
    assert!(relative_l2_difference(&pb, &r2.solution, &scaled) < 1e-9);
}

#[test]
fn minimizer_satisfies_the_weak_form() {
    let pb = cloud(3.0);
    let r = solve(&pb, &SolveOptions { tol: 1e-12, max_iter: 50_000 }).unwrap();
    assert!(r.converged && !r.line_search_failed);
    let n = pb.len();
    let scale = load(&pb, &r.solution).abs();
    for seed in 0..4usize {
        let mut v: Vec<f64> = (0..2 * n).map(|k| (((k + seed) * 7919 % 23) as f64 - 11.0) / 11.0).collect();
        for i in (0..n).filter(|&i| pb.collar[i]) {
            v[2 * i] = 0.0;
            v[2 * i + 1] = 0.0;
        }
        let residual = apply_operator(&r.solution, &v, &pb).unwrap() - load(&pb, &v);
        assert!(residual.abs() < 1e-9 * scale.max(1e-12), "{residual:e}");
        assert!(energy(&r.solution, &pb).unwrap() <= energy(&r.solution.iter().zip(&v).map(|(a, b)| a + 1e-3 * b).collect::<Vec<_>>(), &pb).unwrap());
    }
}

#[test]
fn descent_matches_dense_on_scattered_nodes() {
    let pb = cloud(2.0);
    let r = solve(&pb, &SolveOptions { tol: 1e-12, max_iter: 50_000 }).unwrap();
    let u = dense_solve(&pb).unwrap();
    assert!(r.converged);
    assert!(relative_l2_difference(&pb, &r.solution, &u) < 1e-10);
    assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!((r.energy_trace.last().unwrap() - energy(&u, &pb).unwrap()).abs() < 1e-10 * energy(&u, &pb).unwrap().abs());
}

fn nodal(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 2 * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_monotone(u in nodal(81), v in nodal(81), p in prop::sample::select(vec![2.0, 2.5, 3.0, 4.0])) {
        let pb = cloud(p);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let m = apply_operator(&u, &diff, &pb).unwrap() - apply_operator(&v, &diff, &pb).unwrap();
        let scale = apply_operator(&u, &u, &pb).unwrap().abs() + apply_operator(&v, &v, &pb).unwrap().abs();
        prop_assert!(m >= -1e-12 * scale);
    }

    #[test]
    fn linear_case_is_symmetric(u in nodal(81), v in nodal(81)) {
        let pb = cloud(2.0);
        let a = apply_operator(&u, &v, &pb).unwrap();
        let b = apply_operator(&v, &u, &pb).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * (a.abs() + b.abs()).max(1e-300));
    }

    #[test]
    fn rigid_motions_are_invisible(u in nodal(81), c0 in -2.0f64..2.0, c1 in -2.0f64..2.0, w in -2.0f64..2.0, p in prop::sample::select(vec![2.0, 3.0])) {
        let pb = cloud(p).with_forcing(vec![0.0; 162]).unwrap();
        let moved: Vec<f64> = (0..81)
            .flat_map(|i| {
                let x = &pb.nodes[i];
                [u[2 * i] + c0 - w * x[1], u[2 * i + 1] + c1 + w * x[0]]
            })
            .collect();
        let (e0, e1) = (energy(&u, &pb).unwrap(), energy(&moved, &pb).unwrap());
        prop_assert!((e0 - e1).abs() <= 1e-10 * e0.abs().max(1e-12));
        let rigid: Vec<f64> = (0..81).flat_map(|i| [c0 - w * pb.nodes[i][1], c1 + w * pb.nodes[i][0]]).collect();
        prop_assert!(apply_operator(&u, &rigid, &pb).unwrap().abs() <= 1e-10 * dot(&u, &u).max(1.0));
    }

    #[test]
    fn energy_derivative_is_the_pairing(u in nodal(81), v in nodal(81)) {
        // central differences converge at second order to <E'(u), v>
        let pb = cloud(3.0);
        let exact = apply_operator(&u, &v, &pb).unwrap() - load(&pb, &v);
        let fd = |h: f64| {
            let plus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            (energy(&plus, &pb).unwrap() - energy(&minus, &pb).unwrap()) / (2.0 * h)
        };
        let (e1, e2) = ((fd(1e-2) - exact).abs(), (fd(5e-3) - exact).abs());
        prop_assert!(e1 <= 1e-3 * exact.abs().max(1.0));
        prop_assert!(e2 < e1 || e1 < 1e-11 * exact.abs().max(1.0));
        if e1 > 1e-9 * exact.abs().max(1.0) {
            let slope = (e1 / e2).log2();
            prop_assert!((slope - 2.0).abs() < 0.3, "slope {}", slope);
        }
    }
}
