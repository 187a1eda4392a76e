use std::f64::consts::PI;

use fractional_korn::fields::{make_grid, sample_family, to_spectral, Family, VectorField};
use fractional_korn::kernels::{poisson_type_kernel, PoissonTypeKernelEval};
use fractional_korn::spectral_ops::{
    fractional_power, poisson_extend, poisson_type_extend, riesz_transform, spatial_derivative,
};
use proptest::prelude::*;

/// `sum_n p_t(x + nL)` in one dimension, in closed form.
fn periodized_poisson_1d(x: f64, t: f64, l: f64) -> f64 {
    let a = 2.0 * PI * t / l;
    a.sinh() / (l * (a.cosh() - (2.0 * PI * x / l).cos()))
}

#[test]
fn scalar_extension_matches_direct_convolution() {
    let g = make_grid(1, 20.0, 256).unwrap();
    let f = VectorField::from_fn(g, 1, |x, o| o[0] = (-(x[0] - 0.3).powi(2)).exp() * (1.0 + x[0])).unwrap();
    let levels = [0.5, 2.0];
    let ext = poisson_extend(&f, &levels).unwrap();
    for (k, &t) in levels.iter().enumerate() {
        let mut worst = 0.0f64;
        for i in 0..g.len() {
            let xi = g.point(i)[0];
            let direct: f64 = (0..g.len()).map(|j| g.h() * periodized_poisson_1d(xi - g.point(j)[0], t, g.l()) * f.value(j, 0)).sum();
            worst = worst.max((direct - ext.u_levels[k].value(i, 0)).abs());
        }
        assert!(worst < 1e-12, "t={t}: {worst:e}");
    }
}

#[test]
fn matrix_extension_matches_direct_convolution() {
    // zero mean and zero first moment beyond the kept images keep the image tail below 1e-9
    let g = make_grid(1, 20.0, 128).unwrap();
    let f = VectorField::from_fn(g, 1, |x, o| o[0] = x[0] * (-x[0] * x[0]).exp()).unwrap();
    let big = f.augmented().unwrap();
    let t = 0.8;
    let ext = poisson_type_extend(&big, &[t]).unwrap();
    let ev = PoissonTypeKernelEval::new(1).unwrap();
    let mut k = [0.0; 4];
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let xi = g.point(i)[0];
        let mut acc = [0.0; 2];
        for j in 0..g.len() {
            for n in -60i32..=60 {
                ev.fill(&[xi - g.point(j)[0] + n as f64 * g.l()], t, &mut k);
                acc[0] += g.h() * k[0] * f.value(j, 0);
                acc[1] += g.h() * k[2] * f.value(j, 0);
            }
        }
        worst = worst.max((acc[0] - ext.u_levels[0].value(i, 0)).abs()).max((acc[1] - ext.u_levels[0].value(i, 1)).abs());
    }
    assert!(worst < 1e-8, "{worst:e}");
    // the kernel used above is the public one
    assert!((poisson_type_kernel(&[0.3], t).unwrap()[(1, 0)] - {
        ev.fill(&[0.3], t, &mut k);
        k[2]
    })
    .abs()
        < 1e-15);
}

#[test]
fn laplacian_of_gaussian() {
    let g = make_grid(2, 24.0, 128).unwrap();
    let f = VectorField::from_fn(g, 1, |x, o| o[0] = (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp()).unwrap();
    let lap = fractional_power(&f, 1.0).unwrap();
    for i in 0..g.len() {
        let x = g.point(i);
        let r2 = x[0] * x[0] + x[1] * x[1];
        // -Delta exp(-r^2/2) = (2 - r^2) exp(-r^2/2)
        assert!((lap.value(i, 0) - (2.0 - r2) * (-r2 / 2.0).exp()).abs() < 1e-10);
    }
}

#[test]
fn harmonic_extension_solves_laplace() {
    let g = make_grid(2, 16.0, 64).unwrap();
    let f = sample_family(&Family::BandlimitedRandom { seed: 5, kmax: 5 }, &g).unwrap().select(0..1);
    let (t, dt) = (0.4, 1e-3);
    let ext = poisson_extend(&f, &[t - dt, t, t + dt]).unwrap();
    let u = &ext.u_levels[1];
    let uxx = spatial_derivative(&spatial_derivative(u, 0).unwrap(), 0).unwrap();
    let uyy = spatial_derivative(&spatial_derivative(u, 1).unwrap(), 1).unwrap();
    let scale = uxx.max_abs();
    for i in 0..g.len() {
        let utt = (ext.u_levels[2].value(i, 0) - 2.0 * u.value(i, 0) + ext.u_levels[0].value(i, 0)) / (dt * dt);
        assert!((uxx.value(i, 0) + uyy.value(i, 0) + utt).abs() < 1e-5 * scale);
    }
}

fn bandlimited(seed: u64) -> VectorField {
    let g = make_grid(2, 8.0, 32).unwrap();
    sample_family(&Family::BandlimitedRandom { seed, kmax: 4 }, &g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parseval(seed in 0u64..10_000) {
        let f = bandlimited(seed);
        let g = *f.grid();
        let fh = to_spectral(&f);
        for j in 0..f.m() {
            let space: f64 = f.component(j).iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
            let freq: f64 = fh.component(j).iter().map(|c| c.norm_sqr()).sum::<f64>() / g.volume();
            prop_assert!((space - freq).abs() <= 1e-12 * space);
        }
    }

    #[test]
    fn fractional_powers_compose(seed in 0u64..10_000, a in 0.05f64..0.7, b in 0.05f64..0.7) {
        let f = bandlimited(seed);
        let ab = fractional_power(&fractional_power(&f, a).unwrap(), b).unwrap();
        let direct = fractional_power(&f, a + b).unwrap();
        prop_assert!(ab.sub(&direct).unwrap().max_abs() <= 1e-11 * direct.max_abs());
    }

    #[test]
    fn riesz_gradient_identity(seed in 0u64..10_000) {
        // d_j f = -R_j (-Delta)^{1/2} f with the 2 pi convention
        let f = bandlimited(seed);
        let half = fractional_power(&f, 0.5).unwrap();
        for j in 0..2 {
            let lhs = spatial_derivative(&f, j).unwrap();
            let rhs = riesz_transform(&half, j).unwrap().scaled(-1.0);
            prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-11 * lhs.max_abs().max(1e-300));
        }
    }
}
