use fractional_korn::fields::{make_grid, sample_family, Family, FracParams, VectorField};
use fractional_korn::seminorms::{seminorm_pair, DomainMask};
use proptest::prelude::*;

fn mixture(seed: u64) -> VectorField {
    let g = make_grid(2, 16.0, 64).unwrap();
    let fam = Family::BumpMixture { seed, count: 3, sigma_min: 0.4, sigma_max: 0.5, center_radius: 0.5 };
    sample_family(&fam, &g).unwrap()
}

/// Rotate the field by 90 degrees: g(x) = Q f(Q^T x).
fn rotated(f: &VectorField) -> VectorField {
    let g = *f.grid();
    let n = g.n();
    let mut comps = vec![vec![0.0; g.len()]; 2];
    for i in 0..g.len() {
        let mi = g.multi_index(i);
        // x = (a, b) -> Q^T x = (b, -a); index k -> N - k mod N
        let src = g.linear_index(&[mi[1], (n - mi[0]) % n]);
        let (u0, u1) = (f.value(src, 0), f.value(src, 1));
        comps[0][i] = -u1;
        comps[1][i] = u0;
    }
    VectorField::new(g, comps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn invariances(seed in 0u64..1000, alpha in -3.0f64..3.0, sx in -2i64..=2, sy in -2i64..=2, p in prop::sample::select(vec![2.0, 3.0])) {
        prop_assume!(alpha.abs() > 0.1);
        let f = mixture(seed);
        let params = FracParams::new(0.5, p, 0.0, 2).unwrap();
        let base = seminorm_pair(&f, &params, &DomainMask::Whole).unwrap();
        prop_assert_eq!(base.violations, 0);
        prop_assert!(base.projected.value <= base.gagliardo.value);

        let scaled = seminorm_pair(&f.scaled(alpha), &params, &DomainMask::Whole).unwrap();
        prop_assert!((scaled.gagliardo.value / base.gagliardo.value - alpha.abs()).abs() < 1e-12 * alpha.abs() * 10.0);
        prop_assert!((scaled.projected.value / base.projected.value - alpha.abs()).abs() < 1e-12 * alpha.abs() * 10.0);

        // shifts by multiples of 4 nodes keep the 4h subsampling aligned
        let moved = f.rolled(&[4 * sx, 4 * sy]);
        prop_assert!(moved.meta().truncation_warning().is_none());
        let shifted = seminorm_pair(&moved, &params, &DomainMask::Whole).unwrap();
        prop_assert!((shifted.gagliardo.value / base.gagliardo.value - 1.0).abs() < 1e-12);
        prop_assert!((shifted.projected.value / base.projected.value - 1.0).abs() < 1e-12);

        let rot = seminorm_pair(&rotated(&f), &params, &DomainMask::Whole).unwrap();
        prop_assert!((rot.gagliardo.value / base.gagliardo.value - 1.0).abs() < 1e-12);
        prop_assert!((rot.projected.value / base.projected.value - 1.0).abs() < 1e-12);
    }
}
