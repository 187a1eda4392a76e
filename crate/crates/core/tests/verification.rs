use std::f64::consts::PI;

use fractional_korn::verification::{
    quasi_local_sides, run_campaign, singular_integral_constant, write_csv, Ball, CampaignConfig, CampaignEntry,
    ChainFamily, CheckId, CheckReport, CheckSettings,
};
use fractional_korn::Error;

#[test]
fn singular_integral_constants() {
    // classical values for the half Laplacian
    assert!((singular_integral_constant(1, 0.5) - 1.0 / PI).abs() < 1e-14);
    assert!((singular_integral_constant(3, 0.5) - 1.0 / (PI * PI)).abs() < 1e-14);
    // d = 2: 4^s Gamma(1+s) s / (pi Gamma(1-s)) at s = 1/2 is 1/(2 pi)
    assert!((singular_integral_constant(2, 0.5) - 0.5 / PI).abs() < 1e-14);
}

#[test]
fn quasi_locality_bound_holds_for_a_bump() {
    let bump = |x: &[f64]| (-8.0 * x.iter().map(|v| v * v).sum::<f64>()).exp();
    let b1 = Ball { center: vec![0.0, 0.0], radius: 0.5 };
    let mut last = f64::INFINITY;
    for gap in [2.0, 4.0] {
        let b2 = Ball { center: vec![gap + 1.0, 0.0], radius: 0.5 };
        let s = quasi_local_sides(&bump, 0.4, &b1, &b2, 0.05, 2.0, 2.0).unwrap();
        assert!(s.lhs <= s.rhs && s.lhs > 0.0);
        assert!((s.rho - gap).abs() < 1e-12);
        assert!(s.lhs < last);
        last = s.lhs;
    }
    let touching = Ball { center: vec![0.5, 0.0], radius: 0.5 };
    assert!(quasi_local_sides(&bump, 0.4, &b1, &touching, 0.05, 2.0, 2.0).is_err());
}

fn small_campaign() -> CampaignConfig {
    let st = CheckSettings { n: 64, n_fields: 1, timing: false, ..CheckSettings::default() };
    CampaignConfig {
        entries: vec![
            CampaignEntry { id: CheckId::NullSpace, settings: st.clone() },
            CampaignEntry { id: CheckId::SemigroupNilpotency, settings: CheckSettings { seed: 7, ..st } },
        ],
    }
}

#[test]
fn campaign_is_reproducible_and_ordered() {
    let csv = |reports: &[CheckReport]| {
        let mut buf = Vec::new();
        write_csv(reports, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = run_campaign(&small_campaign()).unwrap();
    let b = run_campaign(&small_campaign()).unwrap();
    assert_eq!(csv(&a), csv(&b));
    assert_eq!(a[0].check_id, CheckId::NullSpace);
    assert_eq!(a[1].seed, 7);
    assert!(a.iter().all(|r| r.passed && r.runtime_ms == 0), "{a:?}");
    assert!(csv(&a).lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn bandlimited_korn_chain() {
    let st = CheckSettings { n: 32, l: 8.0, n_fields: 3, family: ChainFamily::Bandlimited, ..CheckSettings::default() };
    let r = CheckId::KornChain.run(&st).unwrap();
    assert_eq!(r.family, "bandlimited_random");
    assert_eq!(r.constants["pair_violations"], 0.0);
    assert!(r.constants["K"] >= 1.0 && r.constants["K"].is_finite());
    let p3 = CheckSettings { p: 3.0, ..st };
    assert!(matches!(CheckId::KornChain.run(&p3), Err(Error::Parameter(_))));
}

#[test]
fn family_names_parse() {
    assert_eq!("bandlimited".parse::<ChainFamily>().unwrap(), ChainFamily::Bandlimited);
    assert!(matches!("wobbly".parse::<ChainFamily>(), Err(Error::UnknownFamily(_))));
}
