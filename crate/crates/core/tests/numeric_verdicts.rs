//! Integrator-based verdicts for the built-in models.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use lienard_lab::models::{ModelFamily, ModelOutput};
use lienard_lab::sim::{
    detect_cycle, detect_cycle_robust, integrate, isochronicity_test, measure_period, poincare_crossings,
    CycleConfig, CycleKind, IntegratorConfig, IsoVerdict,
};
use lienard_lab::vecfield::parse_model;

fn model(fam: ModelFamily, params: &[(&str, f64)]) -> ModelOutput {
    let p: BTreeMap<String, f64> = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    fam.build(&p).unwrap()
}

fn fixed(m: &ModelOutput) -> [f64; 2] {
    [m.closed.fixed_point.0, m.closed.fixed_point.1]
}

fn ray_seeds(m: &ModelOutput, amps: &[f64]) -> Vec<[f64; 2]> {
    let d = m.transform.xi_direction();
    let fp = fixed(m);
    amps.iter().map(|a| [fp[0] + a * d[0], fp[1] + a * d[1]]).collect()
}

fn cfg_for(m: &ModelOutput) -> CycleConfig {
    CycleConfig::default().with_direction(m.transform.xi_direction())
}

#[test]
fn brusselator_cycle_reached_from_both_sides() {
    let m = model(ModelFamily::Brusselator, &[]);
    // interior estimate from a first loop at small amplitude
    let probe = detect_cycle(&m.field, fixed(&m), &ray_seeds(&m, &[0.05]), &cfg_for(&m)).unwrap();
    let est = probe.seeds[0].r_star.unwrap();
    let rep = detect_cycle_robust(&m.field, fixed(&m), &ray_seeds(&m, &[0.5 * est, 1.5 * est]), &cfg_for(&m)).unwrap();
    assert_eq!(rep.kind, CycleKind::LimitCycle, "{rep}");
    assert_eq!(rep.tolerance_robust, Some(true));
    let stars: Vec<f64> = rep.seeds.iter().map(|s| s.r_star.unwrap()).collect();
    assert!((stars[0] - stars[1]).abs() / stars[0] <= 2e-3);
}

#[test]
fn brusselator_boundary_is_centre_like() {
    let m = model(ModelFamily::Brusselator, &[("b", 2.25)]);
    let rep = detect_cycle_robust(&m.field, fixed(&m), &ray_seeds(&m, &[0.05, 0.1, 0.2]), &cfg_for(&m)).unwrap();
    assert_eq!(rep.kind, CycleKind::CentreLike, "{rep}");
    assert!((rep.convergence_ratio - 1.0).abs() <= 2e-3);
    let stars: Vec<f64> = rep.seeds.iter().map(|s| s.r_star.unwrap()).collect();
    let spread = (stars.iter().cloned().fold(f64::MIN, f64::max) - stars.iter().cloned().fold(f64::MAX, f64::min)) / stars[0];
    assert!(spread > 2e-3, "{stars:?}");
}

#[test]
fn glycolytic_triptych() {
    let cases = [
        ((0.11, 0.6), CycleKind::LimitCycle, vec![0.1, 1.0]),
        ((0.0, 1.0), CycleKind::CentreLike, vec![0.05, 0.1, 0.2]),
        ((0.13, 0.6), CycleKind::SpiralIn, vec![0.2, 0.5]),
    ];
    for ((a, b), want, amps) in cases {
        let m = model(ModelFamily::Glycolytic, &[("a", a), ("b", b)]);
        let rep = detect_cycle_robust(&m.field, fixed(&m), &ray_seeds(&m, &amps), &cfg_for(&m)).unwrap();
        assert_eq!(rep.kind, want, "a={a} b={b}\n{rep}");
    }
}

#[test]
fn glycolytic_focus_decays_monotonically() {
    let m = model(ModelFamily::Glycolytic, &[("a", 0.13), ("b", 0.6)]);
    let cfg = IntegratorConfig {
        t_end: 150.0,
        ..Default::default()
    };
    let tr = integrate(&m.field, 0.8, 1.2, &cfg).unwrap();
    let c = poincare_crossings(&tr, fixed(&m), m.transform.xi_direction()).unwrap();
    assert!(c.len() >= 10);
    assert!(c.windows(2).all(|w| w[1].distance < w[0].distance));
}

#[test]
fn vanderpol_radius_matches_twice_threshold() {
    for eps in [0.01, 0.05, 0.1] {
        for a in [0.25, 0.5, 1.0] {
            let m = model(ModelFamily::VanDerPol, &[("epsilon", eps), ("a", a)]);
            let rep = detect_cycle(&m.field, [0.0, 0.0], &ray_seeds(&m, &[1.6 * a, 2.4 * a]), &cfg_for(&m)).unwrap();
            assert_eq!(rep.kind, CycleKind::LimitCycle, "eps={eps} a={a}\n{rep}");
            let rel = (rep.amplitude.unwrap() - 2.0 * a).abs() / (2.0 * a);
            assert!(rel <= f64::max(0.05, 3.0 * eps), "eps={eps} a={a} rel={rel}");
        }
    }
}

#[test]
fn periods_at_small_amplitude() {
    let h = parse_model("dx = y\ndy = -x").unwrap();
    let p = measure_period(&h, [0.7, 0.0], [0.0, 0.0], &CycleConfig::default()).unwrap();
    assert!((p.period - 2.0 * PI).abs() <= 1e-7);

    let m = model(ModelFamily::Glycolytic, &[("a", 0.0), ("b", 1.0)]);
    let p = measure_period(&m.field, ray_seeds(&m, &[0.05])[0], fixed(&m), &cfg_for(&m)).unwrap();
    assert!((p.period - 2.0 * PI).abs() / (2.0 * PI) <= 5e-3, "{}", p.period);

    let m = model(ModelFamily::Brusselator, &[("b", 2.25)]);
    let t0 = 2.0 * PI / 0.5_f64.sqrt();
    assert!((t0 - 8.8858).abs() < 1e-4);
    let p = measure_period(&m.field, ray_seeds(&m, &[0.05])[0], fixed(&m), &cfg_for(&m)).unwrap();
    assert!((p.period - t0).abs() / t0 <= 5e-3, "{}", p.period);
}

#[test]
fn isochronicity_examples() {
    let m = model(ModelFamily::Glycolytic, &[("a", 0.0), ("b", 1.0)]);
    let rep = isochronicity_test(&m.field, fixed(&m), &[0.05, 0.1, 0.2], &cfg_for(&m)).unwrap();
    assert_eq!(rep.verdict, IsoVerdict::Isochronous, "{rep}");

    let m = model(ModelFamily::VanDerPol, &[("epsilon", 0.05), ("a", 0.0)]);
    let rep = isochronicity_test(&m.field, [0.0, 0.0], &[0.1, 0.2, 0.3], &cfg_for(&m)).unwrap();
    assert_eq!(rep.verdict, IsoVerdict::Isochronous, "{rep}");

    // strongly nonlinear cycle: transients and the cycle itself run at
    // different speeds
    let m = model(ModelFamily::VanDerPol, &[("epsilon", 0.5), ("a", 1.0)]);
    let rep = isochronicity_test(&m.field, [0.0, 0.0], &[0.5, 2.0, 4.0], &cfg_for(&m)).unwrap();
    assert_eq!(rep.verdict, IsoVerdict::NotIsochronous, "{rep}");
    let tight = CycleConfig {
        integrator: cfg_for(&m).integrator.tightened(100.0),
        ..cfg_for(&m)
    };
    let again = isochronicity_test(&m.field, [0.0, 0.0], &[0.5, 2.0, 4.0], &tight).unwrap();
    assert_eq!(again.verdict, IsoVerdict::NotIsochronous);
}

#[test]
fn vanderpol_without_threshold_is_not_a_cycle() {
    let m = model(ModelFamily::VanDerPol, &[("epsilon", 0.1), ("a", 0.0)]);
    let rep = detect_cycle_robust(&m.field, [0.0, 0.0], &ray_seeds(&m, &[0.1, 0.2, 0.3]), &cfg_for(&m)).unwrap();
    assert_ne!(rep.kind, CycleKind::LimitCycle, "{rep}");
}
