//! The RG series and flow checked against direct integration.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use lienard_lab::lienard::{reduce, steady_states};
use lienard_lab::models::ModelFamily;
use lienard_lab::rg::{flow, rg_solution, rg_solution_with_rate, truncate, Template, TruncatedEq};
use lienard_lab::sim::{integrate, measure_period, CycleConfig, IntegratorConfig};
use lienard_lab::vecfield::{parse_model, PolyVectorField};

fn brusselator_template(lambda: f64) -> TruncatedEq {
    let p: BTreeMap<String, f64> = [("b".to_string(), 2.25)].into();
    let m = ModelFamily::Brusselator.build(&p).unwrap();
    let lf = reduce(&m.field, &m.transform, 4).unwrap();
    let z = steady_states(&lf).unwrap();
    truncate(&lf, z[0], lambda).unwrap()
}

// Oracle: the truncated oscillator written out by hand.
fn hand_written(omega_sq: f64, lambda: f64, c_zv: f64, c_vv: f64) -> PolyVectorField {
    let term = |c: f64, mono: &str| {
        let sign = if c < 0.0 { '-' } else { '+' };
        format!(" {sign} {}*{mono}", c.abs())
    };
    let text = format!(
        "dx = y\ndy = -{omega_sq}*x{}{}",
        term(lambda * c_zv, "x*y"),
        term(lambda * c_vv, "y^2")
    );
    parse_model(&text).unwrap()
}

fn max_error(te: &TruncatedEq, oracle: &PolyVectorField, amp: f64, horizon: f64, cfg: &IntegratorConfig) -> f64 {
    let cfg = IntegratorConfig {
        t_end: horizon,
        ..*cfg
    };
    let tr = integrate(oracle, amp, 0.0, &cfg).unwrap();
    (0..=2000)
        .map(|k| {
            let t = horizon * k as f64 / 2000.0;
            (rg_solution(te, amp, 0.0, t, 0.0) - tr.eval(t).unwrap()[0]).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn brusselator_template_coefficients() {
    let te = brusselator_template(0.05);
    let Template::QuadraticCentre { c_zz, c_vv, c_zv } = te.template else {
        panic!("expected the quadratic template");
    };
    assert!(c_zz.abs() < 1e-12);
    assert!((c_zv - 1.0).abs() < 1e-12);
    assert!((c_vv + 1.75).abs() < 1e-12);
    assert!((te.omega * te.omega - 0.5).abs() < 1e-12);
}

#[test]
fn series_tracks_numeric_over_two_periods() {
    let (lambda, amp) = (0.05, 0.1);
    let te = brusselator_template(lambda);
    let oracle = hand_written(0.5, lambda, 1.0, -1.75);
    let horizon = 4.0 * PI / te.omega;
    let err = max_error(&te, &oracle, amp, horizon, &IntegratorConfig::default());
    assert!(err <= 5.0 * lambda * lambda * amp, "err = {err}");
}

#[test]
fn residual_is_second_order_in_lambda() {
    let amp = 0.5;
    let cfg = IntegratorConfig {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_step: 0.05,
        ..Default::default()
    };
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&l| {
            let te = brusselator_template(l);
            max_error(&te, &hand_written(0.5, l, 1.0, -1.75), amp, 5.0 * 2.0 * PI / te.omega, &cfg)
        })
        .collect();
    for w in errs.windows(2) {
        let r = w[0] / w[1];
        assert!((3.0..=5.0).contains(&r), "errors {errs:?}");
    }
}

#[test]
fn series_starts_at_rest() {
    let te = brusselator_template(0.1);
    let (x, v) = rg_solution_with_rate(&te, 0.3, 0.0, 0.0, 0.0);
    assert!((x - 0.3).abs() < 1e-14 && v.abs() < 1e-14);
    // derivative agrees with a central difference
    let (t, h) = (1.3, 1e-5);
    let (_, v) = rg_solution_with_rate(&te, 0.3, 0.2, t, 0.0);
    let fd = (rg_solution(&te, 0.3, 0.2, t + h, 0.0) - rg_solution(&te, 0.3, 0.2, t - h, 0.0)) / (2.0 * h);
    assert!((v - fd).abs() < 1e-8);
}

#[test]
fn cubic_series_short_horizon() {
    let te = TruncatedEq::new(Template::VdPCubic { epsilon: 0.01, a: 0.5 }, 1.0, 0.05).unwrap();
    let oracle = parse_model("dx = y\ndy = -x + 0.0025*y - 0.01*x^2*y").unwrap();
    let amp = 0.8;
    let cfg = IntegratorConfig {
        t_end: 4.0 * PI,
        ..Default::default()
    };
    let tr = integrate(&oracle, amp, rg_solution_with_rate(&te, amp, 0.0, 0.0, 0.0).1, &cfg).unwrap();
    let err = (0..=400)
        .map(|k| {
            let t = 4.0 * PI * k as f64 / 400.0;
            (rg_solution(&te, amp, 0.0, t, 0.0) - tr.eval(t).unwrap()[0]).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "err = {err}");
}

fn period_defects(rhs: &TruncatedEq, amps: &[f64]) -> Vec<f64> {
    let t0 = 2.0 * PI / rhs.omega;
    let cfg = CycleConfig {
        integrator: IntegratorConfig {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            ..Default::default()
        },
        ..Default::default()
    };
    amps.iter()
        .map(|&a| (measure_period(rhs, [a, 0.0], [0.0, 0.0], &cfg).unwrap().period - t0).abs())
        .collect()
}

#[test]
fn phase_flow_is_null() {
    let quad = brusselator_template(0.05).embedded();
    let cubic = TruncatedEq::new(Template::VdPCubic { epsilon: 0.05, a: 0.0 }, 1.0, 0.05).unwrap();
    for te in [quad, cubic] {
        assert!(flow(&te).q.coeffs.iter().all(|c| *c == 0.0));
        let d = period_defects(&te, &[0.1, 0.05, 0.025]);
        for w in d.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "{}: defects {d:?}", te.template.name());
        }
    }
}
