//! Numerical oracle: adaptive integration, Poincaré sections and cycle
//! detection.
//!
//! Nothing here consults the Liénard reduction. Verdicts are read off
//! trajectories of the original field so they can be checked against the
//! analytic classification.

mod cycle;
mod dopri;
mod section;

use std::io::{self, Write};

use thiserror::Error;

use crate::rg::TruncatedEq;
use crate::vecfield::PolyVectorField;

pub use cycle::{
    detect_cycle, detect_cycle_robust, isochronicity_test, measure_period, CycleConfig, CycleKind,
    CycleReport, IsoReport, IsoRow, IsoVerdict, PeriodMeasurement, SeedFate, SeedSummary,
};
pub use dopri::{DenseSegment, Dopri5};
pub use section::{poincare_crossings, Crossing, Section};

pub type State = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("trajectory never crosses the section")]
    NoCrossings,
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

/// Planar autonomous right-hand side.
pub trait Rhs: Sync {
    fn rhs(&self, s: State) -> State;
}

impl Rhs for PolyVectorField {
    fn rhs(&self, s: State) -> State {
        let (p, q) = self.evaluate(s[0], s[1]);
        [p, q]
    }
}

impl Rhs for TruncatedEq {
    fn rhs(&self, s: State) -> State {
        let (a, b) = TruncatedEq::rhs(self, s[0], s[1]);
        [a, b]
    }
}

/// Adapter for closures.
pub struct FnRhs<F>(pub F);

impl<F: Fn(State) -> State + Sync> Rhs for FnRhs<F> {
    fn rhs(&self, s: State) -> State {
        (self.0)(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub dense_output: bool,
    /// Hard cap on accepted plus rejected steps.
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            max_step: 0.5,
            t_end: 100.0,
            dense_output: true,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(SimError::InvalidConfig(format!(
                "rel_tol = {} must lie in (0, 1e-3)",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0) {
            return Err(SimError::InvalidConfig("abs_tol must be positive".into()));
        }
        if !(self.max_step > 0.0) {
            return Err(SimError::InvalidConfig("max_step must be positive".into()));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SimError::InvalidConfig("t_end must be positive and finite".into()));
        }
        Ok(())
    }

    /// Same config with both tolerances divided by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }
}

/// Accepted steps of one integration, with the dense interpolant when
/// requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub segments: Vec<DenseSegment>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial state")
    }

    pub fn has_dense_output(&self) -> bool {
        !self.segments.is_empty() || self.times.len() == 1
    }

    /// Interpolated state; `None` outside the covered interval or without
    /// dense output.
    pub fn eval(&self, t: f64) -> Option<State> {
        if self.segments.is_empty() || t < self.t_start() || t > self.t_end() {
            return None;
        }
        let i = self
            .segments
            .partition_point(|s| s.t0 + s.h < t)
            .min(self.segments.len() - 1);
        Some(self.segments[i].eval(t))
    }

    /// `t,x,y` with 17 significant digits, one row per accepted step.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y")?;
        for (t, s) in self.times.iter().zip(&self.states) {
            writeln!(w, "{t:.16e},{:.16e},{:.16e}", s[0], s[1])?;
        }
        Ok(())
    }
}

pub fn integrate<R: Rhs + ?Sized>(
    rhs: &R,
    x0: f64,
    y0: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(SimError::NonFiniteState { t: 0.0 });
    }
    let mut st = Dopri5::new(rhs, 0.0, [x0, y0], cfg)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![[x0, y0]],
        segments: Vec::new(),
    };
    while st.t() < cfg.t_end {
        let seg = st.step_until(cfg.t_end)?;
        traj.times.push(st.t());
        traj.states.push(st.state());
        if cfg.dense_output {
            traj.segments.push(seg);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecfield::parse_model;
    use std::f64::consts::PI;

    fn harmonic() -> PolyVectorField {
        parse_model("dx = y\ndy = -x").unwrap()
    }

    #[test]
    fn harmonic_returns_after_one_period() {
        let cfg = IntegratorConfig {
            t_end: 2.0 * PI,
            ..Default::default()
        };
        let tr = integrate(&harmonic(), 1.0, 0.0, &cfg).unwrap();
        let s = tr.states.last().unwrap();
        assert!((s[0] - 1.0).abs() < 1e-7 && s[1].abs() < 1e-7, "{s:?}");
        assert_eq!(tr.t_end(), 2.0 * PI);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn error_decreases_with_tolerance() {
        let err = |tol: f64| {
            let cfg = IntegratorConfig {
                rel_tol: tol,
                abs_tol: tol * 1e-2,
                t_end: 2.0 * PI,
                ..Default::default()
            };
            let tr = integrate(&harmonic(), 1.0, 0.0, &cfg).unwrap();
            let s = tr.states.last().unwrap();
            (s[0] - 1.0).hypot(s[1])
        };
        let e: Vec<f64> = [1e-6, 1e-7, 1e-8, 1e-9].iter().map(|&t| err(t)).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{e:?}");
        assert!(e[0] / e[3] > 10.0, "{e:?}");
    }

    #[test]
    fn dense_output_tracks_exact_solution() {
        let cfg = IntegratorConfig {
            t_end: 20.0,
            max_step: 2.0,
            ..Default::default()
        };
        let tr = integrate(&harmonic(), 1.0, 0.0, &cfg).unwrap();
        for k in 0..=400 {
            let t = 0.05 * k as f64;
            let s = tr.eval(t).unwrap();
            assert!((s[0] - t.cos()).abs() < 1e-7, "t={t}");
            assert!((s[1] + t.sin()).abs() < 1e-7, "t={t}");
        }
        assert!(tr.eval(-1.0).is_none() && tr.eval(21.0).is_none());
    }

    #[test]
    fn deterministic() {
        let f = parse_model("dx = y\ndy = -x + 0.1*y - 0.4*x^2*y").unwrap();
        let cfg = IntegratorConfig {
            t_end: 50.0,
            ..Default::default()
        };
        let a = integrate(&f, 0.1, 0.0, &cfg).unwrap();
        let b = integrate(&f, 0.1, 0.0, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blowup_is_reported() {
        let f = parse_model("dx = x^2\ndy = 0").unwrap();
        let cfg = IntegratorConfig {
            t_end: 2.0,
            ..Default::default()
        };
        let err = integrate(&f, 1.0, 0.0, &cfg).unwrap_err();
        assert!(
            matches!(err, SimError::StepSizeUnderflow { .. } | SimError::NonFiniteState { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn config_validation() {
        let f = harmonic();
        for cfg in [
            IntegratorConfig {
                rel_tol: 1e-2,
                ..Default::default()
            },
            IntegratorConfig {
                abs_tol: 0.0,
                ..Default::default()
            },
            IntegratorConfig {
                t_end: 0.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                integrate(&f, 1.0, 0.0, &cfg),
                Err(SimError::InvalidConfig(_))
            ));
        }
        assert!(matches!(
            integrate(&f, f64::NAN, 0.0, &IntegratorConfig::default()),
            Err(SimError::NonFiniteState { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let cfg = IntegratorConfig {
            t_end: 1.0,
            ..Default::default()
        };
        let tr = integrate(&harmonic(), 1.0, 0.0, &cfg).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y"));
        assert_eq!(
            lines.next(),
            Some("0.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0")
        );
        assert_eq!(text.lines().count(), tr.times.len() + 1);
        for line in text.lines().skip(1) {
            for field in line.split(',') {
                let v: f64 = field.parse().unwrap();
                assert!(v.is_finite());
            }
        }
    }

    #[test]
    fn vanderpol_grows_toward_radius() {
        let f = parse_model("dx = y\ndy = -x + 0.025*y - 0.1*x^2*y").unwrap();
        let cfg = IntegratorConfig {
            t_end: 300.0,
            ..Default::default()
        };
        let tr = integrate(&f, 0.1, 0.0, &cfg).unwrap();
        let tail = tr
            .times
            .iter()
            .zip(&tr.states)
            .filter(|(t, _)| **t > 250.0)
            .fold(0.0_f64, |m, (_, s)| m.max(s[0].abs()));
        assert!((tail - 1.0).abs() < 0.05, "{tail}");
    }
}
