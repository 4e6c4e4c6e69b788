//! First-order renormalization-group flows for the two truncations that admit
//! closed-form amplitude equations.
//!
//! * [`Template::QuadraticCentre`]: `xi'' + omega^2 xi = lambda (c_zz xi^2 + c_vv xi'^2 + c_zv xi xi')`
//!   around an undamped steady state. The amplitude and phase flows vanish.
//! * [`Template::VdPCubic`]: `x'' + omega^2 x = eps (a^2 - x^2) x'`. The
//!   amplitude flow has a nonzero root at `2|a|` when `a != 0`.
//!
//! Forms that fit neither template go to the numeric isochronicity test in
//! [`crate::sim`].

use std::fmt;

use thiserror::Error;

use crate::lienard::{classify, fmt_num, shifted_table, LienardForm, Verdict, DEFAULT_BAND};
use crate::poly::{format_poly1, Poly1, Poly2};

/// Above this the first-order series is no longer expected to be accurate.
pub const LAMBDA_ACCURACY_LIMIT: f64 = 0.2;
pub const DEFAULT_LAMBDA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Blocker {
    pub template: &'static str,
    pub n: u32,
    pub m: u32,
    pub value: f64,
}

impl fmt::Display for Blocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: A[{}][{}] = {}", self.template, self.n, self.m, fmt_num(self.value))?;
        if self.value == 0.0 {
            f.write_str(" (needs a nonzero value)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RgError {
    #[error("no truncation template fits; blocking coefficients (in xi = z - z_s): {}", list(.blockers))]
    UnsupportedTruncation { blockers: Vec<Blocker> },
    #[error("lambda = {0} must lie in (0, 1)")]
    InvalidLambda(f64),
    #[error("omega^2 = {0} must be positive")]
    NonPositiveOmega(f64),
}

fn list(b: &[Blocker]) -> String {
    b.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Template {
    QuadraticCentre { c_zz: f64, c_vv: f64, c_zv: f64 },
    VdPCubic { epsilon: f64, a: f64 },
}

impl Template {
    pub fn name(&self) -> &'static str {
        match self {
            Template::QuadraticCentre { .. } => "QuadraticCentre",
            Template::VdPCubic { .. } => "VdPCubic",
        }
    }
}

/// Truncated equation ready for the RG flow.
///
/// `lambda` is the book-keeping parameter multiplying the quadratic
/// nonlinearity. The cubic template carries its own small parameter `epsilon`
/// and ignores `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedEq {
    pub template: Template,
    pub omega: f64,
    pub lambda: f64,
}

impl TruncatedEq {
    pub fn new(template: Template, omega: f64, lambda: f64) -> Result<Self, RgError> {
        check_lambda(lambda)?;
        if !(omega > 0.0) {
            return Err(RgError::NonPositiveOmega(omega * omega.abs()));
        }
        Ok(Self {
            template,
            omega,
            lambda,
        })
    }

    /// Rescales the quadratic coefficients by `1/lambda`, so that
    /// `lambda * c` reproduces the physical nonlinearity exactly.
    pub fn embedded(&self) -> Self {
        let mut out = *self;
        if let Template::QuadraticCentre { c_zz, c_vv, c_zv } = self.template {
            let s = 1.0 / self.lambda;
            out.template = Template::QuadraticCentre {
                c_zz: c_zz * s,
                c_vv: c_vv * s,
                c_zv: c_zv * s,
            };
        }
        out
    }

    /// Right-hand side of the truncated equation, as `(xi', v')` with `v = xi'`.
    pub fn rhs(&self, xi: f64, v: f64) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        let acc = match self.template {
            Template::QuadraticCentre { c_zz, c_vv, c_zv } => {
                -w2 * xi + self.lambda * (c_zz * xi * xi + c_vv * v * v + c_zv * xi * v)
            }
            Template::VdPCubic { epsilon, a } => -w2 * xi + epsilon * (a * a - xi * xi) * v,
        };
        (v, acc)
    }

    /// The truncated equation as polynomials in `(xi, v)`.
    pub fn rhs_polys(&self) -> (Poly2, Poly2) {
        let w2 = self.omega * self.omega;
        let dxi = Poly2::from_terms([((0, 1), 1.0)]);
        let dv = match self.template {
            Template::QuadraticCentre { c_zz, c_vv, c_zv } => Poly2::from_terms([
                ((1, 0), -w2),
                ((2, 0), self.lambda * c_zz),
                ((0, 2), self.lambda * c_vv),
                ((1, 1), self.lambda * c_zv),
            ]),
            Template::VdPCubic { epsilon, a } => {
                Poly2::from_terms([((1, 0), -w2), ((0, 1), epsilon * a * a), ((2, 1), -epsilon)])
            }
        };
        (dxi, dv)
    }
}

fn check_lambda(lambda: f64) -> Result<(), RgError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(RgError::InvalidLambda(lambda));
    }
    if lambda > LAMBDA_ACCURACY_LIMIT {
        log::warn!("lambda = {lambda} exceeds {LAMBDA_ACCURACY_LIMIT}; first-order accuracy is not guaranteed");
    }
    Ok(())
}

fn negligible(c: f64, scale: f64) -> bool {
    c.abs() <= 1e-12 * (1.0 + scale)
}

/// Matches the Liénard form, shifted to `xi = z - z_s`, against the templates.
///
/// The cubic template is tried first: it needs the shifted form to contain
/// only the linear restoring term, linear damping and the `xi^2 xi'` term, with
/// `a^2 = A_01 / eps >= 0`. Otherwise the quadratic template applies when the
/// linear damping vanishes within the classification band; terms of total
/// degree three and above are dropped.
pub fn truncate(lf: &LienardForm, z_s: f64, lambda: f64) -> Result<TruncatedEq, RgError> {
    check_lambda(lambda)?;
    let s = shifted_table(lf, z_s);
    let scale = s.max_abs_coeff();
    let omega_sq = -s.coeff(1, 0);

    let mut vdp_block = Vec::new();
    for ((n, m), c) in s.terms() {
        if !matches!((n, m), (1, 0) | (0, 1) | (2, 1)) && !negligible(c, scale) {
            vdp_block.push(Blocker {
                template: "VdPCubic",
                n,
                m,
                value: c,
            });
        }
    }
    let epsilon = -s.coeff(2, 1);
    let lin_damp = s.coeff(0, 1);
    if negligible(epsilon, scale) {
        vdp_block.push(Blocker {
            template: "VdPCubic",
            n: 2,
            m: 1,
            value: -epsilon,
        });
    } else if lin_damp / epsilon < 0.0 {
        vdp_block.push(Blocker {
            template: "VdPCubic",
            n: 0,
            m: 1,
            value: lin_damp,
        });
    }
    if vdp_block.is_empty() {
        if !(omega_sq > 0.0) {
            return Err(RgError::NonPositiveOmega(omega_sq));
        }
        let a = if negligible(lin_damp, scale) {
            0.0
        } else {
            (lin_damp / epsilon).sqrt()
        };
        return TruncatedEq::new(Template::VdPCubic { epsilon, a }, omega_sq.sqrt(), lambda);
    }

    let cls = classify(lf, z_s, DEFAULT_BAND);
    match cls.verdict {
        Verdict::IsochronousCentreCandidate => TruncatedEq::new(
            Template::QuadraticCentre {
                c_zz: s.coeff(2, 0),
                c_vv: s.coeff(0, 2),
                c_zv: s.coeff(1, 1),
            },
            cls.omega_sq.sqrt(),
            lambda,
        ),
        Verdict::Invalid => Err(RgError::NonPositiveOmega(cls.omega_sq)),
        _ => {
            let mut blockers = vec![Blocker {
                template: "QuadraticCentre",
                n: 0,
                m: 1,
                value: lin_damp,
            }];
            blockers.extend(vdp_block);
            Err(RgError::UnsupportedTruncation { blockers })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowVerdict {
    IsochronousCentre,
    LimitCycleWithRadius,
    DecayToCentrePoint,
}

impl fmt::Display for FlowVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Amplitude flow `dA/dtau = p(A)` and phase flow `dtheta/dtau = q(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgFlow {
    pub template: Template,
    pub p: Poly1,
    pub q: Poly1,
    /// Nonzero roots of `p`.
    pub radius_roots: Vec<f64>,
    /// Whether the cycle at `radius_roots[0]` attracts (`eps > 0`).
    pub radius_stable: bool,
    pub verdict: FlowVerdict,
}

pub fn flow(te: &TruncatedEq) -> RgFlow {
    match te.template {
        Template::QuadraticCentre { .. } => RgFlow {
            template: te.template,
            p: Poly1::new(vec![0.0]),
            q: Poly1::new(vec![0.0]),
            radius_roots: Vec::new(),
            radius_stable: false,
            verdict: FlowVerdict::IsochronousCentre,
        },
        Template::VdPCubic { epsilon, a } => {
            let p = Poly1::new(vec![0.0, epsilon * a * a / 2.0, 0.0, -epsilon / 8.0]);
            let (radius_roots, verdict) = if a != 0.0 {
                (vec![2.0 * a.abs()], FlowVerdict::LimitCycleWithRadius)
            } else {
                (Vec::new(), FlowVerdict::DecayToCentrePoint)
            };
            RgFlow {
                template: te.template,
                p,
                q: Poly1::new(vec![0.0]),
                radius_roots,
                radius_stable: a != 0.0 && epsilon > 0.0,
                verdict,
            }
        }
    }
}

impl fmt::Display for RgFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let roots: Vec<String> = self.radius_roots.iter().map(|r| fmt_num(*r)).collect();
        write!(
            f,
            "template={}, p(A)={}, q(A)={}, radius_roots=[{}], verdict={}",
            self.template.name(),
            format_poly1(&self.p, "A"),
            format_poly1(&self.q, "A"),
            roots.join(", "),
            self.verdict
        )
    }
}

/// Coefficients of the first-order correction for the quadratic template:
/// `xi_1 = k0 + k1 cos phi + k2 sin phi + k3 cos 2phi + k4 sin 2phi`.
fn quadratic_correction(c_zz: f64, c_vv: f64, c_zv: f64, omega: f64, amp: f64) -> [f64; 5] {
    let a2 = amp * amp;
    let w2 = omega * omega;
    [
        a2 * c_zz / (2.0 * w2) + a2 * c_vv / 2.0,
        -(a2 * c_zz / (3.0 * w2) + 2.0 * a2 * c_vv / 3.0),
        -c_zv * a2 / (3.0 * omega),
        -a2 * c_zz / (6.0 * w2) + a2 * c_vv / 6.0,
        c_zv * a2 / (6.0 * omega),
    ]
}

/// First-order approximate solution and its time derivative, with phase
/// `phi = omega (t - t0) + theta0`.
///
/// For the quadratic template this satisfies `xi = amp`, `xi' = 0` at
/// `t = t0` when `theta0 = 0`. The cubic template keeps its secular term
/// `(t - t0) cos phi`, so it is only meaningful over a few periods.
pub fn rg_solution_with_rate(te: &TruncatedEq, amp: f64, theta0: f64, t: f64, t0: f64) -> (f64, f64) {
    let w = te.omega;
    let s = t - t0;
    let phi = w * s + theta0;
    let (sin1, cos1) = phi.sin_cos();
    let (sin2, cos2) = (2.0 * phi).sin_cos();
    let base = (amp * cos1, -amp * w * sin1);
    match te.template {
        Template::QuadraticCentre { c_zz, c_vv, c_zv } => {
            let [k0, k1, k2, k3, k4] = quadratic_correction(c_zz, c_vv, c_zv, w, amp);
            let x1 = k0 + k1 * cos1 + k2 * sin1 + k3 * cos2 + k4 * sin2;
            let v1 = w * (-k1 * sin1 + k2 * cos1 - 2.0 * k3 * sin2 + 2.0 * k4 * cos2);
            (base.0 + te.lambda * x1, base.1 + te.lambda * v1)
        }
        Template::VdPCubic { epsilon, a } => {
            let a3 = amp * amp * amp;
            let b = (7.0 * a3 - 16.0 * amp * a * a) / (32.0 * w);
            let c = (a3 - 4.0 * amp * a * a) / 8.0;
            let d = a3 / (32.0 * w);
            let (sin3, cos3) = (3.0 * phi).sin_cos();
            let x1 = b * sin1 - c * s * cos1 - d * sin3;
            let v1 = b * w * cos1 - c * cos1 + c * s * w * sin1 - 3.0 * d * w * cos3;
            (base.0 + epsilon * x1, base.1 + epsilon * v1)
        }
    }
}

pub fn rg_solution(te: &TruncatedEq, amp: f64, theta0: f64, t: f64, t0: f64) -> f64 {
    rg_solution_with_rate(te, amp, theta0, t, t0).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lienard::{reduce, steady_states};
    use crate::models::{brusselator, glycolytic, vanderpol, BrusselatorParams, GlycolyticParams, VdPParams};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn truncated_for(m: &crate::models::ModelOutput, lambda: f64) -> Result<TruncatedEq, RgError> {
        let lf = reduce(&m.field, &m.transform, 4).unwrap();
        let z = steady_states(&lf).unwrap();
        let z_s = z
            .into_iter()
            .min_by(|a, b| (a - m.closed.z_s).abs().total_cmp(&(b - m.closed.z_s).abs()))
            .unwrap();
        truncate(&lf, z_s, lambda)
    }

    fn quad(te: &TruncatedEq) -> (f64, f64, f64) {
        match te.template {
            Template::QuadraticCentre { c_zz, c_vv, c_zv } => (c_zz, c_vv, c_zv),
            t => panic!("expected quadratic template, got {t:?}"),
        }
    }

    #[test]
    fn brusselator_boundary_truncation() {
        let m = brusselator(&BrusselatorParams {
            b: 2.25,
            ..Default::default()
        })
        .unwrap();
        let te = truncated_for(&m, 0.05).unwrap();
        let (c_zz, c_vv, c_zv) = quad(&te);
        assert!(c_zz.abs() < 1e-12);
        assert!((c_vv + 1.75).abs() < 1e-12);
        assert!((c_zv - 1.0).abs() < 1e-12);
        assert!((te.omega * te.omega - 0.5).abs() < 1e-12);
    }

    #[test]
    fn glycolytic_boundary_truncation() {
        let m = glycolytic(&GlycolyticParams { a: 0.0, b: 1.0 }).unwrap();
        let te = truncated_for(&m, 0.05).unwrap();
        let (c_zz, c_vv, c_zv) = quad(&te);
        assert!(c_zz.abs() < 1e-12);
        assert!((c_vv - 1.0).abs() < 1e-12);
        assert!((c_zv - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vanderpol_truncation_and_flow() {
        let m = vanderpol(&VdPParams {
            epsilon: 0.1,
            a: 0.5,
            omega: 1.0,
        })
        .unwrap();
        let te = truncated_for(&m, 0.05).unwrap();
        assert_eq!(te.template, Template::VdPCubic { epsilon: 0.1, a: 0.5 });
        let f = flow(&te);
        assert_eq!(f.radius_roots, vec![1.0]);
        assert!(f.radius_stable);
        assert_eq!(f.verdict, FlowVerdict::LimitCycleWithRadius);
        assert_eq!(f.p.eval(1.0), 0.0);
        assert_eq!(
            f.to_string(),
            "template=VdPCubic, p(A)=0.0125*A - 0.0125*A^3, q(A)=0, radius_roots=[1.0], verdict=LimitCycleWithRadius"
        );
    }

    #[test]
    fn vanderpol_zero_threshold_decays() {
        let m = vanderpol(&VdPParams {
            epsilon: 0.1,
            a: 0.0,
            omega: 1.0,
        })
        .unwrap();
        let f = flow(&truncated_for(&m, 0.05).unwrap());
        assert_eq!(f.verdict, FlowVerdict::DecayToCentrePoint);
        assert!(f.radius_roots.is_empty());
        assert!((f.p.coeff(3) + 0.1 / 8.0).abs() < 1e-16);
        assert_eq!(f.p.coeff(1), 0.0);
    }

    #[test]
    fn quadratic_flow_is_null() {
        let te = TruncatedEq::new(
            Template::QuadraticCentre {
                c_zz: 0.3,
                c_vv: -1.75,
                c_zv: 1.0,
            },
            0.5_f64.sqrt(),
            0.05,
        )
        .unwrap();
        let f = flow(&te);
        assert!(f.p.is_zero() && f.q.is_zero());
        assert_eq!(f.verdict, FlowVerdict::IsochronousCentre);
        assert_eq!(
            f.to_string(),
            "template=QuadraticCentre, p(A)=0, q(A)=0, radius_roots=[], verdict=IsochronousCentre"
        );
    }

    #[test]
    fn off_boundary_forms_are_rejected() {
        let m = brusselator(&BrusselatorParams::default()).unwrap();
        match truncated_for(&m, 0.05).unwrap_err() {
            RgError::UnsupportedTruncation { blockers } => {
                assert!(blockers
                    .iter()
                    .any(|b| b.template == "QuadraticCentre" && (b.n, b.m) == (0, 1)));
                assert!(blockers.iter().any(|b| b.template == "VdPCubic"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn lambda_is_validated() {
        let m = brusselator(&BrusselatorParams {
            b: 2.25,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(truncated_for(&m, 0.0).unwrap_err(), RgError::InvalidLambda(0.0));
        assert_eq!(truncated_for(&m, 1.0).unwrap_err(), RgError::InvalidLambda(1.0));
        assert!(truncated_for(&m, 0.5).is_ok());
    }

    #[test]
    fn embedded_mode_restores_physical_coefficients() {
        let te = TruncatedEq::new(
            Template::QuadraticCentre {
                c_zz: 0.0,
                c_vv: -1.75,
                c_zv: 1.0,
            },
            1.0,
            0.1,
        )
        .unwrap()
        .embedded();
        let (_, acc) = te.rhs(0.0, 1.0);
        assert!((acc + 1.75).abs() < 1e-14);
    }

    #[test]
    fn trivial_solutions() {
        let te = TruncatedEq::new(
            Template::QuadraticCentre {
                c_zz: 1.0,
                c_vv: 1.0,
                c_zv: 1.0,
            },
            1.0,
            0.05,
        )
        .unwrap();
        assert_eq!(rg_solution(&te, 0.0, 0.3, 7.0, 1.0), 0.0);
        let vdp = TruncatedEq::new(Template::VdPCubic { epsilon: 0.1, a: 0.5 }, 1.3, 0.05).unwrap();
        assert_eq!(rg_solution(&vdp, 0.0, 0.3, 7.0, 1.0), 0.0);
        let free = TruncatedEq::new(Template::VdPCubic { epsilon: 0.0, a: 0.0 }, 1.0, 0.05).unwrap();
        assert!(rg_solution(&free, 1.0, 0.0, PI / 2.0, 0.0).abs() < 1e-15);
    }

    // Residual of the truncated ODE for the first-order series, checked by
    // finite differences: it must be O(lambda^2).
    fn residual(te: &TruncatedEq, amp: f64, t: f64) -> f64 {
        let h = 1e-4;
        let x = |t| rg_solution(te, amp, 0.0, t, 0.0);
        let xpp = (x(t + h) - 2.0 * x(t) + x(t - h)) / (h * h);
        let (xi, v) = rg_solution_with_rate(te, amp, 0.0, t, 0.0);
        xpp - te.rhs(xi, v).1
    }

    #[test]
    fn series_residual_is_second_order() {
        let mk = |l| {
            TruncatedEq::new(
                Template::QuadraticCentre {
                    c_zz: 0.7,
                    c_vv: -1.75,
                    c_zv: 1.0,
                },
                0.8,
                l,
            )
            .unwrap()
        };
        let worst = |te: &TruncatedEq| (0..200).map(|k| residual(te, 0.5, 0.05 * k as f64).abs()).fold(0.0, f64::max);
        let r1 = worst(&mk(0.02));
        let r2 = worst(&mk(0.01));
        assert!(r1 / r2 > 3.5 && r1 / r2 < 4.5, "{r1} {r2}");
    }

    proptest! {
        #[test]
        fn quadratic_series_starts_at_rest(
            c_zz in -2.0..2.0f64, c_vv in -2.0..2.0f64, c_zv in -2.0..2.0f64,
            w in 0.2..3.0f64, amp in 0.0..1.0f64, lambda in 0.001..0.2f64, t0 in -5.0..5.0f64,
        ) {
            let te = TruncatedEq::new(Template::QuadraticCentre { c_zz, c_vv, c_zv }, w, lambda).unwrap();
            let (x, v) = rg_solution_with_rate(&te, amp, 0.0, t0, t0);
            prop_assert!((x - amp).abs() < 1e-12);
            prop_assert!(v.abs() < 1e-12);
        }

        #[test]
        fn rate_matches_finite_difference(
            eps in -0.5..0.5f64, a in -1.0..1.0f64, w in 0.3..2.0f64,
            amp in 0.0..1.5f64, t in 0.0..10.0f64, theta0 in 0.0..6.0f64,
        ) {
            let te = TruncatedEq::new(Template::VdPCubic { epsilon: eps, a }, w, 0.1).unwrap();
            let h = 1e-6;
            let fd = (rg_solution(&te, amp, theta0, t + h, 0.0) - rg_solution(&te, amp, theta0, t - h, 0.0)) / (2.0 * h);
            let (_, v) = rg_solution_with_rate(&te, amp, theta0, t, 0.0);
            prop_assert!((fd - v).abs() < 1e-6 * (1.0 + v.abs()));
        }

        #[test]
        fn vdp_radius_is_root_of_flow(eps in 0.001..1.0f64, a in -3.0..3.0f64) {
            prop_assume!(a.abs() > 1e-3);
            let te = TruncatedEq::new(Template::VdPCubic { epsilon: eps, a }, 1.0, 0.05).unwrap();
            let f = flow(&te);
            let r = f.radius_roots[0];
            prop_assert!(f.p.eval(r).abs() <= 1e-12 * (1.0 + eps * r.powi(3)));
            // attracting: p > 0 just inside, p < 0 just outside
            prop_assert!(f.p.eval(0.9 * r) > 0.0 && f.p.eval(1.1 * r) < 0.0);
        }
    }
}
