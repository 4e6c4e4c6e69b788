//! Reduction of a planar polynomial field to the second-order form
//! `z'' = sum A_nm z^n z'^m`, and the damping sign test at the steady state.
//!
//! The caller picks `u = alpha0 + alpha1 x + alpha2 y` and
//! `z = beta0 + beta1 x + beta2 y` such that `dz/dt = u` holds identically.
//! Inverting the affine map gives `x = L(z, z')`, `y = M(z, z')`, and
//! `z'' = alpha1 P(L, M) + alpha2 Q(L, M)` is expanded exactly.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::poly::{format_poly2, Monomial, Poly1, Poly2};
use crate::vecfield::PolyVectorField;

/// Highest total degree the expansion will handle.
pub const REDUCTION_DEGREE_CAP: u32 = 12;
pub const DEFAULT_BAND: f64 = 1e-9;
const DET_MIN: f64 = 1e-12;
const OFFSET_REL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LienardError {
    #[error("transform is singular: alpha1*beta2 - alpha2*beta1 = {det:e}")]
    SingularTransform { det: f64 },
    #[error("dz/dt != u for this choice; beta1*P + beta2*Q - u = {residual}")]
    InconsistentChoice { residual: String },
    #[error("expansion needs degree {needed}, above the cap {cap}")]
    DegreeOverflow { needed: u32, cap: u32 },
    #[error("reduction degree must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("steady-state polynomial has no real root")]
    NoRealRoot,
    #[error("steady-state polynomial vanishes identically")]
    DegenerateSteadyState,
    #[error("no transform with dz/dt = u exists: {0}")]
    NoTransform(String),
}

/// Affine change of variables `(x, y) -> (z, u)` with its inverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub alpha: [f64; 3],
    pub beta: [f64; 3],
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c_l: f64,
    pub c_m: f64,
    /// `alpha1 * beta2 - alpha2 * beta1`
    pub det: f64,
}

impl TransformSpec {
    /// `max(|cL|, |cM|) <= 1e-6 * (1 + |alpha|_inf + |beta|_inf)`
    pub fn offsets_negligible(&self) -> bool {
        let norm = self
            .alpha
            .iter()
            .chain(self.beta.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        self.c_l.abs().max(self.c_m.abs()) <= OFFSET_REL_TOL * (1.0 + norm)
    }

    /// `(x, y)` for a given `(z, z')`.
    pub fn to_xy(&self, z: f64, zdot: f64) -> (f64, f64) {
        (
            self.c1 * z + self.c2 * zdot + self.c_l,
            self.c3 * z + self.c4 * zdot + self.c_m,
        )
    }

    /// Unit vector along which `z` varies at fixed `z'`, in `(x, y)`.
    pub fn xi_direction(&self) -> [f64; 2] {
        let n = self.c1.hypot(self.c3);
        [self.c1 / n, self.c3 / n]
    }

    /// `(z, u)` for a given `(x, y)`.
    pub fn to_zu(&self, x: f64, y: f64) -> (f64, f64) {
        let [a0, a1, a2] = self.alpha;
        let [b0, b1, b2] = self.beta;
        (b0 + b1 * x + b2 * y, a0 + a1 * x + a2 * y)
    }
}

/// Builds the transform and checks that `dz/dt = u` holds for `field`.
pub fn make_transform(
    field: &PolyVectorField,
    alpha: [f64; 3],
    beta: [f64; 3],
) -> Result<TransformSpec, LienardError> {
    let [a0, a1, a2] = alpha;
    let [b0, b1, b2] = beta;
    let det = a1 * b2 - a2 * b1;
    if !(det.abs() > DET_MIN) {
        return Err(LienardError::SingularTransform { det });
    }

    // beta1 * P + beta2 * Q must equal u exactly, nonlinear parts included.
    let lhs = field.p_poly().scaled(b1).add(&field.q_poly().scaled(b2));
    let residual = lhs.add(&Poly2::affine(-a0, -a1, -a2));
    let scale = 1.0
        + field.p_poly().max_abs_coeff().max(field.q_poly().max_abs_coeff()) * b1.abs().max(b2.abs())
        + a0.abs().max(a1.abs()).max(a2.abs());
    if residual.max_abs_coeff() > 1e-12 * scale {
        let shown = Poly2::from_terms(residual.terms().filter(|(_, c)| c.abs() > 1e-12 * scale));
        return Err(LienardError::InconsistentChoice {
            residual: format_poly2(&shown, "x", "y"),
        });
    }

    let spec = TransformSpec {
        alpha,
        beta,
        c1: -a2 / det,
        c2: b2 / det,
        c3: a1 / det,
        c4: -b1 / det,
        c_l: (a2 * b0 - a0 * b2) / det,
        c_m: (a0 * b1 - a1 * b0) / det,
        det,
    };
    Ok(spec)
}

/// Picks `beta` so that the nonlinear parts cancel in `beta1 P + beta2 Q`,
/// then `alpha` from the remaining linear part.
///
/// Requires the nonlinear parts of `P` and `Q` to be proportional. `beta` is
/// scaled so its first nonzero entry is 1, and a purely linear field prefers
/// `z = x`.
pub fn auto_transform(field: &PolyVectorField) -> Result<TransformSpec, LienardError> {
    let (f, g) = (field.nonlinear_x(), field.nonlinear_y());
    let scale = 1.0 + f.values().chain(g.values()).fold(0.0_f64, |m, c| m.max(c.abs()));
    let candidates: Vec<[f64; 2]> = match (f.is_empty(), g.is_empty()) {
        (true, true) => vec![[1.0, 0.0], [0.0, 1.0]],
        (true, false) => vec![[1.0, 0.0]],
        (false, true) => vec![[0.0, 1.0]],
        (false, false) => {
            let (&key, &fc) = f
                .iter()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty");
            let k = g.get(&key).copied().unwrap_or(0.0) / fc;
            let keys: std::collections::BTreeSet<_> = f.keys().chain(g.keys()).collect();
            let proportional = keys.into_iter().all(|m| {
                let (fv, gv) = (f.get(m).copied().unwrap_or(0.0), g.get(m).copied().unwrap_or(0.0));
                (gv - k * fv).abs() <= 1e-12 * scale
            });
            if !proportional || k == 0.0 {
                return Err(LienardError::NoTransform(
                    "the nonlinear parts of dx and dy are not proportional".into(),
                ));
            }
            // k f - g = 0
            vec![[1.0, -1.0 / k]]
        }
    };
    let (lx, ly) = (field.linear_x(), field.linear_y());
    for [b1, b2] in candidates {
        let alpha = [0, 1, 2].map(|i| b1 * lx[i] + b2 * ly[i]);
        let det = alpha[1] * b2 - alpha[2] * b1;
        if det.abs() > DET_MIN {
            return make_transform(field, alpha, [0.0, b1, b2]);
        }
    }
    Err(LienardError::NoTransform(
        "every admissible choice gives a singular transform".into(),
    ))
}

/// How the constant offsets `cL`, `cM` of the inverse map enter the expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OffsetMode {
    /// Exact inverse, offsets included.
    #[default]
    Retain,
    /// Offsets set to zero before expanding.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetReport {
    pub c_l: f64,
    pub c_m: f64,
    pub dropped: bool,
    pub negligible: bool,
}

/// Coefficient table of `z'' = sum A_nm z^n z'^m` truncated at total degree `degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct LienardForm {
    a: BTreeMap<Monomial, f64>,
    pub degree: u32,
    pub transform: TransformSpec,
    pub offsets: OffsetReport,
}

impl LienardForm {
    /// Builds a form directly from a table, zero-filling every `n + m <= degree`.
    pub fn from_table(
        table: impl IntoIterator<Item = (Monomial, f64)>,
        degree: u32,
        transform: TransformSpec,
    ) -> Self {
        let mut a = zero_table(degree);
        for ((n, m), c) in table {
            if n + m <= degree {
                a.insert((n, m), c);
            }
        }
        Self {
            a,
            degree,
            offsets: OffsetReport {
                c_l: transform.c_l,
                c_m: transform.c_m,
                dropped: false,
                negligible: transform.offsets_negligible(),
            },
            transform,
        }
    }

    pub fn coeff(&self, n: u32, m: u32) -> f64 {
        self.a.get(&(n, m)).copied().unwrap_or(0.0)
    }

    pub fn table(&self) -> &BTreeMap<Monomial, f64> {
        &self.a
    }

    pub fn as_poly(&self) -> Poly2 {
        Poly2::from_terms(self.a.iter().map(|(&k, &v)| (k, v)))
    }

    /// `A_00 + A_10 z + A_20 z^2 + ...`
    pub fn steady_state_poly(&self) -> Poly1 {
        Poly1::new((0..=self.degree).map(|n| self.coeff(n, 0)).collect())
    }

    /// `z''` at `(z, z')`.
    pub fn accel(&self, z: f64, zdot: f64) -> f64 {
        self.a
            .iter()
            .map(|(&(n, m), &c)| c * z.powi(n as i32) * zdot.powi(m as i32))
            .sum()
    }
}

fn zero_table(degree: u32) -> BTreeMap<Monomial, f64> {
    let mut a = BTreeMap::new();
    for n in 0..=degree {
        for m in 0..=(degree - n) {
            a.insert((n, m), 0.0);
        }
    }
    a
}

/// Expands the field in Liénard variables, keeping the exact affine inverse.
pub fn reduce(
    field: &PolyVectorField,
    transform: &TransformSpec,
    degree: u32,
) -> Result<LienardForm, LienardError> {
    reduce_with(field, transform, degree, OffsetMode::Retain)
}

pub fn reduce_with(
    field: &PolyVectorField,
    transform: &TransformSpec,
    degree: u32,
    mode: OffsetMode,
) -> Result<LienardForm, LienardError> {
    if degree < 2 {
        return Err(LienardError::DegreeTooSmall(degree));
    }
    let needed = field.p_poly().degree().max(field.q_poly().degree()).max(degree);
    if needed > REDUCTION_DEGREE_CAP {
        return Err(LienardError::DegreeOverflow {
            needed,
            cap: REDUCTION_DEGREE_CAP,
        });
    }
    let (c_l, c_m) = match mode {
        OffsetMode::Retain => (transform.c_l, transform.c_m),
        OffsetMode::Drop => (0.0, 0.0),
    };
    let negligible = transform.offsets_negligible();
    if mode == OffsetMode::Drop && !negligible {
        log::warn!(
            "dropping non-negligible offsets cL = {}, cM = {}",
            transform.c_l,
            transform.c_m
        );
    }
    // x = L(z, v), y = M(z, v) with v = z'
    let l = Poly2::affine(c_l, transform.c1, transform.c2);
    let m = Poly2::affine(c_m, transform.c3, transform.c4);
    let zdd = field
        .p_poly()
        .substitute(&l, &m)
        .scaled(transform.alpha[1])
        .add(&field.q_poly().substitute(&l, &m).scaled(transform.alpha[2]))
        .truncated(degree);

    let mut a = zero_table(degree);
    for ((n, k), c) in zdd.terms() {
        *a.get_mut(&(n, k)).expect("degree-bounded key") += c;
    }
    Ok(LienardForm {
        a,
        degree,
        transform: *transform,
        offsets: OffsetReport {
            c_l: transform.c_l,
            c_m: transform.c_m,
            dropped: mode == OffsetMode::Drop,
            negligible,
        },
    })
}

/// Real roots of `A_00 + A_10 z + sum_{n>1} A_n0 z^n`, ascending.
pub fn steady_states(lf: &LienardForm) -> Result<Vec<f64>, LienardError> {
    let p = lf.steady_state_poly();
    if p.is_zero() {
        return Err(LienardError::DegenerateSteadyState);
    }
    let tol = 1e-10 * (1.0 + p.max_abs_coeff());
    let roots: Vec<f64> = p
        .real_roots(tol)
        .into_iter()
        .filter(|&z| z.is_finite() && p.eval(z).abs() <= tol * (1.0 + z.abs()).powi(p.degree() as i32))
        .collect();
    if roots.is_empty() {
        Err(LienardError::NoRealRoot)
    } else {
        Ok(roots)
    }
}

/// Damping and restoring functions of `xi'' + F(xi, xi') xi' + G(xi) = 0`
/// with `xi = z - z_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Damping {
    /// `F(0, 0) = -[A_01 + sum_{n>=1} A_n1 z_s^n]`
    pub f00: f64,
    /// `G'(0) = -sum_{n>=1} n A_n0 z_s^(n-1)`
    pub omega_sq: f64,
    /// `F` in `(xi, xi')`.
    pub f_poly: Poly2,
    /// `G` in `xi`, with `G(0) = 0`.
    pub g_poly: Poly1,
}

/// Shifted coefficients of `sum A_nm (xi + z_s)^n v^m`.
pub fn shifted_table(lf: &LienardForm, z_s: f64) -> Poly2 {
    lf.as_poly().shift_first(z_s)
}

pub fn damping_and_restoring(lf: &LienardForm, z_s: f64) -> Damping {
    let f00 = -(0..=lf.degree)
        .rev()
        .fold(0.0, |acc, n| acc * z_s + lf.coeff(n, 1));
    let omega_sq = -(1..=lf.degree)
        .rev()
        .fold(0.0, |acc, n| acc * z_s + n as f64 * lf.coeff(n, 0));

    let shifted = shifted_table(lf, z_s);
    let mut f_poly = Poly2::zero();
    let mut g = vec![0.0; lf.degree as usize + 1];
    for ((n, m), c) in shifted.terms() {
        if m == 0 {
            g[n as usize] -= c;
        } else {
            f_poly.add_term(n, m - 1, -c);
        }
    }
    g[0] = 0.0;
    if g.len() > 1 {
        g[1] = omega_sq;
    }
    let mut f_map = f_poly.into_map();
    f_map.insert((0, 0), f00);
    Damping {
        f00,
        omega_sq,
        f_poly: Poly2::from_terms(f_map),
        g_poly: Poly1::new(g),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    LimitCycleCandidate,
    IsochronousCentreCandidate,
    StableFocusCandidate,
    Invalid,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Verdict {
    /// Sign test on `F(0,0)`; `omega_sq <= 0` is `Invalid` regardless.
    pub fn from_values(f00: f64, omega_sq: f64, band: f64) -> Self {
        if !(omega_sq > 0.0) || !f00.is_finite() {
            Verdict::Invalid
        } else if f00 < -band {
            Verdict::LimitCycleCandidate
        } else if f00 > band {
            Verdict::StableFocusCandidate
        } else {
            Verdict::IsochronousCentreCandidate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub z_s: f64,
    pub f00: f64,
    pub omega_sq: f64,
    pub verdict: Verdict,
    pub boundary_band: f64,
}

pub fn classify(lf: &LienardForm, z_s: f64, band: f64) -> Classification {
    let d = damping_and_restoring(lf, z_s);
    Classification {
        z_s,
        f00: d.f00,
        omega_sq: d.omega_sq,
        verdict: Verdict::from_values(d.f00, d.omega_sq, band),
        boundary_band: band,
    }
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:?}")
    }
}

/// Structured-text report: `A[n][m] = value` lines in `(n, m)` order, then
/// the classification.
pub fn report(lf: &LienardForm, cls: &Classification) -> String {
    let mut out = String::new();
    for (&(n, m), &c) in &lf.a {
        out.push_str(&format!("A[{n}][{m}] = {}\n", fmt_num(c)));
    }
    out.push_str(&format!("z_s = {}\n", fmt_num(cls.z_s)));
    out.push_str(&format!("F00 = {}\n", fmt_num(cls.f00)));
    out.push_str(&format!("omega_sq = {}\n", fmt_num(cls.omega_sq)));
    out.push_str(&format!("verdict = {}\n", cls.verdict));
    out
}
