//! Built-in oscillators with their closed-form reductions.
//!
//! Each preset yields the kinetic field, the `(z, u)` transform that brings it
//! to Liénard form, and the closed-form steady state, damping constant and
//! restoring slope. The closed forms double as golden values for the generic
//! pipeline in [`crate::lienard`] (see [`verify_reduction`]).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::lienard::{
    self, classify, make_transform, reduce, steady_states, LienardError, LienardForm, TransformSpec,
    DEFAULT_BAND,
};
use crate::poly::{Monomial, Poly2};
use crate::vecfield::PolyVectorField;

pub const VERIFY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown parameter `{name}` for model {family}")]
    UnknownParameter { family: ModelFamily, name: String },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("{quantity}: generic {generic} vs closed form {closed} (relative error {rel:e})")]
    MismatchBeyondTolerance {
        quantity: String,
        generic: f64,
        closed: f64,
        rel: f64,
    },
    #[error(transparent)]
    Lienard(#[from] LienardError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelFamily {
    Brusselator,
    Glycolytic,
    VanDerPol,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 3] = [
        ModelFamily::Brusselator,
        ModelFamily::Glycolytic,
        ModelFamily::VanDerPol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Brusselator => "brusselator",
            ModelFamily::Glycolytic => "glycolytic",
            ModelFamily::VanDerPol => "vanderpol",
        }
    }

    /// Parameter names with defaults and a one-line description.
    pub fn schema(self) -> &'static [(&'static str, f64, &'static str)] {
        match self {
            ModelFamily::Brusselator => &[
                ("mu", 1.0, "scale of a1 = mu(1-beta)a + mu*beta"),
                ("a", 1.0, "feed parameter entering a1"),
                ("beta", 0.6, "mixing parameter entering a1"),
                ("alpha", 2.0, "linear decay rate of x (alpha > 0)"),
                ("b", 2.5, "conversion rate x -> y (b > 0)"),
            ],
            ModelFamily::Glycolytic => &[
                ("a", 0.11, "rate of non-catalysed side steps (a >= 0)"),
                ("b", 0.6, "ATP influx (b > 0)"),
            ],
            ModelFamily::VanDerPol => &[
                ("epsilon", 0.1, "damping strength"),
                ("a", 0.5, "damping threshold; cycle radius ~ 2|a|"),
                ("omega", 1.0, "linear frequency (omega > 0)"),
            ],
        }
    }

    /// Fills defaults and rejects unknown names.
    pub fn params(self, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, ModelError> {
        let schema = self.schema();
        for name in given.keys() {
            if !schema.iter().any(|(n, _, _)| n == name) {
                return Err(ModelError::UnknownParameter {
                    family: self,
                    name: name.clone(),
                });
            }
        }
        Ok(schema
            .iter()
            .map(|&(n, d, _)| (n.to_string(), given.get(n).copied().unwrap_or(d)))
            .collect())
    }

    pub fn build(self, given: &BTreeMap<String, f64>) -> Result<ModelOutput, ModelError> {
        let p = self.params(given)?;
        match self {
            ModelFamily::Brusselator => brusselator(&BrusselatorParams {
                mu: p["mu"],
                a: p["a"],
                beta: p["beta"],
                alpha: p["alpha"],
                b: p["b"],
            }),
            ModelFamily::Glycolytic => glycolytic(&GlycolyticParams { a: p["a"], b: p["b"] }),
            ModelFamily::VanDerPol => vanderpol(&VdPParams {
                epsilon: p["epsilon"],
                a: p["a"],
                omega: p["omega"],
            }),
        }
    }

    /// Closed form only, without building the field. Used by parameter sweeps.
    pub fn closed_form(self, given: &BTreeMap<String, f64>) -> Result<ClosedForm, ModelError> {
        let p = self.params(given)?;
        match self {
            ModelFamily::Brusselator => BrusselatorParams {
                mu: p["mu"],
                a: p["a"],
                beta: p["beta"],
                alpha: p["alpha"],
                b: p["b"],
            }
            .closed_form(),
            ModelFamily::Glycolytic => GlycolyticParams { a: p["a"], b: p["b"] }.closed_form(),
            ModelFamily::VanDerPol => VdPParams {
                epsilon: p["epsilon"],
                a: p["a"],
                omega: p["omega"],
            }
            .closed_form(),
        }
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "brusselator" => Ok(ModelFamily::Brusselator),
            "glycolytic" => Ok(ModelFamily::Glycolytic),
            "vanderpol" | "van-der-pol" | "vdp" => Ok(ModelFamily::VanDerPol),
            _ => Err(ModelError::UnknownModel(s.to_string())),
        }
    }
}

/// Closed-form reduction of a built-in model.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub z_s: f64,
    pub f00: f64,
    pub omega_sq: f64,
    /// `F(0,0) < 0`, written in the model's own parameters.
    pub lc_condition: bool,
    pub fixed_point: (f64, f64),
    /// Signed quantity that vanishes exactly on the `F(0,0) = 0` boundary.
    pub boundary_residual: f64,
    /// Liénard coefficients as printed for the model.
    pub a_table: BTreeMap<Monomial, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutput {
    pub family: ModelFamily,
    pub field: PolyVectorField,
    pub transform: TransformSpec,
    pub closed: ClosedForm,
    /// Limit-cycle radius predicted by the first-order amplitude flow.
    pub rg_radius: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::InvalidParams(msg.into())
}

fn check_finite(vals: &[(&str, f64)]) -> Result<(), ModelError> {
    for (n, v) in vals {
        if !v.is_finite() {
            return Err(invalid(format!("{n} must be finite")));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrusselatorParams {
    pub mu: f64,
    pub a: f64,
    pub beta: f64,
    pub alpha: f64,
    pub b: f64,
}

impl Default for BrusselatorParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            a: 1.0,
            beta: 0.6,
            alpha: 2.0,
            b: 2.5,
        }
    }
}

impl BrusselatorParams {
    pub fn a1(&self) -> f64 {
        self.mu * (1.0 - self.beta) * self.a + self.mu * self.beta
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite(&[
            ("mu", self.mu),
            ("a", self.a),
            ("beta", self.beta),
            ("alpha", self.alpha),
            ("b", self.b),
        ])?;
        let threshold = self.beta / (1.0 - self.beta);
        let consistent =
            (self.mu > 0.0 && self.a < threshold) || (self.mu < 0.0 && self.a > threshold);
        if !consistent {
            return Err(invalid(format!(
                "need mu > 0 and a < beta/(1-beta) = {threshold}, or mu < 0 and a > beta/(1-beta)"
            )));
        }
        if !(self.a1() > 0.0) {
            return Err(invalid(format!("a1 = {} must be positive", self.a1())));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid("alpha must be positive"));
        }
        if !(self.b > 0.0) {
            return Err(invalid("b must be positive"));
        }
        Ok(())
    }

    pub fn closed_form(&self) -> Result<ClosedForm, ModelError> {
        self.validate()?;
        let (a1, al, b) = (self.a1(), self.alpha, self.b);
        let al2 = al * al;
        let z_s = al / (a1 * a1) * (b * a1 + a1 * a1 * a1 / al2);
        let f00 = -b + a1 * a1 / al2 + al;
        let a_table = BTreeMap::from([
            ((0, 0), b * a1 + a1 * a1 * a1 / al2),
            ((1, 0), -a1 * a1 / al),
            ((0, 1), -(al + b + 3.0 * a1 * a1 / al2)),
            ((1, 1), 2.0 * a1 / al),
            ((0, 2), 3.0 * a1 / al2),
            ((0, 3), -1.0 / al2),
            ((1, 2), -1.0 / al),
        ]);
        Ok(ClosedForm {
            z_s,
            f00,
            omega_sq: a1 * a1 / al,
            lc_condition: a1 * a1 < (b - al) * al2,
            fixed_point: (a1 / al, b * al / a1),
            boundary_residual: a1 * a1 - (b - al) * al2,
            a_table,
        })
    }
}

/// `x' = a1 + x^2 y - (alpha + b) x`, `y' = b x - x^2 y` with `z = x + y`,
/// `u = a1 - alpha x`.
pub fn brusselator(p: &BrusselatorParams) -> Result<ModelOutput, ModelError> {
    let closed = p.closed_form()?;
    let (a1, al, b) = (p.a1(), p.alpha, p.b);
    let px = Poly2::from_terms([((0, 0), a1), ((1, 0), -(al + b)), ((2, 1), 1.0)]);
    let qy = Poly2::from_terms([((1, 0), b), ((2, 1), -1.0)]);
    let field = PolyVectorField::from_polys(&px, &qy, 4)
        .map_err(|e| invalid(e.to_string()))?
        .with_name("brusselator");
    let transform = make_transform(&field, [a1, -al, 0.0], [0.0, 1.0, 1.0])?;
    Ok(ModelOutput {
        family: ModelFamily::Brusselator,
        field,
        transform,
        closed,
        rg_radius: None,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlycolyticParams {
    pub a: f64,
    pub b: f64,
}

impl GlycolyticParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite(&[("a", self.a), ("b", self.b)])?;
        if !(self.a >= 0.0) {
            return Err(invalid("a must be non-negative"));
        }
        if !(self.b > 0.0) {
            return Err(invalid("b must be positive"));
        }
        Ok(())
    }

    /// `(a + b^2)^2 + (a - b^2)`, zero on the Hopf curve.
    pub fn hopf_residual(&self) -> f64 {
        let s = self.a + self.b * self.b;
        s * s + (self.a - self.b * self.b)
    }

    pub fn closed_form(&self) -> Result<ClosedForm, ModelError> {
        self.validate()?;
        let (a, b) = (self.a, self.b);
        let s = a + b * b;
        let f00 = s + (a - b * b) / s;
        let a_table = BTreeMap::from([
            ((0, 0), b + a * b + b * b * b),
            ((1, 0), -s),
            ((0, 1), -(1.0 + a + 3.0 * b * b)),
            ((1, 1), 2.0 * b),
            ((0, 2), 3.0 * b),
            ((1, 2), -1.0),
            ((0, 3), -1.0),
        ]);
        Ok(ClosedForm {
            z_s: b + b / s,
            f00,
            omega_sq: s,
            lc_condition: f00 < 0.0,
            fixed_point: (b, b / s),
            boundary_residual: self.hopf_residual(),
            a_table,
        })
    }
}

/// `x' = -x + (a + x^2) y`, `y' = b - (a + x^2) y` with `z = x + y`, `u = b - x`.
pub fn glycolytic(p: &GlycolyticParams) -> Result<ModelOutput, ModelError> {
    let closed = p.closed_form()?;
    let (a, b) = (p.a, p.b);
    let px = Poly2::from_terms([((1, 0), -1.0), ((0, 1), a), ((2, 1), 1.0)]);
    let qy = Poly2::from_terms([((0, 0), b), ((0, 1), -a), ((2, 1), -1.0)]);
    let field = PolyVectorField::from_polys(&px, &qy, 4)
        .map_err(|e| invalid(e.to_string()))?
        .with_name("glycolytic");
    let transform = make_transform(&field, [b, -1.0, 0.0], [0.0, 1.0, 1.0])?;
    Ok(ModelOutput {
        family: ModelFamily::Glycolytic,
        field,
        transform,
        closed,
        rg_radius: None,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdPParams {
    pub epsilon: f64,
    pub a: f64,
    pub omega: f64,
}

impl VdPParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        check_finite(&[("epsilon", self.epsilon), ("a", self.a), ("omega", self.omega)])?;
        if !(self.omega > 0.0) {
            return Err(invalid("omega must be positive"));
        }
        Ok(())
    }

    pub fn closed_form(&self) -> Result<ClosedForm, ModelError> {
        self.validate()?;
        let (e, a, w) = (self.epsilon, self.a, self.omega);
        let f00 = -e * a * a;
        let mut a_table = BTreeMap::from([((1, 0), -w * w), ((0, 1), e * a * a), ((2, 1), -e)]);
        a_table.retain(|_, v| *v != 0.0);
        Ok(ClosedForm {
            z_s: 0.0,
            f00,
            omega_sq: w * w,
            lc_condition: f00 < 0.0,
            fixed_point: (0.0, 0.0),
            boundary_residual: f00,
            a_table,
        })
    }
}

/// `x' = y`, `y' = -eps y (x^2 - a^2) - omega^2 x`; already of Liénard type,
/// so the transform is `z = x`, `u = y`.
pub fn vanderpol(p: &VdPParams) -> Result<ModelOutput, ModelError> {
    let closed = p.closed_form()?;
    let (e, a, w) = (p.epsilon, p.a, p.omega);
    let px = Poly2::from_terms([((0, 1), 1.0)]);
    let qy = Poly2::from_terms([((1, 0), -w * w), ((0, 1), e * a * a), ((2, 1), -e)]);
    let field = PolyVectorField::from_polys(&px, &qy, 4)
        .map_err(|e| invalid(e.to_string()))?
        .with_name("vanderpol");
    let transform = make_transform(&field, [0.0, 0.0, 1.0], [0.0, 1.0, 0.0])?;
    Ok(ModelOutput {
        family: ModelFamily::VanDerPol,
        field,
        transform,
        closed,
        rg_radius: (a != 0.0).then(|| 2.0 * a.abs()),
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct QuantityDiff {
    pub quantity: String,
    pub generic: f64,
    pub closed: f64,
    pub rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub diffs: Vec<QuantityDiff>,
    pub max_rel_err: f64,
    pub form: LienardForm,
}

fn rel_err(generic: f64, closed: f64, scale: f64) -> f64 {
    let denom = closed.abs().max(scale);
    if denom == 0.0 {
        (generic - closed).abs()
    } else {
        (generic - closed).abs() / denom
    }
}

/// Runs the generic reduction on the model's field and transform and diffs
/// every quantity against the closed form.
///
/// Errors are relative to the magnitude of the terms that enter each
/// quantity, so values that cancel to (near) zero are not penalised for
/// rounding in the summands.
pub fn verify_reduction(model: &ModelOutput) -> Result<VerificationReport, ModelError> {
    verify_reduction_tol(model, VERIFY_TOL)
}

pub fn verify_reduction_tol(model: &ModelOutput, tol: f64) -> Result<VerificationReport, ModelError> {
    let lf = reduce(&model.field, &model.transform, model.field.max_degree())?;
    let roots = steady_states(&lf)?;
    let closed = &model.closed;
    let z_s = roots
        .iter()
        .copied()
        .min_by(|a, b| (a - closed.z_s).abs().total_cmp(&(b - closed.z_s).abs()))
        .expect("non-empty roots");
    let cls = classify(&lf, z_s, DEFAULT_BAND);

    let table_scale = closed.a_table.values().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let mut diffs = Vec::new();
    for (&(n, m), &generic) in lf.table() {
        let want = closed.a_table.get(&(n, m)).copied().unwrap_or(0.0);
        diffs.push(QuantityDiff {
            quantity: format!("A[{n}][{m}]"),
            generic,
            closed: want,
            rel: rel_err(generic, want, table_scale),
        });
    }
    let a00 = lf.coeff(0, 0).abs();
    diffs.push(QuantityDiff {
        quantity: "z_s".into(),
        generic: z_s,
        closed: closed.z_s,
        rel: rel_err(z_s, closed.z_s, a00 / lf.coeff(1, 0).abs().max(f64::MIN_POSITIVE)),
    });
    let f_scale: f64 = (0..=lf.degree)
        .map(|n| (lf.coeff(n, 1) * z_s.powi(n as i32)).abs())
        .sum();
    diffs.push(QuantityDiff {
        quantity: "F00".into(),
        generic: cls.f00,
        closed: closed.f00,
        rel: rel_err(cls.f00, closed.f00, f_scale),
    });
    let w_scale: f64 = (1..=lf.degree)
        .map(|n| (n as f64 * lf.coeff(n, 0) * z_s.powi(n as i32 - 1)).abs())
        .sum();
    diffs.push(QuantityDiff {
        quantity: "omega_sq".into(),
        generic: cls.omega_sq,
        closed: closed.omega_sq,
        rel: rel_err(cls.omega_sq, closed.omega_sq, w_scale),
    });

    let max_rel_err = diffs.iter().fold(0.0_f64, |acc, d| acc.max(d.rel));
    if let Some(worst) = diffs.iter().find(|d| !(d.rel <= tol)) {
        return Err(ModelError::MismatchBeyondTolerance {
            quantity: worst.quantity.clone(),
            generic: worst.generic,
            closed: worst.closed,
            rel: worst.rel,
        });
    }
    Ok(VerificationReport {
        diffs,
        max_rel_err,
        form: lf,
    })
}

/// Catalog listing for `models list`.
pub fn catalog() -> String {
    let mut out = String::new();
    for fam in ModelFamily::ALL {
        out.push_str(&format!("{fam}\n"));
        for (n, d, desc) in fam.schema() {
            out.push_str(&format!("  {n:<8} default {:<6} {desc}\n", lienard::fmt_num(*d)));
        }
    }
    out
}
