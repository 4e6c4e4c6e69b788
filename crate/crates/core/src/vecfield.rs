//! Planar polynomial vector fields: parsing, evaluation, Jacobians and fixed
//! point search.
//!
//! A field is `dx = a0 + a1 x + a2 y + f(x, y)`, `dy = b0 + b1 x + b2 y + g(x, y)`
//! where `f` and `g` only hold monomials of total degree 2 through `max_degree`.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::poly::{push_signed_term, Monomial, Poly2};

pub const DEFAULT_MAX_DEGREE: u32 = 4;
pub const DEFAULT_FP_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("monomial x^{n} y^{m} has degree {} above the bound {bound}", n + m)]
    DegreeBound { n: u32, m: u32, bound: u32 },
    #[error("degree bound must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("coefficient of x^{n} y^{m} is not finite")]
    NonFinite { n: u32, m: u32 },
    #[error("nonlinear key x^{n} y^{m} has degree below 2")]
    NotNonlinear { n: u32, m: u32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: monomial x^{n} y^{m} exceeds degree bound {bound}")]
    DegreeBound {
        line: usize,
        col: usize,
        n: u32,
        m: u32,
        bound: u32,
    },
    #[error("{line}:{col}: duplicate monomial x^{n} y^{m}")]
    DuplicateMonomial {
        line: usize,
        col: usize,
        n: u32,
        m: u32,
    },
    #[error("{line}:{col}: duplicate definition of `{key}`")]
    DuplicateKey { line: usize, col: usize, key: String },
    #[error("missing equation `{0}`")]
    Missing(&'static str),
}

/// Planar polynomial system `dx/dt = P(x, y)`, `dy/dt = Q(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyVectorField {
    name: Option<String>,
    linear_x: [f64; 3],
    linear_y: [f64; 3],
    nonlinear_x: BTreeMap<Monomial, f64>,
    nonlinear_y: BTreeMap<Monomial, f64>,
    max_degree: u32,
}

impl PolyVectorField {
    pub fn new(
        linear_x: [f64; 3],
        linear_y: [f64; 3],
        nonlinear_x: BTreeMap<Monomial, f64>,
        nonlinear_y: BTreeMap<Monomial, f64>,
        max_degree: u32,
    ) -> Result<Self, FieldError> {
        if max_degree < 2 {
            return Err(FieldError::DegreeTooSmall(max_degree));
        }
        for (i, &c) in linear_x.iter().chain(linear_y.iter()).enumerate() {
            if !c.is_finite() {
                let (n, m) = [(0, 0), (1, 0), (0, 1)][i % 3];
                return Err(FieldError::NonFinite { n, m });
            }
        }
        for map in [&nonlinear_x, &nonlinear_y] {
            for (&(n, m), &c) in map {
                if n + m < 2 {
                    return Err(FieldError::NotNonlinear { n, m });
                }
                if n + m > max_degree {
                    return Err(FieldError::DegreeBound {
                        n,
                        m,
                        bound: max_degree,
                    });
                }
                if !c.is_finite() {
                    return Err(FieldError::NonFinite { n, m });
                }
            }
        }
        Ok(Self {
            name: None,
            linear_x,
            linear_y,
            nonlinear_x,
            nonlinear_y,
            max_degree,
        })
    }

    /// Builds a field from two full polynomials in `(x, y)`, splitting the
    /// affine part off.
    pub fn from_polys(p: &Poly2, q: &Poly2, max_degree: u32) -> Result<Self, FieldError> {
        let split = |poly: &Poly2| {
            let lin = [poly.coeff(0, 0), poly.coeff(1, 0), poly.coeff(0, 1)];
            let nl: BTreeMap<Monomial, f64> =
                poly.terms().filter(|((n, m), _)| n + m >= 2).collect();
            (lin, nl)
        };
        let (lx, nx) = split(p);
        let (ly, ny) = split(q);
        Self::new(lx, ly, nx, ny, max_degree)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn linear_x(&self) -> [f64; 3] {
        self.linear_x
    }

    pub fn linear_y(&self) -> [f64; 3] {
        self.linear_y
    }

    pub fn nonlinear_x(&self) -> &BTreeMap<Monomial, f64> {
        &self.nonlinear_x
    }

    pub fn nonlinear_y(&self) -> &BTreeMap<Monomial, f64> {
        &self.nonlinear_y
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    /// `P` as a full polynomial (affine part included).
    pub fn p_poly(&self) -> Poly2 {
        full_poly(self.linear_x, &self.nonlinear_x)
    }

    /// `Q` as a full polynomial (affine part included).
    pub fn q_poly(&self) -> Poly2 {
        full_poly(self.linear_y, &self.nonlinear_y)
    }

    pub fn evaluate(&self, x: f64, y: f64) -> (f64, f64) {
        (
            eval_component(self.linear_x, &self.nonlinear_x, x, y),
            eval_component(self.linear_y, &self.nonlinear_y, x, y),
        )
    }

    /// Exact partial derivatives `[[dP/dx, dP/dy], [dQ/dx, dQ/dy]]`.
    pub fn jacobian_at(&self, x: f64, y: f64) -> [[f64; 2]; 2] {
        let row = |lin: [f64; 3], nl: &BTreeMap<Monomial, f64>| {
            let mut dx = lin[1];
            let mut dy = lin[2];
            for (&(n, m), &c) in nl {
                if n > 0 {
                    dx += c * n as f64 * x.powi(n as i32 - 1) * y.powi(m as i32);
                }
                if m > 0 {
                    dy += c * m as f64 * x.powi(n as i32) * y.powi(m as i32 - 1);
                }
            }
            [dx, dy]
        };
        [
            row(self.linear_x, &self.nonlinear_x),
            row(self.linear_y, &self.nonlinear_y),
        ]
    }

    pub fn residual(&self, x: f64, y: f64) -> f64 {
        let (p, q) = self.evaluate(x, y);
        p.abs().max(q.abs())
    }

    /// Serializes to the model-file format accepted by [`parse_model`].
    pub fn to_model_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(&format!("name = {name}\n"));
        }
        out.push_str(&format!("degree = {}\n", self.max_degree));
        out.push_str(&format!(
            "dx = {}\n",
            format_component(self.linear_x, &self.nonlinear_x)
        ));
        out.push_str(&format!(
            "dy = {}\n",
            format_component(self.linear_y, &self.nonlinear_y)
        ));
        out
    }
}

impl fmt::Display for PolyVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_model_text())
    }
}

fn full_poly(lin: [f64; 3], nl: &BTreeMap<Monomial, f64>) -> Poly2 {
    let mut p = Poly2::affine(lin[0], lin[1], lin[2]);
    for (&(n, m), &c) in nl {
        p.add_term(n, m, c);
    }
    p
}

fn eval_component(lin: [f64; 3], nl: &BTreeMap<Monomial, f64>, x: f64, y: f64) -> f64 {
    let mut acc = lin[0] + lin[1] * x + lin[2] * y;
    for (&(n, m), &c) in nl {
        acc += c * x.powi(n as i32) * y.powi(m as i32);
    }
    acc
}

fn format_component(lin: [f64; 3], nl: &BTreeMap<Monomial, f64>) -> String {
    let mut out = String::new();
    let mut emit = |n: u32, m: u32, c: f64| {
        let mut factors = Vec::new();
        for (name, e) in [("x", n), ("y", m)] {
            match e {
                0 => {}
                1 => factors.push(name.to_string()),
                _ => factors.push(format!("{name}^{e}")),
            }
        }
        push_signed_term(&mut out, c, &factors);
    };
    // Linear coefficients are only written when nonzero; stored nonlinear zeros
    // are written so that "present but zero" survives a round trip.
    for (i, &(n, m)) in [(0, 0), (1, 0), (0, 1)].iter().enumerate() {
        if lin[i] != 0.0 {
            emit(n, m, lin[i]);
        }
    }
    for (&(n, m), &c) in nl {
        emit(n, m, c);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

// ---------------------------------------------------------------------------
// Parser

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Eq,
    Sep,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, raw_line) in text.lines().enumerate() {
        let line = li + 1;
        let content = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        };
        let chars: Vec<char> = content.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = match c {
                '+' => Some(Tok::Plus),
                '-' => Some(Tok::Minus),
                '*' => Some(Tok::Star),
                '^' => Some(Tok::Caret),
                '=' => Some(Tok::Eq),
                ';' => Some(Tok::Sep),
                _ => None,
            };
            if let Some(tok) = single {
                out.push(Spanned { tok, line, col });
                i += 1;
            } else if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                // optional exponent
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    line,
                    col,
                    msg: format!("invalid number `{s}`"),
                })?;
                out.push(Spanned {
                    tok: Tok::Num(v),
                    line,
                    col,
                });
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Spanned {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line,
                    col,
                });
            } else {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character `{c}`"),
                });
            }
        }
        out.push(Spanned {
            tok: Tok::Sep,
            line,
            col: chars.len() + 1,
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
}

struct ParsedTerm {
    n: u32,
    m: u32,
    coeff: f64,
    line: usize,
    col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map(|s| (s.line, s.col)).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn skip_seps(&mut self) {
        while matches!(self.peek(), Some(Spanned { tok: Tok::Sep, .. })) {
            self.pos += 1;
        }
    }

    fn at_statement_end(&self) -> bool {
        matches!(self.peek(), None | Some(Spanned { tok: Tok::Sep, .. }))
    }

    fn polynomial(&mut self) -> Result<Vec<ParsedTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let (line, col) = self.here();
        match self.peek().map(|s| &s.tok) {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        terms.push(self.term(sign, line, col)?);
        loop {
            let (line, col) = self.here();
            let sign = match self.peek().map(|s| &s.tok) {
                Some(Tok::Plus) => 1.0,
                Some(Tok::Minus) => -1.0,
                _ => break,
            };
            self.pos += 1;
            terms.push(self.term(sign, line, col)?);
        }
        if !self.at_statement_end() {
            return self.err("expected `+`, `-` or end of statement");
        }
        Ok(terms)
    }

    fn term(&mut self, sign: f64, line: usize, col: usize) -> Result<ParsedTerm, ParseError> {
        let mut coeff = sign;
        let mut n = 0;
        let mut m = 0;
        loop {
            match self.next() {
                Some(Spanned { tok: Tok::Num(v), .. }) => coeff *= v,
                Some(Spanned {
                    tok: Tok::Ident(id),
                    line: l,
                    col: c,
                }) => {
                    let exp = if matches!(self.peek(), Some(Spanned { tok: Tok::Caret, .. })) {
                        self.pos += 1;
                        match self.next() {
                            Some(Spanned { tok: Tok::Num(v), .. })
                                if v.fract() == 0.0 && (0.0..1e6).contains(&v) =>
                            {
                                v as u32
                            }
                            _ => {
                                self.pos -= 1;
                                return self.err("expected a non-negative integer exponent");
                            }
                        }
                    } else {
                        1
                    };
                    match id.as_str() {
                        "x" => n += exp,
                        "y" => m += exp,
                        other => {
                            return Err(ParseError::Syntax {
                                line: l,
                                col: c,
                                msg: format!("unknown variable `{other}` (expected x or y)"),
                            })
                        }
                    }
                }
                _ => {
                    self.pos -= 1;
                    return self.err("expected a coefficient, `x` or `y`");
                }
            }
            if matches!(self.peek(), Some(Spanned { tok: Tok::Star, .. })) {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(ParsedTerm {
            n,
            m,
            coeff,
            line,
            col,
        })
    }
}

/// Parses a model definition.
///
/// ```text
/// # Brusselator
/// name = brusselator
/// degree = 4
/// dx = 1 + x^2*y - 4.5*x
/// dy = 2.5*x - x^2*y
/// ```
///
/// Statements are separated by newlines or `;`. Unmentioned coefficients are
/// zero; a monomial may appear at most once per equation.
pub fn parse_model(text: &str) -> Result<PolyVectorField, ParseError> {
    let toks = lex(text)?;
    let end = toks.last().map(|s| (s.line, s.col)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };

    let mut name: Option<String> = None;
    let mut degree: Option<u32> = None;
    let mut dx: Option<Vec<ParsedTerm>> = None;
    let mut dy: Option<Vec<ParsedTerm>> = None;

    loop {
        p.skip_seps();
        let Some(head) = p.next() else { break };
        let key = match head.tok {
            Tok::Ident(s) => s,
            _ => {
                return Err(ParseError::Syntax {
                    line: head.line,
                    col: head.col,
                    msg: "expected `name`, `degree`, `dx` or `dy`".into(),
                })
            }
        };
        if !matches!(p.next(), Some(Spanned { tok: Tok::Eq, .. })) {
            p.pos -= 1;
            return p.err("expected `=`");
        }
        let dup = ParseError::DuplicateKey {
            line: head.line,
            col: head.col,
            key: key.clone(),
        };
        match key.as_str() {
            "name" => {
                if name.is_some() {
                    return Err(dup);
                }
                match p.next() {
                    Some(Spanned {
                        tok: Tok::Ident(id),
                        ..
                    }) => name = Some(id),
                    _ => {
                        p.pos -= 1;
                        return p.err("expected an identifier");
                    }
                }
                if !p.at_statement_end() {
                    return p.err("expected end of statement");
                }
            }
            "degree" => {
                if degree.is_some() {
                    return Err(dup);
                }
                match p.next() {
                    Some(Spanned { tok: Tok::Num(v), .. }) if v.fract() == 0.0 && v >= 0.0 => {
                        degree = Some(v as u32)
                    }
                    _ => {
                        p.pos -= 1;
                        return p.err("expected an integer degree");
                    }
                }
                if !p.at_statement_end() {
                    return p.err("expected end of statement");
                }
            }
            "dx" | "dy" => {
                let slot = if key == "dx" { &mut dx } else { &mut dy };
                if slot.is_some() {
                    return Err(dup);
                }
                *slot = Some(p.polynomial()?);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: head.line,
                    col: head.col,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    let degree = degree.unwrap_or(DEFAULT_MAX_DEGREE);
    if degree < 2 {
        return Err(ParseError::Syntax {
            line: 1,
            col: 1,
            msg: format!("degree must be at least 2, got {degree}"),
        });
    }
    let collect = |terms: Vec<ParsedTerm>| -> Result<([f64; 3], BTreeMap<Monomial, f64>), ParseError> {
        let mut lin = [0.0; 3];
        let mut seen = BTreeMap::new();
        let mut nl = BTreeMap::new();
        for t in terms {
            if t.n + t.m > degree {
                return Err(ParseError::DegreeBound {
                    line: t.line,
                    col: t.col,
                    n: t.n,
                    m: t.m,
                    bound: degree,
                });
            }
            if seen.insert((t.n, t.m), ()).is_some() {
                return Err(ParseError::DuplicateMonomial {
                    line: t.line,
                    col: t.col,
                    n: t.n,
                    m: t.m,
                });
            }
            match (t.n, t.m) {
                (0, 0) => lin[0] = t.coeff,
                (1, 0) => lin[1] = t.coeff,
                (0, 1) => lin[2] = t.coeff,
                key => {
                    nl.insert(key, t.coeff);
                }
            }
        }
        Ok((lin, nl))
    };
    let (lx, nx) = collect(dx.ok_or(ParseError::Missing("dx"))?)?;
    let (ly, ny) = collect(dy.ok_or(ParseError::Missing("dy"))?)?;
    let field = PolyVectorField::new(lx, ly, nx, ny, degree).map_err(|e| ParseError::Syntax {
        line: 1,
        col: 1,
        msg: e.to_string(),
    })?;
    Ok(match name {
        Some(n) => field.with_name(n),
        None => field,
    })
}

// ---------------------------------------------------------------------------
// Fixed points

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenKind {
    StableFocus,
    UnstableFocus,
    Centre,
    StableNode,
    UnstableNode,
    Saddle,
}

impl fmt::Display for EigenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Linear type of a fixed point from the Jacobian's trace and determinant.
///
/// A positive-determinant point whose trace lies within
/// `1e-12 * (1 + |det|)` of zero is reported as `Centre`.
pub fn classify_jacobian(j: &[[f64; 2]; 2]) -> EigenKind {
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = trace * trace - 4.0 * det;
    if det < 0.0 {
        return EigenKind::Saddle;
    }
    if det > 0.0 && trace.abs() <= 1e-12 * (1.0 + det.abs()) {
        return EigenKind::Centre;
    }
    let focus = disc < 0.0;
    match (focus, trace < 0.0) {
        (true, true) => EigenKind::StableFocus,
        (true, false) => EigenKind::UnstableFocus,
        (false, true) => EigenKind::StableNode,
        (false, false) => EigenKind::UnstableNode,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub x: f64,
    pub y: f64,
    pub jacobian: [[f64; 2]; 2],
    pub eigen_kind: EigenKind,
    pub residual: f64,
}

impl FixedPoint {
    pub fn trace(&self) -> f64 {
        self.jacobian[0][0] + self.jacobian[1][1]
    }

    pub fn det(&self) -> f64 {
        self.jacobian[0][0] * self.jacobian[1][1] - self.jacobian[0][1] * self.jacobian[1][0]
    }

    /// Builds the record at `(x, y)` without searching.
    pub fn at(field: &PolyVectorField, x: f64, y: f64) -> Self {
        let jacobian = field.jacobian_at(x, y);
        Self {
            x,
            y,
            jacobian,
            eigen_kind: classify_jacobian(&jacobian),
            residual: field.residual(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl SearchBox {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        let sx = 1e-9 * (self.x_hi - self.x_lo);
        let sy = 1e-9 * (self.y_hi - self.y_lo);
        x >= self.x_lo - sx && x <= self.x_hi + sx && y >= self.y_lo - sy && y <= self.y_hi + sy
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("search box is degenerate")]
    DegenerateBox,
    #[error("grid must have at least 2 points per axis, got {0}")]
    GridTooSmall(usize),
}

/// Result of a grid-seeded Newton scan. Seeds that failed to converge are
/// counted, not fatal.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointScan {
    pub points: Vec<FixedPoint>,
    pub non_converged: usize,
}

const MAX_NEWTON_ITERS: usize = 100;
const MAX_HALVINGS: usize = 40;

fn newton_from(field: &PolyVectorField, mut x: f64, mut y: f64, fp_tol: f64) -> Option<(f64, f64)> {
    let mut res = field.residual(x, y);
    for _ in 0..MAX_NEWTON_ITERS {
        if res <= fp_tol {
            return Some((x, y));
        }
        let (p, q) = field.evaluate(x, y);
        let j = field.jacobian_at(x, y);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = (j[1][1] * p - j[0][1] * q) / det;
        let dy = (-j[1][0] * p + j[0][0] * q) / det;
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..=MAX_HALVINGS {
            let (nx, ny) = (x - step * dx, y - step * dy);
            let nres = field.residual(nx, ny);
            if nres.is_finite() && nres < res {
                x = nx;
                y = ny;
                res = nres;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (res <= fp_tol).then_some((x, y))
}

/// Damped Newton from a uniform `grid x grid` lattice of seeds over `bounds`.
///
/// Results are de-duplicated within `1e-8` and sorted lexicographically.
pub fn find_fixed_points(
    field: &PolyVectorField,
    bounds: SearchBox,
    grid: usize,
) -> Result<FixedPointScan, SearchError> {
    find_fixed_points_tol(field, bounds, grid, DEFAULT_FP_TOL)
}

pub fn find_fixed_points_tol(
    field: &PolyVectorField,
    bounds: SearchBox,
    grid: usize,
    fp_tol: f64,
) -> Result<FixedPointScan, SearchError> {
    if !(bounds.x_hi > bounds.x_lo && bounds.y_hi > bounds.y_lo) {
        return Err(SearchError::DegenerateBox);
    }
    if grid < 2 {
        return Err(SearchError::GridTooSmall(grid));
    }
    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut non_converged = 0;
    for i in 0..grid {
        for j in 0..grid {
            let sx = bounds.x_lo + (bounds.x_hi - bounds.x_lo) * i as f64 / (grid - 1) as f64;
            let sy = bounds.y_lo + (bounds.y_hi - bounds.y_lo) * j as f64 / (grid - 1) as f64;
            match newton_from(field, sx, sy, fp_tol) {
                Some((x, y)) if bounds.contains(x, y) => {
                    if !found
                        .iter()
                        .any(|&(fx, fy)| (fx - x).abs() <= 1e-8 && (fy - y).abs() <= 1e-8)
                    {
                        found.push((x, y));
                    }
                }
                Some(_) => {}
                None => non_converged += 1,
            }
        }
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(FixedPointScan {
        points: found
            .into_iter()
            .map(|(x, y)| FixedPoint::at(field, x, y))
            .collect(),
        non_converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn harmonic() -> PolyVectorField {
        parse_model("dx = y; dy = -x").unwrap()
    }

    fn glycolytic(a: f64, b: f64) -> PolyVectorField {
        parse_model(&format!(
            "dx = -1*x + {a}*y + x^2*y\ndy = {b} - {a}*y - x^2*y"
        ))
        .unwrap()
    }

    #[test]
    fn parses_harmonic() {
        let f = harmonic();
        assert_eq!(f.linear_x(), [0.0, 0.0, 1.0]);
        assert_eq!(f.linear_y(), [0.0, -1.0, 0.0]);
        assert!(f.nonlinear_x().is_empty() && f.nonlinear_y().is_empty());
        assert_eq!(f.max_degree(), DEFAULT_MAX_DEGREE);
    }

    #[test]
    fn parses_brusselator() {
        let f = parse_model("dx = 1 + x^2*y - 4.5*x; dy = 2.5*x - x^2*y").unwrap();
        assert_eq!(f.linear_x(), [1.0, -4.5, 0.0]);
        assert_eq!(f.linear_y(), [0.0, 2.5, 0.0]);
        assert_eq!(f.nonlinear_x().get(&(2, 1)), Some(&1.0));
        assert_eq!(f.nonlinear_y().get(&(2, 1)), Some(&-1.0));
        assert_eq!(f.nonlinear_x().len(), 1);
    }

    #[test]
    fn degree_bound_violation() {
        let err = parse_model("degree = 4\ndx = x^5\ndy = 0").unwrap_err();
        assert!(matches!(
            err,
            ParseError::DegreeBound {
                line: 2,
                n: 5,
                m: 0,
                bound: 4,
                ..
            }
        ));
        assert!(matches!(
            parse_model("dx = x^5; dy = y").unwrap_err(),
            ParseError::DegreeBound { .. }
        ));
    }

    #[test]
    fn duplicate_monomial_and_key() {
        assert!(matches!(
            parse_model("dx = x + 2*x\ndy = y").unwrap_err(),
            ParseError::DuplicateMonomial { line: 1, n: 1, m: 0, .. }
        ));
        assert!(matches!(
            parse_model("dx = x\ndx = y\ndy = y").unwrap_err(),
            ParseError::DuplicateKey { line: 2, .. }
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_model("dx = 1 +\ndy = y").unwrap_err() {
            ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (1, 9)),
            e => panic!("unexpected {e:?}"),
        }
        match parse_model("dx = 2*z\ndy = y").unwrap_err() {
            ParseError::Syntax { line, col, .. } => assert_eq!((line, col), (1, 8)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_model("dx = x").unwrap_err(),
            ParseError::Missing("dy")
        ));
    }

    #[test]
    fn comments_names_and_exponent_literals() {
        let f = parse_model("# comment\nname = demo # trailing\ndegree = 3\ndx = 1e-3*x^3 ; dy = -y").unwrap();
        assert_eq!(f.name(), Some("demo"));
        assert_eq!(f.max_degree(), 3);
        assert_eq!(f.nonlinear_x().get(&(3, 0)), Some(&1e-3));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(harmonic().evaluate(1.0, 0.0), (0.0, -1.0));
        let b = parse_model("dx = 1 + x^2*y - 4.5*x; dy = 2.5*x - x^2*y").unwrap();
        let (p, q) = b.evaluate(0.5, 5.0);
        assert!(p.abs() < 1e-15 && q.abs() < 1e-15);
        let g = glycolytic(0.11, 0.6);
        let (p, q) = g.evaluate(0.6, 0.6 / 0.47);
        assert!(p.abs() <= 1e-12 && q.abs() <= 1e-12, "{p} {q}");
    }

    #[test]
    fn jacobian_examples() {
        assert_eq!(harmonic().jacobian_at(3.0, -2.0), [[0.0, 1.0], [-1.0, 0.0]]);
        let j = glycolytic(0.0, 1.0).jacobian_at(1.0, 1.0);
        assert_eq!(j, [[1.0, 1.0], [-2.0, -1.0]]);
        assert_eq!(classify_jacobian(&j), EigenKind::Centre);
        let b = parse_model("dx = 1 + x^2*y - 4.25*x; dy = 2.25*x - x^2*y").unwrap();
        let j = b.jacobian_at(0.5, 4.5);
        assert!((j[0][0] + j[1][1]).abs() < 1e-15);
    }

    #[test]
    fn harmonic_fixed_point() {
        let scan = find_fixed_points(&harmonic(), SearchBox::new(-2.0, 2.0, -2.0, 2.0), 5).unwrap();
        assert_eq!(scan.points.len(), 1);
        let fp = &scan.points[0];
        assert!(fp.x.abs() < 1e-12 && fp.y.abs() < 1e-12);
        assert_eq!(fp.eigen_kind, EigenKind::Centre);
    }

    #[test]
    fn glycolytic_fixed_points() {
        let scan = find_fixed_points(&glycolytic(0.11, 0.6), SearchBox::new(0.0, 3.0, 0.0, 3.0), 8).unwrap();
        assert_eq!(scan.points.len(), 1);
        let fp = &scan.points[0];
        assert!((fp.x - 0.6).abs() < 1e-9);
        assert!((fp.y - 0.6 / 0.47).abs() < 1e-9);
        assert!((fp.y - 1.27660).abs() < 1e-5);
        assert_eq!(fp.eigen_kind, EigenKind::UnstableFocus);
        assert!(fp.residual <= DEFAULT_FP_TOL);

        let scan = find_fixed_points(&glycolytic(0.13, 0.6), SearchBox::new(0.0, 3.0, 0.0, 3.0), 8).unwrap();
        assert_eq!(scan.points.len(), 1);
        assert!((scan.points[0].y - 1.22449).abs() < 1e-5);
        assert_eq!(scan.points[0].eigen_kind, EigenKind::StableFocus);
    }

    #[test]
    fn degenerate_search_inputs() {
        let b = SearchBox::new(0.0, 0.0, 0.0, 1.0);
        assert_eq!(find_fixed_points(&harmonic(), b, 4), Err(SearchError::DegenerateBox));
        let b = SearchBox::new(0.0, 1.0, 0.0, 1.0);
        assert_eq!(find_fixed_points(&harmonic(), b, 1), Err(SearchError::GridTooSmall(1)));
        // x^2 + 1 has no real zero
        let f = parse_model("dx = 1 + x^2; dy = y").unwrap();
        let scan = find_fixed_points(&f, SearchBox::new(-1.0, 1.0, -1.0, 1.0), 4).unwrap();
        assert!(scan.points.is_empty());
        assert!(scan.non_converged > 0);
    }

    #[test]
    fn classify_jacobian_cases() {
        assert_eq!(classify_jacobian(&[[1.0, 0.0], [0.0, -1.0]]), EigenKind::Saddle);
        assert_eq!(classify_jacobian(&[[-1.0, 0.0], [0.0, -2.0]]), EigenKind::StableNode);
        assert_eq!(classify_jacobian(&[[1.0, 0.0], [0.0, 2.0]]), EigenKind::UnstableNode);
        assert_eq!(classify_jacobian(&[[-0.1, 1.0], [-1.0, -0.1]]), EigenKind::StableFocus);
        assert_eq!(classify_jacobian(&[[0.1, 1.0], [-1.0, 0.1]]), EigenKind::UnstableFocus);
    }

    fn naive_eval(f: &PolyVectorField, x: f64, y: f64) -> (f64, f64) {
        // independent route: expand monomials by repeated multiplication
        let mono = |n: u32, m: u32| {
            let mut v = 1.0;
            for _ in 0..n {
                v *= x;
            }
            for _ in 0..m {
                v *= y;
            }
            v
        };
        let comp = |lin: [f64; 3], nl: &BTreeMap<Monomial, f64>| {
            let mut terms = vec![lin[0], lin[1] * x, lin[2] * y];
            terms.extend(nl.iter().map(|(&(n, m), &c)| c * mono(n, m)));
            terms.iter().rev().sum::<f64>()
        };
        (comp(f.linear_x(), f.nonlinear_x()), comp(f.linear_y(), f.nonlinear_y()))
    }

    fn arb_field() -> impl Strategy<Value = PolyVectorField> {
        let coeff = -5.0..5.0f64;
        let keys = prop::collection::btree_map((0u32..=4, 0u32..=4), coeff.clone(), 0..6);
        (
            prop::array::uniform3(coeff.clone()),
            prop::array::uniform3(coeff),
            keys.clone(),
            keys,
        )
            .prop_map(|(lx, ly, nx, ny)| {
                let keep = |m: BTreeMap<Monomial, f64>| {
                    m.into_iter()
                        .filter(|((n, k), _)| n + k >= 2 && n + k <= 4)
                        .collect::<BTreeMap<_, _>>()
                };
                PolyVectorField::new(lx, ly, keep(nx), keep(ny), 4).unwrap()
            })
    }

    proptest! {
        #[test]
        fn evaluate_matches_naive(f in arb_field(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let (p, q) = f.evaluate(x, y);
            let (np, nq) = naive_eval(&f, x, y);
            let scale = 1.0 + p.abs().max(q.abs()) * 1e2;
            prop_assert!((p - np).abs() <= 1e-12 * scale);
            prop_assert!((q - nq).abs() <= 1e-12 * scale);
        }

        #[test]
        fn jacobian_matches_central_differences(f in arb_field(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
            let j = f.jacobian_at(x, y);
            let h = 1e-5;
            let (pxp, qxp) = f.evaluate(x + h, y);
            let (pxm, qxm) = f.evaluate(x - h, y);
            let (pyp, qyp) = f.evaluate(x, y + h);
            let (pym, qym) = f.evaluate(x, y - h);
            let fd = [
                [(pxp - pxm) / (2.0 * h), (pyp - pym) / (2.0 * h)],
                [(qxp - qxm) / (2.0 * h), (qyp - qym) / (2.0 * h)],
            ];
            for r in 0..2 {
                for c in 0..2 {
                    let err = (j[r][c] - fd[r][c]).abs();
                    prop_assert!(err <= 1e-6 * (1.0 + j[r][c].abs()), "{r}{c}: {} vs {}", j[r][c], fd[r][c]);
                }
            }
        }

        #[test]
        fn model_text_round_trips(f in arb_field()) {
            let text = f.to_model_text();
            let back = parse_model(&text).unwrap();
            prop_assert_eq!(back.nonlinear_x(), f.nonlinear_x());
            prop_assert_eq!(back.nonlinear_y(), f.nonlinear_y());
            prop_assert_eq!(back.linear_x(), f.linear_x());
            prop_assert_eq!(back.linear_y(), f.linear_y());
            let again = parse_model(&back.to_model_text()).unwrap();
            prop_assert_eq!(again, back);
        }

        #[test]
        fn fixed_points_meet_residual(a in 0.0..0.3f64, b in 0.2..1.2f64) {
            let scan = find_fixed_points(&glycolytic(a, b), SearchBox::new(0.0, 3.0, 0.0, 8.0), 6).unwrap();
            for fp in &scan.points {
                prop_assert!(fp.residual <= DEFAULT_FP_TOL);
            }
        }
    }
}
