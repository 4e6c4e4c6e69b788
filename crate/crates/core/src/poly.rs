//! Sparse bivariate and dense univariate polynomials with real coefficients.
//!
//! `Poly2` is the workhorse behind the Liénard reduction: affine substitution,
//! products and shifts are exact polynomial algebra on floating coefficients.

use std::collections::BTreeMap;
use std::fmt;

/// Exponent pair `(n, m)` of the monomial `u^n v^m`.
pub type Monomial = (u32, u32);

/// Sparse polynomial in two variables, keyed by exponent pair.
///
/// Absent keys are zero. Stored zeros are kept: a coefficient that was written
/// explicitly is distinguishable from one that was never mentioned.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly2 {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, c);
        p
    }

    /// `c0 + cu * u + cv * v`
    pub fn affine(c0: f64, cu: f64, cv: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(0, 0, c0);
        p.add_term(1, 0, cu);
        p.add_term(0, 1, cv);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for ((n, m), c) in terms {
            p.add_term(n, m, c);
        }
        p
    }

    pub fn add_term(&mut self, n: u32, m: u32, c: f64) {
        *self.terms.entry((n, m)).or_insert(0.0) += c;
    }

    pub fn coeff(&self, n: u32, m: u32) -> f64 {
        self.terms.get(&(n, m)).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, f64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    pub fn into_map(self) -> BTreeMap<Monomial, f64> {
        self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .filter(|(_, &c)| c != 0.0)
            .map(|(&(n, m), _)| n + m)
            .max()
            .unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        self.terms
            .iter()
            .map(|(&(n, m), &c)| c * u.powi(n as i32) * v.powi(m as i32))
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(&k, &c)| (k, c * s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&(n, m), &c) in &other.terms {
            out.add_term(n, m, c);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(n1, m1), &c1) in &self.terms {
            for (&(n2, m2), &c2) in &other.terms {
                out.add_term(n1 + n2, m1 + m2, c1 * c2);
            }
        }
        out
    }

    /// Drops every monomial of total degree above `max_degree`.
    pub fn truncated(&self, max_degree: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(&(n, m), _)| n + m <= max_degree)
                .map(|(&k, &c)| (k, c))
                .collect(),
        }
    }

    /// Substitutes `u -> lu(u', v')`, `v -> lv(u', v')` and expands.
    pub fn substitute(&self, lu: &Poly2, lv: &Poly2) -> Self {
        let max_n = self.terms.keys().map(|k| k.0).max().unwrap_or(0) as usize;
        let max_m = self.terms.keys().map(|k| k.1).max().unwrap_or(0) as usize;
        let pu = powers(lu, max_n);
        let pv = powers(lv, max_m);
        let mut out = Self::zero();
        for (&(n, m), &c) in &self.terms {
            let term = pu[n as usize].mul(&pv[m as usize]).scaled(c);
            out = out.add(&term);
        }
        out
    }

    /// Coefficients of `p(u + shift, v)` expanded in `(u, v)`.
    pub fn shift_first(&self, shift: f64) -> Self {
        self.substitute(&Poly2::affine(shift, 1.0, 0.0), &Poly2::affine(0.0, 0.0, 1.0))
    }
}

fn powers(p: &Poly2, max: usize) -> Vec<Poly2> {
    let mut out = Vec::with_capacity(max + 1);
    out.push(Poly2::constant(1.0));
    for k in 1..=max {
        let next = out[k - 1].mul(p);
        out.push(next);
    }
    out
}

/// Writes a polynomial as `c*u^n*v^m` terms with the given variable names.
pub fn format_poly2(p: &Poly2, u: &str, v: &str) -> String {
    let mut out = String::new();
    for ((n, m), c) in p.terms().filter(|(_, c)| *c != 0.0) {
        let mut factors = Vec::new();
        for (name, e) in [(u, n), (v, m)] {
            match e {
                0 => {}
                1 => factors.push(name.to_string()),
                _ => factors.push(format!("{name}^{e}")),
            }
        }
        push_signed_term(&mut out, c, &factors);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

pub(crate) fn push_signed_term(out: &mut String, c: f64, factors: &[String]) {
    let mag = c.abs();
    if out.is_empty() {
        if c < 0.0 {
            out.push('-');
        }
    } else {
        out.push_str(if c < 0.0 { " - " } else { " + " });
    }
    out.push_str(&format!("{mag:?}"));
    for f in factors {
        out.push('*');
        out.push_str(f);
    }
}

/// Dense univariate polynomial, `coeffs[k]` multiplies `t^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly1 {
    pub coeffs: Vec<f64>,
}

impl Poly1 {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    /// All real roots in ascending order.
    ///
    /// Splits the real line at the real roots of the derivative (recursively),
    /// so that each piece is monotone, then bisects with Newton polishing.
    /// Roots of even multiplicity are picked up at critical points whose value
    /// is within `tol`.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        let p = Self::new(self.coeffs.clone());
        let deg = p.degree();
        if deg == 0 {
            return Vec::new();
        }
        if deg == 1 {
            return vec![-p.coeffs[0] / p.coeffs[1]];
        }
        let lead = p.coeffs[deg];
        // Cauchy bound.
        let bound = 1.0
            + p.coeffs[..deg]
                .iter()
                .fold(0.0_f64, |acc, c| acc.max((c / lead).abs()));
        let mut breaks = vec![-bound];
        breaks.extend(
            p.derivative()
                .real_roots(tol)
                .into_iter()
                .filter(|c| c.abs() < bound),
        );
        breaks.push(bound);

        let mut roots: Vec<f64> = Vec::new();
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (p.eval(lo), p.eval(hi));
            if flo == 0.0 {
                roots.push(lo);
            } else if flo.signum() != fhi.signum() && fhi != 0.0 {
                roots.push(p.bisect_newton(lo, hi));
            }
        }
        if let Some(&last) = breaks.last() {
            if p.eval(last) == 0.0 {
                roots.push(last);
            }
        }
        // Double roots sit on critical points without a sign change.
        for &c in &breaks[1..breaks.len() - 1] {
            if p.eval(c).abs() <= tol {
                roots.push(c);
            }
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        roots
    }

    fn bisect_newton(&self, mut lo: f64, mut hi: f64) -> f64 {
        let dp = self.derivative();
        let flo = self.eval(lo);
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = self.eval(x);
            if fx == 0.0 {
                return x;
            }
            if (fx < 0.0) == (flo < 0.0) {
                lo = x;
            } else {
                hi = x;
            }
            let d = dp.eval(x);
            let newton = x - fx / d;
            x = if d != 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
                break;
            }
        }
        x
    }
}

impl fmt::Display for Poly1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_poly1(self, "A"))
    }
}

pub fn format_poly1(p: &Poly1, var: &str) -> String {
    let mut out = String::new();
    for (k, &c) in p.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0) {
        let factors = match k {
            0 => vec![],
            1 => vec![var.to_string()],
            _ => vec![format!("{var}^{k}")],
        };
        push_signed_term(&mut out, c, &factors);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}
