//! Parameter-plane scans of the damping sign and tracing of the
//! `F(0,0) = 0` boundary for the built-in models.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::lienard::{fmt_num, Verdict, DEFAULT_BAND};
use crate::models::{verify_reduction, ModelError, ModelFamily};
use crate::svg;

pub const MAX_RESOLUTION: usize = 4096;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-10;
/// One audited cell per this many.
pub const AUDIT_STRIDE: usize = 100;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("unknown parameter `{name}` for model {family}")]
    UnknownParameter { family: ModelFamily, name: String },
    #[error("invalid axis: {0}")]
    InvalidAxis(String),
    #[error("F(0,0) does not change sign in the scanned box")]
    NoSignChange,
    #[error("nothing to export")]
    EmptyPayload,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<ModelError> for SweepError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownParameter { family, name } => SweepError::UnknownParameter { family, name },
            e => SweepError::Model(e),
        }
    }
}

/// `name:lo:hi:count`
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64, count: usize) -> Result<Self, SweepError> {
        let a = Self {
            name: name.into(),
            lo,
            hi,
            count,
        };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.count < 2 {
            return Err(SweepError::InvalidAxis(format!("{}: count must be at least 2", self.name)));
        }
        if self.count > MAX_RESOLUTION {
            return Err(SweepError::InvalidAxis(format!(
                "{}: count {} exceeds {MAX_RESOLUTION}",
                self.name, self.count
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(SweepError::InvalidAxis(format!("{}: need finite lo < hi", self.name)));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64
        }
    }
}

impl FromStr for Axis {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, lo, hi, n] = parts[..] else {
            return Err(SweepError::InvalidAxis(format!("`{s}` is not name:lo:hi:count")));
        };
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| SweepError::InvalidAxis(format!("`{v}` is not a number")))
        };
        let count = n
            .trim()
            .parse::<usize>()
            .map_err(|_| SweepError::InvalidAxis(format!("`{n}` is not a count")))?;
        Axis::new(name.trim(), num(lo)?, num(hi)?, count)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.name, fmt_num(self.lo), fmt_num(self.hi), self.count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanOptions {
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
    pub band: f64,
    /// Run the generic reduction on every `audit_stride`-th cell; 0 disables.
    pub audit_stride: usize,
    pub boundary_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            threads: None,
            band: DEFAULT_BAND,
            audit_stride: AUDIT_STRIDE,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
        }
    }
}

fn run_pooled<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, SweepError> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SweepError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub p1: f64,
    pub p2: f64,
    /// NaN when the parameters violate the model's constraints.
    pub f00: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditSummary {
    pub checked: usize,
    pub max_rel_err: f64,
    pub failures: Vec<(f64, f64, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub family: ModelFamily,
    pub fixed: BTreeMap<String, f64>,
    pub axes: [Axis; 2],
    /// Row-major: axis 1 outer, axis 2 inner.
    pub cells: Vec<Cell>,
    pub audit: AuditSummary,
}

impl SweepGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.axes[1].count + j]
    }

    pub fn count(&self, verdict: Verdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == verdict).count()
    }

    /// Verdicts of the two axis-2 neighbours bracketing `p2` in the column
    /// whose axis-1 value equals `p1`.
    pub fn verdicts_around(&self, p1: f64, p2: f64) -> Option<(Verdict, Verdict)> {
        let [a1, a2] = &self.axes;
        let i = (0..a1.count).find(|&i| (a1.value(i) - p1).abs() <= 1e-12 * (1.0 + p1.abs()))?;
        let j = (0..a2.count - 1).find(|&j| a2.value(j) <= p2 && p2 <= a2.value(j + 1))?;
        Some((self.cell(i, j).verdict, self.cell(i, j + 1).verdict))
    }

    /// `p1,p2,F00,verdict`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p1,p2,F00,verdict")?;
        for c in &self.cells {
            writeln!(w, "{},{},{},{}", fmt_num(c.p1), fmt_num(c.p2), fmt_num(c.f00), c.verdict)?;
        }
        Ok(())
    }
}

fn params_with(
    fixed: &BTreeMap<String, f64>,
    axes: &[&Axis; 2],
    p1: f64,
    p2: f64,
) -> BTreeMap<String, f64> {
    let mut p = fixed.clone();
    p.insert(axes[0].name.clone(), p1);
    p.insert(axes[1].name.clone(), p2);
    p
}

fn check_names(family: ModelFamily, fixed: &BTreeMap<String, f64>, a1: &Axis, a2: &Axis) -> Result<(), SweepError> {
    a1.validate()?;
    a2.validate()?;
    if a1.name == a2.name {
        return Err(SweepError::InvalidAxis("the two axes must differ".into()));
    }
    let p = params_with(fixed, &[a1, a2], 0.0, 0.0);
    family.params(&p)?;
    Ok(())
}

/// Closed-form `F(0,0)`; NaN for parameters outside the model's domain.
fn f00_at(family: ModelFamily, params: &BTreeMap<String, f64>, band: f64) -> (f64, Verdict) {
    match family.closed_form(params) {
        Ok(c) => (c.f00, Verdict::from_values(c.f00, c.omega_sq, band)),
        Err(_) => (f64::NAN, Verdict::Invalid),
    }
}

pub fn grid_scan(
    family: ModelFamily,
    fixed: &BTreeMap<String, f64>,
    axis1: &Axis,
    axis2: &Axis,
    opts: &ScanOptions,
) -> Result<SweepGrid, SweepError> {
    check_names(family, fixed, axis1, axis2)?;
    let n2 = axis2.count;
    let total = axis1.count * n2;
    let axes = [axis1, axis2];
    let (cells, audits) = run_pooled(opts.threads, || {
        let cells: Vec<Cell> = (0..total)
            .into_par_iter()
            .map(|k| {
                let (p1, p2) = (axis1.value(k / n2), axis2.value(k % n2));
                let (f00, verdict) = f00_at(family, &params_with(fixed, &axes, p1, p2), opts.band);
                Cell { p1, p2, f00, verdict }
            })
            .collect();
        let audits: Vec<(f64, f64, Result<f64, String>)> = if opts.audit_stride == 0 {
            Vec::new()
        } else {
            (0..total)
                .step_by(opts.audit_stride)
                .filter(|&k| cells[k].verdict != Verdict::Invalid)
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|k| {
                    let c = cells[k];
                    let res = family
                        .build(&params_with(fixed, &axes, c.p1, c.p2))
                        .and_then(|m| verify_reduction(&m))
                        .map(|r| r.max_rel_err)
                        .map_err(|e| e.to_string());
                    (c.p1, c.p2, res)
                })
                .collect()
        };
        (cells, audits)
    })?;

    let mut audit = AuditSummary::default();
    for (p1, p2, res) in audits {
        audit.checked += 1;
        match res {
            Ok(e) => audit.max_rel_err = audit.max_rel_err.max(e),
            Err(msg) => audit.failures.push((p1, p2, msg)),
        }
    }
    if !audit.failures.is_empty() {
        log::warn!("{} audited cells disagree with the closed form", audit.failures.len());
    }
    Ok(SweepGrid {
        family,
        fixed: fixed.clone(),
        axes: [axis1.clone(), axis2.clone()],
        cells,
        audit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub p1: f64,
    pub p2: f64,
    pub f00_residual: f64,
    /// Connected piece of the curve this point belongs to.
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub family: ModelFamily,
    pub axes: [Axis; 2],
    /// Ordered along the curve; a curve folding back over axis 1 is walked
    /// out along one branch and back along the other.
    pub points: Vec<BoundaryPoint>,
}

impl BoundaryCurve {
    /// `p1,p2,F00_residual`
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "p1,p2,F00_residual")?;
        for p in &self.points {
            writeln!(w, "{},{},{}", fmt_num(p.p1), fmt_num(p.p2), fmt_num(p.f00_residual))?;
        }
        Ok(())
    }

    pub fn max_residual(&self) -> f64 {
        self.points.iter().fold(0.0_f64, |m, p| m.max(p.f00_residual))
    }
}

/// Bisection on a sign change of `f`, stopping once `|f| <= tol`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64, tol: f64) -> Option<(f64, f64)> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if !fm.is_finite() {
            return None;
        }
        if fm.abs() <= tol {
            return Some((mid, fm.abs()));
        }
        if mid <= lo || mid >= hi {
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    None
}

/// Scanline bisection of `F(0,0)` along axis 2 at every axis-1 sample.
pub fn trace_boundary(
    family: ModelFamily,
    fixed: &BTreeMap<String, f64>,
    axis1: &Axis,
    axis2: &Axis,
    opts: &ScanOptions,
) -> Result<BoundaryCurve, SweepError> {
    check_names(family, fixed, axis1, axis2)?;
    let axes = [axis1, axis2];
    let tol = opts.boundary_tol;
    let lines: Vec<Vec<BoundaryPoint>> = run_pooled(opts.threads, || {
        (0..axis1.count)
            .into_par_iter()
            .map(|i| {
                let p1 = axis1.value(i);
                let f = |p2: f64| f00_at(family, &params_with(fixed, &axes, p1, p2), 0.0).0;
                let samples: Vec<(f64, f64)> = (0..axis2.count).map(|j| (axis2.value(j), f(axis2.value(j)))).collect();
                let mut out = Vec::new();
                for w in samples.windows(2) {
                    let ((a, fa), (b, fb)) = (w[0], w[1]);
                    if !(fa.is_finite() && fb.is_finite()) || fa == 0.0 {
                        if fa == 0.0 {
                            out.push((a, 0.0));
                        }
                        continue;
                    }
                    if (fa < 0.0) != (fb < 0.0) && fb != 0.0 {
                        match bisect(f, a, b, fa, tol) {
                            Some(hit) => out.push(hit),
                            None => log::warn!("boundary at {}={p1} not resolved to {tol:e}", axis1.name),
                        }
                    }
                }
                if let Some(&(b, fb)) = samples.last() {
                    if fb == 0.0 {
                        out.push((b, 0.0));
                    }
                }
                out.into_iter()
                    .map(|(p2, r)| BoundaryPoint {
                        p1,
                        p2,
                        f00_residual: r,
                        branch: 0,
                    })
                    .collect()
            })
            .collect()
    })?;

    if lines.iter().all(Vec::is_empty) {
        return Err(SweepError::NoSignChange);
    }
    let points = chain_branches(link_branches(&lines, 0.25 * (axis2.hi - axis2.lo)));
    Ok(BoundaryCurve {
        family,
        axes: [axis1.clone(), axis2.clone()],
        points,
    })
}

/// Groups roots of consecutive scanlines into branches by nearest `p2`.
fn link_branches(lines: &[Vec<BoundaryPoint>], max_jump: f64) -> Vec<Vec<BoundaryPoint>> {
    let mut done: Vec<Vec<BoundaryPoint>> = Vec::new();
    let mut active: Vec<Vec<BoundaryPoint>> = Vec::new();
    for line in lines {
        let mut next: Vec<Vec<BoundaryPoint>> = Vec::new();
        let mut taken = vec![false; active.len()];
        for &pt in line {
            let best = active
                .iter()
                .enumerate()
                .filter(|(k, _)| !taken[*k])
                .map(|(k, b)| (k, (b.last().expect("non-empty branch").p2 - pt.p2).abs()))
                .filter(|(_, d)| *d <= max_jump)
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match best {
                Some((k, _)) => {
                    taken[k] = true;
                    let mut b = std::mem::take(&mut active[k]);
                    b.push(pt);
                    next.push(b);
                }
                None => next.push(vec![pt]),
            }
        }
        done.extend(active.into_iter().zip(taken).filter(|(_, t)| !t).map(|(b, _)| b));
        active = next;
    }
    done.extend(active);
    done
}

/// Orders branches into one path: start at the branch reaching furthest to
/// low `p1`, then repeatedly append the branch with the nearest end,
/// reversing it when needed.
fn chain_branches(mut branches: Vec<Vec<BoundaryPoint>>) -> Vec<BoundaryPoint> {
    branches.sort_by(|a, b| a[0].p1.total_cmp(&b[0].p1).then(a[0].p2.total_cmp(&b[0].p2)));
    let mut out: Vec<BoundaryPoint> = Vec::new();
    let mut id = 0;
    while !branches.is_empty() {
        let k = match out.last() {
            None => 0,
            Some(end) => {
                let d = |p: &BoundaryPoint| (p.p1 - end.p1).hypot(p.p2 - end.p2);
                let dist = |b: &Vec<BoundaryPoint>| d(&b[0]).min(d(b.last().expect("non-empty")));
                (0..branches.len())
                    .min_by(|&i, &j| dist(&branches[i]).total_cmp(&dist(&branches[j])))
                    .expect("non-empty")
            }
        };
        let mut b = branches.remove(k);
        if let Some(end) = out.last() {
            let d = |p: &BoundaryPoint| (p.p1 - end.p1).hypot(p.p2 - end.p2);
            if d(b.last().expect("non-empty")) < d(&b[0]) {
                b.reverse();
            }
        }
        out.extend(b.into_iter().map(|p| BoundaryPoint { branch: id, ..p }));
        id += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Svg,
}

pub enum Payload<'a> {
    Grid(&'a SweepGrid, Option<&'a BoundaryCurve>),
    Curve(&'a BoundaryCurve),
}

/// Writes one file. SVG output for a grid includes the boundary when given.
pub fn export(payload: &Payload<'_>, format: ExportFormat, path: &Path) -> Result<(), SweepError> {
    let mut buf = Vec::new();
    match (payload, format) {
        (Payload::Grid(g, _), _) if g.cells.is_empty() => return Err(SweepError::EmptyPayload),
        (Payload::Curve(c), _) if c.points.is_empty() => return Err(SweepError::EmptyPayload),
        (Payload::Grid(g, _), ExportFormat::Csv) => g.write_csv(&mut buf)?,
        (Payload::Curve(c), ExportFormat::Csv) => c.write_csv(&mut buf)?,
        (Payload::Grid(g, c), ExportFormat::Svg) => buf = svg::sweep_svg(Some(g), *c).into_bytes(),
        (Payload::Curve(c), ExportFormat::Svg) => buf = svg::sweep_svg(None, Some(c)).into_bytes(),
    }
    fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bruss_fixed() -> BTreeMap<String, f64> {
        BTreeMap::from([
            ("mu".to_string(), 1.0),
            ("a".to_string(), 1.0),
            ("beta".to_string(), 0.6),
        ])
    }

    #[test]
    fn axis_parsing() {
        let a: Axis = "alpha:0.5:3:200".parse().unwrap();
        assert_eq!(a, Axis::new("alpha", 0.5, 3.0, 200).unwrap());
        assert_eq!(a.value(0), 0.5);
        assert_eq!(a.value(199), 3.0);
        assert_eq!(a.to_string(), "alpha:0.5:3.0:200");
        assert!("alpha:0.5:3:1".parse::<Axis>().is_err());
        assert!("alpha:0.5:3:5000".parse::<Axis>().is_err());
        assert!("alpha:3:0.5:5".parse::<Axis>().is_err());
        assert!("alpha:0.5:3".parse::<Axis>().is_err());
    }

    #[test]
    fn brusselator_plane_split() {
        let g = grid_scan(
            ModelFamily::Brusselator,
            &bruss_fixed(),
            &"alpha:0.5:3:60".parse().unwrap(),
            &"b:0.5:4:60".parse().unwrap(),
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(g.cells.len(), 3600);
        for c in &g.cells {
            let a1 = 1.0;
            let boundary = a1 * a1 - (c.p2 - c.p1) * c.p1 * c.p1;
            if boundary.abs() > 1e-6 {
                let want = if boundary < 0.0 {
                    Verdict::LimitCycleCandidate
                } else {
                    Verdict::StableFocusCandidate
                };
                assert_eq!(c.verdict, want, "{c:?}");
            }
        }
        assert!(g.audit.checked >= 36 && g.audit.failures.is_empty());
        assert!(g.audit.max_rel_err <= 1e-12);
    }

    #[test]
    fn invalid_cells_are_marked() {
        let g = grid_scan(
            ModelFamily::Glycolytic,
            &BTreeMap::new(),
            &"a:-0.1:0.3:5".parse().unwrap(),
            &"b:0.2:1.2:5".parse().unwrap(),
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(g.count(Verdict::Invalid), 5);
        assert!(g.cell(0, 0).f00.is_nan());
    }

    #[test]
    fn unknown_parameter_is_rejected() {
        let err = grid_scan(
            ModelFamily::Glycolytic,
            &BTreeMap::new(),
            &"alpha:0:1:5".parse().unwrap(),
            &"b:0.2:1.2:5".parse().unwrap(),
            &ScanOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SweepError::UnknownParameter { .. }));
    }

    #[test]
    fn brusselator_boundary_matches_closed_form() {
        let a1: Axis = "alpha:0.5:3:40".parse().unwrap();
        let a2: Axis = "b:0.5:4:40".parse().unwrap();
        let c = trace_boundary(ModelFamily::Brusselator, &bruss_fixed(), &a1, &a2, &ScanOptions::default()).unwrap();
        assert!(!c.points.is_empty());
        for p in &c.points {
            // independent form of the boundary: a1^2 = (b - alpha) alpha^2
            let resid = 1.0 - (p.p2 - p.p1) * p.p1 * p.p1;
            assert!(resid.abs() <= 1e-8, "{p:?}");
            assert!(p.f00_residual <= 1e-10);
        }
        assert!(c.points.windows(2).all(|w| w[1].p1 > w[0].p1));
    }

    #[test]
    fn glycolytic_boundary_has_two_branches_forming_a_path() {
        let a1: Axis = "a:0:0.3:61".parse().unwrap();
        let a2: Axis = "b:0.2:1.2:61".parse().unwrap();
        let c = trace_boundary(ModelFamily::Glycolytic, &BTreeMap::new(), &a1, &a2, &ScanOptions::default()).unwrap();
        assert_eq!(c.points.iter().map(|p| p.branch).max(), Some(1));
        for p in &c.points {
            let (a, b) = (p.p1, p.p2);
            let resid = (a + b * b).powi(2) + (a - b * b);
            assert!(resid.abs() <= 1e-8, "{p:?}");
        }
        // out along the upper branch to the tip, back along the lower one
        let split = c.points.iter().position(|p| p.branch == 1).unwrap();
        assert!(c.points[..split].windows(2).all(|w| w[1].p1 > w[0].p1));
        assert!(c.points[split..].windows(2).all(|w| w[1].p1 < w[0].p1));
        assert!(c.points[0].p2 > 0.9 && c.points.last().unwrap().p2 < 0.3);
        let step = c.points.windows(2).map(|w| (w[1].p1 - w[0].p1).hypot(w[1].p2 - w[0].p2));
        // the fold at a = 1/8 is square-root shaped, so the turn spans one coarse gap
        assert!(step.fold(0.0, f64::max) < 0.2);
        // lc region sits between the branches
        let g = grid_scan(ModelFamily::Glycolytic, &BTreeMap::new(), &a1, &a2, &ScanOptions::default()).unwrap();
        // a grid node can sit exactly on the curve (a = 0, b = 1)
        for p in c.points.iter().filter(|p| p.f00_residual > 0.0) {
            let (lo, hi) = g.verdicts_around(p.p1, p.p2).unwrap();
            assert_ne!(lo, hi, "{p:?}");
            assert!(lo == Verdict::StableFocusCandidate || hi == Verdict::StableFocusCandidate);
        }
    }

    #[test]
    fn no_sign_change() {
        let err = trace_boundary(
            ModelFamily::Glycolytic,
            &BTreeMap::new(),
            &"a:0.2:0.3:5".parse().unwrap(),
            &"b:0.2:1.2:5".parse().unwrap(),
            &ScanOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SweepError::NoSignChange));
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let a1: Axis = "a:0:0.3:37".parse().unwrap();
        let a2: Axis = "b:0.2:1.2:41".parse().unwrap();
        let csv = |threads| {
            let opts = ScanOptions {
                threads,
                ..Default::default()
            };
            let g = grid_scan(ModelFamily::Glycolytic, &BTreeMap::new(), &a1, &a2, &opts).unwrap();
            let c = trace_boundary(ModelFamily::Glycolytic, &BTreeMap::new(), &a1, &a2, &opts).unwrap();
            let mut buf = Vec::new();
            g.write_csv(&mut buf).unwrap();
            c.write_csv(&mut buf).unwrap();
            buf
        };
        let one = csv(Some(1));
        assert_eq!(one, csv(Some(3)));
        assert_eq!(one, csv(None));
    }

    #[test]
    fn small_grid_csv() {
        let g = grid_scan(
            ModelFamily::VanDerPol,
            &BTreeMap::new(),
            &"epsilon:-1:1:2".parse().unwrap(),
            &"a:0.5:1:2".parse().unwrap(),
            &ScanOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "p1,p2,F00,verdict");
        assert_eq!(lines[1], "-1.0,0.5,0.25,StableFocusCandidate");
        assert_eq!(lines[4], "1.0,1.0,-1.0,LimitCycleCandidate");
    }
}
