//! Limit-cycle detection, period measurement and the isochronicity test.

use std::fmt;

use rayon::prelude::*;

use super::{Dopri5, IntegratorConfig, Rhs, Section, SimError, State};
use crate::lienard::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    /// Tolerances and step limits; `t_end` caps the time spent on each seed.
    pub integrator: IntegratorConfig,
    /// Section ray direction from the fixed point.
    pub direction: State,
    pub cycle_tol: f64,
    pub centre_band: f64,
    /// Crossings in the observation window.
    pub window: usize,
    /// Leading crossings ignored before any window is read.
    pub discard: usize,
    pub max_crossings: usize,
    /// A seed has collapsed once its distance drops below this fraction of
    /// the starting distance.
    pub collapse_frac: f64,
    /// A seed has escaped once its distance exceeds this multiple of
    /// `max(starting distance, 1)`.
    pub blowup: f64,
    pub iso_tol: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig {
                t_end: 1e5,
                ..Default::default()
            },
            direction: [1.0, 0.0],
            cycle_tol: 1e-3,
            centre_band: 2e-3,
            window: 10,
            discard: 10,
            max_crossings: 2000,
            collapse_frac: 1e-3,
            blowup: 1e3,
            iso_tol: 0.01,
        }
    }
}

impl CycleConfig {
    pub fn with_direction(mut self, direction: State) -> Self {
        self.direction = direction;
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        self.integrator.validate()?;
        if self.window < 2 {
            return Err(SimError::InvalidConfig("window must hold at least 2 crossings".into()));
        }
        if self.max_crossings < self.discard + self.window + 1 {
            return Err(SimError::InvalidConfig(
                "max_crossings must exceed discard + window".into(),
            ));
        }
        if !(self.cycle_tol > 0.0 && self.centre_band > 0.0 && self.iso_tol > 0.0) {
            return Err(SimError::InvalidConfig("tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleKind {
    LimitCycle,
    SpiralIn,
    SpiralOut,
    CentreLike,
    Inconclusive,
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedFate {
    Running,
    Collapsed,
    Escaped,
    /// Integration time ran out before `max_crossings`.
    Horizon,
    MaxCrossings,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedSummary {
    pub seed: State,
    pub fate: SeedFate,
    pub crossings: usize,
    pub r_first: Option<f64>,
    /// Distance along the section ray when the seed starts on it.
    pub r_start: Option<f64>,
    /// Mean crossing distance over the last window.
    pub r_star: Option<f64>,
    /// Largest relative deviation from `r_star` within the last window.
    pub window_spread: Option<f64>,
    /// Median successive ratio `r_{k+1} / r_k` over the last window.
    pub rho: Option<f64>,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub kind: CycleKind,
    pub period: Option<f64>,
    pub amplitude: Option<f64>,
    pub convergence_ratio: f64,
    pub crossings_used: usize,
    pub seeds: Vec<SeedSummary>,
    /// Set by [`detect_cycle_robust`].
    pub tolerance_robust: Option<bool>,
    pub note: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "none".into())
}

impl fmt::Display for CycleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind = {}", self.kind)?;
        writeln!(f, "period = {}", opt(self.period))?;
        writeln!(f, "amplitude = {}", opt(self.amplitude))?;
        writeln!(f, "convergence_ratio = {}", fmt_num(self.convergence_ratio))?;
        writeln!(f, "crossings_used = {}", self.crossings_used)?;
        let robust = match self.tolerance_robust {
            Some(b) => b.to_string(),
            None => "unchecked".into(),
        };
        writeln!(f, "tolerance_robust = {robust}")?;
        if !self.note.is_empty() {
            writeln!(f, "note = {}", self.note)?;
        }
        for (i, s) in self.seeds.iter().enumerate() {
            writeln!(
                f,
                "seed[{i}] x = {}, y = {}, fate = {:?}, crossings = {}, r_first = {}, r_star = {}, rho = {}",
                fmt_num(s.seed[0]),
                fmt_num(s.seed[1]),
                s.fate,
                s.crossings,
                opt(s.r_first),
                opt(s.r_star),
                opt(s.rho),
            )?;
        }
        Ok(())
    }
}

struct SeedRun<'a, R: Rhs + ?Sized> {
    seed: State,
    stepper: Dopri5<'a, R>,
    section: Section,
    d0: f64,
    r: Vec<f64>,
    t: Vec<f64>,
    fate: SeedFate,
}

fn dist(a: State, b: State) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl<'a, R: Rhs + ?Sized> SeedRun<'a, R> {
    fn new(rhs: &'a R, fixed_point: State, seed: State, cfg: &CycleConfig) -> Result<Self, SimError> {
        if !(seed[0].is_finite() && seed[1].is_finite()) {
            return Err(SimError::NonFiniteState { t: 0.0 });
        }
        let section = Section::new(fixed_point, cfg.direction)
            .ok_or_else(|| SimError::InvalidConfig("section direction must be nonzero".into()))?;
        Ok(Self {
            seed,
            stepper: Dopri5::new(rhs, 0.0, seed, &cfg.integrator)?,
            section,
            d0: dist(seed, fixed_point),
            r: Vec::new(),
            t: Vec::new(),
            fate: SeedFate::Running,
        })
    }

    fn advance(&mut self, target: usize, cfg: &CycleConfig) -> Result<(), SimError> {
        let fp = self.section.origin();
        let escape = cfg.blowup * self.d0.max(1.0);
        let collapse = cfg.collapse_frac * self.d0;
        while self.fate == SeedFate::Running && self.r.len() < target {
            if self.stepper.t() >= cfg.integrator.t_end {
                self.fate = SeedFate::Horizon;
                break;
            }
            let seg = self.stepper.step_until(cfg.integrator.t_end)?;
            for c in self.section.scan(&seg) {
                self.r.push(c.distance);
                self.t.push(c.t);
            }
            let d = dist(self.stepper.state(), fp);
            if d > escape {
                self.fate = SeedFate::Escaped;
            } else if d < collapse {
                self.fate = SeedFate::Collapsed;
            } else if self.r.len() >= cfg.max_crossings {
                self.fate = SeedFate::MaxCrossings;
            }
        }
        Ok(())
    }

    fn summary(&self, cfg: &CycleConfig) -> SeedSummary {
        let n = self.r.len();
        let w = cfg.window.min(n.saturating_sub(1));
        let (r_star, window_spread, rho, period) = if w >= 1 {
            let win = &self.r[n - w - 1..];
            let mean = win.iter().sum::<f64>() / win.len() as f64;
            let spread = win.iter().fold(0.0_f64, |m, r| m.max((r - mean).abs() / mean));
            let mut ratios: Vec<f64> = win.windows(2).map(|p| p[1] / p[0]).collect();
            ratios.sort_by(f64::total_cmp);
            let rho = if ratios.len() % 2 == 1 {
                ratios[ratios.len() / 2]
            } else {
                0.5 * (ratios[ratios.len() / 2 - 1] + ratios[ratios.len() / 2])
            };
            let tw = &self.t[n - w - 1..];
            let period = (tw[w] - tw[0]) / w as f64;
            (Some(mean), Some(spread), Some(rho), Some(period))
        } else {
            (None, None, None, None)
        };
        SeedSummary {
            seed: self.seed,
            fate: self.fate,
            crossings: n,
            r_first: self.r.first().copied(),
            r_start: self.section.on_ray(&self.seed),
            r_star,
            window_spread,
            rho,
            period,
        }
    }
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Two-sided convergence of every seed to one amplitude.
fn limit_cycle_amplitude(seeds: &[SeedSummary], cfg: &CycleConfig) -> Option<f64> {
    let need = cfg.discard + cfg.window + 1;
    let mut stars = Vec::new();
    for s in seeds {
        if matches!(s.fate, SeedFate::Collapsed | SeedFate::Escaped) || s.crossings < need {
            return None;
        }
        if s.window_spread? > cfg.cycle_tol {
            return None;
        }
        stars.push(s.r_star?);
    }
    let r = mean(stars.iter().copied())?;
    let lo = stars.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = stars.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if (hi - lo) / r > 2.0 * cfg.cycle_tol {
        return None;
    }
    // a seed on the ray counts by where it starts; otherwise by its first return
    let start = |s: &SeedSummary| s.r_start.or(s.r_first);
    let inside = seeds.iter().any(|s| start(s).is_some_and(|f| f < r));
    let outside = seeds.iter().any(|s| start(s).is_some_and(|f| f > r));
    (inside && outside).then_some(r)
}

/// Integrates every seed and reads the crossing-distance sequences.
///
/// Seeds advance together in chunks of one window so that a two-sided
/// limit cycle can be reported as soon as it is established.
pub fn detect_cycle<R: Rhs + ?Sized>(
    rhs: &R,
    fixed_point: State,
    seeds: &[State],
    cfg: &CycleConfig,
) -> Result<CycleReport, SimError> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(SimError::InvalidConfig("at least one seed is required".into()));
    }
    let mut runs = seeds
        .iter()
        .map(|&s| SeedRun::new(rhs, fixed_point, s, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let mut target = cfg.discard + cfg.window + 1;
    loop {
        runs.par_iter_mut()
            .map(|run| run.advance(target, cfg))
            .collect::<Result<Vec<()>, SimError>>()?;
        let summaries: Vec<SeedSummary> = runs.iter().map(|r| r.summary(cfg)).collect();
        let done = runs.iter().all(|r| r.fate != SeedFate::Running);
        if let Some(r) = limit_cycle_amplitude(&summaries, cfg) {
            return Ok(finish(CycleKind::LimitCycle, Some(r), summaries, String::new()));
        }
        if runs.iter().all(|r| r.fate == SeedFate::Collapsed) {
            return Ok(finish(CycleKind::SpiralIn, None, summaries, String::new()));
        }
        if runs.iter().all(|r| r.fate == SeedFate::Escaped) {
            return Ok(finish(CycleKind::SpiralOut, None, summaries, String::new()));
        }
        if done {
            return Ok(classify_at_horizon(summaries, cfg));
        }
        target = (target + cfg.window).min(cfg.max_crossings);
    }
}

fn classify_at_horizon(seeds: Vec<SeedSummary>, cfg: &CycleConfig) -> CycleReport {
    let inward = |s: &SeedSummary| {
        s.fate == SeedFate::Collapsed || s.rho.is_some_and(|r| r < 1.0 - cfg.centre_band)
    };
    let outward = |s: &SeedSummary| {
        s.fate == SeedFate::Escaped || s.rho.is_some_and(|r| r > 1.0 + cfg.centre_band)
    };
    if seeds.iter().all(inward) {
        return finish(CycleKind::SpiralIn, None, seeds, String::new());
    }
    if seeds.iter().all(outward) {
        return finish(CycleKind::SpiralOut, None, seeds, String::new());
    }
    let need = cfg.discard + cfg.window + 1;
    let observed = seeds.iter().all(|s| {
        !matches!(s.fate, SeedFate::Collapsed | SeedFate::Escaped) && s.crossings >= need
    });
    if observed && seeds.len() >= 2 {
        let in_band = seeds
            .iter()
            .all(|s| s.rho.is_some_and(|r| (r - 1.0).abs() <= cfg.centre_band));
        let stars: Vec<f64> = seeds.iter().filter_map(|s| s.r_star).collect();
        let lo = stars.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = stars.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r = mean(stars.iter().copied()).unwrap_or(0.0);
        if in_band && (hi - lo) / r > 2.0 * cfg.cycle_tol {
            return finish(CycleKind::CentreLike, Some(r), seeds, String::new());
        }
        if in_band {
            let note = "seeds converged to one amplitude but not from both sides".to_string();
            return finish(CycleKind::Inconclusive, Some(r), seeds, note);
        }
    }
    let note = if seeds.len() < 2 {
        "a single seed cannot separate a cycle from a centre".to_string()
    } else {
        "observation window exhausted before any criterion was met".to_string()
    };
    finish(CycleKind::Inconclusive, None, seeds, note)
}

fn finish(kind: CycleKind, amplitude: Option<f64>, seeds: Vec<SeedSummary>, note: String) -> CycleReport {
    let period = match kind {
        CycleKind::LimitCycle | CycleKind::CentreLike => mean(seeds.iter().filter_map(|s| s.period)),
        _ => None,
    };
    // worst-case ratio across seeds
    let convergence_ratio = seeds
        .iter()
        .filter_map(|s| s.rho)
        .max_by(|a, b| (a - 1.0).abs().total_cmp(&(b - 1.0).abs()))
        .unwrap_or(f64::NAN);
    CycleReport {
        kind,
        period,
        amplitude,
        convergence_ratio,
        crossings_used: seeds.iter().map(|s| s.crossings).sum(),
        seeds,
        tolerance_robust: None,
        note,
    }
}

/// [`detect_cycle`] at the configured tolerances and again with both
/// tolerances divided by 100. Disagreement turns the verdict into
/// `Inconclusive`.
pub fn detect_cycle_robust<R: Rhs + ?Sized>(
    rhs: &R,
    fixed_point: State,
    seeds: &[State],
    cfg: &CycleConfig,
) -> Result<CycleReport, SimError> {
    let mut base = detect_cycle(rhs, fixed_point, seeds, cfg)?;
    let tight = CycleConfig {
        integrator: cfg.integrator.tightened(100.0),
        ..*cfg
    };
    let check = detect_cycle(rhs, fixed_point, seeds, &tight)?;
    if check.kind == base.kind {
        base.tolerance_robust = Some(true);
    } else {
        base.note = format!(
            "verdict {} changed to {} under 100x tighter tolerances",
            base.kind, check.kind
        );
        base.kind = CycleKind::Inconclusive;
        base.tolerance_robust = Some(false);
    }
    Ok(base)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodMeasurement {
    pub period: f64,
    pub std_err: f64,
    pub intervals: usize,
    /// Mean crossing distance over the measured loops.
    pub amplitude: f64,
}

/// Mean return time over `cfg.window` consecutive loops starting at `seed`.
pub fn measure_period<R: Rhs + ?Sized>(
    rhs: &R,
    seed: State,
    fixed_point: State,
    cfg: &CycleConfig,
) -> Result<PeriodMeasurement, SimError> {
    cfg.validate()?;
    let icfg = CycleConfig {
        max_crossings: usize::MAX,
        ..*cfg
    };
    let mut run = SeedRun::new(rhs, fixed_point, seed, &icfg)?;
    run.advance(cfg.window + 1, &icfg)?;
    let n = run.r.len();
    if n == 0 {
        return Err(SimError::NoCrossings);
    }
    if n < cfg.window + 1 {
        return Err(SimError::Inconclusive(format!(
            "only {n} crossings before the trajectory {}",
            match run.fate {
                SeedFate::Collapsed => "collapsed",
                SeedFate::Escaped => "escaped",
                _ => "reached t_end",
            }
        )));
    }
    let intervals: Vec<f64> = run.t.windows(2).map(|w| w[1] - w[0]).collect();
    let k = intervals.len() as f64;
    let period = intervals.iter().sum::<f64>() / k;
    let var = intervals.iter().map(|d| (d - period).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(PeriodMeasurement {
        period,
        std_err: (var / k).sqrt(),
        intervals: intervals.len(),
        amplitude: run.r.iter().sum::<f64>() / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsoVerdict {
    Isochronous,
    NotIsochronous,
}

impl fmt::Display for IsoVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoRow {
    pub amplitude: f64,
    pub period: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsoReport {
    pub rows: Vec<IsoRow>,
    /// The same measurement at half the amplitudes.
    pub half_rows: Vec<IsoRow>,
    /// `(max T - min T) / mean T` over `rows`.
    pub spread: f64,
    pub half_spread: f64,
    pub verdict: IsoVerdict,
}

impl IsoReport {
    /// Largest `|T - reference| / reference` over the full-amplitude rows.
    pub fn max_deviation_from(&self, reference: f64) -> f64 {
        self.rows
            .iter()
            .fold(0.0_f64, |m, r| m.max((r.period - reference).abs() / reference))
    }

    pub fn half_max_deviation_from(&self, reference: f64) -> f64 {
        self.half_rows
            .iter()
            .fold(0.0_f64, |m, r| m.max((r.period - reference).abs() / reference))
    }
}

impl fmt::Display for IsoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "A,T,T_stderr")?;
        for r in self.rows.iter().chain(&self.half_rows) {
            writeln!(f, "{},{},{}", fmt_num(r.amplitude), fmt_num(r.period), fmt_num(r.std_err))?;
        }
        writeln!(f, "spread = {}", fmt_num(self.spread))?;
        writeln!(f, "half_spread = {}", fmt_num(self.half_spread))?;
        writeln!(f, "verdict = {}", self.verdict)
    }
}

fn spread(rows: &[IsoRow]) -> f64 {
    let lo = rows.iter().map(|r| r.period).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().map(|r| r.period).fold(f64::NEG_INFINITY, f64::max);
    let m = rows.iter().map(|r| r.period).sum::<f64>() / rows.len() as f64;
    (hi - lo) / m
}

/// Periods of loops seeded on the section ray at each amplitude and at half
/// of each amplitude.
///
/// `Isochronous` needs the relative spread within `cfg.iso_tol` and the
/// spread at halved amplitudes to be at most half of it, unless the spread
/// is already within `1e3 * rel_tol`.
pub fn isochronicity_test<R: Rhs + ?Sized>(
    rhs: &R,
    fixed_point: State,
    amplitudes: &[f64],
    cfg: &CycleConfig,
) -> Result<IsoReport, SimError> {
    if amplitudes.len() < 3 {
        return Err(SimError::InvalidConfig("need at least 3 amplitudes".into()));
    }
    if amplitudes.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(SimError::InvalidConfig("amplitudes must be positive".into()));
    }
    let sec = Section::new(fixed_point, cfg.direction)
        .ok_or_else(|| SimError::InvalidConfig("section direction must be nonzero".into()))?;
    let all: Vec<f64> = amplitudes
        .iter()
        .copied()
        .chain(amplitudes.iter().map(|a| a / 2.0))
        .collect();
    let rows = all
        .par_iter()
        .map(|&a| {
            let m = measure_period(rhs, sec.point_at(a), fixed_point, cfg)?;
            Ok(IsoRow {
                amplitude: a,
                period: m.period,
                std_err: m.std_err,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let (rows, half_rows) = rows.split_at(amplitudes.len());
    let s = spread(rows);
    let hs = spread(half_rows);
    // spreads at the integrator's noise level count as shrunk
    let floor = 1e3 * cfg.integrator.rel_tol;
    let verdict = if s <= cfg.iso_tol && (hs <= 0.5 * s || s <= floor) {
        IsoVerdict::Isochronous
    } else {
        IsoVerdict::NotIsochronous
    };
    Ok(IsoReport {
        rows: rows.to_vec(),
        half_rows: half_rows.to_vec(),
        spread: s,
        half_spread: hs,
        verdict,
    })
}
