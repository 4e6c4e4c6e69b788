//! Subcommand bodies. Each returns its report text and the files it wrote;
//! nothing here prints.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lienard_lab::lienard::{classify as classify_at, report, Verdict, DEFAULT_BAND};
use lienard_lab::models::{catalog, ModelFamily};
use lienard_lab::rg::{flow, rg_solution_with_rate, truncate, RgError, Template};
use lienard_lab::sim::{
    detect_cycle, detect_cycle_robust, integrate, CycleConfig, CycleKind, CycleReport, IntegratorConfig, Rhs, State,
    Trajectory,
};
use lienard_lab::svg::phase_portrait_svg;
use lienard_lab::sweep::{export, grid_scan, trace_boundary, Axis, ExportFormat, Payload, ScanOptions, SweepError};

use crate::args::Format;
use crate::error::CliError;
use crate::model::{LoadedModel, ModelSource};

/// Env var capping sweep parallelism.
pub const THREADS_ENV: &str = "LIENARD_LAB_THREADS";

const PROBE_AMPLITUDE: f64 = 0.05;
const DEFAULT_SEED_AMPLITUDE: f64 = 0.1;
const COMPARE_PERIODS: usize = 5;

#[derive(Debug, Default)]
pub struct Outcome {
    pub report: String,
    pub files: Vec<PathBuf>,
    pub code: u8,
}

#[derive(Debug, Clone, Default)]
pub struct NumericOpts {
    pub seeds: Vec<State>,
    pub tol: Option<f64>,
}

impl NumericOpts {
    fn integrator(&self, t_end: f64) -> IntegratorConfig {
        let mut cfg = IntegratorConfig {
            t_end,
            ..Default::default()
        };
        if let Some(tol) = self.tol {
            cfg.rel_tol = tol;
            cfg.abs_tol = tol * 1e-2;
        }
        cfg
    }

    fn cycle_config(&self, direction: State) -> CycleConfig {
        let base = CycleConfig::default();
        CycleConfig {
            integrator: self.integrator(base.integrator.t_end),
            ..base
        }
        .with_direction(direction)
    }
}

pub fn models_list() -> Outcome {
    Outcome {
        report: catalog(),
        ..Default::default()
    }
}

pub fn models_show(family: ModelFamily, params: &BTreeMap<String, f64>) -> Result<Outcome, CliError> {
    let m = family.build(params)?;
    Ok(Outcome {
        report: m.field.to_model_text(),
        ..Default::default()
    })
}

fn header(model: &LoadedModel) -> String {
    let t = &model.transform;
    let mut out = format!("model = {}\n", model.label);
    let _ = writeln!(
        out,
        "transform: u = {:?}, z = {:?} (constant, x, y coefficients)",
        t.alpha, t.beta
    );
    if let Some(err) = model.closed_check {
        let _ = writeln!(out, "closed-form check: max relative error {err:e}");
    }
    out
}

fn fmt_state(s: State) -> String {
    // adding 0.0 turns -0 into 0
    format!("({}, {})", s[0] + 0.0, s[1] + 0.0)
}

fn on_ray(fp: State, dir: State, r: f64) -> State {
    [fp[0] + r * dir[0], fp[1] + r * dir[1]]
}

/// Cycle verdict from the given seeds. With fewer than two seeds, a probe
/// run estimates the return-map fixed point and the check is repeated from
/// half and one and a half times that distance.
fn cycle_check<R: Rhs>(
    rhs: &R,
    fp: State,
    seeds: &[State],
    cfg: &CycleConfig,
) -> Result<CycleReport, CliError> {
    if seeds.len() >= 2 {
        return Ok(detect_cycle_robust(rhs, fp, seeds, cfg)?);
    }
    let probe_seed = seeds
        .first()
        .copied()
        .unwrap_or_else(|| on_ray(fp, cfg.direction, PROBE_AMPLITUDE));
    let probe = detect_cycle(rhs, fp, &[probe_seed], cfg)?;
    let spiral = matches!(probe.kind, CycleKind::SpiralIn | CycleKind::SpiralOut);
    match probe.seeds.first().and_then(|s| s.r_star) {
        Some(r) if !spiral && r > 0.0 => {
            let pair = [on_ray(fp, cfg.direction, 0.5 * r), on_ray(fp, cfg.direction, 1.5 * r)];
            Ok(detect_cycle_robust(rhs, fp, &pair, cfg)?)
        }
        _ => Ok(detect_cycle_robust(rhs, fp, &[probe_seed], cfg)?),
    }
}

fn indent(text: &str) -> String {
    text.lines().map(|l| format!("  {l}\n")).collect()
}

pub fn classify(src: &ModelSource, confirm: bool, numeric: &NumericOpts) -> Result<Outcome, CliError> {
    let model = LoadedModel::load(src)?;
    let mut out = header(&model);
    let many = model.steady.len() > 1;
    let mut any_valid = false;
    for (k, &z_s) in model.steady.iter().enumerate() {
        if many {
            let _ = writeln!(out, "[steady state {} of {}]", k + 1, model.steady.len());
        }
        let cls = classify_at(&model.form, z_s, DEFAULT_BAND);
        out.push_str(&report(&model.form, &cls));
        let fp = model.fixed_point(z_s);
        let _ = writeln!(out, "fixed point = {}", fmt_state(fp));
        if cls.verdict == Verdict::Invalid {
            let _ = writeln!(out, "omega^2 <= 0: not an oscillatory steady state");
            continue;
        }
        any_valid = true;
        if confirm {
            let cfg = numeric.cycle_config(model.direction());
            let rep = cycle_check(&model.field, fp, &numeric.seeds, &cfg)?;
            out.push_str("numeric:\n");
            out.push_str(&indent(&rep.to_string()));
        }
    }
    Ok(Outcome {
        report: out,
        files: Vec::new(),
        code: if any_valid { 0 } else { 2 },
    })
}

fn write_file(path: &Path, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
    files.push(path.to_path_buf());
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub struct SimulateOpts<'a> {
    pub numeric: &'a NumericOpts,
    pub t_end: f64,
    pub out: &'a Path,
    pub format: Format,
    /// File stem of the outputs.
    pub stem: &'a str,
}

pub fn simulate(src: &ModelSource, opts: &SimulateOpts<'_>) -> Result<Outcome, CliError> {
    let model = LoadedModel::load(src)?;
    let z_s = model.steady[0];
    let fp = model.fixed_point(z_s);
    let dir = model.direction();
    let seeds = if opts.numeric.seeds.is_empty() {
        vec![on_ray(fp, dir, DEFAULT_SEED_AMPLITUDE)]
    } else {
        opts.numeric.seeds.clone()
    };
    let icfg = opts.numeric.integrator(opts.t_end);
    let trajs: Vec<Trajectory> = seeds
        .iter()
        .map(|s| integrate(&model.field, s[0], s[1], &icfg))
        .collect::<Result<_, _>>()?;

    ensure_dir(opts.out)?;
    let mut files = Vec::new();
    if opts.format.csv() {
        for (k, tr) in trajs.iter().enumerate() {
            let name = if trajs.len() == 1 {
                format!("{}.csv", opts.stem)
            } else {
                format!("{}_{}.csv", opts.stem, k + 1)
            };
            let mut buf = Vec::new();
            tr.write_csv(&mut buf).map_err(|e| CliError::io(Path::new(&name), e))?;
            write_file(&opts.out.join(name), &buf, &mut files)?;
        }
    }
    if opts.format.svg() {
        let svg = phase_portrait_svg(&trajs, fp, &model.label);
        write_file(&opts.out.join(format!("{}.svg", opts.stem)), svg.as_bytes(), &mut files)?;
    }

    let mut out = header(&model);
    let cls = classify_at(&model.form, z_s, DEFAULT_BAND);
    let _ = writeln!(out, "fixed point = {}", fmt_state(fp));
    let _ = writeln!(out, "F00 = {:e}, verdict = {}", cls.f00 + 0.0, cls.verdict);
    for (s, tr) in seeds.iter().zip(&trajs) {
        let last = tr.states.last().copied().unwrap_or(*s);
        let _ = writeln!(
            out,
            "seed {} -> {} steps, state at t = {}: {}",
            fmt_state(*s),
            tr.times.len(),
            opts.t_end,
            fmt_state(last)
        );
    }
    let rep = cycle_check(&model.field, fp, &seeds, &opts.numeric.cycle_config(dir))?;
    out.push_str("numeric:\n");
    out.push_str(&indent(&rep.to_string()));
    Ok(Outcome {
        report: out,
        files,
        code: 0,
    })
}

pub struct RgOpts {
    pub lambda: f64,
    pub compare: bool,
    pub amplitude: f64,
    pub tol: Option<f64>,
}

pub fn rg(src: &ModelSource, opts: &RgOpts) -> Result<Outcome, CliError> {
    let model = LoadedModel::load(src)?;
    let z_s = model.steady[0];
    let cls = classify_at(&model.form, z_s, DEFAULT_BAND);
    let te = truncate(&model.form, z_s, opts.lambda).map_err(|e| {
        if !matches!(e, RgError::UnsupportedTruncation { .. }) {
            return CliError::from(e);
        }
        let mut msg = e.to_string();
        if cls.verdict != Verdict::IsochronousCentreCandidate {
            let _ = write!(
                msg,
                "; the quadratic template needs F(0,0) = 0, here F00 = {:e} ({})",
                cls.f00, cls.verdict
            );
        }
        CliError::Unsupported(msg)
    })?;
    let fl = flow(&te);

    let mut out = header(&model);
    let _ = writeln!(out, "z_s = {z_s}");
    let _ = writeln!(out, "omega = {}", te.omega);
    match te.template {
        Template::QuadraticCentre { c_zz, c_vv, c_zv } => {
            let _ = writeln!(out, "lambda = {}", te.lambda);
            let _ = writeln!(out, "C_zz = {c_zz}, C_vv = {c_vv}, C_zv = {c_zv}");
        }
        Template::VdPCubic { epsilon, a } => {
            let _ = writeln!(out, "epsilon = {epsilon}, a = {a} (lambda unused)");
        }
    }
    let _ = writeln!(out, "{fl}");

    if opts.compare {
        if !(opts.amplitude > 0.0 && opts.amplitude.is_finite()) {
            return Err(CliError::Usage("--amplitude must be positive".into()));
        }
        let amp = opts.amplitude;
        let period = 2.0 * PI / te.omega;
        let horizon = COMPARE_PERIODS as f64 * period;
        let numeric = NumericOpts {
            seeds: Vec::new(),
            tol: opts.tol,
        };
        let cfg = IntegratorConfig {
            max_step: period / 100.0,
            ..numeric.integrator(horizon)
        };
        let (x0, v0) = rg_solution_with_rate(&te, amp, 0.0, 0.0, 0.0);
        let tr = integrate(&te, x0, v0, &cfg)?;
        let _ = writeln!(out, "comparison at A = {amp} against the integrated truncated equation");
        out.push_str("period,max_abs_err\n");
        const SAMPLES: usize = 400;
        for k in 0..COMPARE_PERIODS {
            let mut worst: f64 = 0.0;
            for i in 0..=SAMPLES {
                let t = period * (k as f64 + i as f64 / SAMPLES as f64);
                let num = tr.eval(t).expect("dense output covers the horizon");
                worst = worst.max((rg_solution_with_rate(&te, amp, 0.0, t, 0.0).0 - num[0]).abs());
            }
            let _ = writeln!(out, "{},{:e}", k + 1, worst);
        }
    }
    Ok(Outcome {
        report: out,
        files: Vec::new(),
        code: 0,
    })
}

pub fn parse_axes(s: &str) -> Result<(Axis, Axis), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let [a, b] = parts.as_slice() else {
        return Err(CliError::Usage(format!("--axes needs two axes `p1:lo:hi:n,p2:lo:hi:n`, got `{s}`")));
    };
    let a: Axis = a.trim().parse()?;
    let b: Axis = b.trim().parse()?;
    Ok((a, b))
}

/// Worker cap from the environment; unset means the global pool.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub struct SweepOpts<'a> {
    pub axes: &'a str,
    pub out: &'a Path,
    pub format: Format,
    pub threads: Option<usize>,
}

fn export_to(payload: &Payload<'_>, format: ExportFormat, path: PathBuf, files: &mut Vec<PathBuf>) -> Result<(), CliError> {
    export(payload, format, &path).map_err(|e| match e {
        SweepError::Io(source) => CliError::io(&path, source),
        e => e.into(),
    })?;
    files.push(path);
    Ok(())
}

pub fn sweep(family: ModelFamily, fixed: &BTreeMap<String, f64>, opts: &SweepOpts<'_>) -> Result<Outcome, CliError> {
    let (a1, a2) = parse_axes(opts.axes)?;
    let scan = ScanOptions {
        threads: opts.threads,
        ..Default::default()
    };
    let grid = grid_scan(family, fixed, &a1, &a2, &scan)?;
    let curve = match trace_boundary(family, fixed, &a1, &a2, &scan) {
        Ok(c) => Some(c),
        Err(SweepError::NoSignChange) => None,
        Err(e) => return Err(e.into()),
    };

    ensure_dir(opts.out)?;
    let mut files = Vec::new();
    let stem = family.name();
    if opts.format.csv() {
        export_to(&Payload::Grid(&grid, None), ExportFormat::Csv, opts.out.join(format!("{stem}_grid.csv")), &mut files)?;
        if let Some(c) = &curve {
            export_to(&Payload::Curve(c), ExportFormat::Csv, opts.out.join(format!("{stem}_boundary.csv")), &mut files)?;
        }
    }
    if opts.format.svg() {
        export_to(
            &Payload::Grid(&grid, curve.as_ref()),
            ExportFormat::Svg,
            opts.out.join(format!("{stem}_boundary.svg")),
            &mut files,
        )?;
    }

    let mut out = String::new();
    let fixed_list: Vec<String> = fixed.iter().map(|(k, v)| format!("{k}={v}")).collect();
    let _ = writeln!(out, "model = {family} (fixed: {})", fixed_list.join(", "));
    let _ = writeln!(out, "axes = {a1}, {a2}");
    for v in [
        Verdict::LimitCycleCandidate,
        Verdict::IsochronousCentreCandidate,
        Verdict::StableFocusCandidate,
        Verdict::Invalid,
    ] {
        let _ = writeln!(out, "cells {v} = {}", grid.count(v));
    }
    let _ = writeln!(
        out,
        "audit: {} cells, max relative error {:e}, {} failures",
        grid.audit.checked,
        grid.audit.max_rel_err,
        grid.audit.failures.len()
    );
    let code = match &curve {
        Some(c) => {
            let _ = writeln!(out, "boundary: {} points, max residual {:e}", c.points.len(), c.max_residual());
            0
        }
        None => {
            let _ = writeln!(out, "boundary: F(0,0) does not change sign in the scanned box");
            5
        }
    };
    Ok(Outcome {
        report: out,
        files,
        code,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axes_parsing() {
        let (a, b) = parse_axes("alpha:0.5:3:200, b:0.5:4:200").unwrap();
        assert_eq!((a.name.as_str(), b.name.as_str()), ("alpha", "b"));
        assert!(matches!(parse_axes("alpha:0.5:3:200"), Err(CliError::Usage(_))));
        assert!(matches!(parse_axes("a:0:1:2,b:0:1:2,c:0:1:2"), Err(CliError::Usage(_))));
    }

    #[test]
    fn single_seed_is_paired() {
        let src = ModelSource::Preset {
            family: ModelFamily::VanDerPol,
            params: BTreeMap::new(),
        };
        let model = LoadedModel::load(&src).unwrap();
        let cfg = NumericOpts::default().cycle_config(model.direction());
        let rep = cycle_check(&model.field, [0.0, 0.0], &[], &cfg).unwrap();
        assert_eq!(rep.kind, CycleKind::LimitCycle);
        assert_eq!(rep.seeds.len(), 2);
    }
}
