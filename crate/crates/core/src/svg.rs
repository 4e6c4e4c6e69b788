//! Self-contained SVG plots with deterministic output.

use std::fmt::Write;

use crate::lienard::Verdict;
use crate::sim::{State, Trajectory};
use crate::sweep::{BoundaryCurve, SweepGrid};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 760.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 540.0;
const MAX_POLYLINE_POINTS: usize = 20_000;

const STYLE: &str = "text{font-family:sans-serif;font-size:14px}\
.lc{fill:#f2b880}.focus{fill:#9cc3e6}.frame{fill:none;stroke:#000;stroke-width:1}\
.boundary{fill:none;stroke:#000;stroke-width:2}.orbit{fill:none;stroke:#1f4e79;stroke-width:1}\
.fp{fill:#c00000}";

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn py(&self, v: f64) -> f64 {
        BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn open(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" width=\"{WIDTH}\" height=\"{HEIGHT}\">\n<style>{STYLE}</style>\n<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#fff\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\">{}</text>\n",
        (LEFT + RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        "<rect class=\"frame\" x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\"/>",
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (xp, yp) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            "<line x1=\"{xp:.2}\" y1=\"{BOTTOM}\" x2=\"{xp:.2}\" y2=\"{}\" stroke=\"#000\"/><text x=\"{xp:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            BOTTOM + 6.0,
            BOTTOM + 22.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{yp:.2}\" x2=\"{LEFT}\" y2=\"{yp:.2}\" stroke=\"#000\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            LEFT - 9.0,
            yp + 5.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        (LEFT + RIGHT) / 2.0,
        HEIGHT - 20.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {})\">{}</text>",
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(ylabel)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, class: &str, pts: impl Iterator<Item = (f64, f64)>) {
    let mut coords = String::new();
    for (x, y) in pts {
        let _ = write!(coords, "{x:.2},{y:.2} ");
    }
    let _ = writeln!(out, "<polyline class=\"{class}\" points=\"{}\"/>", coords.trim_end());
}

fn region_class(v: Verdict) -> Option<&'static str> {
    match v {
        Verdict::LimitCycleCandidate => Some("lc"),
        Verdict::StableFocusCandidate => Some("focus"),
        _ => None,
    }
}

/// Verdict regions of a grid (one rectangle per run of equal verdicts in a
/// column) with the traced boundary on top.
pub fn sweep_svg(grid: Option<&SweepGrid>, curve: Option<&BoundaryCurve>) -> String {
    let (axes_ref, family) = match (grid, curve) {
        (Some(g), _) => (&g.axes, g.family),
        (None, Some(c)) => (&c.axes, c.family),
        (None, None) => panic!("sweep_svg needs a grid or a curve"),
    };
    let [a1, a2] = axes_ref;
    let f = Frame::new((a1.lo, a1.hi), (a2.lo, a2.hi));
    let mut out = String::new();
    open(&mut out, &format!("{family}: damping sign in the {}-{} plane", a1.name, a2.name));

    if let Some(g) = grid {
        let d1 = (a1.hi - a1.lo) / (a1.count - 1) as f64;
        let d2 = (a2.hi - a2.lo) / (a2.count - 1) as f64;
        for i in 0..a1.count {
            let x0 = (a1.value(i) - d1 / 2.0).max(a1.lo);
            let x1 = (a1.value(i) + d1 / 2.0).min(a1.hi);
            let mut j = 0;
            while j < a2.count {
                let v = g.cell(i, j).verdict;
                let start = j;
                while j < a2.count && g.cell(i, j).verdict == v {
                    j += 1;
                }
                if let Some(class) = region_class(v) {
                    let y0 = (a2.value(start) - d2 / 2.0).max(a2.lo);
                    let y1 = (a2.value(j - 1) + d2 / 2.0).min(a2.hi);
                    let _ = writeln!(
                        out,
                        "<rect class=\"{class}\" x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
                        f.px(x0),
                        f.py(y1),
                        f.px(x1) - f.px(x0),
                        f.py(y0) - f.py(y1)
                    );
                }
            }
        }
    }
    if let Some(c) = curve {
        for piece in c.points.chunk_by(|a, b| a.branch == b.branch) {
            polyline(&mut out, "boundary", piece.iter().map(|p| (f.px(p.p1), f.py(p.p2))));
        }
        if let Some(p) = c.points.get(c.points.len() / 2) {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\">F(0,0) = 0</text>",
                f.px(p.p1) + 8.0,
                f.py(p.p2) - 8.0
            );
        }
    }
    axes(&mut out, &f, &a1.name, &a2.name);
    if grid.is_some() {
        let _ = writeln!(
            out,
            "<rect class=\"lc\" x=\"{}\" y=\"48\" width=\"14\" height=\"14\"/><text x=\"{}\" y=\"60\">limit cycle</text>",
            RIGHT - 150.0,
            RIGHT - 130.0
        );
        let _ = writeln!(
            out,
            "<rect class=\"focus\" x=\"{}\" y=\"68\" width=\"14\" height=\"14\"/><text x=\"{}\" y=\"80\">stable focus</text>",
            RIGHT - 150.0,
            RIGHT - 130.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Orbits in the `(x, y)` plane with the fixed point marked.
pub fn phase_portrait_svg(trajs: &[Trajectory], fixed_point: State, title: &str) -> String {
    let (mut xlo, mut xhi) = (fixed_point[0], fixed_point[0]);
    let (mut ylo, mut yhi) = (fixed_point[1], fixed_point[1]);
    for s in trajs.iter().flat_map(|t| &t.states) {
        xlo = xlo.min(s[0]);
        xhi = xhi.max(s[0]);
        ylo = ylo.min(s[1]);
        yhi = yhi.max(s[1]);
    }
    let pad = |lo: f64, hi: f64| {
        let d = 0.05 * (hi - lo);
        (lo - d, hi + d)
    };
    let f = Frame::new(pad(xlo, xhi), pad(ylo, yhi));
    let mut out = String::new();
    open(&mut out, title);
    for traj in trajs {
        let stride = traj.states.len().div_ceil(MAX_POLYLINE_POINTS).max(1);
        let last = traj.states.len().saturating_sub(1);
        polyline(
            &mut out,
            "orbit",
            traj.states
                .iter()
                .enumerate()
                .filter(|(i, _)| i % stride == 0 || *i == last)
                .map(|(_, s)| (f.px(s[0]), f.py(s[1]))),
        );
    }
    let _ = writeln!(
        out,
        "<circle class=\"fp\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\"/>",
        f.px(fixed_point[0]),
        f.py(fixed_point[1])
    );
    axes(&mut out, &f, "x", "y");
    out.push_str("</svg>\n");
    out
}
