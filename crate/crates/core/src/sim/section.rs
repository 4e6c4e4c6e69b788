//! Poincaré section: a ray through the fixed point, crossed in one
//! orientation only.

use super::{DenseSegment, SimError, State, Trajectory};

const SUBDIVISIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t: f64,
    pub state: State,
    /// Distance from the fixed point along the ray.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    origin: State,
    dir: State,
    normal: State,
    /// `true` when crossings go from negative to positive normal side.
    upward: Option<bool>,
}

impl Section {
    /// Returns `None` for a zero or non-finite direction.
    pub fn new(origin: State, direction: State) -> Option<Self> {
        let n = direction[0].hypot(direction[1]);
        if !(n > 0.0 && n.is_finite()) {
            return None;
        }
        let dir = [direction[0] / n, direction[1] / n];
        Some(Self {
            origin,
            dir,
            normal: [-dir[1], dir[0]],
            upward: None,
        })
    }

    pub fn origin(&self) -> State {
        self.origin
    }

    pub fn direction(&self) -> State {
        self.dir
    }

    /// Point on the ray at distance `r` from the origin.
    pub fn point_at(&self, r: f64) -> State {
        [self.origin[0] + r * self.dir[0], self.origin[1] + r * self.dir[1]]
    }

    pub(crate) fn side(&self, s: &State) -> f64 {
        self.normal[0] * (s[0] - self.origin[0]) + self.normal[1] * (s[1] - self.origin[1])
    }

    pub(crate) fn along(&self, s: &State) -> f64 {
        self.dir[0] * (s[0] - self.origin[0]) + self.dir[1] * (s[1] - self.origin[1])
    }

    /// Distance along the ray when `s` lies on it.
    pub(crate) fn on_ray(&self, s: &State) -> Option<f64> {
        let r = self.along(s);
        (r > 0.0 && self.side(s).abs() <= 1e-12 * (1.0 + r)).then_some(r)
    }

    /// Crossings inside one step, in time order.
    pub fn scan(&mut self, seg: &DenseSegment) -> Vec<Crossing> {
        let mut out = Vec::new();
        let dt = seg.h / SUBDIVISIONS as f64;
        let mut ta = seg.t0;
        let mut ga = self.side(&seg.eval(ta));
        for k in 1..=SUBDIVISIONS {
            let tb = if k == SUBDIVISIONS { seg.t1() } else { seg.t0 + dt * k as f64 };
            let gb = self.side(&seg.eval(tb));
            let up = ga < 0.0 && gb >= 0.0;
            let down = ga > 0.0 && gb <= 0.0;
            if up || down {
                let t = self.refine(seg, ta, tb, ga, gb);
                let state = seg.eval(t);
                let distance = self.along(&state);
                if distance > 0.0 && *self.upward.get_or_insert(up) == up {
                    out.push(Crossing { t, state, distance });
                }
            }
            ta = tb;
            ga = gb;
        }
        out
    }

    /// Illinois false position on the interpolant.
    fn refine(&self, seg: &DenseSegment, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
        if fb == 0.0 {
            return b;
        }
        let tol = 1e-14 * a.abs().max(1.0);
        let mut side = 0i8;
        let mut c = b;
        for _ in 0..100 {
            c = (a * fb - b * fa) / (fb - fa);
            if !(c > a.min(b) && c < a.max(b)) {
                c = 0.5 * (a + b);
            }
            let fc = self.side(&seg.eval(c));
            if fc == 0.0 || (b - a).abs() <= tol {
                break;
            }
            if (fc > 0.0) == (fb > 0.0) {
                b = c;
                fb = fc;
                if side == 1 {
                    fa *= 0.5;
                }
                side = 1;
            } else {
                a = c;
                fa = fc;
                if side == -1 {
                    fb *= 0.5;
                }
                side = -1;
            }
        }
        c
    }
}

/// All crossings of the ray from `fixed_point` along `direction`.
pub fn poincare_crossings(
    traj: &Trajectory,
    fixed_point: State,
    direction: State,
) -> Result<Vec<Crossing>, SimError> {
    if traj.segments.is_empty() {
        return Err(SimError::InvalidConfig("trajectory has no dense output".into()));
    }
    let mut sec = Section::new(fixed_point, direction)
        .ok_or_else(|| SimError::InvalidConfig("section direction must be nonzero".into()))?;
    let out: Vec<Crossing> = traj.segments.iter().flat_map(|s| sec.scan(s)).collect();
    if out.is_empty() {
        return Err(SimError::NoCrossings);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{integrate, IntegratorConfig};
    use crate::vecfield::parse_model;
    use std::f64::consts::PI;

    #[test]
    fn harmonic_crossings_every_period() {
        let f = parse_model("dx = y\ndy = -x").unwrap();
        let cfg = IntegratorConfig {
            t_end: 20.0 * PI + 1.0,
            ..Default::default()
        };
        let tr = integrate(&f, 1.0, 0.0, &cfg).unwrap();
        let c = poincare_crossings(&tr, [0.0, 0.0], [1.0, 0.0]).unwrap();
        // the start point sits on the section and is not a crossing
        assert_eq!(c.len(), 10);
        for (k, cr) in c.iter().enumerate() {
            assert!((cr.t - 2.0 * PI * (k + 1) as f64).abs() < 1e-8, "{k} {}", cr.t);
            assert!((cr.distance - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn drift_over_fifty_periods_is_tiny() {
        let f = parse_model("dx = y\ndy = -x").unwrap();
        let cfg = IntegratorConfig {
            t_end: 100.0 * PI + 1.0,
            ..Default::default()
        };
        let tr = integrate(&f, 0.5, 0.0, &cfg).unwrap();
        let c = poincare_crossings(&tr, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert_eq!(c.len(), 50);
        let drift = (c[49].distance - c[0].distance).abs() / c[0].distance;
        assert!(drift <= 1e-6, "{drift}");
    }

    #[test]
    fn one_orientation_only() {
        // rotation about (1, 2) crosses the full line twice per turn but the
        // ray once
        let f = parse_model("dx = 2 - y\ndy = x - 1").unwrap();
        let cfg = IntegratorConfig {
            t_end: 4.0 * PI + 0.5,
            ..Default::default()
        };
        let tr = integrate(&f, 1.0, 2.5, &cfg).unwrap();
        let c = poincare_crossings(&tr, [1.0, 2.0], [0.0, 2.0]).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| (c.distance - 0.5).abs() < 1e-7));
    }

    #[test]
    fn spiral_in_distances_decrease() {
        let f = parse_model("dx = y\ndy = -x - 0.1*y").unwrap();
        let cfg = IntegratorConfig {
            t_end: 60.0,
            ..Default::default()
        };
        let tr = integrate(&f, 1.0, 0.0, &cfg).unwrap();
        let c = poincare_crossings(&tr, [0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!(c.len() >= 8);
        assert!(c.windows(2).all(|w| w[1].distance < w[0].distance));
    }

    #[test]
    fn errors() {
        let f = parse_model("dx = 1\ndy = 0").unwrap();
        let cfg = IntegratorConfig {
            t_end: 5.0,
            ..Default::default()
        };
        let tr = integrate(&f, 0.0, 1.0, &cfg).unwrap();
        assert_eq!(
            poincare_crossings(&tr, [0.0, 0.0], [1.0, 0.0]).unwrap_err(),
            SimError::NoCrossings
        );
        let sparse = integrate(
            &f,
            0.0,
            1.0,
            &IntegratorConfig {
                dense_output: false,
                ..cfg
            },
        )
        .unwrap();
        assert!(matches!(
            poincare_crossings(&sparse, [0.0, 0.0], [1.0, 0.0]),
            Err(SimError::InvalidConfig(_))
        ));
        assert!(Section::new([0.0, 0.0], [0.0, 0.0]).is_none());
    }
}
