//! Dormand–Prince 5(4) with PI step-size control and fourth-order dense
//! output (Hairer's DOPRI5 coefficients).

use super::{IntegratorConfig, Rhs, SimError, State};

// Autonomous right-hand sides only, so the stage nodes are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseSegment {
    pub t0: f64,
    pub h: f64,
    rcont: [State; 5],
}

impl DenseSegment {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> State {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let r = &self.rcont;
        let mut out = [0.0; 2];
        for i in 0..2 {
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..2 {
        let s: f64 = terms.iter().map(|(c, k)| c * k[i]).sum();
        out[i] += h * s;
    }
    out
}

/// Streaming integrator; each call to [`Dopri5::step_until`] performs one
/// accepted step.
pub struct Dopri5<'a, R: Rhs + ?Sized> {
    rhs: &'a R,
    t: f64,
    y: State,
    k1: State,
    h: f64,
    err_old: f64,
    cfg: IntegratorConfig,
    steps: usize,
}

impl<'a, R: Rhs + ?Sized> Dopri5<'a, R> {
    pub fn new(rhs: &'a R, t0: f64, y0: State, cfg: &IntegratorConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let k1 = rhs.rhs(y0);
        if !(k1[0].is_finite() && k1[1].is_finite()) {
            return Err(SimError::NonFiniteState { t: t0 });
        }
        let mut st = Self {
            rhs,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            err_old: 1e-4,
            cfg: *cfg,
            steps: 0,
        };
        st.h = st.initial_step();
        Ok(st)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> State {
        self.y
    }

    fn scale(&self, a: &State, b: &State, i: usize) -> f64 {
        self.cfg.abs_tol + self.cfg.rel_tol * a[i].abs().max(b[i].abs())
    }

    fn norm(&self, v: &State, a: &State, b: &State) -> f64 {
        let s: f64 = (0..2).map(|i| (v[i] / self.scale(a, b, i)).powi(2)).sum();
        (s / 2.0).sqrt()
    }

    fn initial_step(&self) -> f64 {
        let y = &self.y;
        let f0 = &self.k1;
        let d0 = self.norm(y, y, y);
        let d1 = self.norm(f0, y, y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.cfg.max_step);
        let y1 = axpy(y, h0, &[(1.0, f0)]);
        let f1 = self.rhs.rhs(y1);
        let df = [f1[0] - f0[0], f1[1] - f0[1]];
        let d2 = self.norm(&df, y, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.cfg.max_step)
    }

    /// One accepted step, not passing `t_stop`.
    pub fn step_until(&mut self, t_stop: f64) -> Result<DenseSegment, SimError> {
        loop {
            self.steps += 1;
            if self.steps > self.cfg.max_steps {
                return Err(SimError::StepSizeUnderflow { t: self.t, h: self.h });
            }
            let mut h = self.h.min(self.cfg.max_step);
            let last = self.t + h >= t_stop;
            if last {
                h = t_stop - self.t;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(SimError::StepSizeUnderflow { t: self.t, h });
            }
            let y = self.y;
            let k1 = self.k1;
            let f = |s: State| self.rhs.rhs(s);
            let k2 = f(axpy(&y, h, &[(A21, &k1)]));
            let k3 = f(axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
            let k5 = f(axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
            let k6 = f(axpy(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ));
            let y1 = axpy(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(y1);
            let err_vec = axpy(
                &[0.0, 0.0],
                h,
                &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            );
            let err = self.norm(&err_vec, &y, &y1);
            if !err.is_finite() || !(y1[0].is_finite() && y1[1].is_finite()) {
                // shrink hard and retry; persistent failure ends in underflow
                self.h = h * FAC_MIN;
                if self.h <= 1e-14 * self.t.abs().max(1.0) {
                    return Err(SimError::NonFiniteState { t: self.t });
                }
                continue;
            }
            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                let fac = (fac11 / self.err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                self.err_old = err.max(1e-4);
                let rc2 = [y1[0] - y[0], y1[1] - y[1]];
                let rc3 = [h * k1[0] - rc2[0], h * k1[1] - rc2[1]];
                let rc4 = [
                    rc2[0] - h * k7[0] - rc3[0],
                    rc2[1] - h * k7[1] - rc3[1],
                ];
                let rc5 = axpy(
                    &[0.0, 0.0],
                    h,
                    &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)],
                );
                let seg = DenseSegment {
                    t0: self.t,
                    h,
                    rcont: [y, rc2, rc3, rc4, rc5],
                };
                self.t = if last { t_stop } else { self.t + h };
                self.y = y1;
                self.k1 = k7;
                self.h = h / fac;
                return Ok(seg);
            }
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
        }
    }
}
