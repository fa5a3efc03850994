//! Stiff integration of the closed moment equations.
//!
//! The scheme is the L-stable second-order Rosenbrock method with an
//! embedded third-order error estimate (Shampine and Reichelt's `ode23s`),
//! with the exact Jacobian of the polynomial right-hand side. For large
//! steps near a fixed point each step approaches a Newton iteration, which
//! is what makes long-time integration a practical steady-state solver.

use faer::linalg::solvers::Solve;
use faer::Mat;
use num_complex::Complex64 as C64;

use super::MeanFieldSystem;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFieldOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Stationarity: `max|rhs| < steady_tol · ‖J‖∞ · max|y|`.
    pub steady_tol: f64,
    /// Relative tolerance along the way to a steady state. The end point is
    /// fixed by `steady_tol`, not by this.
    pub steady_rtol: f64,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            max_steps: 200_000,
            steady_tol: 1e-10,
            steady_rtol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<C64>>,
}

/// End point of a steady-state search.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub values: Vec<C64>,
    pub time: f64,
    /// `max|rhs| / (‖J‖∞ · max|y|)` at `time`.
    pub residual: f64,
    pub converged: bool,
    /// Attempted steps, accepted or not.
    pub steps: usize,
}

struct Stepper<'a> {
    sys: &'a MeanFieldSystem,
    n: usize,
    jac: Vec<C64>,
    f0: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    tmp: Vec<C64>,
    opts: MeanFieldOptions,
    steps: usize,
}

const D: f64 = 0.292_893_218_813_452_5; // 1 / (2 + √2)
const E32: f64 = 7.414_213_562_373_095; // 6 + √2

fn col(v: &[C64]) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

impl<'a> Stepper<'a> {
    fn new(sys: &'a MeanFieldSystem, opts: MeanFieldOptions) -> Self {
        let n = sys.len();
        Self {
            sys,
            n,
            jac: vec![C64::new(0.0, 0.0); n * n],
            f0: vec![C64::new(0.0, 0.0); n],
            f1: vec![C64::new(0.0, 0.0); n],
            f2: vec![C64::new(0.0, 0.0); n],
            tmp: vec![C64::new(0.0, 0.0); n],
            opts,
            steps: 0,
        }
    }

    fn jac_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.jac[i * self.n..(i + 1) * self.n]
                    .iter()
                    .map(|v| v.norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Refresh `f0` and the Jacobian at `y`; returns the scaled residual.
    fn linearize(&mut self, y: &[C64]) -> f64 {
        self.sys.eval(y, &mut self.f0);
        self.sys.jacobian(y, &mut self.jac);
        let fmax = self.f0.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let ymax = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let scale = self.jac_norm() * ymax;
        if fmax == 0.0 {
            0.0
        } else if scale > 0.0 {
            fmax / scale
        } else {
            f64::INFINITY
        }
    }

    /// One attempted step of size `h` from `y` (with `f0`, `jac` current).
    /// Returns the candidate and its scaled error.
    fn attempt(&mut self, y: &[C64], h: f64) -> (Vec<C64>, f64) {
        let n = self.n;
        let w = Mat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            C64::new(id, 0.0) - self.jac[i * n + j] * (h * D)
        });
        let lu = w.partial_piv_lu();
        let solve = |rhs: &[C64]| -> Vec<C64> {
            let x = lu.solve(col(rhs));
            (0..n).map(|i| x[(i, 0)]).collect()
        };
        let k1 = solve(&self.f0);
        for i in 0..n {
            self.tmp[i] = y[i] + k1[i] * (0.5 * h);
        }
        self.sys.eval(&self.tmp, &mut self.f1);
        let r: Vec<C64> = (0..n).map(|i| self.f1[i] - k1[i]).collect();
        let mut k2 = solve(&r);
        for i in 0..n {
            k2[i] += k1[i];
        }
        let ynew: Vec<C64> = (0..n).map(|i| y[i] + k2[i] * h).collect();
        self.sys.eval(&ynew, &mut self.f2);
        let r: Vec<C64> = (0..n)
            .map(|i| self.f2[i] - (k2[i] - self.f1[i]) * E32 - (k1[i] - self.f0[i]) * 2.0)
            .collect();
        let k3 = solve(&r);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = (k1[i] - k2[i] * 2.0 + k3[i]).norm() * h / 6.0;
            let sc = self.opts.atol + self.opts.rtol * y[i].norm().max(ynew[i].norm());
            err = err.max(e / sc);
        }
        self.steps += 1;
        (ynew, err)
    }
}

impl Stepper<'_> {
    /// `y + (1 - hJ)⁻¹ h f(y)` with `f0`, `jac` current.
    fn backward_euler(&mut self, y: &[C64], h: f64) -> Vec<C64> {
        let n = self.n;
        let w = Mat::from_fn(n, n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            C64::new(id, 0.0) - self.jac[i * n + j] * h
        });
        let x = w.partial_piv_lu().solve(col(&self.f0));
        self.steps += 1;
        (0..n).map(|i| y[i] + x[(i, 0)] * h).collect()
    }
}

fn initial_step(stepper: &Stepper, span: f64) -> f64 {
    let jn = stepper.jac_norm();
    let h = if jn > 0.0 { 1e-3 / jn } else { span };
    h.min(span).max(f64::MIN_POSITIVE)
}

fn check_init(sys: &MeanFieldSystem, y0: &[C64]) -> Result<()> {
    if y0.len() != sys.len() {
        return Err(Error::InvalidDimension(format!(
            "initial state has {} values, system has {}",
            y0.len(),
            sys.len()
        )));
    }
    if y0.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Domain("non-finite initial moment".into()));
    }
    Ok(())
}

/// Sample the solution at `times` (non-decreasing, starting at or after 0).
pub fn integrate(
    sys: &MeanFieldSystem,
    y0: &[C64],
    times: &[f64],
    opts: MeanFieldOptions,
) -> Result<MeanFieldTrajectory> {
    check_init(sys, y0)?;
    let mut st = Stepper::new(sys, opts);
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 0.0;
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        if target < t {
            return Err(Error::Domain("sample times must be non-decreasing".into()));
        }
        while t < target {
            st.linearize(&y);
            if h == 0.0 {
                h = initial_step(&st, target - t);
            }
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            let (ynew, err) = st.attempt(&y, hs);
            if err <= 1.0 && ynew.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                y = ynew;
                t = if last { target } else { t + hs };
                let fac = if err == 0.0 {
                    5.0
                } else {
                    (0.8 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
                };
                h = hs * fac;
            } else {
                h = hs
                    * if err.is_finite() {
                        (0.8 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.5)
                    } else {
                        0.1
                    };
                if h < 1e-14 * t.abs().max(1e-300) || h < f64::MIN_POSITIVE * 1e10 {
                    return Err(Error::Stiffness { time: t, step: h });
                }
            }
            if st.steps > opts.max_steps {
                return Err(Error::Stiffness { time: t, step: h });
            }
        }
        states.push(y.clone());
    }
    Ok(MeanFieldTrajectory {
        times: times.to_vec(),
        states,
    })
}

/// Integrate until stationary or `t_end`; non-convergence is reported in
/// the result, not as an error.
///
/// Between error-controlled steps a backward Euler step of size `10 t` is
/// tried and kept only if it halves the residual. Such a step keeps the
/// linear invariants of the equations, and once `t` exceeds the slowest time
/// scale it is a Newton iteration towards the fixed point.
pub fn steady_state(sys: &MeanFieldSystem, y0: &[C64], t_end: f64, opts: MeanFieldOptions) -> Result<MeanFieldState> {
    check_init(sys, y0)?;
    let mut st = Stepper::new(
        sys,
        MeanFieldOptions {
            rtol: opts.steady_rtol,
            ..opts
        },
    );
    let mut y = y0.to_vec();
    let mut t = 0.0;
    let mut h = 0.0;
    let mut residual = st.linearize(&y);
    loop {
        if residual < opts.steady_tol || t >= t_end || st.steps >= opts.max_steps {
            return Ok(MeanFieldState {
                values: y,
                time: t,
                residual,
                converged: residual < opts.steady_tol,
                steps: st.steps,
            });
        }
        if h == 0.0 {
            h = initial_step(&st, t_end - t);
        }
        let jump = (10.0 * t).min(t_end - t);
        if jump > h && residual < 1e-6 {
            let ynew = st.backward_euler(&y, jump);
            if ynew.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
                let saved = (st.f0.clone(), st.jac.clone());
                let rnew = st.linearize(&ynew);
                if rnew < 0.5 * residual {
                    y = ynew;
                    t += jump;
                    residual = rnew;
                    continue;
                }
                (st.f0, st.jac) = saved;
            }
        }
        let hs = h.min(t_end - t);
        let (ynew, err) = st.attempt(&y, hs);
        if err <= 1.0 && ynew.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            y = ynew;
            t += hs;
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.8 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
            };
            h = hs * fac;
            residual = st.linearize(&y);
        } else {
            h = hs
                * if err.is_finite() {
                    (0.8 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.5)
                } else {
                    0.1
                };
            if h < 1e-14 * t.abs().max(1e-300) {
                return Err(Error::Stiffness { time: t, step: h });
            }
        }
    }
}
