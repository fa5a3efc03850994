//! Time propagation, steady states and two-time correlations for
//! vectorized density matrices.
//!
//! Propagation uses the L-stable, stiffly accurate SDIRK method of order 4
//! with an embedded order-3 estimate (γ = 1/4). For the linear problem
//! `y' = L y` each stage solves `(I - hγL) k_i = L (y + h Σ_j a_ij k_j)`, so a
//! step costs four sparse solves with one factorization per step size.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{factor, Factorization, ShiftedSystem};
use crate::liouville::Liouvillian;
use crate::operators::{DensityState, Operator};
use crate::sparse::CsrMatrix;
use crate::support::Support;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

const GAMMA: f64 = 0.25;
const A: [[f64; 4]; 5] = [
    [0.0, 0.0, 0.0, 0.0],
    [0.5, 0.0, 0.0, 0.0],
    [17.0 / 50.0, -1.0 / 25.0, 0.0, 0.0],
    [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.0],
    [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0],
];
/// Weights of the solution: the last row of the tableau plus γ.
const B: [f64; 5] = [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25];
const B_HAT: [f64; 5] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Substeps per output interval before giving up.
    pub max_substeps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_substeps: 1 << 22,
        }
    }
}

/// Sampled states of a propagation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
}

/// Integrates `y' = L y` between arbitrary output times, caching one
/// factorization per distinct step size.
pub struct Propagator<'a> {
    l: &'a Liouvillian,
    system: ShiftedSystem,
    cache: Vec<(f64, Factorization)>,
    opts: EvolveOptions,
    /// Last accepted substep length.
    h: Option<f64>,
    steps: usize,
}

const CACHE_SIZE: usize = 6;

impl<'a> Propagator<'a> {
    pub fn new(l: &'a Liouvillian, opts: EvolveOptions) -> Self {
        Self {
            l,
            system: ShiftedSystem::new(l.matrix()),
            cache: Vec::new(),
            opts,
            h: None,
            steps: 0,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    fn factorization(&mut self, h: f64) -> Result<usize> {
        if let Some(pos) = self.cache.iter().position(|(hc, _)| ((hc - h) / h).abs() < 1e-12) {
            return Ok(pos);
        }
        let f = self.system.factor(C64::new(1.0, 0.0), C64::new(-h * GAMMA, 0.0))?;
        if self.cache.len() == CACHE_SIZE {
            self.cache.remove(0);
        }
        self.cache.push((h, f));
        Ok(self.cache.len() - 1)
    }

    /// One step of length `h`; returns the new state and the scaled error.
    fn step(&mut self, y: &[C64], h: f64) -> Result<(Vec<C64>, f64)> {
        let n = y.len();
        let fi = self.factorization(h)?;
        let mut k: Vec<Vec<C64>> = Vec::with_capacity(5);
        let mut tmp = vec![ZERO; n];
        for (i, row) in A.iter().enumerate() {
            tmp.copy_from_slice(y);
            for (j, &a) in row.iter().enumerate().take(i) {
                if a != 0.0 {
                    let s = h * a;
                    for (t, kj) in tmp.iter_mut().zip(&k[j]) {
                        *t += kj * s;
                    }
                }
            }
            let mut ki = vec![ZERO; n];
            self.l.apply_into(&tmp, &mut ki);
            self.cache[fi].1.solve_in_place(&mut ki);
            k.push(ki);
        }
        let mut out = y.to_vec();
        let mut err = vec![ZERO; n];
        for i in 0..5 {
            let wb = h * B[i];
            let we = h * (B[i] - B_HAT[i]);
            for ((o, e), ki) in out.iter_mut().zip(err.iter_mut()).zip(&k[i]) {
                *o += ki * wb;
                *e += ki * we;
            }
        }
        // filter the estimate through the stage matrix so stiff modes do
        // not inflate it
        self.cache[fi].1.solve_in_place(&mut err);
        let scale = self.opts.atol + self.opts.rtol * y.iter().chain(out.iter()).map(|v| v.norm()).fold(0.0, f64::max);
        let e = err.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale;
        if !e.is_finite() {
            return Err(Error::Domain("non-finite state during propagation".into()));
        }
        Ok((out, e))
    }

    /// Advance `y` by `dt` in equal substeps.
    pub fn advance(&mut self, y: &mut Vec<C64>, t0: f64, dt: f64) -> Result<()> {
        if dt <= 0.0 {
            return Ok(());
        }
        let mut m = match self.h {
            Some(h) => ((dt / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize,
            None => 4,
        };
        loop {
            if m > self.opts.max_substeps {
                return Err(Error::Stiffness {
                    time: t0,
                    step: dt / m as f64,
                });
            }
            let h = dt / m as f64;
            let mut state = y.clone();
            let mut worst = 0.0f64;
            let mut failed = false;
            for _ in 0..m {
                let (next, e) = self.step(&state, h)?;
                self.steps += 1;
                if e > 1.0 {
                    failed = true;
                    break;
                }
                worst = worst.max(e);
                state = next;
            }
            if failed {
                m *= 2;
                continue;
            }
            *y = state;
            // order 4 in h: halving the substep count when the error is
            // 1/32 of the tolerance keeps the next interval inside it
            self.h = Some(if worst < 1.0 / 32.0 { 2.0 * h } else { h });
            return Ok(());
        }
    }

    /// Propagate `y0` to each of `times` (non-decreasing, starting at or after
    /// `t0`) and hand every sample to `visit`.
    pub fn sample<F>(&mut self, y0: &[C64], t0: f64, times: &[f64], mut visit: F) -> Result<Vec<C64>>
    where
        F: FnMut(usize, &[C64]) -> Result<()>,
    {
        let mut y = y0.to_vec();
        let mut t = t0;
        for (i, &ti) in times.iter().enumerate() {
            if ti < t - 1e-15 * t.abs().max(1e-30) {
                return Err(Error::Domain("output times must be non-decreasing".into()));
            }
            self.advance(&mut y, t, ti - t)?;
            t = ti.max(t);
            visit(i, &y)?;
        }
        Ok(y)
    }
}

/// Evolve `rho0` under `l`, returning the state at each of `times` (the
/// initial time is 0).
pub fn evolve(l: &Liouvillian, rho0: &DensityState, times: &[f64], opts: EvolveOptions) -> Result<Trajectory> {
    check_state_matches(l, rho0)?;
    let mut states = Vec::with_capacity(times.len());
    let mut prop = Propagator::new(l, opts);
    prop.sample(rho0.data(), 0.0, times, |_, y| {
        states.push(DensityState::new(
            rho0.signature().clone(),
            l.support().clone(),
            y.to_vec(),
        )?);
        Ok(())
    })?;
    Ok(Trajectory {
        times: times.to_vec(),
        states,
    })
}

fn check_state_matches(l: &Liouvillian, rho: &DensityState) -> Result<()> {
    if rho.signature() != l.signature() || **rho.support() != **l.support() {
        return Err(Error::Signature(
            "state and generator live on different supports".into(),
        ));
    }
    Ok(())
}

/// `‖L ρ‖∞ / ‖L‖∞`.
pub fn stationarity_residual(l: &Liouvillian, rho: &DensityState) -> f64 {
    let r = l.apply(rho.data());
    let scale = l.norm_inf().max(f64::MIN_POSITIVE);
    r.iter().map(|v| v.norm()).fold(0.0, f64::max) / scale
}

/// Residual threshold (relative to `‖L‖∞`) for declaring a state stationary.
pub const STATIONARY_TOL: f64 = 1e-10;

fn trace_row_solve(l: &Liouvillian, row: usize) -> Result<Vec<C64>> {
    let sup = l.support();
    let n = sup.len();
    let diag = sup.diagonal_indices();
    let mut triplets: Vec<(usize, usize, C64)> = l.matrix().iter().filter(|&(r, _, _)| r != row).collect();
    for &(_, k) in &diag {
        triplets.push((row, k, C64::new(1.0, 0.0)));
    }
    let m = CsrMatrix::from_triplets(n, n, triplets);
    let f = factor(&m)?;
    let mut b = vec![ZERO; n];
    b[row] = C64::new(1.0, 0.0);
    let mut x = f.solve(&b);
    for _ in 0..3 {
        let mx = m.matvec(&x);
        let mut r: Vec<C64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
        f.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinearSolve("singular generator".into()));
    }
    Ok(x)
}

fn hermitize(rho: DensityState) -> Result<DensityState> {
    let sup = rho.support().clone();
    let data = sup
        .pairs()
        .zip(rho.data())
        .map(|((i, j), &v)| (v + rho.element(j, i).conj()) * 0.5)
        .collect();
    let out = DensityState::new(rho.signature().clone(), sup, data)?;
    let tr = out.trace();
    Ok(out.scaled(C64::new(1.0 / tr.re, 0.0)))
}

/// The unique stationary state of `l`, which must act on the neutral
/// sector (or the full space).
///
/// The trace condition replaces the row of element (0, 0); a second solve
/// with a different replaced row detects a degenerate null space. If the
/// linear solve fails, the state is found by long-time evolution instead.
pub fn steady_state(l: &Liouvillian) -> Result<DensityState> {
    let sup = l.support().clone();
    if !sup.is_hermitian_closed() {
        return Err(Error::Signature("steady states live in the neutral sector".into()));
    }
    let diag = sup.diagonal_indices();
    let first = diag[0].1;
    let last = diag[diag.len() - 1].1;
    let sig = l.signature().clone();
    let build = |x: Vec<C64>| -> Result<DensityState> { hermitize(DensityState::new(sig.clone(), sup.clone(), x)?) };

    if let Ok(x1) = trace_row_solve(l, first) {
        let rho1 = build(x1)?;
        let res1 = stationarity_residual(l, &rho1);
        if res1 < STATIONARY_TOL {
            if first == last {
                return Ok(rho1);
            }
            if let Ok(x2) = trace_row_solve(l, last) {
                let rho2 = build(x2)?;
                let res2 = stationarity_residual(l, &rho2);
                let diff = rho1
                    .data()
                    .iter()
                    .zip(rho2.data())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                if res2 < STATIONARY_TOL && diff > 1e-7 {
                    return Err(Error::Multiplicity { residual: diff });
                }
                if res2 < STATIONARY_TOL {
                    return Ok(rho1);
                }
            }
            // the second solve hit a singular pivot: the first one stands
            return Ok(rho1);
        }
    }
    steady_state_by_evolution(l)
}

/// Long-time evolution from the maximally mixed state until the residual
/// drops below [`STATIONARY_TOL`].
pub fn steady_state_by_evolution(l: &Liouvillian) -> Result<DensityState> {
    let sig = l.signature().clone();
    let sup = l.support().clone();
    let mut rho = DensityState::maximally_mixed(sig, sup)?;
    let slowest = l
        .spec()
        .map(|s| {
            [
                s.kappa,
                s.gamma_e1g1 + s.gamma_g1e1,
                s.gamma_e2g2 + s.gamma_g2e2,
                s.gamma_mg1 + s.gamma_mg2,
                s.gamma_e1m,
                s.gamma_e2m,
            ]
            .into_iter()
            .filter(|&r| r > 0.0)
            .fold(f64::INFINITY, f64::min)
        })
        .filter(|r| r.is_finite())
        .unwrap_or(1e6);
    let t_end = 50.0 / slowest;
    let mut prop = Propagator::new(l, EvolveOptions::default());
    let mut y = rho.data().to_vec();
    let mut t = 0.0;
    let mut dt = 1.0 / l.norm_inf().max(1.0);
    while t < t_end {
        prop.advance(&mut y, t, dt)?;
        t += dt;
        dt *= 2.0;
        rho = DensityState::new(rho.signature().clone(), rho.support().clone(), y.clone())?;
        if stationarity_residual(l, &rho) < STATIONARY_TOL {
            return hermitize(rho);
        }
    }
    let residual = stationarity_residual(l, &rho);
    Err(Error::NotStationary { residual })
}

/// How the regression seed is formed from the stationary state.
#[derive(Clone, Copy, Debug)]
pub enum Seed<'a> {
    /// `B ρ`
    Left(&'a Operator),
    /// `B ρ C†`
    Sandwich(&'a Operator, &'a Operator),
}

/// Linear functional `x ↦ tr(A x)` on a support.
pub fn trace_functional(a: &Operator, support: &Support) -> Vec<C64> {
    let mut w = vec![ZERO; support.len()];
    // tr(A x) = Σ A_{rc} x_{cr}
    for (r, c, v) in a.matrix().iter() {
        if let Some(k) = support.index(c, r) {
            w[k] += v;
        }
    }
    w
}

/// `⟨A(τ) B(0)⟩` (or `tr[A U(τ)(B ρ C†)]`) for each `τ` in `taus`.
///
/// `l_seed` must act on the support the seed lives on; `l_ss` is the
/// generator `rho_ss` is stationary under.
pub fn regression_correlator(
    l_ss: &Liouvillian,
    l_seed: &Liouvillian,
    rho_ss: &DensityState,
    a: &Operator,
    seed: Seed<'_>,
    taus: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<C64>> {
    check_state_matches(l_ss, rho_ss)?;
    let residual = stationarity_residual(l_ss, rho_ss);
    if residual > 1e-8 {
        return Err(Error::NotStationary { residual });
    }
    let target: Arc<Support> = l_seed.support().clone();
    let x0 = match seed {
        Seed::Left(b) => {
            let id = Operator::identity(rho_ss.signature());
            rho_ss.sandwich(b, &id, target.clone())?
        }
        Seed::Sandwich(b, c) => rho_ss.sandwich(b, c, target.clone())?,
    };
    let w = trace_functional(a, &target);
    // evolve a normalized copy so tolerances are relative to the seed
    let norm = x0.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
    if norm == 0.0 {
        return Ok(vec![ZERO; taus.len()]);
    }
    let y0: Vec<C64> = x0.data().iter().map(|v| v / norm).collect();
    let mut out = vec![ZERO; taus.len()];
    let mut prop = Propagator::new(l_seed, opts);
    prop.sample(&y0, 0.0, taus, |i, y| {
        out[i] = w.iter().zip(y).map(|(wi, yi)| wi * yi).sum::<C64>() * norm;
        Ok(())
    })?;
    Ok(out)
}
