//! Emission spectrum at the mean-field level.
//!
//! The correlations `Y_k(τ) = ⟨X_k(τ) a(0)⟩` of the first-order operators
//! `X_k` that raise the excitation number by one (`a†` and the raising
//! transitions) obey the regression of their equations of motion. Products
//! `⟨X Z⟩` with a neutral single-emitter factor `Z` are factorized as
//! `⟨Z⟩_ss ⟨X⟩`, which leaves a small linear system `dY/dτ = M Y`.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use super::{MeanFieldSystem, Monomial};
use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::observables::{spectrum_from_correlation, Spectrum};

fn matmul(a: &[C64], b: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `exp(A)` by scaling and squaring of a Taylor series.
fn expm(a: &[C64], n: usize) -> Vec<C64> {
    let norm = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let x: Vec<C64> = a.iter().map(|v| v * scale).collect();
    let mut result = vec![C64::new(0.0, 0.0); n * n];
    let mut term = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        result[i * n + i] = C64::new(1.0, 0.0);
        term[i * n + i] = C64::new(1.0, 0.0);
    }
    for k in 1..=20 {
        term = matmul(&term, &x, n);
        let inv = 1.0 / k as f64;
        term.iter_mut().for_each(|v| *v *= inv);
        for (r, t) in result.iter_mut().zip(&term) {
            *r += t;
        }
    }
    for _ in 0..s {
        result = matmul(&result, &result, n);
    }
    result
}

/// Regression matrix and initial values for `⟨X(τ) a(0)⟩`; the first entry
/// is `X = a†`.
pub(crate) fn regression_system(sys: &MeanFieldSystem, y: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let model = sys.model();
    let exc = model.excitation();
    let nl = exc.len() as u8;
    let mut ops = vec![Monomial::boson(1, 0)];
    for x in 0..nl {
        for z in 0..nl {
            if exc[x as usize] - exc[z as usize] == 1 {
                ops.push(Monomial::site(1, x, z));
            }
        }
    }
    let pos: HashMap<Monomial, usize> = ops.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    let n = ops.len();
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    for (i, x) in ops.iter().enumerate() {
        for (term, &coef) in &model.heisenberg(x).terms {
            match term.order() {
                1 => {
                    let j = pos[&term.canonical()];
                    m[i * n + j] += coef;
                }
                2 => {
                    let atoms = term.atoms();
                    let (charged, neutral): (Vec<_>, Vec<_>) = atoms.iter().partition(|a| a.charge(exc) == 1);
                    if charged.len() != 1 || neutral.len() != 1 || neutral[0].charge(exc) != 0 {
                        return Err(Error::Domain(format!("unexpected regression term {term}")));
                    }
                    let j = pos[&charged[0].canonical()];
                    m[i * n + j] += coef * sys.moment(y, neutral[0]);
                }
                _ => return Err(Error::Domain(format!("unexpected regression term {term}"))),
            }
        }
    }
    let init = ops
        .iter()
        .map(|x| {
            let mut xa = x.clone();
            xa.annihilations += 1;
            sys.moment(y, &xa)
        })
        .collect();
    Ok((m, init))
}

/// `S(ω) = 2κ Re ∫₀^∞ e^{-iωτ} ⟨a†(τ) a(0)⟩ dτ` from the regression system,
/// sampled at `points` delays `k · dt`.
pub fn mf_spectrum(sys: &MeanFieldSystem, y: &[C64], dt: f64, points: usize) -> Result<Spectrum> {
    let (m, init) = regression_system(sys, y)?;
    let n = init.len();
    let md: Vec<C64> = m.iter().map(|v| v * dt).collect();
    let step = expm(&md, n);
    let mut v = init;
    let mut corr = Vec::with_capacity(points);
    for _ in 0..points {
        corr.push(v[0]);
        let mut next = vec![C64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                next[i] += step[i * n + j] * v[j];
            }
        }
        v = next;
    }
    Ok(spectrum_from_correlation(sys.spec().kappa, &corr, dt, 4))
}

/// Splitting `ω₊ - ω₋` of the two normal modes of
/// `ω_c a†a + ω b†b + g√(2J)(a†b + b†a)`, the low-excitation bosonic picture
/// of a spin `J` near its lowest state.
pub fn hybrid_mode_splitting(spec: &ModelSpec, j: f64) -> f64 {
    let detuning = spec.omega_c - spec.omega_e1g1;
    2.0 * (detuning * detuning / 4.0 + 2.0 * j * spec.g * spec.g).sqrt()
}
