//! Radiation rate, g²(τ) and emission spectra of a density-matrix backend.

mod features;
mod fit;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::liouville::{DensityModel, Liouvillian};
use crate::models::Level;
use crate::operators::DensityState;
use crate::solvers::{regression_correlator, steady_state, EvolveOptions, Seed};

pub use features::{extract_g2_features, FeatureWindows, G2Features};
pub use fit::{fit_lorentzians, lorentzian, Peak, PeakFit};

/// `κ ⟨a†a⟩`, photons per second.
pub fn radiation_rate(kappa: f64, mean_photons: f64) -> f64 {
    kappa * mean_photons
}

/// A stationary state together with the generator it solves.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub generator: Liouvillian,
    pub rho: DensityState,
}

impl SteadyState {
    pub fn solve(model: &dyn DensityModel) -> Result<Self> {
        let generator = model.generator(0)?;
        let rho = steady_state(&generator)?;
        Ok(Self { generator, rho })
    }

    pub fn mean_photons(&self, model: &dyn DensityModel) -> Result<f64> {
        let a = model.annihilation();
        Ok(self.rho.expect(&a.adjoint().compose(a)?)?.re)
    }

    pub fn radiation(&self, model: &dyn DensityModel) -> Result<f64> {
        Ok(radiation_rate(model.spec().kappa, self.mean_photons(model)?))
    }

    /// Mean single-emitter population of each level of the scheme.
    pub fn populations(&self, model: &dyn DensityModel) -> Result<Vec<(Level, f64)>> {
        model
            .spec()
            .scheme
            .levels()
            .iter()
            .map(|&l| Ok((l, self.rho.expect(&model.population(l)?)?.re)))
            .collect()
    }
}

/// Sampled `g²(τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Curve {
    pub taus: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `|Im g²|` seen before it was dropped.
    pub imag_residue: f64,
}

/// `τ = 0` followed by `points` log-spaced delays in `[t_min, t_max]`.
pub fn log_tau_grid(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    let mut out = vec![0.0];
    let (a, b) = (t_min.ln(), t_max.ln());
    let steps = points.max(2) - 1;
    out.extend((0..=steps).map(|i| (a + (b - a) * i as f64 / steps as f64).exp()));
    out
}

/// Default delay grid for feature extraction: 10 ps to 2 μs.
pub fn default_g2_grid() -> Vec<f64> {
    log_tau_grid(1e-11, 2e-6, 240)
}

/// `g²(τ) = ⟨a†a†(τ)a(τ)a⟩ / ⟨a†a⟩²` by quantum regression with the seed
/// `a ρ a†`.
pub fn g2(model: &dyn DensityModel, steady: &SteadyState, taus: &[f64], opts: EvolveOptions) -> Result<G2Curve> {
    let a = model.annihilation();
    let n = a.adjoint().compose(a)?;
    let mean = steady.rho.expect(&n)?.re;
    if mean.abs() < 1e-14 {
        return Err(Error::Normalization(mean));
    }
    let raw = regression_correlator(
        &steady.generator,
        &steady.generator,
        &steady.rho,
        &n,
        Seed::Sandwich(a, a),
        taus,
        opts,
    )?;
    let norm = mean * mean;
    let imag_residue = raw.iter().map(|v| (v.im / norm).abs()).fold(0.0, f64::max);
    Ok(G2Curve {
        taus: taus.to_vec(),
        values: raw.iter().map(|v| v.re / norm).collect(),
        imag_residue,
    })
}

/// First-order correlation `⟨a†(τ) a(0)⟩` on a uniform grid `k · dt`.
pub fn first_order_correlation(
    model: &dyn DensityModel,
    steady: &SteadyState,
    dt: f64,
    points: usize,
    opts: EvolveOptions,
) -> Result<Vec<C64>> {
    let a = model.annihilation();
    let l_seed = model.generator(-1)?;
    let taus: Vec<f64> = (0..points).map(|k| k as f64 * dt).collect();
    regression_correlator(
        &steady.generator,
        &l_seed,
        &steady.rho,
        &a.adjoint(),
        Seed::Left(a),
        &taus,
        opts,
    )
}

/// An emission spectrum on angular frequencies relative to the cavity.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub omegas: Vec<f64>,
    pub samples: Vec<f64>,
    /// `|C(τ_max)| / |C(0)|`; above 1e-4 the transform is truncated.
    pub tail: f64,
}

impl Spectrum {
    pub fn truncated(&self) -> bool {
        self.tail > 1e-4
    }

    /// Trapezoid integral `∫ S dω`.
    pub fn integral(&self) -> f64 {
        self.omegas
            .windows(2)
            .zip(self.samples.windows(2))
            .map(|(w, s)| 0.5 * (w[1] - w[0]) * (s[0] + s[1]))
            .sum()
    }
}

/// `S(ω) = 2κ Re ∫₀^∞ e^{-iωτ} C(τ) dτ` from uniform samples `C(k dt)` by
/// trapezoid rule and FFT, zero-padded `pad` times. The returned grid is
/// sorted and symmetric around zero.
pub fn spectrum_from_correlation(kappa: f64, corr: &[C64], dt: f64, pad: usize) -> Spectrum {
    let m = corr.len() * pad.max(1);
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for (k, &c) in corr.iter().enumerate() {
        let w = if k == 0 { 0.5 } else { 1.0 };
        buf[k] = c * (w * dt);
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dw = std::f64::consts::TAU / (m as f64 * dt);
    let mut pairs: Vec<(f64, f64)> = buf
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            (kk * dw, 2.0 * kappa * v.re)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let c0 = corr.first().map_or(0.0, |c| c.norm());
    let tail = if c0 > 0.0 {
        corr.last().unwrap().norm() / c0
    } else {
        0.0
    };
    Spectrum {
        omegas: pairs.iter().map(|p| p.0).collect(),
        samples: pairs.iter().map(|p| p.1).collect(),
        tail,
    }
}

/// Steady-state emission spectrum of a density-matrix backend.
pub fn spectrum(
    model: &dyn DensityModel,
    steady: &SteadyState,
    dt: f64,
    points: usize,
    opts: EvolveOptions,
) -> Result<Spectrum> {
    let corr = first_order_correlation(model, steady, dt, points, opts)?;
    Ok(spectrum_from_correlation(model.spec().kappa, &corr, dt, 4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damped_oscillator_gives_lorentzian() {
        let kappa = 2.0;
        let w0 = 5.0;
        let dt = 0.01;
        let corr: Vec<C64> = (0..4000)
            .map(|k| {
                let t = k as f64 * dt;
                C64::new(0.0, w0 * t).exp() * (-kappa * t / 2.0).exp()
            })
            .collect();
        let s = spectrum_from_correlation(kappa, &corr, dt, 4);
        let (imax, _) = s.samples.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        assert!((s.omegas[imax] - w0).abs() < 0.02);
        // 2κ Re 1/(κ/2 + i(ω-ω0)) at resonance = 4
        assert!((s.samples[imax] - 4.0).abs() < 0.02);
        assert!(!s.truncated());
    }

    #[test]
    fn log_grid_starts_at_zero() {
        let g = log_tau_grid(1e-11, 2e-6, 200);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert!((g[1] - 1e-11).abs() < 1e-24);
        assert!((g[200] - 2e-6).abs() < 1e-18);
    }
}
