//! Characteristic values and times of a g²(τ) curve: the zero-delay peak
//! (g0, width τ0), the antibunching dip (g1, recovery time τ1) and the late
//! bunching shoulder (g2, decay time τ2).

use super::fit::levenberg_marquardt;
use super::G2Curve;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureWindows {
    /// End of the dip search window `(0, dip_end]`.
    pub dip_end: f64,
    pub shoulder_start: f64,
    pub shoulder_end: f64,
    /// Smallest excursion counted as a feature.
    pub threshold: f64,
}

impl Default for FeatureWindows {
    fn default() -> Self {
        Self {
            dip_end: 5e-9,
            shoulder_start: 5e-9,
            shoulder_end: 2e-6,
            threshold: 0.002,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct G2Features {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    /// 1/e half width of a Gaussian fitted to the zero-delay peak.
    pub tau0: Option<f64>,
    /// Exponential rise time from the dip to the shoulder.
    pub tau1: Option<f64>,
    /// Exponential decay time of the shoulder.
    pub tau2: Option<f64>,
    /// RMS residual of each fit that was attempted.
    pub fit_rms: [Option<f64>; 3],
    /// Delays at which g1 and g2 were found.
    pub tau_dip: f64,
    pub tau_shoulder: f64,
}

fn argext(values: &[f64], range: std::ops::Range<usize>, max: bool) -> Option<usize> {
    range.max_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if max {
            o
        } else {
            o.reverse()
        }
    })
}

fn rms(rss: f64, n: usize) -> f64 {
    (rss / n.max(1) as f64).sqrt()
}

/// The first delay after `from` at which the curve has covered half the
/// distance between `from` and `to` values.
fn half_time(t: &[f64], y: &[f64], from: usize, to: usize) -> f64 {
    let target = 0.5 * (y[from] + y[to]);
    let rising = y[to] > y[from];
    (from..=to)
        .find(|&i| if rising { y[i] >= target } else { y[i] <= target })
        .map(|i| (t[i] - t[from]).max(t[from + 1] - t[from]))
        .unwrap_or(t[to] - t[from])
}

pub fn extract_g2_features(curve: &G2Curve, windows: &FeatureWindows) -> G2Features {
    let t = &curve.taus;
    let y = &curve.values;
    let n = t.len();
    let dip_range = {
        let lo = t.iter().position(|&x| x > 0.0).unwrap_or(n);
        let hi = t.iter().position(|&x| x > windows.dip_end).unwrap_or(n);
        lo..hi.max(lo)
    };
    let i1 = argext(y, dip_range.clone(), false).unwrap_or(0);
    let g1 = y[i1];
    let i0 = argext(y, 0..i1 + 1, true).unwrap_or(0);
    let g0 = y[i0];
    let sh_lo = t
        .iter()
        .position(|&x| x >= windows.shoulder_start.max(t[i1]))
        .unwrap_or(n);
    let sh_hi = t.iter().position(|&x| x > windows.shoulder_end).unwrap_or(n);
    let i2 = argext(y, sh_lo..sh_hi.max(sh_lo), true).unwrap_or(i1);
    let g2 = y[i2];
    let last = y[sh_hi.max(1) - 1];
    let thr = windows.threshold;
    let mut fit_rms = [None; 3];

    let tau0 = if g0 - g1 > thr && i1 > i0 + 2 {
        let xs = &t[i0..=i1];
        let ys = &y[i0..=i1];
        let p0 = [g1, g0 - g1, half_time(t, y, i0, i1)];
        let model = |x: f64, p: &[f64]| p[0] + p[1] * (-((x - xs[0]) / p[2]).powi(2)).exp();
        let (p, rss) = levenberg_marquardt(xs, ys, &p0, model, 200);
        fit_rms[0] = Some(rms(rss, xs.len()));
        Some(p[2].abs())
    } else {
        None
    };

    let tau1 = if g2 - g1 > thr && i2 > i1 + 2 {
        let xs = &t[i1..=i2];
        let ys = &y[i1..=i2];
        let p0 = [g2, g2 - g1, half_time(t, y, i1, i2) / std::f64::consts::LN_2];
        let model = |x: f64, p: &[f64]| p[0] - p[1] * (-(x - xs[0]) / p[2]).exp();
        let (p, rss) = levenberg_marquardt(xs, ys, &p0, model, 200);
        fit_rms[1] = Some(rms(rss, xs.len()));
        Some(p[2].abs())
    } else {
        None
    };

    let end = sh_hi.max(1) - 1;
    let tau2 = if g2 - last > thr && end > i2 + 2 {
        let xs = &t[i2..=end];
        let ys = &y[i2..=end];
        let p0 = [last, g2 - last, half_time(t, y, i2, end) / std::f64::consts::LN_2];
        let model = |x: f64, p: &[f64]| p[0] + p[1] * (-(x - xs[0]) / p[2]).exp();
        let (p, rss) = levenberg_marquardt(xs, ys, &p0, model, 200);
        fit_rms[2] = Some(rms(rss, xs.len()));
        Some(p[2].abs())
    } else {
        None
    };

    G2Features {
        g0,
        g1,
        g2,
        tau0,
        tau1,
        tau2,
        fit_rms,
        tau_dip: t[i1],
        tau_shoulder: t[i2],
    }
}
