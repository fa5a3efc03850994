//! Small nonlinear least-squares fits.

use faer::linalg::solvers::Solve;
use faer::Mat;

/// Levenberg–Marquardt on `Σ (y_i - f(x_i; p))²` with a forward-difference
/// Jacobian. Returns the parameters and the residual sum of squares.
pub(crate) fn levenberg_marquardt<F>(x: &[f64], y: &[f64], p0: &[f64], f: F, max_iter: usize) -> (Vec<f64>, f64)
where
    F: Fn(f64, &[f64]) -> f64,
{
    let n = x.len();
    let np = p0.len();
    let rss_of = |p: &[f64]| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let r = yi - f(xi, p);
                r * r
            })
            .sum()
    };
    let mut p = p0.to_vec();
    let mut rss = rss_of(&p);
    let mut lambda = 1e-3;
    for _ in 0..max_iter {
        let mut jac = Mat::<f64>::zeros(n, np);
        let base: Vec<f64> = x.iter().map(|&xi| f(xi, &p)).collect();
        for j in 0..np {
            let h = 1e-7 * p[j].abs().max(1e-12);
            let mut q = p.clone();
            q[j] += h;
            for i in 0..n {
                jac[(i, j)] = (f(x[i], &q) - base[i]) / h;
            }
        }
        let res: Vec<f64> = y.iter().zip(&base).map(|(a, b)| a - b).collect();
        let jtj = jac.transpose() * &jac;
        let jtr = Mat::<f64>::from_fn(np, 1, |j, _| (0..n).map(|i| jac[(i, j)] * res[i]).sum());
        let mut improved = false;
        for _ in 0..12 {
            let mut a = jtj.clone();
            for j in 0..np {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let step = a.partial_piv_lu().solve(&jtr);
            let cand: Vec<f64> = (0..np).map(|j| p[j] + step[(j, 0)]).collect();
            let r = rss_of(&cand);
            if r.is_finite() && r < rss {
                let rel = (rss - r) / rss.max(1e-300);
                p = cand;
                rss = r;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if rel < 1e-12 {
                    return (p, rss);
                }
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (p, rss)
}

/// Lorentzian line with full width at half maximum `width`.
pub fn lorentzian(x: f64, center: f64, width: f64, amplitude: f64) -> f64 {
    let hw = 0.5 * width;
    amplitude * hw * hw / ((x - center).powi(2) + hw * hw)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub center: f64,
    /// Full width at half maximum.
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakFit {
    /// Sorted by center.
    pub peaks: Vec<Peak>,
    /// Largest residual relative to the largest fitted amplitude.
    pub residual: f64,
    pub low_confidence: bool,
}

fn local_maxima(y: &[f64], floor: f64) -> Vec<usize> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| y[i] > floor && y[i] >= y[i - 1] && y[i] > y[i + 1])
        .collect()
}

fn half_width_guess(x: &[f64], y: &[f64], i: usize) -> f64 {
    let half = 0.5 * y[i];
    let mut lo = i;
    while lo > 0 && y[lo] > half {
        lo -= 1;
    }
    let mut hi = i;
    while hi + 1 < y.len() && y[hi] > half {
        hi += 1;
    }
    (x[hi] - x[lo]).abs().max((x[1] - x[0]).abs())
}

/// Fit a sum of Lorentzians, one per resolved local maximum (at most
/// `max_peaks`, strongest first).
pub fn fit_lorentzians(x: &[f64], y: &[f64], max_peaks: usize) -> PeakFit {
    let top = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut cands = local_maxima(y, 0.05 * top);
    cands.sort_by(|&a, &b| y[b].total_cmp(&y[a]));
    cands.truncate(max_peaks.max(1));
    if cands.is_empty() {
        let i = y
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |p| p.0);
        cands.push(i);
    }
    let mut p0 = Vec::new();
    for &i in &cands {
        p0.extend([x[i], half_width_guess(x, y, i), y[i]]);
    }
    let model = |xi: f64, p: &[f64]| -> f64 { p.chunks(3).map(|c| lorentzian(xi, c[0], c[1], c[2])).sum() };
    let (p, _) = levenberg_marquardt(x, y, &p0, model, 200);
    let mut peaks: Vec<Peak> = p
        .chunks(3)
        .map(|c| Peak {
            center: c[0],
            width: c[1].abs(),
            amplitude: c[2],
        })
        .collect();
    peaks.sort_by(|a, b| a.center.total_cmp(&b.center));
    let amp = peaks.iter().map(|q| q.amplitude.abs()).fold(0.0, f64::max);
    let residual = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - model(xi, &p)).abs())
        .fold(0.0, f64::max)
        / amp.max(1e-300);
    PeakFit {
        peaks,
        residual,
        low_confidence: residual > 0.2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn single_lorentzian_recovered() {
        let x = grid(801, -10.0, 10.0);
        let y: Vec<f64> = x.iter().map(|&v| lorentzian(v, 1.3, 0.7, 2.5)).collect();
        let fit = fit_lorentzians(&x, &y, 3);
        assert_eq!(fit.peaks.len(), 1);
        let p = fit.peaks[0];
        assert!((p.center - 1.3).abs() < 0.013);
        assert!((p.width - 0.7).abs() < 0.007);
        assert!(!fit.low_confidence);
    }

    #[test]
    fn split_pair_recovered() {
        let x = grid(2001, -20.0, 20.0);
        let y: Vec<f64> = x
            .iter()
            .map(|&v| lorentzian(v, -5.0, 1.0, 1.0) + lorentzian(v, 5.0, 1.0, 0.8))
            .collect();
        let fit = fit_lorentzians(&x, &y, 4);
        assert_eq!(fit.peaks.len(), 2);
        assert!((fit.peaks[0].center + 5.0).abs() < 0.1);
        assert!((fit.peaks[1].center - 5.0).abs() < 0.1);
        assert!((fit.peaks[1].amplitude - 0.8).abs() < 0.016);
    }
}
