//! One function per command. Each sweep point is an independent job; the
//! rows of all points are concatenated in grid order.

use rayon::prelude::*;
use superrad::cumulant::{
    hybrid_mode_splitting, mf_spectrum, steady_state as mf_steady_state, MeanFieldOptions, MeanFieldSystem,
};
use superrad::dicke::{dicke_populations, DickeModel};
use superrad::io::CsvTable;
use superrad::liouville::{DensityModel, ProductModel};
use superrad::models::{Level, ModelSpec};
use superrad::observables::{
    extract_g2_features, fit_lorentzians, g2, log_tau_grid, radiation_rate, spectrum, FeatureWindows, SteadyState,
};
use superrad::operators::DensityState;
use superrad::solvers::{evolve, EvolveOptions};
use superrad::{Error, Result, C64};

use crate::config::{Backend, Command, RunConfig};

/// A named output table.
pub struct Output {
    pub file: &'static str,
    pub table: CsvTable,
}

enum Density {
    Exact(ProductModel),
    Dicke(DickeModel),
}

impl Density {
    fn new(backend: Backend, spec: &ModelSpec) -> Result<Self> {
        match backend {
            Backend::Exact => Ok(Density::Exact(ProductModel::new(spec)?)),
            Backend::Dicke => Ok(Density::Dicke(DickeModel::new(spec)?)),
            Backend::Meanfield => Err(Error::Validation {
                field: "run.backend".into(),
                reason: "not a density-matrix backend".into(),
            }),
        }
    }

    fn model(&self) -> &dyn DensityModel {
        match self {
            Density::Exact(m) => m,
            Density::Dicke(m) => m,
        }
    }

    /// `(J̄, M̄)` of the g1–e1 pseudo-spin.
    fn dicke_numbers(&self, rho: &DensityState) -> Result<(f64, f64)> {
        match self {
            Density::Dicke(m) => {
                let pops = dicke_populations(m, rho)?;
                let (mut jj, mut mm) = (0.0, 0.0);
                for &(tj, tm, p) in &pops.entries {
                    let j = tj as f64 / 2.0;
                    jj += p * j * (j + 1.0);
                    mm += p * tm as f64 / 2.0;
                }
                Ok((((1.0 + 4.0 * jj).sqrt() - 1.0) / 2.0, mm))
            }
            Density::Exact(m) => {
                let level = |k: u8| if k == 1 { Level::G1 } else { Level::E1 };
                let moment = |ops: &[(usize, u8, u8)]| -> Result<f64> {
                    let mut op = m.sigma(ops[0].0, level(ops[0].2), level(ops[0].1))?;
                    for &(i, a, b) in &ops[1..] {
                        op = op.compose(&m.sigma(i, level(b), level(a))?)?;
                    }
                    Ok(rho.expect(&op)?.re)
                };
                let err = std::cell::RefCell::new(None);
                let out = superrad::cumulant::dicke_numbers_from(m.spec().n_emitters, |k| {
                    use superrad::cumulant::DickeMoment::*;
                    let r = match k {
                        Pop1 => rho.expect(&m.population_operator(Level::G1).unwrap()).map(|v| v.re),
                        Pop2 => rho.expect(&m.population_operator(Level::E1).unwrap()).map(|v| v.re),
                        Pair(a, b) => moment(&[(0, a.0, a.1), (1, b.0, b.1)]),
                    };
                    r.unwrap_or_else(|e| {
                        *err.borrow_mut() = Some(e);
                        f64::NAN
                    })
                });
                match err.into_inner() {
                    Some(e) => Err(e),
                    None => out,
                }
            }
        }
    }
}

fn evolve_opts(cfg: &RunConfig) -> EvolveOptions {
    EvolveOptions {
        rtol: cfg.options.rtol,
        atol: cfg.options.atol,
        ..EvolveOptions::default()
    }
}

/// Mean-field steady state from the all-ground product state.
fn mf_steady(spec: &ModelSpec, t_end: f64) -> Result<(MeanFieldSystem, Vec<C64>)> {
    let sys = MeanFieldSystem::new(spec)?;
    let mut ground = vec![0.0; spec.scheme.n_levels()];
    ground[0] = 1.0;
    let y0 = sys.product_state(&ground)?;
    let st = mf_steady_state(&sys, &y0, t_end, MeanFieldOptions::default())?;
    if !st.converged {
        return Err(Error::NotStationary { residual: st.residual });
    }
    Ok((sys, st.values))
}

/// Prefix each row with the sweep value when there is a sweep.
fn with_param(cfg: &RunConfig, value: Option<f64>, row: Vec<f64>) -> Vec<f64> {
    match (&cfg.sweep, value) {
        (Some(_), Some(v)) => std::iter::once(v).chain(row).collect(),
        _ => row,
    }
}

fn columns(cfg: &RunConfig, rest: &[String]) -> Vec<String> {
    let mut out: Vec<String> = cfg.sweep.iter().map(|s| s.column()).collect();
    out.extend(rest.iter().cloned());
    out
}

fn strs(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Rows of every output table for one sweep point.
type PointRows = Vec<Vec<Vec<f64>>>;

fn steady_point(cfg: &RunConfig, spec: &ModelSpec) -> Result<PointRows> {
    let (photons, pops, (j, m)) = match cfg.backend {
        Backend::Meanfield => {
            let (sys, y) = mf_steady(spec, cfg.options.t_end)?;
            let pops: Vec<f64> = sys.populations(&y).into_iter().map(|p| p.1).collect();
            (sys.mean_photons(&y), pops, sys.dicke_numbers(&y)?)
        }
        b => {
            let d = Density::new(b, spec)?;
            let ss = SteadyState::solve(d.model())?;
            let pops = ss.populations(d.model())?.into_iter().map(|p| p.1).collect();
            (ss.mean_photons(d.model())?, pops, d.dicke_numbers(&ss.rho)?)
        }
    };
    let mut row = vec![photons, radiation_rate(spec.kappa, photons)];
    row.extend(pops);
    row.extend([j, m]);
    Ok(vec![vec![row]])
}

fn g2_point(cfg: &RunConfig, spec: &ModelSpec) -> Result<PointRows> {
    let d = Density::new(cfg.backend, spec)?;
    let ss = SteadyState::solve(d.model())?;
    let o = &cfg.options;
    let taus = log_tau_grid(o.tau_min, o.tau_max, o.tau_points);
    let curve = g2(d.model(), &ss, &taus, evolve_opts(cfg))?;
    let f = extract_g2_features(&curve, &FeatureWindows::default());
    let rows = curve
        .taus
        .iter()
        .zip(&curve.values)
        .map(|(&t, &v)| vec![t, v])
        .collect();
    let nan = f64::NAN;
    let feat = vec![
        ss.mean_photons(d.model())?,
        f.g0,
        f.g1,
        f.g2,
        f.tau0.unwrap_or(nan),
        f.tau1.unwrap_or(nan),
        f.tau2.unwrap_or(nan),
    ];
    Ok(vec![rows, vec![feat]])
}

fn spectrum_point(cfg: &RunConfig, spec: &ModelSpec) -> Result<PointRows> {
    let o = &cfg.options;
    let (s, (j, _)) = match cfg.backend {
        Backend::Meanfield => {
            let (sys, y) = mf_steady(spec, o.t_end)?;
            (mf_spectrum(&sys, &y, o.dt, o.points)?, sys.dicke_numbers(&y)?)
        }
        b => {
            let d = Density::new(b, spec)?;
            let ss = SteadyState::solve(d.model())?;
            (
                spectrum(d.model(), &ss, o.dt, o.points, evolve_opts(cfg))?,
                d.dicke_numbers(&ss.rho)?,
            )
        }
    };
    if s.truncated() {
        eprintln!(
            "warning: correlation has not decayed (tail {:.1e}); widen dt or points",
            s.tail
        );
    }
    let rows = s.omegas.iter().zip(&s.samples).map(|(&w, &v)| vec![w, v]).collect();
    let fit = fit_lorentzians(&s.omegas, &s.samples, o.max_peaks);
    let hp = hybrid_mode_splitting(spec, j);
    let peaks = fit
        .peaks
        .iter()
        .enumerate()
        .map(|(k, p)| {
            vec![
                k as f64,
                p.center,
                p.width,
                p.amplitude,
                if fit.low_confidence { 1.0 } else { 0.0 },
                j,
                hp,
            ]
        })
        .collect();
    Ok(vec![rows, peaks])
}

fn pulse_point(cfg: &RunConfig, spec: &ModelSpec) -> Result<PointRows> {
    let o = &cfg.options;
    let mut pumped = spec.clone();
    pumped.set_pump(o.prepare_pump);
    let d0 = Density::new(cfg.backend, &pumped)?;
    let ss = SteadyState::solve(d0.model())?;
    let mut free = spec.clone();
    free.set_pump(0.0);
    let d = Density::new(cfg.backend, &free)?;
    let l = d.model().generator(0)?;
    let n = o.time_points.max(2);
    let times: Vec<f64> = (0..n).map(|k| o.t_max * k as f64 / (n - 1) as f64).collect();
    let traj = evolve(&l, &ss.rho, &times, evolve_opts(cfg))?;
    let a = d.model().annihilation();
    let num = a.adjoint().compose(a)?;
    let pe = d.model().population(Level::E1)?;
    let mut rows = Vec::with_capacity(n);
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let photons = rho.expect(&num)?.re;
        let (j, m) = d.dicke_numbers(rho)?;
        rows.push(vec![
            *t,
            radiation_rate(spec.kappa, photons),
            photons,
            rho.expect(&pe)?.re,
            j,
            m,
        ]);
    }
    Ok(vec![rows])
}

fn dicke_map_point(_cfg: &RunConfig, spec: &ModelSpec) -> Result<PointRows> {
    let Density::Dicke(m) = Density::new(Backend::Dicke, spec)? else {
        unreachable!()
    };
    let ss = SteadyState::solve(&m)?;
    Ok(vec![dicke_populations(&m, &ss.rho)?.table().rows])
}

fn layout(cfg: &RunConfig, spec: &ModelSpec) -> Vec<(&'static str, Vec<String>)> {
    match cfg.command {
        Command::SteadySweep => {
            let mut c = strs(&["n_photons", "radiation[1/s]"]);
            c.extend(spec.scheme.levels().iter().map(|l| format!("pop_{l}")));
            c.extend(strs(&["J_bar", "M_bar"]));
            vec![("steady_sweep.csv", columns(cfg, &c))]
        }
        Command::G2 => vec![
            ("g2.csv", columns(cfg, &strs(&["tau[s]", "g2"]))),
            (
                "g2_features.csv",
                columns(
                    cfg,
                    &strs(&["n_photons", "g0", "g1", "g2", "tau0[s]", "tau1[s]", "tau2[s]"]),
                ),
            ),
        ],
        Command::Spectrum => vec![
            ("spectrum.csv", columns(cfg, &strs(&["omega[rad/s]", "S[1/s]"]))),
            (
                "spectrum_peaks.csv",
                columns(
                    cfg,
                    &strs(&[
                        "peak",
                        "center[rad/s]",
                        "fwhm[rad/s]",
                        "amplitude[1/s]",
                        "low_confidence",
                        "J_bar",
                        "hp_splitting[rad/s]",
                    ]),
                ),
            ),
        ],
        Command::Pulse => vec![(
            "pulse.csv",
            columns(
                cfg,
                &strs(&["time[s]", "radiation[1/s]", "n_photons", "pop_e1", "J_bar", "M_bar"]),
            ),
        )],
        Command::DickeMap => vec![("dicke_map.csv", columns(cfg, &strs(&["J", "M", "population"])))],
    }
}

/// Run every sweep point on `workers` threads and assemble the tables.
pub fn run(cfg: &RunConfig, workers: usize) -> Result<Vec<Output>> {
    cfg.check()?;
    let grid = cfg.grid()?;
    let point = |value: &Option<f64>| -> Result<PointRows> {
        let spec = cfg.spec_at(*value)?;
        let rows = match cfg.command {
            Command::SteadySweep => steady_point(cfg, &spec)?,
            Command::G2 => g2_point(cfg, &spec)?,
            Command::Spectrum => spectrum_point(cfg, &spec)?,
            Command::Pulse => pulse_point(cfg, &spec)?,
            Command::DickeMap => dicke_map_point(cfg, &spec)?,
        };
        Ok(rows
            .into_iter()
            .map(|table| table.into_iter().map(|r| with_param(cfg, *value, r)).collect())
            .collect())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    // collect keeps grid order whatever the scheduling
    let results: Vec<PointRows> = pool.install(|| grid.par_iter().map(point).collect::<Result<_>>())?;
    let mut outputs: Vec<Output> = layout(cfg, &cfg.spec()?)
        .into_iter()
        .map(|(file, cols)| Output {
            file,
            table: CsvTable::new(cols),
        })
        .collect();
    for point in results {
        for (out, rows) in outputs.iter_mut().zip(point) {
            for r in rows {
                out.table.push(r);
            }
        }
    }
    Ok(outputs)
}
