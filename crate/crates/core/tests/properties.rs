//! Invariants of evolved states, regression correlators and spectra.

use std::sync::Arc;

use proptest::prelude::*;
use superrad::cumulant::{
    dicke_numbers_from, mf_spectrum, steady_state as mf_steady, DickeMoment, MeanFieldOptions, MeanFieldSystem,
};
use superrad::liouville::{lindblad, DensityModel, ProductModel};
use superrad::models::{Level, ModelSpec, Scheme};
use superrad::observables::{
    first_order_correlation, fit_lorentzians, g2, log_tau_grid, spectrum, spectrum_from_correlation, SteadyState,
};
use superrad::operators::{annihilation, DensityState, Operator};
use superrad::solvers::{evolve, regression_correlator, steady_state, EvolveOptions, Seed};
use superrad::support::Support;
use superrad::C64;

fn toy(n: usize, scheme: Scheme) -> ModelSpec {
    let mut s = ModelSpec::two_level(n, 4, 1.0, 2.0);
    s.scheme = scheme;
    s.omega_c = 0.3;
    s.omega_e1g1 = -0.1;
    s.gamma_e1g1 = 0.2;
    s.chi_e1g1 = 0.5;
    s.set_pump(0.6);
    if scheme != Scheme::TwoLevel {
        s.gamma_e1m = 0.05;
        s.gamma_mg1 = 0.02;
    }
    if scheme == Scheme::FiveLevel {
        s.omega_e2g2 = 1.5;
        s.gamma_e2g2 = 0.2;
        s.chi_e2g2 = 0.5;
        s.gamma_e2m = 0.08;
        s.gamma_mg2 = 0.015;
    }
    s.validate().unwrap()
}

fn tight() -> EvolveOptions {
    EvolveOptions {
        rtol: 1e-10,
        atol: 1e-13,
        ..EvolveOptions::default()
    }
}

fn assert_physical(rho: &DensityState, what: &str) {
    assert!(
        (rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-9,
        "{what}: trace {}",
        rho.trace()
    );
    assert!(
        rho.hermiticity_error() < 1e-9,
        "{what}: hermiticity {}",
        rho.hermiticity_error()
    );
    assert!(
        rho.min_eigenvalue() > -1e-9,
        "{what}: eigenvalue {}",
        rho.min_eigenvalue()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn evolved_states_stay_physical(
        n in 1usize..=2,
        g in 0.0f64..2.0,
        kappa in 0.1f64..3.0,
        gamma in 0.0f64..1.0,
        chi in 0.0f64..1.0,
        pump in 0.0f64..1.0,
        detuning in -1.0f64..1.0,
        excited in any::<bool>(),
    ) {
        let mut s = ModelSpec::two_level(n, 3, g, kappa);
        s.omega_c = detuning;
        s.gamma_e1g1 = gamma;
        s.chi_e1g1 = chi;
        s.set_pump(pump);
        let model = ProductModel::new(&s.validate().unwrap()).unwrap();
        let l = model.generator(0).unwrap();
        prop_assert!(l.trace_defect() < 1e-12 * l.norm_inf().max(1.0));
        let start = model.uniform(if excited { Level::E1 } else { Level::G1 }).unwrap();
        let traj = evolve(&l, &start, &[0.5, 2.0, 8.0], EvolveOptions::default()).unwrap();
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            assert_physical(rho, &format!("t={t}"));
        }
    }

    #[test]
    fn dicke_numbers_stay_in_the_triangle(
        n in 1usize..200,
        re in proptest::collection::vec(-1.0f64..1.0, 4),
        im in proptest::collection::vec(-1.0f64..1.0, 4),
    ) {
        // r = A A† / tr, a random single-emitter state
        let a: Vec<C64> = re.iter().zip(&im).map(|(&x, &y)| C64::new(x, y)).collect();
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[2 * i] * a[2 * j].conj() + a[2 * i + 1] * a[2 * j + 1].conj();
            }
        }
        let tr = (r[0][0] + r[1][1]).re;
        prop_assume!(tr > 1e-6);
        // ⟨σ^{xy}⟩ = r_yx, levels 1 and 2 at indices 0 and 1
        let one = |x: u8, y: u8| r[y as usize - 1][x as usize - 1] / tr;
        let (j, m) = dicke_numbers_from(n, |k| match k {
            DickeMoment::Pop1 => one(1, 1).re,
            DickeMoment::Pop2 => one(2, 2).re,
            DickeMoment::Pair(p, q) => (one(p.0, p.1) * one(q.0, q.1)).re,
        })
        .unwrap();
        let half = n as f64 / 2.0;
        prop_assert!(m.abs() <= j + 1e-6, "M {m} J {j}");
        prop_assert!(j <= half + 1e-6, "J {j} N/2 {half}");
    }
}

#[test]
fn multilevel_evolution_stays_physical() {
    for scheme in [Scheme::ThreeLevel, Scheme::FiveLevel] {
        let model = ProductModel::new(&toy(2, scheme)).unwrap();
        let l = model.generator(0).unwrap();
        let traj = evolve(
            &l,
            &model.uniform(Level::E1).unwrap(),
            &[0.3, 3.0, 30.0],
            EvolveOptions::default(),
        )
        .unwrap();
        for rho in &traj.states {
            assert_physical(rho, scheme.name());
        }
    }
}

#[test]
fn g2_tends_to_one() {
    for (n, scheme) in [
        (1, Scheme::TwoLevel),
        (2, Scheme::TwoLevel),
        (2, Scheme::ThreeLevel),
        (1, Scheme::FiveLevel),
    ] {
        let model = ProductModel::new(&toy(n, scheme)).unwrap();
        let ss = SteadyState::solve(&model).unwrap();
        assert_physical(&ss.rho, "steady");
        let curve = g2(&model, &ss, &log_tau_grid(1e-2, 2000.0, 60), tight()).unwrap();
        assert!(curve.imag_residue < 1e-9);
        assert!(curve.values.iter().all(|&v| v >= -1e-9));
        let last = *curve.values.last().unwrap();
        assert!((last - 1.0).abs() < 0.02, "{} N={n}: {last}", scheme.name());
    }
}

#[test]
fn regression_at_zero_delay_equals_direct_moments() {
    for (n, scheme) in [(2, Scheme::TwoLevel), (2, Scheme::FiveLevel)] {
        let model = ProductModel::new(&toy(n, scheme)).unwrap();
        let ss = SteadyState::solve(&model).unwrap();
        let a = model.annihilation();
        let ad = a.adjoint();
        let n_op = ad.compose(a).unwrap();
        let nn = ad.compose(&ad).unwrap().compose(a).unwrap().compose(a).unwrap();
        let mean = ss.rho.expect(&n_op).unwrap().re;
        let direct = ss.rho.expect(&nn).unwrap().re;
        let curve = g2(&model, &ss, &[0.0], tight()).unwrap();
        let via = curve.values[0] * mean * mean;
        assert!((via - direct).abs() <= 1e-10 * direct.abs(), "{via} vs {direct}");
        let c = first_order_correlation(&model, &ss, 0.1, 1, tight()).unwrap();
        assert!(
            (c[0] - C64::new(mean, 0.0)).norm() <= 1e-10 * mean,
            "{} vs {mean}",
            c[0]
        );
    }
}

#[test]
fn long_evolution_reaches_the_steady_state() {
    let model = ProductModel::new(&toy(2, Scheme::ThreeLevel)).unwrap();
    let ss = SteadyState::solve(&model).unwrap();
    let traj = evolve(&ss.generator, &model.uniform(Level::G1).unwrap(), &[2000.0], tight()).unwrap();
    let d = traj.states[0].trace_distance(&ss.rho);
    assert!(d < 1e-6, "trace distance {d}");
}

#[test]
fn thermal_cavity_spectrum_has_half_width_kappa_over_two() {
    let (n_max, kappa, nth) = (12, 2.0, 0.3);
    let a = annihilation(n_max).unwrap();
    let ad = a.adjoint();
    let h = Operator::zero(a.signature());
    let sup = Arc::new(Support::full(n_max));
    let l = lindblad(&h, &[(kappa * (1.0 + nth), a.clone()), (kappa * nth, ad.clone())], sup).unwrap();
    let rho = steady_state(&l).unwrap();
    let mean = rho.expect(&ad.compose(&a).unwrap()).unwrap().re;
    assert!((mean - nth).abs() < 1e-6, "{mean}");
    let dt = 0.01;
    let taus: Vec<f64> = (0..2048).map(|k| k as f64 * dt).collect();
    let corr = regression_correlator(&l, &l, &rho, &ad, Seed::Left(&a), &taus, tight()).unwrap();
    let s = spectrum_from_correlation(kappa, &corr, dt, 4);
    assert!(!s.truncated());
    assert!(s.samples.iter().all(|&v| v >= -1e-9));
    let fit = fit_lorentzians(&s.omegas, &s.samples, 1);
    let p = fit.peaks[0];
    assert!(p.center.abs() < 1e-3, "{}", p.center);
    // full width κ, half width κ/2
    assert!((0.5 * p.width - kappa / 2.0).abs() < 0.01 * kappa, "{}", p.width);
}

#[test]
fn exact_and_mean_field_spectra_peak_together() {
    let mut s = ModelSpec::two_level(2, 4, 1.0, 0.6);
    s.gamma_e1g1 = 0.05;
    s.chi_e1g1 = 0.05;
    s.set_pump(1e-4);
    let s = s.validate().unwrap();
    let (dt, points) = (0.05, 4096);

    let model = ProductModel::new(&s).unwrap();
    let ss = SteadyState::solve(&model).unwrap();
    let exact = spectrum(&model, &ss, dt, points, tight()).unwrap();

    let sys = MeanFieldSystem::new(&s).unwrap();
    let ground = sys.product_state(&[1.0, 0.0]).unwrap();
    let st = mf_steady(&sys, &ground, 1e6, MeanFieldOptions::default()).unwrap();
    assert!(st.converged);
    let mf = mf_spectrum(&sys, &st.values, dt, points).unwrap();

    let resolution = exact.omegas[1] - exact.omegas[0];
    let pe = fit_lorentzians(&exact.omegas, &exact.samples, 2).peaks;
    let pm = fit_lorentzians(&mf.omegas, &mf.samples, 2).peaks;
    assert_eq!(pe.len(), 2);
    assert_eq!(pm.len(), 2);
    for (a, b) in pe.iter().zip(&pm) {
        assert!(
            (a.center - b.center).abs() <= resolution,
            "{} vs {} (grid {resolution})",
            a.center,
            b.center
        );
    }
}
