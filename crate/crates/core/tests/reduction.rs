//! Richer schemes with their extra channels switched off reduce to the
//! two-level model on the g1/e1 subspace.

use superrad::liouville::{build_qme, DensityModel, ProductModel};
use superrad::models::{Level, ModelSpec, Scheme};
use superrad::operators::SpaceSignature;
use superrad::solvers::{evolve, EvolveOptions};

fn two_level(n: usize) -> ModelSpec {
    let mut s = ModelSpec::two_level(n, 4, 1.3, 2.5);
    s.omega_c = 0.2;
    s.omega_e1g1 = -0.4;
    s.gamma_e1g1 = 0.35;
    s.chi_e1g1 = 0.6;
    s.set_pump(0.45);
    s
}

fn lifted(n: usize, scheme: Scheme) -> ModelSpec {
    let mut s = two_level(n);
    s.scheme = scheme;
    // the second branch is detuned but carries no population
    s.omega_e2g2 = 7.0;
    s
}

/// Index of the lifted basis state for a two-level basis state.
fn lift(state: usize, small: &SpaceSignature, big: &SpaceSignature, scheme: Scheme) -> usize {
    let (g, e) = (scheme.index(Level::G1).unwrap(), scheme.index(Level::E1).unwrap());
    let mut digits = small.unflatten(state);
    let cavity = digits.len() - 1;
    for d in &mut digits[..cavity] {
        *d = if *d == 0 { g } else { e };
    }
    big.flatten(&digits)
}

#[test]
fn liouvillian_restricts_entrywise() {
    for scheme in [Scheme::ThreeLevel, Scheme::FiveLevel] {
        for n in 1..=2 {
            let small = build_qme(&two_level(n)).unwrap();
            let big = build_qme(&lifted(n, scheme)).unwrap();
            let (ss, bs) = (small.signature(), big.signature());
            let map: Vec<usize> = (0..ss.total()).map(|s| lift(s, ss, bs, scheme)).collect();
            let (s_sup, b_sup) = (small.support(), big.support());
            let mut inverse = vec![None; b_sup.len()];
            let mut image = vec![0; s_sup.len()];
            for (k, (r, c)) in s_sup.pairs().enumerate() {
                let kb = b_sup.index(map[r], map[c]).unwrap();
                inverse[kb] = Some(k);
                image[k] = kb;
            }
            let scale = small.norm_inf();
            let mut worst: f64 = 0.0;
            for (r, c, v) in big.matrix().iter() {
                let Some(kc) = inverse[c] else { continue };
                match inverse[r] {
                    Some(kr) => worst = worst.max((v - small.matrix().get(kr, kc)).norm()),
                    // the subspace must be invariant
                    None => worst = worst.max(v.norm()),
                }
            }
            for (r, c, v) in small.matrix().iter() {
                worst = worst.max((big.matrix().get(image[r], image[c]) - v).norm());
            }
            assert!(worst <= 1e-14 * scale, "{} N={n}: {worst:e}", scheme.name());
        }
    }
}

#[test]
fn observables_agree_along_trajectories() {
    let opts = EvolveOptions {
        rtol: 1e-12,
        atol: 1e-15,
        ..EvolveOptions::default()
    };
    let times = [0.0, 0.3, 1.0, 4.0, 12.0];
    for scheme in [Scheme::ThreeLevel, Scheme::FiveLevel] {
        let small = ProductModel::new(&two_level(2)).unwrap();
        let big = ProductModel::new(&lifted(2, scheme)).unwrap();
        let ts = evolve(
            &small.generator(0).unwrap(),
            &small.uniform(Level::E1).unwrap(),
            &times,
            opts,
        )
        .unwrap();
        let tb = evolve(
            &big.generator(0).unwrap(),
            &big.uniform(Level::E1).unwrap(),
            &times,
            opts,
        )
        .unwrap();
        let n_s = small.annihilation().adjoint().compose(small.annihilation()).unwrap();
        let n_b = big.annihilation().adjoint().compose(big.annihilation()).unwrap();
        for (rs, rb) in ts.states.iter().zip(&tb.states) {
            let (a, b) = (rs.expect(&n_s).unwrap().re, rb.expect(&n_b).unwrap().re);
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            for level in [Level::G1, Level::E1] {
                let pa = rs.expect(&small.population(level).unwrap()).unwrap().re;
                let pb = rb.expect(&big.population(level).unwrap()).unwrap().re;
                assert!((pa - pb).abs() < 1e-10, "{level}: {pa} vs {pb}");
            }
            let pm = rb.expect(&big.population(Level::M).unwrap()).unwrap().re;
            assert!(pm.abs() < 1e-14);
        }
    }
}
