//! Second-order cumulant (mean-field) backend.
//!
//! Equations of motion `d⟨O⟩/dt = ⟨i[H, O] + Σ c (L†OL - ½{L†L, O})⟩` are
//! derived symbolically for every first- and second-order moment. Identical
//! emitters are represented by tags: a sum `Σ_i` acting on a moment that
//! involves `k` emitters splits into those `k` tags plus one fresh tag with
//! multiplicity `N - k`. Third-order moments are closed by
//!
//! ```text
//! ⟨OPQ⟩ ≈ ⟨O⟩⟨PQ⟩ + ⟨P⟩⟨OQ⟩ + ⟨Q⟩⟨OP⟩ - 2⟨O⟩⟨P⟩⟨Q⟩
//! ```
//!
//! Incoherent pumping keeps the state invariant under the excitation-number
//! phase, so by default only moments with zero net charge are kept; every
//! other moment is identically zero along such trajectories.

pub mod algebra;
mod integrate;
mod spectrum;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::models::{Level, ModelSpec, Scheme};

pub use algebra::{multiply, Expr, Monomial};
pub use integrate::{integrate, steady_state, MeanFieldOptions, MeanFieldState, MeanFieldTrajectory};
pub use spectrum::{hybrid_mode_splitting, mf_spectrum};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Which moments enter the variable set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moments {
    /// Zero net excitation number only.
    Neutral,
    /// Every moment up to second order.
    All,
}

/// The operators of one emitter model, with the emitter tag left open.
#[derive(Clone, Debug)]
pub struct SymbolicModel {
    spec: ModelSpec,
    excitation: Vec<i32>,
}

impl SymbolicModel {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let spec = spec.validate()?;
        if spec.detuning_offsets.iter().any(|&d| d != 0.0) {
            return Err(invalid(
                "emitter.detuning_offsets",
                "the meanfield backend needs identical emitters",
            ));
        }
        let excitation = spec.scheme.levels().iter().map(|l| l.excitation()).collect();
        Ok(Self { spec, excitation })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn excitation(&self) -> &[i32] {
        &self.excitation
    }

    pub fn level_names(&self) -> Vec<&'static str> {
        self.spec.scheme.levels().iter().map(|l| l.name()).collect()
    }

    fn idx(&self, l: Level) -> u8 {
        self.spec.scheme.index(l).expect("level in scheme") as u8
    }

    /// `σ_tag^{xy} = |x⟩⟨y|`.
    pub fn sigma(&self, tag: u8, x: Level, y: Level) -> Expr {
        Expr::from_monomial(Monomial::site(tag, self.idx(x), self.idx(y)))
    }

    fn branches(&self) -> Vec<(Level, Level, f64)> {
        let (w1, w2) = self.spec.emitter_detunings(0);
        let mut out = vec![(Level::G1, Level::E1, w1)];
        if self.spec.scheme == Scheme::FiveLevel {
            out.push((Level::G2, Level::E2, w2));
        }
        out
    }

    /// Free part of one emitter.
    pub fn site_hamiltonian(&self, tag: u8) -> Expr {
        let mut h = Expr::zero();
        for (g, e, w) in self.branches() {
            h.add_scaled(&self.sigma(tag, e, e), c(w / 2.0));
            h.add_scaled(&self.sigma(tag, g, g), c(-w / 2.0));
        }
        h
    }

    /// `g (S⁺ a + a† S⁻)` for one emitter.
    pub fn coupling(&self, tag: u8) -> Expr {
        let a = Expr::from_monomial(Monomial::boson(0, 1));
        let ad = Expr::from_monomial(Monomial::boson(1, 0));
        let mut h = Expr::zero();
        for (g, e, _) in self.branches() {
            h.add_scaled(&self.sigma(tag, e, g).mul(&a), c(self.spec.g));
            h.add_scaled(&ad.mul(&self.sigma(tag, g, e)), c(self.spec.g));
        }
        h
    }

    /// `(rate, L)` of every single-emitter channel.
    pub fn site_jumps(&self, tag: u8) -> Vec<(f64, Expr)> {
        let s = &self.spec;
        let mut out = Vec::new();
        let mut push = |rate: f64, op: Expr| {
            if rate != 0.0 {
                out.push((rate, op));
            }
        };
        let z = |g, e| {
            let mut z = self.sigma(tag, e, e);
            z.add_scaled(&self.sigma(tag, g, g), c(-1.0));
            z
        };
        push(s.gamma_e1g1, self.sigma(tag, Level::G1, Level::E1));
        push(s.gamma_g1e1, self.sigma(tag, Level::E1, Level::G1));
        push(s.chi_e1g1 / 2.0, z(Level::G1, Level::E1));
        if s.scheme.has(Level::E2) {
            push(s.gamma_e2g2, self.sigma(tag, Level::G2, Level::E2));
            push(s.gamma_g2e2, self.sigma(tag, Level::E2, Level::G2));
            push(s.chi_e2g2 / 2.0, z(Level::G2, Level::E2));
        }
        if s.scheme.has(Level::M) {
            push(s.gamma_e1m, self.sigma(tag, Level::M, Level::E1));
            push(s.gamma_mg1, self.sigma(tag, Level::G1, Level::M));
            if s.scheme.has(Level::E2) {
                push(s.gamma_e2m, self.sigma(tag, Level::M, Level::E2));
                push(s.gamma_mg2, self.sigma(tag, Level::G2, Level::M));
            }
        }
        out
    }

    /// Exact `d⟨m⟩/dt` as a combination of canonical moments.
    pub fn heisenberg(&self, m: &Monomial) -> Expr {
        let s = &self.spec;
        let o = Expr::from_monomial(m.clone());
        let k = m.tags();
        let fresh = m.sites.iter().map(|t| t.0).max().unwrap_or(0) + 1;
        let n_fresh = s.n_emitters as f64 - k as f64;

        let mut h = Expr::from_monomial(Monomial::boson(1, 1)).scaled(c(s.omega_c));
        for &(t, _, _) in &m.sites {
            h.add_scaled(&self.site_hamiltonian(t), c(1.0));
            h.add_scaled(&self.coupling(t), c(1.0));
        }
        if n_fresh > 0.0 {
            h.add_scaled(&self.coupling(fresh), c(n_fresh));
        }
        let mut out = h.commutator(&o).scaled(I);

        let lindblad = |out: &mut Expr, rate: f64, l: &Expr| {
            let ld = l.adjoint();
            // L†OL - ½{L†L, O} = ½(L†[O, L] + [L†, O]L)
            let t1 = ld.mul(&o.commutator(l));
            let t2 = ld.commutator(&o).mul(l);
            out.add_scaled(&t1, c(0.5 * rate));
            out.add_scaled(&t2, c(0.5 * rate));
        };
        lindblad(&mut out, s.kappa, &Expr::from_monomial(Monomial::boson(0, 1)));
        for &(t, _, _) in &m.sites {
            for (rate, l) in self.site_jumps(t) {
                lindblad(&mut out, rate, &l);
            }
        }
        out.canonical()
    }
}

/// The exact (unclosed) equations for every first- and second-order neutral
/// moment reachable from the populations and `⟨a†a⟩`.
pub fn derive_eom(spec: &ModelSpec) -> Result<Vec<(Monomial, Expr)>> {
    let model = SymbolicModel::new(spec)?;
    let sys = MeanFieldSystem::build(&model, Moments::Neutral)?;
    Ok(sys.variables.iter().map(|m| (m.clone(), model.heisenberg(m))).collect())
}

/// The closure of a third-order moment: `(coefficient, factors)` with every
/// factor canonical and of order one or two.
pub fn cumulant_close(m: &Monomial) -> Vec<(f64, Vec<Monomial>)> {
    let at = m.atoms();
    assert_eq!(at.len(), 3, "closure applies to third-order moments");
    let (o, p, q) = (&at[0], &at[1], &at[2]);
    let pair = |x: &Monomial, y: &Monomial| Monomial::from_atoms(&[x, y]).canonical();
    vec![
        (1.0, vec![o.canonical(), pair(p, q)]),
        (1.0, vec![p.canonical(), pair(o, q)]),
        (1.0, vec![q.canonical(), pair(o, p)]),
        (-2.0, vec![o.canonical(), p.canonical(), q.canonical()]),
    ]
}

/// One term of a closed right-hand side: `coefficient · ∏ y[factors]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coefficient: C64,
    pub factors: Vec<usize>,
}

/// A closed system of moment equations.
#[derive(Clone, Debug)]
pub struct MeanFieldSystem {
    model: SymbolicModel,
    moments: Moments,
    pub variables: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    pub rhs: Vec<Vec<Term>>,
}

impl MeanFieldSystem {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        Self::with_moments(spec, Moments::Neutral)
    }

    pub fn with_moments(spec: &ModelSpec, moments: Moments) -> Result<Self> {
        Self::build(&SymbolicModel::new(spec)?, moments)
    }

    fn build(model: &SymbolicModel, moments: Moments) -> Result<Self> {
        let exc = model.excitation().to_vec();
        let nl = exc.len() as u8;
        let keep = |m: &Monomial| moments == Moments::All || m.charge(&exc) == 0;

        let mut sys = Self {
            model: model.clone(),
            moments,
            variables: Vec::new(),
            index: HashMap::new(),
            rhs: Vec::new(),
        };
        let mut queue = VecDeque::new();
        let mut seeds = vec![Monomial::boson(1, 1)];
        if moments == Moments::All {
            seeds.push(Monomial::boson(0, 1));
            seeds.push(Monomial::boson(1, 0));
        }
        let transitions: Vec<(u8, u8)> = (0..nl).flat_map(|x| (0..nl).map(move |y| (x, y))).collect();
        for &(x, y) in &transitions {
            seeds.push(Monomial::site(1, x, y));
            seeds.push(Monomial {
                creations: 1,
                annihilations: 0,
                sites: vec![(1, x, y)],
            });
            seeds.push(Monomial {
                creations: 0,
                annihilations: 1,
                sites: vec![(1, x, y)],
            });
        }
        if model.spec.n_emitters > 1 {
            for (i, &(x, y)) in transitions.iter().enumerate() {
                for &(u, v) in &transitions[i..] {
                    seeds.push(Monomial {
                        creations: 0,
                        annihilations: 0,
                        sites: vec![(1, x, y), (2, u, v)],
                    });
                }
            }
        }
        if moments == Moments::All {
            seeds.extend([Monomial::boson(2, 0), Monomial::boson(0, 2)]);
        }
        for m in seeds.into_iter().filter(|m| keep(m)) {
            sys.intern(m, &mut queue);
        }

        let mut exprs: Vec<Option<Expr>> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let e = model.heisenberg(&sys.variables[i]);
            if e.max_order() > 3 {
                return Err(Error::Domain(format!(
                    "moment equation of {} reaches order {}",
                    sys.variables[i],
                    e.max_order()
                )));
            }
            for (m, _) in &e.terms {
                match m.order() {
                    0 => {}
                    1 | 2 => {
                        if keep(m) {
                            sys.intern(m.clone(), &mut queue);
                        }
                    }
                    _ => {
                        for (_, factors) in cumulant_close(m) {
                            for f in factors {
                                if keep(&f) {
                                    sys.intern(f, &mut queue);
                                }
                            }
                        }
                    }
                }
            }
            if exprs.len() <= i {
                exprs.resize(i + 1, None);
            }
            exprs[i] = Some(e);
        }

        let rhs = exprs
            .into_iter()
            .map(|e| sys.close(&e.expect("every variable derived")))
            .collect();
        sys.rhs = rhs;
        Ok(sys)
    }

    fn intern(&mut self, m: Monomial, queue: &mut VecDeque<usize>) -> usize {
        if let Some(&i) = self.index.get(&m) {
            return i;
        }
        let i = self.variables.len();
        self.index.insert(m.clone(), i);
        self.variables.push(m);
        queue.push_back(i);
        i
    }

    /// Variable index of a canonical moment; `None` if it is not tracked
    /// (and therefore zero).
    pub fn lookup(&self, m: &Monomial) -> Option<usize> {
        self.index.get(&m.canonical()).copied()
    }

    fn factor(&self, m: &Monomial) -> Option<Option<usize>> {
        match m.order() {
            0 => Some(None),
            _ => self.index.get(m).map(|&i| Some(i)),
        }
    }

    /// Closed polynomial form of an expression in canonical moments.
    pub fn close(&self, e: &Expr) -> Vec<Term> {
        let mut acc: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        let mut add = |coef: C64, factors: &[Monomial]| {
            let mut idx = Vec::with_capacity(factors.len());
            for f in factors {
                match self.factor(f) {
                    Some(Some(i)) => idx.push(i),
                    Some(None) => {}
                    None => return,
                }
            }
            idx.sort_unstable();
            *acc.entry(idx).or_insert(C64::new(0.0, 0.0)) += coef;
        };
        for (m, &coef) in &e.terms {
            if m.order() <= 2 {
                add(coef, std::slice::from_ref(m));
            } else {
                for (k, factors) in cumulant_close(m) {
                    add(coef * k, &factors);
                }
            }
        }
        acc.into_iter()
            .filter(|(_, v)| *v != C64::new(0.0, 0.0))
            .map(|(factors, coefficient)| Term { coefficient, factors })
            .collect()
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.model.spec
    }

    pub fn model(&self) -> &SymbolicModel {
        &self.model
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn eval_term(t: &Term, y: &[C64]) -> C64 {
        t.factors.iter().fold(t.coefficient, |acc, &i| acc * y[i])
    }

    pub fn eval(&self, y: &[C64], out: &mut [C64]) {
        for (o, terms) in out.iter_mut().zip(&self.rhs) {
            *o = terms.iter().map(|t| Self::eval_term(t, y)).sum();
        }
    }

    /// Dense Jacobian `∂ rhs_i / ∂ y_j`, row-major.
    pub fn jacobian(&self, y: &[C64], jac: &mut [C64]) {
        let n = self.len();
        jac.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (i, terms) in self.rhs.iter().enumerate() {
            for t in terms {
                for (k, &j) in t.factors.iter().enumerate() {
                    let mut d = t.coefficient;
                    for (l, &f) in t.factors.iter().enumerate() {
                        if l != k {
                            d *= y[f];
                        }
                    }
                    jac[i * n + j] += d;
                }
            }
        }
    }

    /// Value of any moment of order ≤ 2 (closed if of order 3) in state `y`.
    pub fn moment(&self, y: &[C64], m: &Monomial) -> C64 {
        let e = Expr::from_monomial(m.canonical());
        self.close(&e).iter().map(|t| Self::eval_term(t, y)).sum()
    }

    /// `⟨σ^{xx}⟩` of every level in the scheme.
    pub fn populations(&self, y: &[C64]) -> Vec<(Level, f64)> {
        self.spec()
            .scheme
            .levels()
            .iter()
            .enumerate()
            .map(|(k, &l)| (l, self.moment(y, &Monomial::site(1, k as u8, k as u8)).re))
            .collect()
    }

    pub fn mean_photons(&self, y: &[C64]) -> f64 {
        self.moment(y, &Monomial::boson(1, 1)).re
    }

    /// Largest coefficient left after summing the population equations;
    /// zero when the closed system conserves probability symbolically.
    pub fn population_balance(&self) -> f64 {
        let mut acc: BTreeMap<Vec<usize>, C64> = BTreeMap::new();
        let nl = self.model.excitation.len() as u8;
        for x in 0..nl {
            if let Some(i) = self.lookup(&Monomial::site(1, x, x)) {
                for t in &self.rhs[i] {
                    *acc.entry(t.factors.clone()).or_insert(C64::new(0.0, 0.0)) += t.coefficient;
                }
            }
        }
        acc.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// All-ground (or any uncorrelated, diagonal) emitters and an empty
    /// cavity. `populations` is indexed like the scheme's levels.
    pub fn product_state(&self, populations: &[f64]) -> Result<Vec<C64>> {
        let nl = self.model.excitation.len();
        if populations.len() != nl {
            return Err(invalid("populations", format!("expected {nl} values")));
        }
        let total: f64 = populations.iter().sum();
        if populations.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(invalid("populations", "must be non-negative and sum to 1"));
        }
        let r: Vec<Vec<C64>> = (0..nl)
            .map(|i| (0..nl).map(|j| c(if i == j { populations[i] } else { 0.0 })).collect())
            .collect();
        Ok(self.product_state_general(&r, C64::new(0.0, 0.0)))
    }

    /// Uncorrelated emitters with single-emitter density matrix `r` and a
    /// coherent cavity amplitude `alpha`.
    pub fn product_state_general(&self, r: &[Vec<C64>], alpha: C64) -> Vec<C64> {
        self.variables
            .iter()
            .map(|m| {
                let b = alpha.conj().powu(m.creations as u32) * alpha.powu(m.annihilations as u32);
                // ⟨|x⟩⟨y|⟩ = r_yx
                m.sites
                    .iter()
                    .fold(b, |acc, &(_, x, y)| acc * r[y as usize][x as usize])
            })
            .collect()
    }

    /// Plain-text listing of the closed equations.
    pub fn listing(&self) -> String {
        let names = self.model.level_names();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} moments, {} scheme, N = {}",
            self.len(),
            self.spec().scheme.name(),
            self.spec().n_emitters
        );
        for (i, (m, terms)) in self.variables.iter().zip(&self.rhs).enumerate() {
            let _ = writeln!(out, "y{i} = <{}>", m.display(&names));
            for t in terms {
                let f: Vec<String> = t.factors.iter().map(|k| format!("y{k}")).collect();
                let f = if f.is_empty() { "1".to_string() } else { f.join("*") };
                let _ = writeln!(out, "  d/dt += ({:e} {:+e}i) {f}", t.coefficient.re, t.coefficient.im);
            }
        }
        out
    }

    fn expect_level(&self, l: Level) -> Result<u8> {
        self.spec()
            .scheme
            .index(l)
            .map(|i| i as u8)
            .ok_or_else(|| Error::Scheme(format!("no level {l} in the {} scheme", self.spec().scheme.name())))
    }

    /// Mean Dicke numbers `(J̄, M̄)` of the `g1`–`e1` pseudo-spin.
    pub fn dicke_numbers(&self, y: &[C64]) -> Result<(f64, f64)> {
        let (l1, l2) = (self.expect_level(Level::G1)?, self.expect_level(Level::E1)?);
        let one = |x: u8, z: u8| self.moment(y, &Monomial::site(1, x, z));
        let two = |a: (u8, u8), b: (u8, u8)| {
            self.moment(
                y,
                &Monomial {
                    creations: 0,
                    annihilations: 0,
                    sites: vec![(1, a.0, a.1), (2, b.0, b.1)],
                },
            )
        };
        dicke_numbers_from(self.spec().n_emitters, |k| match k {
            DickeMoment::Pop1 => one(l1, l1).re,
            DickeMoment::Pop2 => one(l2, l2).re,
            DickeMoment::Pair(a, b) => {
                let m = |s: (u8, u8)| (if s.0 == 1 { l1 } else { l2 }, if s.1 == 1 { l1 } else { l2 });
                two(m(a), m(b)).re
            }
        })
    }
}

/// A moment entering the Dicke numbers, levels written as 1 (lower) and 2
/// (upper).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DickeMoment {
    Pop1,
    Pop2,
    /// `⟨σ_1^{ab} σ_2^{cd}⟩` as `((a, b), (c, d))`.
    Pair((u8, u8), (u8, u8)),
}

/// `(J̄, M̄)` from single-emitter populations and two-emitter correlations:
///
/// ```text
/// J_x² = (N/4)[⟨σ11+σ22⟩ + (N-1)(⟨σ¹²σ²¹⟩ + ⟨σ²¹σ¹²⟩ + ⟨σ¹²σ¹²⟩ + ⟨σ²¹σ²¹⟩)]
/// J_y² = (N/4)[⟨σ11+σ22⟩ + (N-1)(⟨σ¹²σ²¹⟩ + ⟨σ²¹σ¹²⟩ - ⟨σ¹²σ¹²⟩ - ⟨σ²¹σ²¹⟩)]
/// J_z² = (N/4)[⟨σ11+σ22⟩ + (N-1)(⟨σ²²σ²²⟩ - 2⟨σ¹¹σ²²⟩ + ⟨σ¹¹σ¹¹⟩)]
/// J̄ = [-1 + √(1 + 4(J_x² + J_y² + J_z²))]/2,   M̄ = (N/2)(⟨σ22⟩ - ⟨σ11⟩)
/// ```
pub fn dicke_numbers_from(n: usize, moment: impl Fn(DickeMoment) -> f64) -> Result<(f64, f64)> {
    use DickeMoment::*;
    let nf = n as f64;
    let (p1, p2) = (moment(Pop1), moment(Pop2));
    let pair = |a, b| if n > 1 { moment(Pair(a, b)) } else { 0.0 };
    let flip = pair((1, 2), (2, 1)) + pair((2, 1), (1, 2));
    let same = pair((1, 2), (1, 2)) + pair((2, 1), (2, 1));
    let zz = pair((2, 2), (2, 2)) - 2.0 * pair((1, 1), (2, 2)) + pair((1, 1), (1, 1));
    let base = p1 + p2;
    let jx2 = nf / 4.0 * (base + (nf - 1.0) * (flip + same));
    let jy2 = nf / 4.0 * (base + (nf - 1.0) * (flip - same));
    let jz2 = nf / 4.0 * (base + (nf - 1.0) * zz);
    let arg = 1.0 + 4.0 * (jx2 + jy2 + jz2);
    if arg < 0.0 {
        return Err(Error::Domain(format!("negative total spin square: {arg:.3e}")));
    }
    Ok(((arg.sqrt() - 1.0) / 2.0, nf / 2.0 * (p2 - p1)))
}
