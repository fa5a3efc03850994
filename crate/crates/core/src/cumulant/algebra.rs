//! Normal-ordered products of one bosonic mode and emitter transitions.
//!
//! A [`Monomial`] is `a†^p a^q ∏_t σ_t^{x_t y_t}` with at most one transition
//! per emitter tag `t` (products on one emitter contract as
//! `σ^{ab} σ^{cd} = δ_{bc} σ^{ad}`). An emitter without a transition carries
//! the identity.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

/// Emitter factors are `(t, x, y)` meaning `σ_t^{xy} = |x⟩⟨y|` on emitter `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub creations: u8,
    pub annihilations: u8,
    /// `(tag, x, y)` sorted by tag, tags unique.
    pub sites: Vec<(u8, u8, u8)>,
}

impl Monomial {
    pub fn identity() -> Self {
        Self {
            creations: 0,
            annihilations: 0,
            sites: Vec::new(),
        }
    }

    pub fn boson(creations: u8, annihilations: u8) -> Self {
        Self {
            creations,
            annihilations,
            sites: Vec::new(),
        }
    }

    /// `σ_tag^{xy}`.
    pub fn site(tag: u8, x: u8, y: u8) -> Self {
        Self {
            creations: 0,
            annihilations: 0,
            sites: vec![(tag, x, y)],
        }
    }

    pub fn order(&self) -> usize {
        self.creations as usize + self.annihilations as usize + self.sites.len()
    }

    /// Excitation number carried: `p - q + Σ (exc(x) - exc(y))`.
    pub fn charge(&self, excitation: &[i32]) -> i32 {
        self.creations as i32 - self.annihilations as i32
            + self
                .sites
                .iter()
                .map(|&(_, x, y)| excitation[x as usize] - excitation[y as usize])
                .sum::<i32>()
    }

    pub fn tags(&self) -> usize {
        self.sites.len()
    }

    /// Tags renumbered `1, 2, …` in the order of their transitions; equal
    /// expectation values for identical emitters map to equal monomials.
    pub fn canonical(&self) -> Self {
        let mut t: Vec<(u8, u8)> = self.sites.iter().map(|&(_, x, y)| (x, y)).collect();
        t.sort_unstable();
        Self {
            creations: self.creations,
            annihilations: self.annihilations,
            sites: t
                .into_iter()
                .enumerate()
                .map(|(k, (x, y))| (k as u8 + 1, x, y))
                .collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            creations: self.annihilations,
            annihilations: self.creations,
            sites: self.sites.iter().map(|&(t, x, y)| (t, y, x)).collect(),
        }
    }

    /// Single-operator factors in normal order: `a†` (p times), `a` (q
    /// times), then each emitter transition.
    pub fn atoms(&self) -> Vec<Monomial> {
        let mut out = Vec::with_capacity(self.order());
        out.extend((0..self.creations).map(|_| Monomial::boson(1, 0)));
        out.extend((0..self.annihilations).map(|_| Monomial::boson(0, 1)));
        out.extend(self.sites.iter().map(|&(t, x, y)| Monomial::site(t, x, y)));
        out
    }

    /// Product of atoms that were taken from one normal-ordered monomial.
    pub fn from_atoms(atoms: &[&Monomial]) -> Self {
        let mut m = Monomial::identity();
        for a in atoms {
            m.creations += a.creations;
            m.annihilations += a.annihilations;
            m.sites.extend_from_slice(&a.sites);
        }
        m.sites.sort_unstable();
        m
    }

    pub fn display(&self, names: &[&str]) -> String {
        let mut parts = Vec::new();
        for _ in 0..self.creations {
            parts.push("a†".to_string());
        }
        for _ in 0..self.annihilations {
            parts.push("a".to_string());
        }
        for &(t, x, y) in &self.sites {
            parts.push(format!("σ{t}[{}{}]", names[x as usize], names[y as usize]));
        }
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = (0..10).map(|k| k.to_string()).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        f.write_str(&self.display(&refs))
    }
}

fn falling(n: u8, k: u8) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn factorial(k: u8) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Normal-ordered product `m1 · m2` as `(coefficient, monomial)` terms.
pub fn multiply(m1: &Monomial, m2: &Monomial) -> Vec<(f64, Monomial)> {
    let mut sites = m1.sites.clone();
    for &(t, x, y) in &m2.sites {
        match sites.iter_mut().find(|s| s.0 == t) {
            Some(s) => {
                if s.2 != x {
                    return Vec::new();
                }
                s.2 = y;
            }
            None => sites.push((t, x, y)),
        }
    }
    sites.sort_unstable();
    // a^q a†^r = Σ_k C(q,k) C(r,k) k! a†^{r-k} a^{q-k}
    let (q, r) = (m1.annihilations, m2.creations);
    (0..=q.min(r))
        .map(|k| {
            let c = falling(q, k) * falling(r, k) / factorial(k);
            (
                c,
                Monomial {
                    creations: m1.creations + r - k,
                    annihilations: q - k + m2.annihilations,
                    sites: sites.clone(),
                },
            )
        })
        .collect()
}

/// A linear combination of monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Expr {
    pub terms: BTreeMap<Monomial, C64>,
}

impl Expr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_monomial(m: Monomial) -> Self {
        Self::term(C64::new(1.0, 0.0), m)
    }

    pub fn term(c: C64, m: Monomial) -> Self {
        let mut e = Self::zero();
        e.add_term(c, m);
        e
    }

    pub fn add_term(&mut self, c: C64, m: Monomial) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == C64::new(0.0, 0.0) {
                    o.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Expr, s: C64) {
        for (m, &c) in &other.terms {
            self.add_term(c * s, m.clone());
        }
    }

    pub fn scaled(&self, s: C64) -> Expr {
        let mut e = Expr::zero();
        e.add_scaled(self, s);
        e
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, &c1) in &self.terms {
            for (m2, &c2) in &other.terms {
                for (k, m) in multiply(m1, m2) {
                    out.add_term(c1 * c2 * k, m);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Expr {
        let mut out = Expr::zero();
        for (m, &c) in &self.terms {
            out.add_term(c.conj(), m.adjoint());
        }
        out
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Expr) -> Expr {
        let mut out = self.mul(other);
        out.add_scaled(&other.mul(self), C64::new(-1.0, 0.0));
        out
    }

    /// Same expression with every monomial in canonical tag order; exact
    /// cancellations are removed.
    pub fn canonical(&self) -> Expr {
        let mut out = Expr::zero();
        for (m, &c) in &self.terms {
            out.add_term(c, m.canonical());
        }
        out.prune(0.0);
        out
    }

    /// Drop terms with `|c| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    pub fn max_order(&self) -> usize {
        self.terms.keys().map(Monomial::order).max().unwrap_or(0)
    }
}
