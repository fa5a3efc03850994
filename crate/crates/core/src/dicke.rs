//! Permutation-invariant backend for N identical two-level emitters.
//!
//! A permutation-symmetric state is block diagonal in total spin,
//! `ρ = ⊕_J ρ_J ⊗ 1_{d_J}`, where `d_J` counts the copies of spin `J`. The
//! backend stores `ρ̃_J = d_J ρ_J` on `|J, M⟩ ⊗ |n⟩`, so traces and
//! expectation values of collective operators are plain traces over the
//! reduced space.
//!
//! Local channels `Σ_i σ_i ρ σ_i†` move weight between neighbouring blocks.
//! For a single-site spin component `s^q` the block `J → J'` part is
//! `W(J→J') · C ρ̃_J Cᵀ` with `C` the rank-1 Clebsch-Gordan matrix and
//!
//! ```text
//! W(J→J+1) = (N - 2J)/2,   W(J→J) = (N + 2)/2,   W(J→J-1) = (N + 2J + 2)/2
//! ```
//!
//! (doubled for `σ^z = 2 s^z`). Spin quantum numbers are stored doubled.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};
use crate::io::CsvTable;
use crate::liouville::{DensityModel, GeneratorBuilder, Liouvillian, DEFAULT_BUDGET};
use crate::models::{Level, ModelSpec, Scheme};
use crate::operators::{annihilation, DensityState, Operator, SpaceSignature};
use crate::sparse::CsrMatrix;
use crate::support::Support;

/// Number of `(J, M)` states for `n` emitters.
pub fn dicke_dimension(n: usize) -> usize {
    if n % 2 == 0 {
        (n / 2 + 1).pow(2)
    } else {
        (n + 1) * (n + 3) / 4
    }
}

fn binomial(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as u32).min(n - k as u32);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `(J, M)` states of `n` two-level emitters, `J = N/2, N/2 - 1, …` and `M`
/// ascending inside each block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DickeBasis {
    n: usize,
    states: Vec<(u32, i32)>,
    offsets: Vec<usize>,
}

impl DickeBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(
                "a Dicke basis needs at least one emitter".into(),
            ));
        }
        let mut states = Vec::with_capacity(dicke_dimension(n));
        let mut offsets = Vec::new();
        let mut tj = n as i64;
        while tj >= 0 {
            offsets.push(states.len());
            let mut tm = -tj;
            while tm <= tj {
                states.push((tj as u32, tm as i32));
                tm += 2;
            }
            tj -= 2;
        }
        offsets.push(states.len());
        Ok(Self { n, states, offsets })
    }

    pub fn emitters(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// `(2J, 2M)` of every state in basis order.
    pub fn states(&self) -> &[(u32, i32)] {
        &self.states
    }

    /// Doubled `J` of every block, largest first.
    pub fn blocks(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.offsets.len() - 1).map(move |b| self.states[self.offsets[b]].0)
    }

    /// Block number of doubled spin `two_j`.
    pub fn block_of(&self, two_j: u32) -> Option<usize> {
        let n = self.n as u32;
        (two_j <= n && (n - two_j) % 2 == 0).then(|| ((n - two_j) / 2) as usize)
    }

    pub fn index(&self, two_j: u32, two_m: i32) -> Option<usize> {
        let b = self.block_of(two_j)?;
        if two_m.unsigned_abs() > two_j || (two_j as i32 - two_m) % 2 != 0 {
            return None;
        }
        Some(self.offsets[b] + ((two_m + two_j as i32) / 2) as usize)
    }

    fn checked_index(&self, two_j: u32, two_m: i32) -> Result<usize> {
        self.index(two_j, two_m).ok_or_else(|| {
            Error::Basis(format!(
                "no state J={}, M={} for {} emitters",
                two_j as f64 / 2.0,
                two_m as f64 / 2.0,
                self.n
            ))
        })
    }

    /// Number of copies of spin `J` among `N` spins-½.
    pub fn degeneracy(&self, two_j: u32) -> u128 {
        let n = self.n as u32;
        let k = (n as i64 - two_j as i64) / 2;
        binomial(n, k) - binomial(n, k - 1)
    }
}

/// Which single-emitter or collective process a coefficient describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Local `σ_i⁻`.
    Emission,
    /// Local `σ_i⁺`.
    Pump,
    /// Local `σ_i^z`.
    Dephasing,
    /// Collective `J⁻` (the cavity coupling `g(J⁺a + a†J⁻)`); `J⁺` is its
    /// transpose.
    CavityCoupling,
}

/// One branch out of `|J, M⟩`. The population it carries per unit rate is
/// `amplitude²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub two_j: u32,
    pub two_m: i32,
    pub amplitude: f64,
}

/// `⟨J', M+q | J, M; 1, q⟩` for `J' = J + dj`, all quantum numbers doubled.
fn clebsch_rank1(two_j: u32, two_m: i32, q: i32, dj: i32) -> f64 {
    let j = two_j as f64 / 2.0;
    let m = (two_m + 2 * q) as f64 / 2.0;
    let v = match (dj, q) {
        (1, 1) => ((j + m) * (j + m + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0))).sqrt(),
        (1, 0) => ((j - m + 1.0) * (j + m + 1.0) / ((2.0 * j + 1.0) * (j + 1.0))).sqrt(),
        (1, -1) => ((j - m) * (j - m + 1.0) / ((2.0 * j + 1.0) * (2.0 * j + 2.0))).sqrt(),
        _ if two_j == 0 => 0.0,
        (0, 1) => -((j + m) * (j - m + 1.0) / (2.0 * j * (j + 1.0))).sqrt(),
        (0, 0) => m / (j * (j + 1.0)).sqrt(),
        (0, -1) => ((j - m) * (j + m + 1.0) / (2.0 * j * (j + 1.0))).sqrt(),
        (-1, 1) => ((j - m) * (j - m + 1.0) / (2.0 * j * (2.0 * j + 1.0))).sqrt(),
        (-1, 0) => -((j - m) * (j + m) / (j * (2.0 * j + 1.0))).sqrt(),
        (-1, -1) => ((j + m + 1.0) * (j + m) / (2.0 * j * (2.0 * j + 1.0))).sqrt(),
        _ => unreachable!(),
    };
    if v.is_finite() {
        v
    } else {
        0.0
    }
}

fn block_weight(n: usize, two_j: u32, dj: i32) -> f64 {
    let (n, tj) = (n as f64, two_j as f64);
    match dj {
        1 => (n - tj) / 2.0,
        0 => (n + 2.0) / 2.0,
        _ => (n + tj + 2.0) / 2.0,
    }
}

fn local_branches(n: usize, two_j: u32, two_m: i32, q: i32, scale: f64) -> Vec<Transition> {
    let mut out = Vec::with_capacity(3);
    for dj in [1, 0, -1] {
        let tj = two_j as i32 + 2 * dj;
        let tm = two_m + 2 * q;
        if tj < 0 || tj > n as i32 || tm.abs() > tj {
            continue;
        }
        let amp = (scale * block_weight(n, two_j, dj)).sqrt() * clebsch_rank1(two_j, two_m, q, dj);
        if amp != 0.0 {
            out.push(Transition {
                two_j: tj as u32,
                two_m: tm,
                amplitude: amp,
            });
        }
    }
    out
}

/// Branches of `channel` out of `|J, M⟩` (doubled quantum numbers).
pub fn collective_jump_rates(n: usize, two_j: u32, two_m: i32, channel: Channel) -> Result<Vec<Transition>> {
    DickeBasis::new(n)?.checked_index(two_j, two_m)?;
    Ok(match channel {
        Channel::Emission => local_branches(n, two_j, two_m, -1, 1.0),
        Channel::Pump => local_branches(n, two_j, two_m, 1, 1.0),
        Channel::Dephasing => local_branches(n, two_j, two_m, 0, 2.0),
        Channel::CavityCoupling => {
            let (j, m) = (two_j as f64 / 2.0, two_m as f64 / 2.0);
            let amp = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
            if two_m > -(two_j as i32) {
                vec![Transition {
                    two_j,
                    two_m: two_m - 2,
                    amplitude: amp,
                }]
            } else {
                Vec::new()
            }
        }
    })
}

/// Two-level emitters in the Dicke basis with a cavity.
#[derive(Clone, Debug)]
pub struct DickeModel {
    spec: ModelSpec,
    basis: DickeBasis,
    signature: SpaceSignature,
    block: Vec<u32>,
    charge: Vec<i32>,
    a: Operator,
    jz: Operator,
    j_minus: Operator,
}

impl DickeModel {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let spec = spec.validate()?;
        if spec.scheme != Scheme::TwoLevel {
            return Err(Error::Scheme(format!(
                "the dicke backend needs two-level emitters, got {}; use the exact or meanfield backend",
                spec.scheme.name()
            )));
        }
        if spec.detuning_offsets.iter().any(|&d| d != 0.0) {
            return Err(invalid(
                "emitter.detuning_offsets",
                "the dicke backend needs identical emitters",
            ));
        }
        let basis = DickeBasis::new(spec.n_emitters)?;
        let nc = spec.n_max;
        let signature = SpaceSignature::new(vec![basis.len(), nc])?;
        let dim = signature.total();
        let mut block = Vec::with_capacity(dim);
        let mut charge = Vec::with_capacity(dim);
        for &(tj, tm) in basis.states() {
            for photons in 0..nc {
                block.push(basis.block_of(tj).unwrap() as u32);
                charge.push((tm + spec.n_emitters as i32) / 2 + photons as i32);
            }
        }
        let a1 = annihilation(nc)?;
        let mut a_t = Vec::new();
        let mut jz_t = Vec::new();
        let mut jm_t = Vec::new();
        for (s, &(tj, tm)) in basis.states().iter().enumerate() {
            for (r, c, v) in a1.matrix().iter() {
                a_t.push((s * nc + r, s * nc + c, v));
            }
            for k in 0..nc {
                jz_t.push((s * nc + k, s * nc + k, C64::new(tm as f64 / 2.0, 0.0)));
            }
            for t in collective_jump_rates(spec.n_emitters, tj, tm, Channel::CavityCoupling)? {
                let s2 = basis.index(t.two_j, t.two_m).unwrap();
                for k in 0..nc {
                    jm_t.push((s2 * nc + k, s * nc + k, C64::new(t.amplitude, 0.0)));
                }
            }
        }
        let a = Operator::from_triplets(signature.clone(), a_t)?;
        let jz = Operator::from_triplets(signature.clone(), jz_t)?;
        let j_minus = Operator::from_triplets(signature.clone(), jm_t)?;
        Ok(Self {
            spec,
            basis,
            signature,
            block,
            charge,
            a,
            jz,
            j_minus,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn basis(&self) -> &DickeBasis {
        &self.basis
    }

    pub fn jz(&self) -> &Operator {
        &self.jz
    }

    pub fn j_minus(&self) -> &Operator {
        &self.j_minus
    }

    /// `ω_c a†a + ω J_z + g(J⁺a + a†J⁻)`.
    pub fn hamiltonian(&self) -> Result<Operator> {
        let ad = self.a.adjoint();
        let (w, _) = self.spec.emitter_detunings(0);
        let coupling = self
            .j_minus
            .adjoint()
            .compose(&self.a)?
            .add(&ad.compose(&self.j_minus)?)?;
        ad.compose(&self.a)?
            .scale(self.spec.omega_c)
            .add(&self.jz.scale(w))?
            .add(&coupling.scale(self.spec.g))
    }

    /// Basis index of `|J, M⟩ ⊗ |photons⟩`.
    pub fn state(&self, two_j: u32, two_m: i32, photons: usize) -> Result<usize> {
        if photons >= self.spec.n_max {
            return Err(Error::Basis(format!("photon number {photons} beyond the cutoff")));
        }
        Ok(self.basis.checked_index(two_j, two_m)? * self.spec.n_max + photons)
    }

    pub fn support(&self, sector: Option<i32>) -> Support {
        Support::new(self.block.clone(), self.charge.clone(), sector)
    }

    /// Local channel `Σ_i σ_i ρ σ_i†` as one sandwich per block shift.
    fn add_local(&self, b: &mut GeneratorBuilder, rate: f64, q: i32, scale: f64) {
        let nc = self.spec.n_max;
        let n = self.spec.n_emitters;
        for dj in [1, 0, -1] {
            let mut t = Vec::new();
            for (s, &(tj, tm)) in self.basis.states().iter().enumerate() {
                let tj2 = tj as i32 + 2 * dj;
                let tm2 = tm + 2 * q;
                if tj2 < 0 || tj2 > n as i32 || tm2.abs() > tj2 {
                    continue;
                }
                let amp = (scale * block_weight(n, tj, dj)).sqrt() * clebsch_rank1(tj, tm, q, dj);
                if amp == 0.0 {
                    continue;
                }
                let s2 = self.basis.index(tj2 as u32, tm2).unwrap();
                for k in 0..nc {
                    t.push((s2 * nc + k, s * nc + k, C64::new(amp, 0.0)));
                }
            }
            let dim = self.signature.total();
            let e = CsrMatrix::from_triplets(dim, dim, t);
            b.add_sandwich(rate, &e, &e);
        }
    }

    /// Generator on the given excitation-number sector (`None` = every
    /// block-diagonal element).
    pub fn liouvillian(&self, sector: Option<i32>, budget: usize) -> Result<Liouvillian> {
        let support = Arc::new(self.support(sector));
        if support.len() > budget {
            return Err(Error::Capacity {
                elements: support.len(),
                budget,
                suggestion: "meanfield",
            });
        }
        let s = &self.spec;
        let n = s.n_emitters as f64;
        let h = self.hamiltonian()?;
        let ad = self.a.adjoint();
        let id = Operator::identity(&self.signature);
        let excited = self.jz.add(&id.scale(n / 2.0))?;
        let ground = id.scale(n / 2.0).sub(&self.jz)?;
        // Σ_i o_i†o_i for each local channel
        let decay = ad
            .compose(&self.a)?
            .scale(s.kappa)
            .add(&excited.scale(s.gamma_e1g1))?
            .add(&ground.scale(s.gamma_g1e1))?
            .add(&id.scale(n * s.chi_e1g1 / 2.0))?;
        let k = h.matrix().add(&decay.matrix().scale(C64::new(0.0, -0.5)));
        let mut b = GeneratorBuilder::new(support);
        b.add_effective(&k);
        b.add_sandwich(s.kappa, self.a.matrix(), self.a.matrix());
        if s.gamma_e1g1 != 0.0 {
            self.add_local(&mut b, s.gamma_e1g1, -1, 1.0);
        }
        if s.gamma_g1e1 != 0.0 {
            self.add_local(&mut b, s.gamma_g1e1, 1, 1.0);
        }
        if s.chi_e1g1 != 0.0 {
            self.add_local(&mut b, s.chi_e1g1 / 2.0, 0, 2.0);
        }
        Ok(b.finish(self.signature.clone())?.with_spec(self.spec.clone()))
    }
}

impl DensityModel for DickeModel {
    fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    fn annihilation(&self) -> &Operator {
        &self.a
    }

    fn generator(&self, sector: i32) -> Result<Liouvillian> {
        self.liouvillian(Some(sector), DEFAULT_BUDGET)
    }

    fn population(&self, level: Level) -> Result<Operator> {
        let n = self.spec.n_emitters as f64;
        let half = Operator::identity(&self.signature).scale(0.5);
        match level {
            Level::E1 => half.add(&self.jz.scale(1.0 / n)),
            Level::G1 => half.sub(&self.jz.scale(1.0 / n)),
            other => Err(Error::Scheme(format!("no level {other} in the two-level scheme"))),
        }
    }

    fn uniform(&self, level: Level) -> Result<DensityState> {
        let tn = self.spec.n_emitters as i32;
        let s = match level {
            Level::G1 => self.state(tn as u32, -tn, 0)?,
            Level::E1 => self.state(tn as u32, tn, 0)?,
            other => return Err(Error::Scheme(format!("no level {other} in the two-level scheme"))),
        };
        DensityState::basis(self.signature.clone(), Arc::new(self.support(Some(0))), s)
    }
}

/// Block-diagonal generator of the two-level master equation in the Dicke
/// basis.
pub fn build_dicke_liouvillian(spec: &ModelSpec) -> Result<Liouvillian> {
    DickeModel::new(spec)?.liouvillian(None, DEFAULT_BUDGET)
}

/// Occupation of each `(J, M)`, summed over photon numbers and spin copies.
#[derive(Clone, Debug, PartialEq)]
pub struct DickePopulations {
    pub emitters: usize,
    /// `(2J, 2M, probability)` in basis order.
    pub entries: Vec<(u32, i32, f64)>,
}

impl DickePopulations {
    pub fn get(&self, j: f64, m: f64) -> Option<f64> {
        let (tj, tm) = ((2.0 * j).round() as u32, (2.0 * m).round() as i32);
        self.entries.iter().find(|e| e.0 == tj && e.1 == tm).map(|e| e.2)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    /// Columns `J, M, population`.
    pub fn table(&self) -> CsvTable {
        let mut t = CsvTable::new(["J", "M", "population"]);
        for &(tj, tm, p) in &self.entries {
            t.push(vec![tj as f64 / 2.0, tm as f64 / 2.0, p]);
        }
        t
    }
}

pub fn dicke_populations(model: &DickeModel, state: &DensityState) -> Result<DickePopulations> {
    if state.signature() != &model.signature {
        return Err(Error::Signature("state is not on this Dicke space".into()));
    }
    let nc = model.spec.n_max;
    let entries = model
        .basis
        .states()
        .iter()
        .enumerate()
        .map(|(s, &(tj, tm))| {
            let p: f64 = (0..nc).map(|k| state.element(s * nc + k, s * nc + k).re).sum();
            (tj, tm, p)
        })
        .collect();
    Ok(DickePopulations {
        emitters: model.spec.n_emitters,
        entries,
    })
}
