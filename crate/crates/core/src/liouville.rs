//! Liouvillian superoperators acting on vectorized density matrices.
//!
//! A generator has the form
//!
//! ```text
//! dρ/dt = -i[H, ρ] - Σ_k c_k D[o_k]ρ,    D[o]ρ = ½{o†o, ρ} - oρo†
//! ```
//!
//! and is assembled as `-i K ρ + i ρ K† + Σ_k c_k o_k ρ o_k†` with the
//! effective Hamiltonian `K = H - (i/2) Σ_k c_k o_k† o_k`. Matrices are
//! stored on a [`Support`], so a generator may act on a single
//! excitation-number sector instead of the full `d² ` elements.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::models::{Level, ModelSpec, Scheme};
use crate::operators::{annihilation, embed, transition, DensityState, Operator, SpaceSignature};
use crate::sparse::CsrMatrix;
use crate::support::Support;

/// Largest support (number of stored density elements) built without an
/// explicit budget.
pub const DEFAULT_BUDGET: usize = 4_000_000;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A sparse generator. Row index = output element, column = input element,
/// both in the storage order of `support`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    signature: SpaceSignature,
    support: Arc<Support>,
    matrix: CsrMatrix,
    spec: Option<ModelSpec>,
}

impl Liouvillian {
    pub fn new(signature: SpaceSignature, support: Arc<Support>, matrix: CsrMatrix) -> Result<Self> {
        if support.dim() != signature.total() || matrix.nrows() != support.len() || matrix.ncols() != support.len() {
            return Err(Error::Signature(format!(
                "generator of size {} on a support of {} elements",
                matrix.nrows(),
                support.len()
            )));
        }
        Ok(Self {
            signature,
            support,
            matrix,
            spec: None,
        })
    }

    pub fn with_spec(mut self, spec: ModelSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.matvec(x)
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        self.matrix.matvec_into(x, y)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.support != other.support {
            return Err(Error::Signature("generators on different supports".into()));
        }
        Ok(Self {
            signature: self.signature.clone(),
            support: self.support.clone(),
            matrix: self.matrix.add(&other.matrix),
            spec: self.spec.clone(),
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale(C64::new(s, 0.0)),
            ..self.clone()
        }
    }

    /// Largest `|Σ_diag L_{dk}|` over input elements `k`: how far the flow
    /// is from preserving the trace. Zero for a valid generator.
    pub fn trace_defect(&self) -> f64 {
        let mut is_diag = vec![false; self.support.len()];
        for (_, k) in self.support.diagonal_indices() {
            is_diag[k] = true;
        }
        let mut sums = vec![C64::new(0.0, 0.0); self.support.len()];
        for (r, c, v) in self.matrix.iter() {
            if is_diag[r] {
                sums[c] += v;
            }
        }
        sums.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn norm_inf(&self) -> f64 {
        self.matrix.norm_inf()
    }
}

/// Accumulates superoperator entries on a fixed support.
pub struct GeneratorBuilder {
    support: Arc<Support>,
    triplets: Vec<(usize, usize, C64)>,
}

impl GeneratorBuilder {
    pub fn new(support: Arc<Support>) -> Self {
        Self {
            support,
            triplets: Vec::new(),
        }
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    /// Raw entry: output element `out` receives `value` times input `input`.
    pub fn push(&mut self, out: usize, input: usize, value: C64) {
        self.triplets.push((out, input, value));
    }

    /// `ρ ↦ -i K ρ + i ρ K†`.
    pub fn add_effective(&mut self, k: &CsrMatrix) {
        let kt = k.transpose();
        let support = self.support.clone();
        for (idx, (i, j)) in support.pairs().enumerate() {
            // (Kρ)_{rj} = K_{ri} ρ_{ij}
            for (r, v) in kt.row(i) {
                if let Some(out) = support.index(r, j) {
                    self.triplets.push((out, idx, -I * v));
                }
            }
            // (ρK†)_{ir} = ρ_{ij} conj(K_{rj})
            for (r, v) in kt.row(j) {
                if let Some(out) = support.index(i, r) {
                    self.triplets.push((out, idx, I * v.conj()));
                }
            }
        }
    }

    /// `ρ ↦ c · A ρ B†`.
    pub fn add_sandwich(&mut self, c: f64, a: &CsrMatrix, b: &CsrMatrix) {
        let at = a.transpose();
        let bt = b.transpose();
        let support = self.support.clone();
        for (idx, (i, j)) in support.pairs().enumerate() {
            for (r, va) in at.row(i) {
                for (s, vb) in bt.row(j) {
                    if let Some(out) = support.index(r, s) {
                        self.triplets.push((out, idx, c * va * vb.conj()));
                    }
                }
            }
        }
    }

    pub fn finish(self, signature: SpaceSignature) -> Result<Liouvillian> {
        let n = self.support.len();
        let matrix = CsrMatrix::from_triplets(n, n, self.triplets);
        Liouvillian::new(signature, self.support, matrix)
    }
}

fn check_hermitian(h: &Operator) -> Result<()> {
    let scale = h.matrix().norm_inf().max(1.0);
    let deviation = h.hermiticity_error();
    if deviation > 1e-10 * scale {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// The superoperator `ρ ↦ -i[H, ρ]` on the full space.
pub fn hamiltonian_part(h: &Operator) -> Result<Liouvillian> {
    check_hermitian(h)?;
    let support = Arc::new(Support::full(h.dim()));
    let mut b = GeneratorBuilder::new(support);
    b.add_effective(h.matrix());
    b.finish(h.signature().clone())
}

/// The superoperator of `D[o]ρ = ½{o†o, ρ} - oρo†` on the full space
/// (positive sign; decay enters a master equation as `-D`).
pub fn dissipator(o: &Operator) -> Result<Liouvillian> {
    let support = Arc::new(Support::full(o.dim()));
    let mut b = GeneratorBuilder::new(support);
    let odo = o.adjoint().compose(o)?;
    // -i K ρ + i ρ K† with K = (i/2) o†o gives ½{o†o, ρ}
    b.add_effective(&odo.matrix().scale(C64::new(0.0, 0.5)));
    b.add_sandwich(-1.0, o.matrix(), o.matrix());
    b.finish(o.signature().clone())
}

/// Assemble `-i[H, ·] - Σ c_k D[o_k]` on `support`.
pub fn lindblad(h: &Operator, jumps: &[(f64, Operator)], support: Arc<Support>) -> Result<Liouvillian> {
    check_hermitian(h)?;
    let mut k = h.matrix().clone();
    for (c, o) in jumps {
        if o.signature() != h.signature() {
            return Err(Error::Signature("jump operator on a different space".into()));
        }
        let odo = o.matrix().adjoint().matmul(o.matrix());
        k = k.add(&odo.scale(C64::new(0.0, -0.5 * c)));
    }
    let mut b = GeneratorBuilder::new(support);
    b.add_effective(&k);
    for (c, o) in jumps {
        b.add_sandwich(*c, o.matrix(), o.matrix());
    }
    b.finish(h.signature().clone())
}

/// Which basis element a level has inside one emitter of a given scheme.
fn level_index(scheme: Scheme, level: Level) -> usize {
    scheme.index(level).expect("level present in scheme")
}

/// The product-space model: `N` emitters of the chosen scheme and a cavity.
#[derive(Clone, Debug)]
pub struct ProductModel {
    spec: ModelSpec,
    signature: SpaceSignature,
    charge: Vec<i32>,
    a: Operator,
    hamiltonian: Operator,
    jumps: Vec<(f64, Operator)>,
}

/// Number of density elements on the neutral sector of the product space,
/// from the distribution of excitation numbers (saturating).
pub fn neutral_sector_elements(spec: &ModelSpec) -> usize {
    let excitation: Vec<usize> = spec.scheme.levels().iter().map(|l| l.excitation() as usize).collect();
    let mut counts: Vec<u128> = vec![0; spec.n_max];
    counts.iter_mut().for_each(|c| *c = 1);
    for _ in 0..spec.n_emitters {
        let mut next = vec![0u128; counts.len() + 1];
        for (q, &c) in counts.iter().enumerate() {
            for &e in &excitation {
                next[q + e] = next[q + e].saturating_add(c);
            }
        }
        counts = next;
    }
    let total = counts
        .iter()
        .fold(0u128, |acc, &c| acc.saturating_add(c.saturating_mul(c)));
    usize::try_from(total).unwrap_or(usize::MAX)
}

impl ProductModel {
    /// Fails with a capacity error before building anything when the
    /// neutral sector exceeds [`DEFAULT_BUDGET`].
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        let spec = spec.validate()?;
        let elements = neutral_sector_elements(&spec);
        if elements > DEFAULT_BUDGET {
            return Err(Error::Capacity {
                elements,
                budget: DEFAULT_BUDGET,
                suggestion: if spec.scheme == Scheme::TwoLevel {
                    "dicke"
                } else {
                    "meanfield"
                },
            });
        }
        let scheme = spec.scheme;
        let levels = scheme.n_levels();
        let n = spec.n_emitters;
        let mut dims = vec![levels; n];
        dims.push(spec.n_max);
        let signature = SpaceSignature::new(dims)?;
        let cavity = n;

        let a = embed(&annihilation(spec.n_max)?, cavity, &signature)?;
        let ad = a.adjoint();
        let sigma = |i: usize, from: Level, to: Level| -> Result<Operator> {
            embed(
                &transition(levels, level_index(scheme, from), level_index(scheme, to))?,
                i,
                &signature,
            )
        };

        let mut h = ad.compose(&a)?.scale(spec.omega_c);
        let mut jumps = vec![(spec.kappa, a.clone())];
        let push = |jumps: &mut Vec<(f64, Operator)>, rate: f64, op: Operator| {
            if rate != 0.0 {
                jumps.push((rate, op));
            }
        };
        for i in 0..n {
            let (w1, w2) = spec.emitter_detunings(i);
            let pe1 = sigma(i, Level::E1, Level::E1)?;
            let pg1 = sigma(i, Level::G1, Level::G1)?;
            let z1 = pe1.sub(&pg1)?;
            h = h.add(&z1.scale(w1 / 2.0))?;
            let raise1 = sigma(i, Level::G1, Level::E1)?;
            let lower1 = raise1.adjoint();
            h = h.add(&raise1.compose(&a)?.add(&ad.compose(&lower1)?)?.scale(spec.g))?;
            push(&mut jumps, spec.gamma_e1g1, lower1.clone());
            push(&mut jumps, spec.gamma_g1e1, raise1.clone());
            push(&mut jumps, spec.chi_e1g1 / 2.0, z1);
            if scheme.has(Level::E2) {
                let z2 = sigma(i, Level::E2, Level::E2)?.sub(&sigma(i, Level::G2, Level::G2)?)?;
                h = h.add(&z2.scale(w2 / 2.0))?;
                let raise2 = sigma(i, Level::G2, Level::E2)?;
                let lower2 = raise2.adjoint();
                h = h.add(&raise2.compose(&a)?.add(&ad.compose(&lower2)?)?.scale(spec.g))?;
                push(&mut jumps, spec.gamma_e2g2, lower2);
                push(&mut jumps, spec.gamma_g2e2, raise2);
                push(&mut jumps, spec.chi_e2g2 / 2.0, z2);
            }
            if scheme.has(Level::M) {
                push(&mut jumps, spec.gamma_e1m, sigma(i, Level::E1, Level::M)?);
                push(&mut jumps, spec.gamma_mg1, sigma(i, Level::M, Level::G1)?);
                if scheme.has(Level::E2) {
                    push(&mut jumps, spec.gamma_e2m, sigma(i, Level::E2, Level::M)?);
                    push(&mut jumps, spec.gamma_mg2, sigma(i, Level::M, Level::G2)?);
                }
            }
        }

        let excitation: Vec<i32> = scheme.levels().iter().map(|l| l.excitation()).collect();
        let charge = (0..signature.total())
            .map(|s| {
                let idx = signature.unflatten(s);
                idx[..n].iter().map(|&l| excitation[l]).sum::<i32>() + idx[n] as i32
            })
            .collect();

        Ok(Self {
            spec,
            signature,
            charge,
            a,
            hamiltonian: h,
            jumps,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    /// `(rate, operator)` pairs entering as `-rate · D[operator]`.
    pub fn jumps(&self) -> &[(f64, Operator)] {
        &self.jumps
    }

    pub fn annihilation(&self) -> &Operator {
        &self.a
    }

    /// Excitation number of each basis state.
    pub fn charge(&self) -> &[i32] {
        &self.charge
    }

    pub fn support(&self, sector: Option<i32>) -> Support {
        match sector {
            None => Support::full(self.signature.total()),
            Some(_) => Support::new(vec![0; self.charge.len()], self.charge.clone(), sector),
        }
    }

    /// Basis index of the state with every emitter in `level`.
    pub fn uniform_state(&self, level: Level, photons: usize) -> Result<usize> {
        let idx = self
            .spec
            .scheme
            .index(level)
            .ok_or_else(|| Error::Scheme(format!("no level {level} in the {} scheme", self.spec.scheme.name())))?;
        let mut all = vec![idx; self.spec.n_emitters];
        all.push(photons);
        Ok(self.signature.flatten(&all))
    }

    /// Average single-emitter projector onto `level`: `(1/N) Σ_i σ_i^{ll}`.
    pub fn population_operator(&self, level: Level) -> Result<Operator> {
        let scheme = self.spec.scheme;
        let l = scheme
            .index(level)
            .ok_or_else(|| Error::Scheme(format!("no level {level} in the {} scheme", scheme.name())))?;
        let n = self.spec.n_emitters;
        let mut sum = Operator::zero(&self.signature);
        for i in 0..n {
            sum = sum.add(&embed(&transition(scheme.n_levels(), l, l)?, i, &self.signature)?)?;
        }
        Ok(sum.scale(1.0 / n as f64))
    }

    /// Single-emitter transition `|to><from|` on emitter `i`.
    pub fn sigma(&self, i: usize, from: Level, to: Level) -> Result<Operator> {
        let scheme = self.spec.scheme;
        let f = scheme.index(from).ok_or(Error::InvalidLevel {
            index: from as usize,
            levels: scheme.n_levels(),
        })?;
        let t = scheme.index(to).ok_or(Error::InvalidLevel {
            index: to as usize,
            levels: scheme.n_levels(),
        })?;
        embed(&transition(scheme.n_levels(), f, t)?, i, &self.signature)
    }

    /// Generator on the given excitation-number sector (`None` = full space).
    pub fn liouvillian(&self, sector: Option<i32>, budget: usize) -> Result<Liouvillian> {
        let support = self.support(sector);
        if support.len() > budget {
            return Err(Error::Capacity {
                elements: support.len(),
                budget,
                suggestion: if self.spec.scheme == Scheme::TwoLevel {
                    "dicke"
                } else {
                    "meanfield"
                },
            });
        }
        Ok(lindblad(&self.hamiltonian, &self.jumps, Arc::new(support))?.with_spec(self.spec.clone()))
    }
}

/// A density-matrix backend: a space, its cavity operator and generators on
/// excitation-number sectors.
pub trait DensityModel: Sync {
    fn spec(&self) -> &ModelSpec;
    fn signature(&self) -> &SpaceSignature;
    /// The cavity annihilation operator on the whole space.
    fn annihilation(&self) -> &Operator;
    /// Generator restricted to elements `|i><j|` with `q(i) - q(j) = sector`.
    fn generator(&self, sector: i32) -> Result<Liouvillian>;
    /// Mean single-emitter population operator of `level`.
    fn population(&self, level: Level) -> Result<Operator>;
    /// Every emitter in `level`, cavity in vacuum, on the neutral sector.
    fn uniform(&self, level: Level) -> Result<DensityState>;
}

impl DensityModel for ProductModel {
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
        self.population_operator(level)
    }

    fn uniform(&self, level: Level) -> Result<DensityState> {
        let s = self.uniform_state(level, 0)?;
        DensityState::basis(self.signature.clone(), Arc::new(self.support(Some(0))), s)
    }
}

/// The full-space generator of the master equation for `spec`.
pub fn build_qme(spec: &ModelSpec) -> Result<Liouvillian> {
    build_qme_with_budget(spec, DEFAULT_BUDGET)
}

pub fn build_qme_with_budget(spec: &ModelSpec, budget: usize) -> Result<Liouvillian> {
    let spec = spec.validate()?;
    let d = spec
        .scheme
        .n_levels()
        .checked_pow(spec.n_emitters as u32)
        .and_then(|x| x.checked_mul(spec.n_max));
    let elements = d.and_then(|d| d.checked_mul(d)).unwrap_or(usize::MAX);
    if elements > budget {
        return Err(Error::Capacity {
            elements,
            budget,
            suggestion: if spec.scheme == Scheme::TwoLevel {
                "dicke"
            } else {
                "meanfield"
            },
        });
    }
    ProductModel::new(&spec)?.liouvillian(None, budget)
}
