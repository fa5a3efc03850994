//! Sparse operators on emitter-level ⊗ photon-Fock product spaces.
//!
//! Subsystems are ordered `[emitter 1, ..., emitter N, cavity]` with the
//! cavity index running fastest, so a product state `|l_1 ... l_N, n>` has
//! flat index `((l_1 * L + l_2) * L + ...) * n_max + n`.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use crate::support::Support;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Ordered subsystem dimensions of a tensor-product space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpaceSignature {
    dims: Vec<usize>,
}

impl SpaceSignature {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 1) {
            return Err(Error::InvalidDimension(format!("subsystem dims {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Split a flat index into per-subsystem indices.
    pub fn unflatten(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in self.dims.iter().enumerate().rev() {
            out[slot] = index % d;
            index /= d;
        }
        out
    }

    pub fn flatten(&self, indices: &[usize]) -> usize {
        indices.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }
}

/// A sparse complex operator tagged with the space it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    signature: SpaceSignature,
    matrix: CsrMatrix,
}

impl Operator {
    pub fn from_matrix(signature: SpaceSignature, matrix: CsrMatrix) -> Result<Self> {
        let n = signature.total();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Signature(format!(
                "{}x{} matrix for total dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { signature, matrix })
    }

    pub fn from_triplets(signature: SpaceSignature, triplets: Vec<(usize, usize, C64)>) -> Result<Self> {
        let n = signature.total();
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n || c >= n) {
            return Err(Error::Signature(format!("entry ({r}, {c}) outside dimension {n}")));
        }
        Ok(Self {
            signature,
            matrix: CsrMatrix::from_triplets(n, n, triplets),
        })
    }

    pub fn identity(signature: &SpaceSignature) -> Self {
        Self {
            matrix: CsrMatrix::identity(signature.total()),
            signature: signature.clone(),
        }
    }

    pub fn zero(signature: &SpaceSignature) -> Self {
        let n = signature.total();
        Self {
            matrix: CsrMatrix::zeros(n, n),
            signature: signature.clone(),
        }
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.signature.total()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix.get(row, col)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.signature != other.signature {
            return Err(Error::Signature(format!(
                "{:?} vs {:?}",
                self.signature.dims, other.signature.dims
            )));
        }
        Ok(())
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.matmul(&other.matrix),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.add(&other.matrix),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            signature: self.signature.clone(),
            matrix: self.matrix.sub(&other.matrix),
        })
    }

    pub fn scale(&self, s: impl Into<C64>) -> Self {
        Self {
            signature: self.signature.clone(),
            matrix: self.matrix.scale(s.into()),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            signature: self.signature.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `A - A†`.
    pub fn hermiticity_error(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        self.matrix.to_dense()
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        self.matrix.matvec(x)
    }
}

/// Truncated photon annihilation operator on Fock states `|0>..|n_max-1>`.
pub fn annihilation(n_max: usize) -> Result<Operator> {
    if n_max < 1 {
        return Err(Error::InvalidDimension("n_max must be at least 1".into()));
    }
    let triplets = (1..n_max)
        .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
        .collect();
    Operator::from_triplets(SpaceSignature::single(n_max)?, triplets)
}

pub fn creation(n_max: usize) -> Result<Operator> {
    Ok(annihilation(n_max)?.adjoint())
}

/// The single-emitter operator `|to><from|`.
pub fn transition(levels: usize, from: usize, to: usize) -> Result<Operator> {
    for index in [from, to] {
        if index >= levels {
            return Err(Error::InvalidLevel { index, levels });
        }
    }
    Operator::from_triplets(SpaceSignature::single(levels)?, vec![(to, from, ONE)])
}

pub fn projector(levels: usize, level: usize) -> Result<Operator> {
    transition(levels, level, level)
}

/// Lift a single-subsystem operator into slot `slot` of `sig`:
/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I`.
pub fn embed(op: &Operator, slot: usize, sig: &SpaceSignature) -> Result<Operator> {
    let dims = sig.dims();
    if slot >= dims.len() {
        return Err(Error::Signature(format!(
            "slot {slot} outside {} subsystems",
            dims.len()
        )));
    }
    if op.dim() != dims[slot] {
        return Err(Error::Signature(format!(
            "operator of dimension {} embedded into slot {slot} of size {}",
            op.dim(),
            dims[slot]
        )));
    }
    let left: usize = dims[..slot].iter().product();
    let right: usize = dims[slot + 1..].iter().product();
    let matrix = CsrMatrix::identity(left)
        .kron(&op.matrix)
        .kron(&CsrMatrix::identity(right));
    Operator::from_matrix(sig.clone(), matrix)
}

/// A density operator stored on a [`Support`].
#[derive(Clone, Debug)]
pub struct DensityState {
    signature: SpaceSignature,
    support: Arc<Support>,
    data: Vec<C64>,
}

impl DensityState {
    pub fn new(signature: SpaceSignature, support: Arc<Support>, data: Vec<C64>) -> Result<Self> {
        if support.dim() != signature.total() {
            return Err(Error::Signature(format!(
                "support of dimension {} for space of dimension {}",
                support.dim(),
                signature.total()
            )));
        }
        if data.len() != support.len() {
            return Err(Error::Signature(format!(
                "{} values for a support of {} elements",
                data.len(),
                support.len()
            )));
        }
        Ok(Self {
            signature,
            support,
            data,
        })
    }

    /// `|state><state|` for a basis state.
    pub fn basis(signature: SpaceSignature, support: Arc<Support>, state: usize) -> Result<Self> {
        let k = support
            .index(state, state)
            .ok_or_else(|| Error::Signature(format!("diagonal element {state} not retained")))?;
        let mut data = vec![ZERO; support.len()];
        data[k] = ONE;
        Self::new(signature, support, data)
    }

    /// Mixture `Σ p_s |s><s|` of basis states.
    pub fn diagonal(signature: SpaceSignature, support: Arc<Support>, weights: &[(usize, f64)]) -> Result<Self> {
        let mut data = vec![ZERO; support.len()];
        for &(s, p) in weights {
            let k = support
                .index(s, s)
                .ok_or_else(|| Error::Signature(format!("diagonal element {s} not retained")))?;
            data[k] += C64::new(p, 0.0);
        }
        Self::new(signature, support, data)
    }

    pub fn maximally_mixed(signature: SpaceSignature, support: Arc<Support>) -> Result<Self> {
        let d = signature.total();
        let weights: Vec<_> = (0..d).map(|s| (s, 1.0 / d as f64)).collect();
        Self::diagonal(signature, support, &weights)
    }

    /// Copy a dense matrix onto the support; entries outside it are dropped.
    pub fn from_dense(signature: SpaceSignature, support: Arc<Support>, dense: &[Vec<C64>]) -> Result<Self> {
        let data = support.pairs().map(|(i, j)| dense[i][j]).collect();
        Self::new(signature, support, data)
    }

    pub fn signature(&self) -> &SpaceSignature {
        &self.signature
    }

    pub fn support(&self) -> &Arc<Support> {
        &self.support
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.support.index(row, col).map_or(ZERO, |k| self.data[k])
    }

    pub fn trace(&self) -> C64 {
        self.support
            .diagonal_indices()
            .into_iter()
            .map(|(_, k)| self.data[k])
            .sum()
    }

    /// `tr(op · rho)`.
    pub fn expect(&self, op: &Operator) -> Result<C64> {
        if op.signature() != &self.signature {
            return Err(Error::Signature("operator and state live on different spaces".into()));
        }
        // tr(O rho) = Σ_{r,c} O_{rc} rho_{cr}
        Ok(op.matrix().iter().map(|(r, c, v)| v * self.element(c, r)).sum())
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let d = self.signature.total();
        let mut out = vec![vec![ZERO; d]; d];
        for ((i, j), &v) in self.support.pairs().zip(&self.data) {
            out[i][j] = v;
        }
        out
    }

    /// `left · rho · right†` placed on `target`; contributions outside the
    /// target support are an error.
    pub fn sandwich(&self, left: &Operator, right: &Operator, target: Arc<Support>) -> Result<Self> {
        if left.signature() != &self.signature || right.signature() != &self.signature {
            return Err(Error::Signature("sandwich operators on a different space".into()));
        }
        let lt = left.matrix().transpose();
        let rt = right.matrix().transpose();
        let mut data = vec![ZERO; target.len()];
        for ((k, l), &v) in self.support.pairs().zip(&self.data) {
            if v == ZERO {
                continue;
            }
            // (A rho B†)_{ij} = Σ A_{ik} rho_{kl} conj(B_{jl})
            for (i, a) in lt.row(k) {
                for (j, b) in rt.row(l) {
                    let idx = target
                        .index(i, j)
                        .ok_or_else(|| Error::Signature(format!("element ({i}, {j}) outside the target sector")))?;
                    data[idx] += a * v * b.conj();
                }
            }
        }
        Self::new(self.signature.clone(), target, data)
    }

    /// Largest entry of `rho - rho†` (zero for supports that are not closed
    /// under transposition is not meaningful, so those report infinity).
    pub fn hermiticity_error(&self) -> f64 {
        if !self.support.is_hermitian_closed() {
            return f64::INFINITY;
        }
        self.support
            .pairs()
            .zip(&self.data)
            .map(|((i, j), &v)| (v - self.element(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part, computed block by block.
    pub fn min_eigenvalue(&self) -> f64 {
        let blocks: Vec<Vec<u32>> = if self.support.sector() == Some(0) {
            self.support.diagonal_groups().to_vec()
        } else {
            vec![(0..self.signature.total() as u32).collect()]
        };
        let mut min = f64::INFINITY;
        for states in blocks {
            let n = states.len();
            let m = Mat::<C64>::from_fn(n, n, |r, c| {
                let a = self.element(states[r] as usize, states[c] as usize);
                let b = self.element(states[c] as usize, states[r] as usize);
                (a + b.conj()) * 0.5
            });
            if let Ok(ev) = m.self_adjoint_eigenvalues(faer::Side::Lower) {
                min = ev.into_iter().fold(min, f64::min);
            }
        }
        min
    }

    /// Trace distance `½‖a − b‖₁` (dense, for small spaces).
    pub fn trace_distance(&self, other: &Self) -> f64 {
        let d = self.signature.total();
        let m = Mat::<C64>::from_fn(d, d, |r, c| self.element(r, c) - other.element(r, c));
        let h = Mat::<C64>::from_fn(d, d, |r, c| (m[(r, c)] + m[(c, r)].conj()) * 0.5);
        h.self_adjoint_eigenvalues(faer::Side::Lower)
            .map(|ev| 0.5 * ev.iter().map(|x| x.abs()).sum::<f64>())
            .unwrap_or(f64::INFINITY)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            signature: self.signature.clone(),
            support: self.support.clone(),
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }
}
