//! Sparse LU through faer.
//!
//! [`ShiftedSystem`] keeps the column pattern of `α I + β A` fixed so that
//! repeated factorizations with new `(α, β)` reuse one symbolic analysis.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// A factorized square matrix.
pub struct Factorization {
    lu: Lu<usize, C64>,
    n: usize,
}

impl Factorization {
    /// Overwrite `x` (the right-hand side) with the solution.
    pub fn solve_in_place(&self, x: &mut [C64]) {
        assert_eq!(x.len(), self.n);
        let m = MatMut::from_column_major_slice_mut(x, self.n, 1);
        self.lu.solve_in_place(m);
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

struct Csc {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl Csc {
    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
    }

    fn factor(&self, values: &[C64], symbolic: Option<&SymbolicLu<usize>>) -> Result<Lu<usize, C64>> {
        let mat = SparseColMatRef::new(self.symbolic(), values);
        let sym = match symbolic {
            Some(s) => s.clone(),
            None => SymbolicLu::try_new(self.symbolic()).map_err(|e| Error::LinearSolve(format!("{e:?}")))?,
        };
        Lu::try_new_with_symbolic(sym, mat).map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }
}

/// Column layout of a CSR matrix (rows sorted within each column), with
/// every diagonal entry present. Returns the layout, the position of each
/// CSR entry in it and the position of each diagonal entry.
fn column_layout(a: &CsrMatrix) -> (Csc, Vec<usize>, Vec<usize>) {
    let n = a.nrows();
    let mut counts = vec![0usize; n + 1];
    let mut has_diag = vec![false; n];
    for (r, c, _) in a.iter() {
        counts[c + 1] += 1;
        if r == c {
            has_diag[r] = true;
        }
    }
    for (i, &d) in has_diag.iter().enumerate() {
        if !d {
            counts[i + 1] += 1;
        }
    }
    for c in 0..n {
        counts[c + 1] += counts[c];
    }
    let col_ptr = counts.clone();
    let mut next = counts;
    let mut row_idx = vec![0usize; col_ptr[n]];
    let mut entry_pos = Vec::with_capacity(a.nnz());
    let mut diag_pos = vec![usize::MAX; n];
    // rows are visited in increasing order, so every column comes out sorted
    for r in 0..n {
        if !has_diag[r] {
            let p = next[r];
            row_idx[p] = r;
            diag_pos[r] = p;
            next[r] += 1;
        }
        for (c, _) in a.row(r) {
            let p = next[c];
            row_idx[p] = r;
            next[c] += 1;
            entry_pos.push(p);
            if r == c {
                diag_pos[r] = p;
            }
        }
    }
    (Csc { n, col_ptr, row_idx }, entry_pos, diag_pos)
}

/// Solver for `α I + β A` at arbitrary scalars, sharing one symbolic LU.
pub struct ShiftedSystem {
    csc: Csc,
    a_values: Vec<C64>,
    diag_pos: Vec<usize>,
    symbolic: Option<SymbolicLu<usize>>,
}

impl ShiftedSystem {
    pub fn new(a: &CsrMatrix) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        let (csc, entry_pos, diag_pos) = column_layout(a);
        let mut a_values = vec![C64::new(0.0, 0.0); csc.row_idx.len()];
        for (&p, &v) in entry_pos.iter().zip(a.values()) {
            a_values[p] = v;
        }
        Self {
            csc,
            a_values,
            diag_pos,
            symbolic: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.csc.n
    }

    pub fn factor(&mut self, alpha: C64, beta: C64) -> Result<Factorization> {
        let mut values: Vec<C64> = self.a_values.iter().map(|&v| beta * v).collect();
        for &p in &self.diag_pos {
            values[p] += alpha;
        }
        if self.symbolic.is_none() {
            self.symbolic =
                Some(SymbolicLu::try_new(self.csc.symbolic()).map_err(|e| Error::LinearSolve(format!("{e:?}")))?);
        }
        let lu = self.csc.factor(&values, self.symbolic.as_ref())?;
        Ok(Factorization { lu, n: self.csc.n })
    }
}

/// One-off factorization of a CSR matrix.
pub fn factor(a: &CsrMatrix) -> Result<Factorization> {
    let mut s = ShiftedSystem::new(a);
    s.factor(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
}
