//! Which density-matrix elements a vectorized state keeps.
//!
//! Every generator in this crate conserves the excitation number
//! `n_photons + n_excited_emitters`, so the element `|i><j|` only ever mixes
//! with elements of the same charge difference `q(i) - q(j)`. The Dicke
//! backend additionally never creates coherences between different total-spin
//! blocks. A [`Support`] enumerates the retained `(row, col)` pairs in
//! column-stacking order; with no blocks and no sector it is exactly the
//! standard `vec(rho)` layout `index = col * dim + row`.

use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Support {
    dim: usize,
    block: Vec<u32>,
    charge: Vec<i32>,
    sector: Option<i32>,
    groups: Vec<Vec<u32>>,
    group_of_state: Vec<u32>,
    pos_in_group: Vec<u32>,
    col_group: Vec<Option<u32>>,
    col_offset: Vec<usize>,
    len: usize,
}

impl Support {
    /// All `dim * dim` elements.
    pub fn full(dim: usize) -> Self {
        Self::new(vec![0; dim], vec![0; dim], None)
    }

    /// Elements `|i><j|` with `block[i] == block[j]` and, when `sector` is
    /// given, `charge[i] - charge[j] == sector`.
    pub fn new(block: Vec<u32>, charge: Vec<i32>, sector: Option<i32>) -> Self {
        assert_eq!(block.len(), charge.len());
        let dim = block.len();
        let key = |s: usize, shift: i32| match sector {
            Some(_) => (block[s], Some(charge[s] + shift)),
            None => (block[s], None),
        };
        let mut lookup: HashMap<(u32, Option<i32>), u32> = HashMap::new();
        let mut groups: Vec<Vec<u32>> = Vec::new();
        let mut group_of_state = vec![0u32; dim];
        let mut pos_in_group = vec![0u32; dim];
        for s in 0..dim {
            let g = *lookup.entry(key(s, 0)).or_insert_with(|| {
                groups.push(Vec::new());
                (groups.len() - 1) as u32
            });
            pos_in_group[s] = groups[g as usize].len() as u32;
            groups[g as usize].push(s as u32);
            group_of_state[s] = g;
        }
        let shift = sector.unwrap_or(0);
        let mut col_group = Vec::with_capacity(dim);
        let mut col_offset = Vec::with_capacity(dim + 1);
        let mut len = 0usize;
        for j in 0..dim {
            col_offset.push(len);
            let g = lookup.get(&key(j, shift)).copied();
            if let Some(g) = g {
                len += groups[g as usize].len();
            }
            col_group.push(g);
        }
        col_offset.push(len);
        Self {
            dim,
            block,
            charge,
            sector,
            groups,
            group_of_state,
            pos_in_group,
            col_group,
            col_offset,
            len,
        }
    }

    /// Same block structure, different charge sector.
    pub fn with_sector(&self, sector: Option<i32>) -> Self {
        Self::new(self.block.clone(), self.charge.clone(), sector)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn sector(&self) -> Option<i32> {
        self.sector
    }

    pub fn charge(&self) -> &[i32] {
        &self.charge
    }

    pub fn block(&self) -> &[u32] {
        &self.block
    }

    /// Whether the retained set is closed under `(i, j) -> (j, i)`.
    pub fn is_hermitian_closed(&self) -> bool {
        matches!(self.sector, None | Some(0))
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> Option<usize> {
        let g = self.col_group[col]?;
        (self.group_of_state[row] == g).then(|| self.col_offset[col] + self.pos_in_group[row] as usize)
    }

    /// Rows retained in column `col`.
    pub fn rows_of(&self, col: usize) -> &[u32] {
        match self.col_group[col] {
            Some(g) => &self.groups[g as usize],
            None => &[],
        }
    }

    /// Retained `(row, col)` pairs in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.dim).flat_map(move |j| self.rows_of(j).iter().map(move |&i| (i as usize, j)))
    }

    /// Groups of mutually coupled basis states (blocks of the diagonal sector).
    pub fn diagonal_groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    /// Storage indices of the diagonal elements `|i><i|` (empty unless the
    /// sector is neutral).
    pub fn diagonal_indices(&self) -> Vec<(usize, usize)> {
        (0..self.dim).filter_map(|i| self.index(i, i).map(|k| (i, k))).collect()
    }
}
