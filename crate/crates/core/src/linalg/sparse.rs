use std::collections::BTreeMap;

use num_complex::Complex;

use super::dense::DenseHermitian;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sparse Hermitian matrix in compressed-row form.
///
/// Structurally symmetric: `(k, l)` is stored iff `(l, k)` is, with conjugate
/// values. Column indices are strictly increasing within each row, so the
/// position of an entry in its row is the column-sorted rank used by the
/// entry oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian<T> {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<Complex<T>>,
    sparsity: usize,
    diag_entries: Vec<(usize, T)>,
}

impl<T: Real> SparseHermitian<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_offsets: vec![0; n + 1],
            col_indices: vec![],
            values: vec![],
            sparsity: 0,
            diag_entries: vec![],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_real_diagonal(&vec![T::one(); n])
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let triplets = diag
            .iter()
            .enumerate()
            .map(|(k, &d)| (k, k, Complex::new(d, T::zero())));
        Self::from_upper_triplets(diag.len(), triplets).expect("diagonal triplets are valid")
    }

    /// Builds the matrix from upper-triangle `(row, col, value)` triplets.
    ///
    /// The lower triangle is implied by conjugation. Duplicate positions are
    /// summed, exact zeros dropped, and imaginary parts on the diagonal removed.
    /// Triplets strictly below the diagonal are rejected.
    pub fn from_upper_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex<T>)>,
    {
        let mut upper: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, z) in triplets {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange(format!(
                    "triplet ({r}, {c}) in dimension {n}"
                )));
            }
            if r > c {
                return Err(Error::InvalidMatrix(format!(
                    "triplet ({r}, {c}) lies below the diagonal; only the upper triangle is stored"
                )));
            }
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "non-finite value at ({r}, {c})"
                )));
            }
            let slot = upper
                .entry((r, c))
                .or_insert_with(|| Complex::new(T::zero(), T::zero()));
            *slot = *slot + z;
        }
        let mut full: Vec<(usize, usize, Complex<T>)> = Vec::with_capacity(2 * upper.len());
        for ((r, c), z) in upper {
            if r == c {
                if z.im.abs().to_f64_lossy() > 1e-9 {
                    log::warn!("dropping imaginary part {} on diagonal entry {r}", z.im);
                }
                if z.re != T::zero() {
                    full.push((r, r, Complex::new(z.re, T::zero())));
                }
            } else if z.re != T::zero() || z.im != T::zero() {
                full.push((r, c, z));
                full.push((c, r, z.conj()));
            }
        }
        Ok(Self::from_sorted_entries(n, full))
    }

    /// Keeps entries of `dense` whose modulus exceeds `drop_tol`.
    pub fn from_dense(dense: &DenseHermitian<T>, drop_tol: T) -> Self {
        let n = dense.dim();
        let mut full = Vec::new();
        for k in 0..n {
            for l in 0..n {
                let z = dense.get(k, l);
                if z.norm() > drop_tol {
                    full.push((k, l, z));
                }
            }
        }
        Self::from_sorted_entries(n, full)
    }

    fn from_sorted_entries(n: usize, mut full: Vec<(usize, usize, Complex<T>)>) -> Self {
        full.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_offsets = vec![0usize; n + 1];
        for &(r, _, _) in &full {
            row_offsets[r + 1] += 1;
        }
        for k in 0..n {
            row_offsets[k + 1] += row_offsets[k];
        }
        let sparsity = (0..n)
            .map(|k| row_offsets[k + 1] - row_offsets[k])
            .max()
            .unwrap_or(0);
        let diag_entries = full
            .iter()
            .filter(|e| e.0 == e.1)
            .map(|e| (e.0, e.2.re))
            .collect();
        Self {
            n,
            row_offsets,
            col_indices: full.iter().map(|e| e.1).collect(),
            values: full.iter().map(|e| e.2).collect(),
            sparsity,
            diag_entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Maximum number of stored entries in any row.
    pub fn row_sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn row(&self, k: usize) -> (&[usize], &[Complex<T>]) {
        let span = self.row_offsets[k]..self.row_offsets[k + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// The `l`-th stored entry (0-based) of row `k` as `(column, value)`.
    pub fn entry(&self, k: usize, l: usize) -> Option<(usize, Complex<T>)> {
        let start = self.row_offsets[k];
        let idx = start + l;
        (idx < self.row_offsets[k + 1]).then(|| (self.col_indices[idx], self.values[idx]))
    }

    pub fn get(&self, k: usize, l: usize) -> Complex<T> {
        let (cols, vals) = self.row(k);
        match cols.binary_search(&l) {
            Ok(i) => vals[i],
            Err(_) => Complex::new(T::zero(), T::zero()),
        }
    }

    pub fn to_dense(&self) -> DenseHermitian<T> {
        let mut out = DenseHermitian::zeros(self.n);
        self.add_scaled_into(&mut out, T::one());
        out
    }

    /// `target += c * self`.
    pub fn add_scaled_into(&self, target: &mut DenseHermitian<T>, c: T) {
        debug_assert_eq!(target.dim(), self.n);
        for k in 0..self.n {
            let (cols, vals) = self.row(k);
            for (&l, &z) in cols.iter().zip(vals) {
                target.add_to_entry(k, l, z * c);
            }
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            values: self.values.iter().map(|z| *z * c).collect(),
            diag_entries: self.diag_entries.iter().map(|&(k, v)| (k, v * c)).collect(),
            ..self.clone()
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.diag_entries.len() == self.values.len()
    }

    /// Stored diagonal entries as `(index, real value)`.
    pub fn diagonal_entries(&self) -> &[(usize, T)] {
        &self.diag_entries
    }

    pub fn diagonal_real(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for &(k, v) in &self.diag_entries {
            d[k] = v;
        }
        d
    }

    /// Upper-triangle triplets in row-major order; the inverse of [`Self::from_upper_triplets`].
    pub fn upper_triplets(&self) -> Vec<(usize, usize, Complex<T>)> {
        let mut out = Vec::new();
        for k in 0..self.n {
            let (cols, vals) = self.row(k);
            for (&l, &z) in cols.iter().zip(vals) {
                if l >= k {
                    out.push((k, l, z));
                }
            }
        }
        out
    }

    /// The block matrix `[self 0; 0 corner]` of dimension `n + 1`.
    pub fn with_corner(&self, corner: T) -> Self {
        let mut triplets = self.upper_triplets();
        triplets.push((self.n, self.n, Complex::new(corner, T::zero())));
        Self::from_upper_triplets(self.n + 1, triplets).expect("extension of a valid matrix")
    }

    /// Re-checks the structural invariants of the compressed layout.
    pub fn check_invariants(&self) -> Result<()> {
        if self.row_offsets.len() != self.n + 1 || self.row_offsets[self.n] != self.values.len() {
            return Err(Error::InvalidMatrix(
                "row offsets inconsistent with storage".into(),
            ));
        }
        for k in 0..self.n {
            let (cols, vals) = self.row(k);
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidMatrix(format!(
                    "row {k} columns not strictly increasing"
                )));
            }
            for (&l, &z) in cols.iter().zip(vals) {
                if l >= self.n {
                    return Err(Error::IndexOutOfRange(format!("column {l} in row {k}")));
                }
                let mirror = self.row(l);
                match mirror.0.binary_search(&k) {
                    Ok(i) if mirror.1[i] == z.conj() => {}
                    _ => {
                        return Err(Error::InvalidMatrix(format!(
                            "entry ({k}, {l}) lacks a conjugate mirror"
                        )))
                    }
                }
            }
        }
        Ok(())
    }
}
