use std::cell::Cell;

use num_complex::Complex;

use super::SdpInstance;
use crate::error::{Error, Result};
use crate::linalg::{DenseHermitian, DensityMatrix};
use crate::scalar::Real;

/// Counted access to the nonzero entries of an instance, one entry per query.
///
/// Matrix index `j < m` addresses constraint `j`; `j == m` addresses the
/// objective. Entry positions are 0-based within the column-sorted row.
#[derive(Debug)]
pub struct EntryOracle<'a, T> {
    instance: &'a SdpInstance<T>,
    queries: Cell<u64>,
}

impl<'a, T: Real> EntryOracle<'a, T> {
    pub fn new(instance: &'a SdpInstance<T>) -> Self {
        Self {
            instance,
            queries: Cell::new(0),
        }
    }

    pub fn instance(&self) -> &'a SdpInstance<T> {
        self.instance
    }

    pub fn queries(&self) -> u64 {
        self.queries.get()
    }

    /// The `l`-th nonzero of row `k` of matrix `j`, or `None` when the row is shorter.
    pub fn entry(&self, j: usize, k: usize, l: usize) -> Result<Option<(usize, Complex<T>)>> {
        let inst = self.instance;
        let matrix = inst.matrix(j).ok_or_else(|| {
            Error::IndexOutOfRange(format!("matrix index {j} with m = {}", inst.m()))
        })?;
        if k >= inst.n() {
            return Err(Error::IndexOutOfRange(format!(
                "row {k} with n = {}",
                inst.n()
            )));
        }
        if l >= inst.s() {
            return Err(Error::IndexOutOfRange(format!(
                "position {l} with s = {}",
                inst.s()
            )));
        }
        self.queries.set(self.queries.get() + 1);
        Ok(matrix.entry(k, l))
    }

    /// Visits every nonzero `(k, col, value)` of matrix `j`, spending `n·s` queries.
    pub fn for_each_entry(
        &self,
        j: usize,
        mut f: impl FnMut(usize, usize, Complex<T>),
    ) -> Result<()> {
        for k in 0..self.instance.n() {
            for l in 0..self.instance.s() {
                if let Some((col, z)) = self.entry(j, k, l)? {
                    f(k, col, z);
                }
            }
        }
        Ok(())
    }

    /// `tr(M_j ρ)` assembled from oracle reads.
    pub fn trace_with(&self, j: usize, rho: &DensityMatrix<T>) -> Result<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        match rho.diagonal() {
            Some(p) => self.for_each_entry(j, |k, l, z| {
                if k == l {
                    acc = acc + z * p[k];
                }
            })?,
            None => {
                let r = rho.matrix();
                self.for_each_entry(j, |k, l, z| acc = acc + z * r.get(l, k))?
            }
        }
        Ok(acc.re)
    }

    /// `target += c · M_j` assembled from oracle reads.
    pub fn accumulate(&self, j: usize, c: T, target: &mut DenseHermitian<T>) -> Result<()> {
        target.check_dim(self.instance.n())?;
        self.for_each_entry(j, |k, l, z| target.add_to_entry(k, l, z * c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseHermitian;

    fn instance() -> SdpInstance<f64> {
        let a2 = SparseHermitian::from_upper_triplets(
            8,
            vec![
                (1, 2, Complex::new(0.25, 0.0)),
                (1, 7, Complex::new(0.5, 0.0)),
            ],
        )
        .unwrap();
        SdpInstance::new(
            SparseHermitian::zeros(8),
            vec![SparseHermitian::identity(8), a2],
            vec![1.0, 1.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn identity_rows() {
        let inst = instance();
        let o = EntryOracle::new(&inst);
        for k in 0..8 {
            assert_eq!(o.entry(0, k, 0).unwrap(), Some((k, Complex::new(1.0, 0.0))));
        }
        assert_eq!(o.queries(), 8);
    }

    #[test]
    fn sorted_positions_and_padding() {
        let inst = instance();
        let o = EntryOracle::new(&inst);
        assert_eq!(inst.s(), 2);
        assert_eq!(o.entry(1, 1, 1).unwrap(), Some((7, Complex::new(0.5, 0.0))));
        assert_eq!(o.entry(1, 2, 1).unwrap(), None);
        assert!(o.entry(1, 1, 2).is_err());
        assert!(o.entry(3, 0, 0).is_err());
        assert!(o.entry(1, 8, 0).is_err());
        assert_eq!(o.queries(), 2);
    }

    #[test]
    fn objective_addressed_after_constraints() {
        let inst = instance();
        let o = EntryOracle::new(&inst);
        assert_eq!(o.entry(2, 0, 0).unwrap(), None);
    }

    #[test]
    fn full_read_costs_n_times_s() {
        let inst = instance();
        let o = EntryOracle::new(&inst);
        let rho = DensityMatrix::maximally_mixed(8);
        assert!((o.trace_with(0, &rho).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(o.queries(), 16);
    }
}
