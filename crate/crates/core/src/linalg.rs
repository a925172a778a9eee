//! Sparse symmetric positive definite solves on a fixed sparsity pattern.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};

use crate::error::{LabError, Result};

/// Lower-triangle pattern of an SPD matrix together with its symbolic
/// Cholesky factorization. Values are supplied in pattern order; repeated
/// positions are summed.
pub(crate) struct SpdPattern {
    n: usize,
    entries: Vec<(usize, usize)>,
    symbolic: SymbolicLlt<usize>,
}

pub(crate) struct SpdFactor {
    llt: Llt<usize, f64>,
    n: usize,
}

impl SpdPattern {
    pub fn new(n: usize, entries: Vec<(usize, usize)>) -> Result<Self> {
        faer::set_global_parallelism(Par::Seq);
        debug_assert!(entries.iter().all(|&(i, j)| i >= j && i < n));
        let mat = Self::build(n, &entries, &vec![1.0; entries.len()])?;
        let symbolic = SymbolicLlt::try_new(mat.symbolic(), Side::Lower)
            .map_err(|e| LabError::LinearSolver(format!("symbolic factorization: {e:?}")))?;
        Ok(Self { n, entries, symbolic })
    }

    fn build(n: usize, entries: &[(usize, usize)], values: &[f64]) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> =
            entries.iter().zip(values).map(|(&(i, j), &v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| LabError::LinearSolver(format!("assembly: {e:?}")))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn factor(&self, values: &[f64]) -> Result<SpdFactor> {
        assert_eq!(values.len(), self.entries.len());
        let mat = Self::build(self.n, &self.entries, values)?;
        let llt = Llt::try_new_with_symbolic(self.symbolic.clone(), mat.as_ref(), Side::Lower)
            .map_err(|e| LabError::LinearSolver(format!("Cholesky factorization: {e:?}")))?;
        Ok(SpdFactor { llt, n: self.n })
    }
}

impl SpdFactor {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let b = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = self.llt.solve(&b);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        // 1-D Laplacian, exact solution of −u'' = 1 at the nodes
        let n = 9;
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for i in 0..n {
            entries.push((i, i));
            values.push(2.0);
            if i > 0 {
                entries.push((i, i - 1));
                values.push(-1.0);
            }
        }
        let pat = SpdPattern::new(n, entries).unwrap();
        let f = pat.factor(&values).unwrap();
        let h = 1.0 / (n + 1) as f64;
        let x = f.solve(&vec![h * h; n]);
        for (i, xi) in x.iter().enumerate() {
            let t = (i + 1) as f64 * h;
            assert!((xi - 0.5 * t * (1.0 - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn indefinite_is_an_error() {
        let pat = SpdPattern::new(2, vec![(0, 0), (1, 0), (1, 1)]).unwrap();
        assert!(pat.factor(&[1.0, 2.0, 1.0]).is_err());
    }
}
