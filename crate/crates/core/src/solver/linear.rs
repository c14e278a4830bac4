//! Sparse LU on the free-free tangent, with the symbolic analysis reused
//! across Newton iterations.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::MatMut;

use crate::error::SolverError;

use super::model::Pattern;

pub struct LinearSolver {
    symbolic: Option<SymbolicLu<usize>>,
}

impl LinearSolver {
    pub fn new() -> Self {
        LinearSolver { symbolic: None }
    }

    /// Solves `K x = rhs` in place.
    pub fn solve(&mut self, pattern: &Pattern, values: &[f64], rhs: &mut [f64]) -> Result<(), SolverError> {
        if pattern.n == 0 {
            return Ok(());
        }
        let sym = SymbolicSparseColMatRef::new_checked(pattern.n, pattern.n, &pattern.col_ptr, None, &pattern.row_idx);
        if self.symbolic.is_none() {
            let s = SymbolicLu::try_new(sym).map_err(|e| SolverError::Singular(format!("{e:?}")))?;
            self.symbolic = Some(s);
        }
        let symbolic = self.symbolic.clone().expect("analysed above");
        let mat = SparseColMatRef::new(sym, values);
        // an exactly zero pivot makes faer panic rather than return an error
        let lu = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| Lu::try_new_with_symbolic(symbolic, mat)))
            .map_err(|_| SolverError::Singular("zero pivot".into()))?
            .map_err(|e| SolverError::Singular(format!("{e:?}")))?;
        let n = rhs.len();
        lu.solve_in_place(MatMut::from_column_major_slice_mut(rhs, n, 1));
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Singular("non-finite solution".into()));
        }
        Ok(())
    }
}

impl Default for LinearSolver {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_nonsymmetric_system() {
        // [[4, 1, 0], [2, 5, 1], [0, 3, 6]] in column-major sparse form
        let pattern = Pattern {
            n: 3,
            col_ptr: vec![0, 2, 5, 7],
            row_idx: vec![0, 1, 0, 1, 2, 1, 2],
        };
        let values = [4.0, 2.0, 1.0, 5.0, 3.0, 1.0, 6.0];
        let x = [1.0, -2.0, 0.5];
        let mut b = vec![4.0 * x[0] + x[1], 2.0 * x[0] + 5.0 * x[1] + x[2], 3.0 * x[1] + 6.0 * x[2]];
        let mut solver = LinearSolver::new();
        solver.solve(&pattern, &values, &mut b).unwrap();
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let pattern = Pattern {
            n: 2,
            col_ptr: vec![0, 1, 2],
            row_idx: vec![0, 1],
        };
        let mut b = vec![1.0, 1.0];
        assert!(LinearSolver::new().solve(&pattern, &[0.0, 0.0], &mut b).is_err());
    }
}
