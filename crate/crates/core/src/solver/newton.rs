//! Full-step Newton–Raphson at a fixed load factor.

use crate::error::SolverError;

use super::linear::LinearSolver;
use super::model::{Model, Pattern};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    /// scaled max-norm of the free residual at exit
    pub residual: f64,
    /// scaled max-norm before each iteration, then at exit
    pub history: Vec<f64>,
}

/// Applies the prescribed values for `lambda` in one shot and iterates to
/// convergence. On error `state` holds the last iterate.
pub fn newton_solve(
    model: &Model,
    pattern: &Pattern,
    linear: &mut LinearSolver,
    state: &mut [f64],
    lambda: f64,
) -> Result<NewtonReport, SolverError> {
    let controls = &model.program.controls;
    model.apply_constraints(state, lambda);
    let mut history = Vec::new();
    let mut first_l2 = None;
    for iteration in 0.. {
        let (r, values) = model.system(pattern, state, lambda)?;
        let mut rhs = model.free_part(&r);
        if rhs.iter().any(|v| !v.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite);
        }
        let scaled = model.scaled_max_norm(&r);
        let l2 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l2_0 = *first_l2.get_or_insert(l2);
        history.push(scaled);
        if scaled < controls.tol_abs || (iteration > 0 && l2 <= controls.tol_rel * l2_0) {
            return Ok(NewtonReport {
                iterations: iteration,
                residual: scaled,
                history,
            });
        }
        if iteration == controls.max_iter {
            return Err(SolverError::NoConvergence {
                iterations: iteration,
                residual: scaled,
            });
        }
        for v in rhs.iter_mut() {
            *v = -*v;
        }
        let mut values = values;
        shift_empty_rows(model, pattern, &mut values);
        linear.solve(pattern, &values, &mut rhs)?;
        for (&g, du) in model.dofs.free.iter().zip(&rhs) {
            state[g] += du;
        }
    }
    unreachable!("loop returns")
}

/// Relative size, within one field, below which a diagonal counts as empty.
const EMPTY_ROW: f64 = 1e-14;

/// Gives tangent rows with a vanishing diagonal a small positive pivot.
///
/// The third medium conducts nothing at `J = 1`, so temperatures inside an
/// undeformed medium have all-zero rows until the first displacement update
/// compresses it. Their residual rows are zero as well, so the shift leaves
/// those unknowns unchanged for the iteration and does not touch the
/// converged solution.
fn shift_empty_rows(model: &Model, pattern: &Pattern, values: &mut [f64]) {
    // 0 for displacements, 1 for temperature, 2 for auxiliary fields
    let field = |g: usize| {
        let local = g % model.dofs.stride;
        match local.cmp(&model.dofs.dim) {
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => 1,
            std::cmp::Ordering::Greater => 2,
        }
    };
    let diag: Vec<usize> = (0..pattern.n).map(|i| pattern.position(i, i)).collect();
    let mut largest = [0.0f64; 2];
    for (i, &g) in model.dofs.free.iter().enumerate() {
        if field(g) < 2 {
            largest[field(g)] = largest[field(g)].max(values[diag[i]].abs());
        }
    }
    for (i, &g) in model.dofs.free.iter().enumerate() {
        let f = field(g);
        if f < 2 && values[diag[i]].abs() <= EMPTY_ROW * largest[f] {
            values[diag[i]] += EMPTY_ROW * largest[f];
        }
    }
}
