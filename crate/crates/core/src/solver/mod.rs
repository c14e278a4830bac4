//! Global DOF management, assembly, Newton iterations and load stepping.

mod dofmap;
mod gap;
mod linear;
mod model;
mod newton;
mod program;
mod stepping;

use std::time::Instant;

pub use dofmap::{build_dof_map, DofMap, Prescribed};
pub use gap::{deformed_position, measure_gap};
pub use linear::LinearSolver;
pub use model::{Model, ModelOptions, Pattern, RegionMaterial, ResidualScales};
pub use newton::{newton_solve, NewtonReport};
pub use program::{Component, DirichletItem, LoadProgram, NeumannItem, Ramp, StepControls, VolumeLoad};
pub use stepping::{drive, SolveHistory, StepRecord, Stepper};

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub lambda: f64,
}

/// Node sets and direction used to track the gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapProbe {
    pub lower: String,
    pub upper: String,
    pub axis: usize,
}

impl GapProbe {
    pub fn measure(&self, model: &Model, state: &[f64]) -> Result<f64, SolverError> {
        measure_gap(&model.mesh, &model.dofs, state, &self.lower, &self.upper, self.axis)
    }
}

/// A failed run keeps the last converged state and the history so far.
#[derive(Debug)]
pub struct RunFailure {
    pub error: SolverError,
    pub state: FieldState,
    pub history: SolveHistory,
}

struct ModelStepper<'a, O> {
    model: &'a Model,
    probe: Option<&'a GapProbe>,
    pattern: Pattern,
    linear: LinearSolver,
    state: FieldState,
    trial: Vec<f64>,
    history: SolveHistory,
    probe_error: Option<SolverError>,
    observer: O,
}

impl<O: FnMut(&StepRecord, &FieldState)> Stepper for ModelStepper<'_, O> {
    fn attempt(&mut self, _from: f64, to: f64) -> Result<(usize, f64), SolverError> {
        self.trial.copy_from_slice(&self.state.values);
        let report = newton_solve(self.model, &self.pattern, &mut self.linear, &mut self.trial, to)?;
        Ok((report.iterations, report.residual))
    }

    fn accept(&mut self, step: usize, lambda: f64, dlambda: f64, iterations: usize, residual: f64) {
        self.state.values.copy_from_slice(&self.trial);
        self.state.lambda = lambda;
        let gap = match self.probe.map(|p| p.measure(self.model, &self.state.values)) {
            Some(Ok(g)) => g,
            Some(Err(e)) => {
                self.probe_error.get_or_insert(e);
                f64::NAN
            }
            None => f64::NAN,
        };
        let record = StepRecord {
            step,
            lambda,
            dlambda,
            iterations,
            residual,
            gap,
        };
        self.history.records.push(record);
        (self.observer)(&record, &self.state);
    }

    fn failed(&mut self) {
        self.history.failed_attempts += 1;
    }
}

/// Runs the model's load program from λ = 0 to 1. `observer` sees each
/// converged step with its state.
pub fn run_load_program(
    model: &Model,
    probe: Option<&GapProbe>,
    observer: impl FnMut(&StepRecord, &FieldState),
) -> Result<(FieldState, SolveHistory), Box<RunFailure>> {
    let start = Instant::now();
    let values = model.initial_state();
    let mut stepper = ModelStepper {
        model,
        probe,
        pattern: model.pattern(),
        linear: LinearSolver::new(),
        trial: values.clone(),
        state: FieldState { values, lambda: 0.0 },
        history: SolveHistory::default(),
        probe_error: None,
        observer,
    };
    let result = drive(&model.program.controls, &mut stepper);
    let ModelStepper {
        state,
        mut history,
        probe_error,
        ..
    } = stepper;
    history.wall_time = start.elapsed();
    match result.and_then(|_| probe_error.map_or(Ok(()), Err)) {
        Ok(()) => Ok((state, history)),
        Err(error) => Err(Box::new(RunFailure { error, state, history })),
    }
}
