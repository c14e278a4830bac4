//! Adaptive load-factor controller.

use std::time::Duration;

use crate::error::SolverError;

use super::program::StepControls;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub lambda: f64,
    pub dlambda: f64,
    pub iterations: usize,
    pub residual: f64,
    /// NaN when no gap probe is configured
    pub gap: f64,
}

impl StepRecord {
    pub fn log_line(&self) -> String {
        format!(
            "step {} lambda {} dlambda {} iters {} resid {:e} gap {:e}",
            self.step, self.lambda, self.dlambda, self.iterations, self.residual, self.gap
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveHistory {
    pub records: Vec<StepRecord>,
    pub failed_attempts: usize,
    pub wall_time: Duration,
}

impl SolveHistory {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    pub fn total_iterations(&self) -> usize {
        self.records.iter().map(|r| r.iterations).sum()
    }
}

/// Within this distance a target snaps onto a stop or onto 1.
const SNAP: f64 = 1e-12;

/// The solve that the controller drives.
pub trait Stepper {
    /// Solves from the last accepted level to `to` and returns
    /// `(iterations, residual)`. Must leave the accepted solution untouched
    /// on failure.
    fn attempt(&mut self, from: f64, to: f64) -> Result<(usize, f64), SolverError>;

    /// Commits the last successful attempt.
    fn accept(&mut self, step: usize, lambda: f64, dlambda: f64, iterations: usize, residual: f64);

    fn failed(&mut self) {}
}

/// Advances λ from 0 to 1. Retryable failures halve the increment; the run
/// aborts once it drops below `dlambda_min`.
pub fn drive(controls: &StepControls, stepper: &mut impl Stepper) -> Result<(), SolverError> {
    let mut stops: Vec<f64> = controls.stops.clone();
    stops.sort_by(f64::total_cmp);
    let mut lambda = 0.0;
    let mut dl = controls.dlambda0;
    let mut step = 0;
    while lambda < 1.0 {
        let mut target = (lambda + dl).min(1.0);
        if 1.0 - target < SNAP {
            target = 1.0;
        }
        if let Some(&s) = stops.iter().find(|&&s| s > lambda + SNAP && s < target + SNAP) {
            target = s;
        }
        match stepper.attempt(lambda, target) {
            Ok((iterations, residual)) => {
                step += 1;
                stepper.accept(step, target, target - lambda, iterations, residual);
                lambda = target;
                if iterations <= controls.fast_iter {
                    dl = (dl * controls.growth).min(controls.dlambda_max);
                }
            }
            Err(e) if e.is_retryable() => {
                stepper.failed();
                dl = 0.5 * (target - lambda).min(dl);
                if dl < controls.dlambda_min {
                    return Err(SolverError::Aborted { last_lambda: lambda });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Stub<F> {
        fail_at: F,
        tried: Vec<(f64, f64)>,
        accepted: Vec<(f64, f64)>,
    }

    impl<F: FnMut(f64) -> bool> Stepper for Stub<F> {
        fn attempt(&mut self, from: f64, to: f64) -> Result<(usize, f64), SolverError> {
            self.tried.push((from, to));
            if (self.fail_at)(to) {
                Err(SolverError::NoConvergence {
                    iterations: 25,
                    residual: 1.0,
                })
            } else {
                Ok((3, 0.0))
            }
        }

        fn accept(&mut self, _: usize, lambda: f64, dlambda: f64, _: usize, _: f64) {
            self.accepted.push((lambda, dlambda));
        }
    }

    type Trace = Vec<(f64, f64)>;

    fn run(controls: &StepControls, fail_at: impl FnMut(f64) -> bool) -> (Result<(), SolverError>, Trace, Trace) {
        let mut stub = Stub {
            fail_at,
            tried: Vec::new(),
            accepted: Vec::new(),
        };
        let res = drive(controls, &mut stub);
        (res, stub.tried, stub.accepted)
    }

    #[test]
    fn lambda_increases_strictly_and_ends_at_one() {
        let (res, _, acc) = run(&StepControls::default(), |_| false);
        res.unwrap();
        assert!(acc.windows(2).all(|w| w[1].0 > w[0].0));
        assert_eq!(acc.last().unwrap().0, 1.0);
        // 0.1, ×1.5 growth capped at 0.25
        assert!((acc[0].1 - 0.1).abs() < 1e-15);
        assert!((acc[1].1 - 0.15).abs() < 1e-15);
    }

    #[test]
    fn single_failure_halves_once_then_resumes() {
        let mut failed = false;
        let (res, tried, acc) = run(&StepControls::default(), |to| {
            if !failed && (to - 0.25).abs() < 1e-12 {
                failed = true;
                return true;
            }
            false
        });
        res.unwrap();
        let i = tried.iter().position(|t| (t.1 - 0.25).abs() < 1e-12).unwrap();
        let (from, to) = tried[i + 1];
        assert!((from - 0.1).abs() < 1e-15);
        assert!(((to - from) - 0.075).abs() < 1e-15);
        assert_eq!(acc.last().unwrap().0, 1.0);
    }

    #[test]
    fn stops_are_hit_exactly() {
        let controls = StepControls {
            stops: vec![0.5, 0.333],
            ..Default::default()
        };
        let (res, _, acc) = run(&controls, |_| false);
        res.unwrap();
        assert!(acc.iter().any(|a| a.0 == 0.5));
        assert!(acc.iter().any(|a| a.0 == 0.333));
    }

    #[test]
    fn persistent_failure_aborts_with_last_good_lambda() {
        let (res, _, _) = run(&StepControls::default(), |to| to > 0.3);
        match res {
            Err(SolverError::Aborted { last_lambda }) => assert!(last_lambda <= 0.3 && last_lambda > 0.25),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tiny_load_completes_in_one_step() {
        let controls = StepControls {
            dlambda0: 1.0,
            dlambda_max: 1.0,
            ..Default::default()
        };
        let (res, _, acc) = run(&controls, |_| false);
        res.unwrap();
        assert_eq!(acc.len(), 1);
    }
}
