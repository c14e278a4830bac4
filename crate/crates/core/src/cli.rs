//! Config-driven runs and their artifacts: summary, history, profiles,
//! VTK files and a state snapshot for later export.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig, VtkMode};
use crate::postprocess::{derive_fields, export_history, export_vtk, extract_profile, write_profile, VtkOptions};
use crate::error::SolverError;
use crate::solver::{run_load_program, Component, FieldState, Model, SolveHistory, StepRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_PROPERTY: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}: {1}")]
    Io(PathBuf, io::Error),
    #[error("{0}")]
    Snapshot(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        EXIT_VALIDATION
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(path.to_path_buf(), e)
}

/// Ordered `key = value` record; floats use the shortest round-trip form
/// so identical runs give identical files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Summary {
        Summary {
            entries: text
                .lines()
                .filter_map(|l| l.split_once(" = "))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .collect(),
        }
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Converged state together with the config that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub config: RunConfig,
    pub state: FieldState,
}

pub struct RunOutcome {
    pub summary: Summary,
    pub state: FieldState,
    pub history: SolveHistory,
    /// set when load stepping stopped before λ = 1
    pub error: Option<SolverError>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            EXIT_ABORT
        } else {
            EXIT_OK
        }
    }
}

fn is_level(lambda: f64, level: f64) -> bool {
    (lambda - level).abs() <= 1e-12
}

/// Net heat reaction on each configured node set, keyed by set name.
fn heat_flows(model: &Model, cfg: &RunConfig, state: &FieldState) -> Result<Vec<(String, f64)>, SolverError> {
    if cfg.output.heat_flow.is_empty() {
        return Ok(Vec::new());
    }
    let r = model.residual(&state.values, state.lambda)?;
    cfg.output
        .heat_flow
        .iter()
        .map(|s| model.reaction(&r, s, Component::Theta).map(|q| (s.clone(), q)))
        .collect()
}

struct Recorder<'a> {
    model: &'a Model,
    cfg: &'a RunConfig,
    dir: &'a Path,
    /// `(λ, set, heat flow)` at stops and at the end
    flows: Vec<(f64, String, f64)>,
    error: Option<CliError>,
    solver_error: Option<SolverError>,
}

impl Recorder<'_> {
    fn observe(&mut self, record: &StepRecord, state: &FieldState) {
        eprintln!("{}", record.log_line());
        if let Err(e) = self.artifacts(record, state) {
            self.error.get_or_insert(e);
        }
    }

    fn artifacts(&mut self, record: &StepRecord, state: &FieldState) -> Result<(), CliError> {
        let lambda = record.lambda;
        for p in &self.cfg.output.profiles {
            if p.at.iter().any(|&l| is_level(lambda, l)) {
                let samples = extract_profile(self.model, &state.values, p.start, p.end, p.samples, p.field);
                let path = self.dir.join(format!("profile_{}_{}.csv", p.name, lambda));
                let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
                write_profile(&samples, p.field, &mut w)
                    .and_then(|_| w.flush())
                    .map_err(io_err(&path))?;
            }
        }
        let at_stop = self.model.program.controls.stops.iter().any(|&l| is_level(lambda, l)) || is_level(lambda, 1.0);
        if at_stop {
            match heat_flows(self.model, self.cfg, state) {
                Ok(f) => self.flows.extend(f.into_iter().map(|(s, q)| (lambda, s, q))),
                Err(e) => {
                    self.solver_error.get_or_insert(e);
                }
            }
        }
        if self.cfg.output.vtk == VtkMode::EveryStep {
            let path = self.dir.join(format!("step_{:04}.vtk", record.step));
            write_vtk(self.model, self.cfg, &state.values, &path)?;
        }
        Ok(())
    }
}

fn write_vtk(model: &Model, cfg: &RunConfig, values: &[f64], path: &Path) -> Result<(), CliError> {
    let derived = derive_fields(model, values).map_err(|e| CliError::Snapshot(e.to_string()))?;
    let options = VtkOptions {
        omit_medium: cfg.output.omit_medium,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    export_vtk(model, values, &derived, options, &mut w)
        .and_then(|_| w.flush())
        .map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn problem_label(cfg: &RunConfig) -> String {
    match (&cfg.problem.preset, &cfg.problem.mesh) {
        (Some(p), _) => p.name().to_string(),
        (None, Some(m)) => m.display().to_string(),
        (None, None) => String::from("unknown"),
    }
}

/// Runs a validated config and writes every requested artifact into
/// `dir` (the config's output directory when `None`). Validation failures
/// return before anything is written.
pub fn run(cfg: &RunConfig, dir: Option<&Path>) -> Result<RunOutcome, CliError> {
    let model = cfg.build_model()?;
    let dir = dir.unwrap_or(&cfg.output.directory);
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut recorder = Recorder {
        model: &model,
        cfg,
        dir,
        flows: Vec::new(),
        error: None,
        solver_error: None,
    };
    let result = run_load_program(&model, cfg.gap.as_ref(), |r, s| recorder.observe(r, s));
    let Recorder {
        flows,
        error,
        solver_error,
        ..
    } = recorder;
    if let Some(e) = error {
        return Err(e);
    }
    let (state, history, mut failure) = match result {
        Ok((s, h)) => (s, h, None),
        Err(f) => (f.state, f.history, Some(f.error)),
    };
    if failure.is_none() {
        failure = solver_error;
    }

    let mut summary = Summary::default();
    summary.push("status", if failure.is_some() { "aborted" } else { "converged" });
    summary.push("problem", problem_label(cfg));
    summary.push("dim", model.mesh.dim);
    summary.push("elements", model.mesh.elements.len());
    summary.push("nodes", model.mesh.nodes.len());
    summary.push("carrier_nodes", model.dofs.carrier_node_count());
    summary.push("dofs", model.dofs.free_count());
    summary.push("final_lambda", state.lambda);
    summary.push("steps", history.steps());
    summary.push("iterations", history.total_iterations());
    summary.push("failed_attempts", history.failed_attempts);
    if let Some(last) = history.records.last() {
        summary.push("final_residual", format!("{:e}", last.residual));
        if cfg.gap.is_some() {
            summary.push("final_gap", format!("{:e}", last.gap));
        }
    }
    for (lambda, set, q) in &flows {
        summary.push(format!("heat_flow_{set}_at_{lambda}"), format!("{q:e}"));
    }
    if let Some(e) = &failure {
        summary.push("error", e);
    }

    write_text(&dir.join("summary.txt"), &summary.to_string())?;
    write_text(
        &dir.join("timing.txt"),
        &format!("wall_time_s = {}\n", history.wall_time.as_secs_f64()),
    )?;
    if cfg.output.history {
        let path = dir.join("history.csv");
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        export_history(&history, &mut w)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
    }
    if cfg.output.vtk == VtkMode::Final && !history.records.is_empty() {
        write_vtk(&model, cfg, &state.values, &dir.join("final.vtk"))?;
    }
    let snapshot = Snapshot {
        config: cfg.clone(),
        state: state.clone(),
    };
    let path = dir.join("state.json");
    let text = serde_json::to_string(&snapshot).map_err(|e| CliError::Snapshot(e.to_string()))?;
    write_text(&path, &text)?;

    Ok(RunOutcome {
        summary,
        state,
        history,
        error: failure,
    })
}

/// Rebuilds the model of a snapshot and writes its state as VTK.
pub fn export(snapshot: &Path, vtk: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(snapshot).map_err(io_err(snapshot))?;
    let snap: Snapshot =
        serde_json::from_str(&text).map_err(|e| CliError::Snapshot(format!("{}: {e}", snapshot.display())))?;
    let model = snap.config.build_model()?;
    if snap.state.values.len() != model.dofs.total() {
        return Err(CliError::Snapshot(format!(
            "state has {} values, model expects {}",
            snap.state.values.len(),
            model.dofs.total()
        )));
    }
    write_vtk(&model, &snap.config, &snap.state.values, vtk)
}
