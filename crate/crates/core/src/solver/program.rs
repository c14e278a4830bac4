//! Boundary conditions, volumetric loads and stepping controls, all
//! scaled by the load factor λ.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Component {
    #[serde(rename = "u_x")]
    Ux,
    #[serde(rename = "u_y")]
    Uy,
    #[serde(rename = "u_z")]
    Uz,
    #[serde(rename = "theta")]
    Theta,
    /// auxiliary fields; parseable so that constraining them is reported
    /// as an error rather than an unknown key
    #[serde(rename = "p_1")]
    P1,
    #[serde(rename = "p_2")]
    P2,
    #[serde(rename = "p_3")]
    P3,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Ux => "u_x",
            Component::Uy => "u_y",
            Component::Uz => "u_z",
            Component::Theta => "theta",
            Component::P1 => "p_1",
            Component::P2 => "p_2",
            Component::P3 => "p_3",
        }
    }
}

/// How a prescribed value follows the load factor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ramp {
    /// `λ · value`
    #[default]
    Linear,
    /// `value` from the first step on
    Constant,
}

impl Ramp {
    pub fn factor(self, lambda: f64) -> f64 {
        match self {
            Ramp::Linear => lambda,
            Ramp::Constant => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletItem {
    pub set: String,
    pub component: Component,
    pub value: f64,
    #[serde(default)]
    pub ramp: Ramp,
}

/// Nodal load applied to every node of a set: a force component or a heat
/// input (`component = "theta"`), positive into the body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannItem {
    pub set: String,
    pub component: Component,
    pub value: f64,
    #[serde(default)]
    pub ramp: Ramp,
}

/// Body force `b̄` and heat source `R̄` on one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolumeLoad {
    pub region: String,
    #[serde(default)]
    pub body_force: [f64; 3],
    #[serde(default)]
    pub heat_source: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControls {
    pub dlambda0: f64,
    pub dlambda_min: f64,
    pub dlambda_max: f64,
    pub growth: f64,
    /// steps converging in at most this many iterations grow the increment
    pub fast_iter: usize,
    pub max_iter: usize,
    /// multiplies the per-field residual scales
    pub tol_abs: f64,
    pub tol_rel: f64,
    /// load levels every run must land on exactly
    pub stops: Vec<f64>,
}

impl Default for StepControls {
    fn default() -> Self {
        StepControls {
            dlambda0: 0.1,
            dlambda_min: 1e-5,
            dlambda_max: 0.25,
            growth: 1.5,
            fast_iter: 6,
            max_iter: 25,
            tol_abs: 1e-8,
            tol_rel: 1e-10,
            stops: Vec::new(),
        }
    }
}

impl StepControls {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dlambda_min > 0.0 && self.dlambda_min <= self.dlambda0 && self.dlambda0 <= self.dlambda_max) {
            return Err(format!(
                "step sizes must satisfy 0 < dlambda_min <= dlambda0 <= dlambda_max (got {}, {}, {})",
                self.dlambda_min, self.dlambda0, self.dlambda_max
            ));
        }
        if !(self.growth >= 1.0) {
            return Err(format!("growth factor must be at least 1, got {}", self.growth));
        }
        if self.max_iter == 0 {
            return Err("max_iter must be positive".into());
        }
        if !(self.tol_abs > 0.0 && self.tol_rel >= 0.0) {
            return Err("tolerances must be positive".into());
        }
        if let Some(s) = self.stops.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(format!("stop {s} outside (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadProgram {
    pub dirichlet: Vec<DirichletItem>,
    pub neumann: Vec<NeumannItem>,
    pub volume: Vec<VolumeLoad>,
    pub controls: StepControls,
}
