//! Run configuration: a TOML document naming the problem, materials per
//! region, the load program, solver switches and outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::TangentMode;
use crate::material::{ConductivityLaw, MediumParams, SolidParams};
use crate::postprocess::ProfileField;
use crate::mesh::{generate_preset_mesh, load_mesh, Mesh, Preset, PresetParams, RegionRole};
use crate::solver::{GapProbe, LoadProgram, Model, ModelOptions, RegionMaterial};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("--set {0}: {1}")]
    Override(String, String),
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub preset: Option<Preset>,
    #[serde(default)]
    pub params: PresetParams,
    /// mesh file in the text format; exclusive with `preset`
    pub mesh: Option<PathBuf>,
}

/// Third-medium parameters as written in a config; `k_cap` defaults to
/// the smallest conductivity among solids sharing nodes with the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumConfig {
    pub gamma: f64,
    #[serde(default)]
    pub alpha: f64,
    pub k_gas: f64,
    pub k_cap: Option<f64>,
    #[serde(default = "one")]
    pub beta1: f64,
    pub beta2: f64,
    #[serde(default)]
    pub theta0: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Solid(SolidParams),
    ThirdMedium(MediumConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub threads: usize,
    pub conductivity_law: ConductivityLaw,
    pub tangent: TangentMode,
    pub domain_scale: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            threads: 1,
            conductivity_law: ConductivityLaw::Squared,
            tangent: TangentMode::Analytic,
            domain_scale: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VtkMode {
    None,
    #[default]
    Final,
    EveryStep,
}

/// Field samples along a straight line of material points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub name: String,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub samples: usize,
    pub field: ProfileField,
    /// load levels to sample at; each becomes a stepping stop
    pub at: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub history: bool,
    pub vtk: VtkMode,
    /// leave third-medium cells out of VTK files
    pub omit_medium: bool,
    pub profiles: Vec<ProfileConfig>,
    /// node sets whose net heat reaction goes into the summary
    pub heat_flow: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            history: true,
            vtk: VtkMode::Final,
            omit_medium: false,
            profiles: Vec::new(),
            heat_flow: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub materials: BTreeMap<String, MaterialConfig>,
    #[serde(default)]
    pub load: LoadProgram,
    pub gap: Option<GapProbe>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

pub fn bundled_config(preset: Preset) -> &'static str {
    match preset {
        Preset::Block2d => include_str!("../configs/block2d.toml"),
        Preset::TwoBlocks2d => include_str!("../configs/two_blocks2d.toml"),
        Preset::WavyInterface2d => include_str!("../configs/wavy_interface2d.toml"),
        Preset::BlockPlate3d => include_str!("../configs/block_plate3d.toml"),
    }
}

/// Sets `path` (dot-separated keys, numeric segments index arrays) to
/// `raw`, parsed as a TOML value when possible and as a string otherwise.
pub fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<(), ConfigError> {
    let fail = |m: &str| ConfigError::Override(assignment.to_string(), m.to_string());
    let (path, raw) = assignment.split_once('=').ok_or_else(|| fail("expected key=value"))?;
    let value = parse_scalar(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(fail("empty key segment"));
    }
    let mut node = doc;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(key.to_string(), value);
                    return Ok(());
                }
                t.entry(key.to_string())
                    .or_insert_with(|| toml::Value::Table(Default::default()))
            }
            toml::Value::Array(a) => {
                let idx: usize = key.parse().map_err(|_| fail("array segment must be an index"))?;
                let len = a.len();
                let slot = a
                    .get_mut(idx)
                    .ok_or_else(|| fail(&format!("index {idx} out of range (length {len})")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(fail(&format!("'{key}' is not inside a table or array"))),
        };
    }
    unreachable!("loop returns on the last key")
}

fn parse_scalar(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut doc: toml::Value = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for o in overrides {
        apply_override(&mut doc, o)?;
    }
    let cfg: RunConfig = doc.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
    cfg.check()?;
    Ok(cfg)
}

pub fn read_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
    let mut cfg = parse_config(&text, overrides)?;
    // mesh paths are relative to the config file
    if let (Some(mesh), Some(dir)) = (cfg.problem.mesh.as_mut(), path.parent()) {
        if mesh.is_relative() {
            *mesh = dir.join(&*mesh);
        }
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn preset(preset: Preset, overrides: &[String]) -> Result<RunConfig, ConfigError> {
        parse_config(bundled_config(preset), overrides)
    }

    fn check(&self) -> Result<(), ConfigError> {
        match (&self.problem.preset, &self.problem.mesh) {
            (Some(_), Some(_)) => return Err(invalid("problem", "give either preset or mesh, not both")),
            (None, None) => return Err(invalid("problem", "one of preset or mesh is required")),
            _ => {}
        }
        if self.solver.threads == 0 {
            return Err(invalid("solver.threads", "must be at least 1"));
        }
        for (i, p) in self.output.profiles.iter().enumerate() {
            if p.samples < 2 {
                return Err(invalid(&format!("output.profiles.{i}.samples"), "need at least 2 samples"));
            }
            if let Some(l) = p.at.iter().find(|l| !(**l > 0.0 && **l <= 1.0)) {
                return Err(invalid(&format!("output.profiles.{i}.at"), format!("load level {l} outside (0, 1]")));
            }
        }
        Ok(())
    }

    pub fn build_mesh(&self) -> Result<Mesh, ConfigError> {
        if let Some(preset) = self.problem.preset {
            return generate_preset_mesh(preset, &self.problem.params).map_err(|e| invalid("problem.params", e.to_string()));
        }
        let path = self.problem.mesh.as_ref().expect("checked");
        let file = std::fs::File::open(path).map_err(|e| ConfigError::Io(path.clone(), e))?;
        load_mesh(std::io::BufReader::new(file)).map_err(|e| invalid("problem.mesh", format!("{}: {e}", path.display())))
    }

    /// Materials keyed by region, with the medium's conductivity cap filled
    /// in from the neighbouring solids where the config leaves it open.
    pub fn resolve_materials(&self, mesh: &Mesh) -> Result<BTreeMap<String, RegionMaterial>, ConfigError> {
        let mut out = BTreeMap::new();
        for (name, m) in &self.materials {
            let key = format!("materials.{name}");
            let region = mesh
                .region_index(name)
                .ok_or_else(|| invalid(&key, "no region of that name in the mesh"))?;
            let resolved = match m {
                MaterialConfig::Solid(p) => {
                    if mesh.regions[region].role != RegionRole::Solid {
                        return Err(invalid(&key, "region is not a solid"));
                    }
                    p.validate().map_err(|e| invalid(&key, e))?;
                    RegionMaterial::Solid(*p)
                }
                MaterialConfig::ThirdMedium(c) => {
                    if mesh.regions[region].role != RegionRole::ThirdMedium {
                        return Err(invalid(&key, "region is not a third medium"));
                    }
                    let k_cap = match c.k_cap {
                        Some(k) => k,
                        None => self.neighbour_conductivity(mesh, region).ok_or_else(|| {
                            invalid(&key, "k_cap not given and no solid shares nodes with this medium")
                        })?,
                    };
                    let p = MediumParams {
                        gamma: c.gamma,
                        alpha: c.alpha,
                        k_gas: c.k_gas,
                        k_cap,
                        beta1: c.beta1,
                        beta2: c.beta2,
                        theta0: c.theta0,
                    };
                    p.validate().map_err(|e| invalid(&key, e))?;
                    RegionMaterial::ThirdMedium(p)
                }
            };
            out.insert(name.clone(), resolved);
        }
        if let Some(r) = mesh.regions.iter().find(|r| !out.contains_key(&r.name)) {
            return Err(invalid("materials", format!("no material for region '{}'", r.name)));
        }
        Ok(out)
    }

    fn neighbour_conductivity(&self, mesh: &Mesh, medium: usize) -> Option<f64> {
        let mut touches = vec![false; mesh.nodes.len()];
        for e in mesh.elements.iter().filter(|e| e.region == medium) {
            for &n in &e.nodes {
                touches[n] = true;
            }
        }
        let mut k: Option<f64> = None;
        for e in &mesh.elements {
            if e.region == medium || !e.nodes.iter().any(|&n| touches[n]) {
                continue;
            }
            if let Some(MaterialConfig::Solid(p)) = self.materials.get(&mesh.regions[e.region].name) {
                k = Some(k.map_or(p.conductivity, |v| v.min(p.conductivity)));
            }
        }
        k
    }

    /// The load program with every profile level added as a stop.
    pub fn program(&self) -> LoadProgram {
        let mut program = self.load.clone();
        for p in &self.output.profiles {
            program.controls.stops.extend(p.at.iter().copied());
        }
        program.controls.stops.sort_by(f64::total_cmp);
        program.controls.stops.dedup();
        program
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions {
            law: self.solver.conductivity_law,
            tangent: self.solver.tangent,
            threads: self.solver.threads,
            domain_scale: self.solver.domain_scale,
        }
    }

    pub fn build_model(&self) -> Result<Model, ConfigError> {
        let mesh = self.build_mesh()?;
        let materials = self.resolve_materials(&mesh)?;
        for (i, item) in self.load.dirichlet.iter().enumerate() {
            if mesh.node_set(&item.set).is_none() {
                return Err(invalid(&format!("load.dirichlet.{i}.set"), format!("unknown node set '{}'", item.set)));
            }
        }
        if let Some(g) = &self.gap {
            for s in [&g.lower, &g.upper] {
                if mesh.node_set(s).is_none() {
                    return Err(invalid("gap", format!("unknown node set '{s}'")));
                }
            }
        }
        for s in &self.output.heat_flow {
            if mesh.node_set(s).is_none() {
                return Err(invalid("output.heat_flow", format!("unknown node set '{s}'")));
            }
        }
        Model::new(mesh, &materials, self.program(), self.model_options()).map_err(|e| invalid("load", e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse_and_resolve() {
        for preset in Preset::ALL {
            let cfg = RunConfig::preset(preset, &[]).unwrap();
            let mesh = cfg.build_mesh().unwrap();
            cfg.resolve_materials(&mesh).unwrap();
        }
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = RunConfig::preset(
            Preset::BlockPlate3d,
            &["problem.params.medium_layers=1".into(), "load.dirichlet.0.value=0.0".into()],
        )
        .unwrap();
        assert_eq!(cfg.problem.params.medium_layers, Some(1));
        assert!(RunConfig::preset(Preset::Block2d, &["solver.bogus=1".into()]).is_err());
        assert!(RunConfig::preset(Preset::Block2d, &["load.dirichlet.99.value=1".into()]).is_err());
        assert!(RunConfig::preset(Preset::Block2d, &["novalue".into()]).is_err());
    }

    #[test]
    fn conductivity_cap_defaults_to_smallest_neighbour() {
        let mut cfg = RunConfig::preset(Preset::TwoBlocks2d, &["problem.params.nx=4".into()]).unwrap();
        if let Some(MaterialConfig::Solid(p)) = cfg.materials.get_mut("upper") {
            p.conductivity = 3.0;
        }
        let mesh = cfg.build_mesh().unwrap();
        match cfg.resolve_materials(&mesh).unwrap()["medium"] {
            RegionMaterial::ThirdMedium(p) => assert_eq!(p.k_cap, 3.0),
            _ => panic!("medium expected"),
        }
    }
}
