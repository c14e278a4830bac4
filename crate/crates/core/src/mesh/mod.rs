//! Meshes with region and node-set tagging.

mod io;
mod presets;

pub use io::{load_mesh, write_mesh};
pub use presets::{generate_preset_mesh, Preset, PresetParams};

use serde::{Deserialize, Serialize};

use crate::element::{quadrature, shape_eval};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    /// 3-node triangle
    T1,
    /// 4-node quadrilateral
    Q1,
    /// 8-node hexahedron
    H1,
}

impl ElementKind {
    pub fn nodes(self) -> usize {
        match self {
            ElementKind::T1 => 3,
            ElementKind::Q1 => 4,
            ElementKind::H1 => 8,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            ElementKind::T1 | ElementKind::Q1 => 2,
            ElementKind::H1 => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::T1 => "T1",
            ElementKind::Q1 => "Q1",
            ElementKind::H1 => "H1",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "T1" => Some(ElementKind::T1),
            "Q1" => Some(ElementKind::Q1),
            "H1" => Some(ElementKind::H1),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionRole {
    Solid,
    ThirdMedium,
}

impl RegionRole {
    pub fn name(self) -> &'static str {
        match self {
            RegionRole::Solid => "solid",
            RegionRole::ThirdMedium => "third_medium",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub name: String,
    pub role: RegionRole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub id: usize,
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
    /// index into `Mesh::regions`
    pub region: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub name: String,
    pub nodes: Vec<usize>,
}

/// A symmetry plane `X[axis] = coordinate` of a partial model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorPlane {
    pub axis: usize,
    pub coordinate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    /// reference coordinates, third entry zero in 2D
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<Element>,
    pub regions: Vec<Region>,
    pub node_sets: Vec<NodeSet>,
    pub mirrors: Vec<MirrorPlane>,
}

impl Mesh {
    pub fn node_set(&self, name: &str) -> Option<&NodeSet> {
        self.node_sets.iter().find(|s| s.name == name)
    }

    pub fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.name == name)
    }

    pub fn has_third_medium(&self) -> bool {
        self.regions.iter().any(|r| r.role == RegionRole::ThirdMedium)
    }

    pub fn role_of(&self, element: &Element) -> RegionRole {
        self.regions[element.region].role
    }

    pub fn element_coordinates(&self, element: &Element) -> Vec<[f64; 3]> {
        element.nodes.iter().map(|&n| self.nodes[n]).collect()
    }

    pub fn count_elements_in(&self, role: RegionRole) -> usize {
        self.elements.iter().filter(|e| self.role_of(e) == role).count()
    }

    /// Checks referential integrity, kinds against `dim`, orphan nodes and
    /// positive reference Jacobians at every quadrature point.
    pub fn validate(&self) -> Result<(), MeshError> {
        if self.dim != 2 && self.dim != 3 {
            return Err(MeshError::Invalid(format!("dimension {} not supported", self.dim)));
        }
        if self.nodes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(MeshError::Invalid("non-finite node coordinate".into()));
        }
        let mut used = vec![false; self.nodes.len()];
        for (i, e) in self.elements.iter().enumerate() {
            if e.id != i {
                return Err(MeshError::Invalid(format!("element ids must be dense, found {} at {}", e.id, i)));
            }
            if e.kind.dim() != self.dim {
                return Err(MeshError::Invalid(format!(
                    "element {} of kind {} in a {}D mesh",
                    e.id,
                    e.kind.name(),
                    self.dim
                )));
            }
            if e.nodes.len() != e.kind.nodes() {
                return Err(MeshError::Invalid(format!("element {} has {} nodes", e.id, e.nodes.len())));
            }
            if e.region >= self.regions.len() {
                return Err(MeshError::Invalid(format!("element {} has undeclared region", e.id)));
            }
            for &n in &e.nodes {
                if n >= self.nodes.len() {
                    return Err(MeshError::Invalid(format!("element {} references undefined node {}", e.id, n)));
                }
                used[n] = true;
            }
            self.check_jacobian(e)?;
        }
        if let Some(n) = used.iter().position(|u| !u) {
            return Err(MeshError::Invalid(format!("orphan node {n}")));
        }
        for s in &self.node_sets {
            if let Some(&n) = s.nodes.iter().find(|&&n| n >= self.nodes.len()) {
                return Err(MeshError::Invalid(format!("node set '{}' references undefined node {}", s.name, n)));
            }
        }
        for m in &self.mirrors {
            if m.axis >= self.dim || !m.coordinate.is_finite() {
                return Err(MeshError::Invalid(format!("bad mirror plane {m:?}")));
            }
        }
        Ok(())
    }

    pub(crate) fn check_jacobian(&self, e: &Element) -> Result<(), MeshError> {
        let x = self.element_coordinates(e);
        for q in quadrature(e.kind) {
            let det_j = shape_eval(e.kind, &q.xi, &x).map(|s| s.det_j).unwrap_or(0.0);
            if !(det_j > 0.0) {
                return Err(MeshError::NegativeJacobian { element: e.id, det_j });
            }
        }
        Ok(())
    }
}

/// Largest bounding-box side of the reference configuration. Mirror planes
/// are unfolded first, so a quarter model reports the extent of the full
/// structure.
pub fn domain_extent(mesh: &Mesh) -> Result<f64, MeshError> {
    if mesh.nodes.is_empty() {
        return Err(MeshError::Empty);
    }
    let mut d: f64 = 0.0;
    for axis in 0..mesh.dim {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in &mesh.nodes {
            lo = lo.min(x[axis]);
            hi = hi.max(x[axis]);
        }
        for m in mesh.mirrors.iter().filter(|m| m.axis == axis) {
            let (a, b) = (2.0 * m.coordinate - hi, 2.0 * m.coordinate - lo);
            lo = lo.min(a);
            hi = hi.max(b);
        }
        d = d.max(hi - lo);
    }
    Ok(d)
}
