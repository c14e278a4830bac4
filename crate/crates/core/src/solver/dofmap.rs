//! Global numbering of nodal unknowns and the free/constrained partition.

use crate::error::SolverError;
use crate::kinematics::proxy_count;
use crate::mesh::{Mesh, RegionRole};

use super::program::{Component, LoadProgram, Ramp};

/// A constrained unknown and the value it follows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prescribed {
    pub dof: usize,
    pub value: f64,
    pub ramp: Ramp,
}

impl Prescribed {
    pub fn at(&self, lambda: f64) -> f64 {
        self.ramp.factor(lambda) * self.value
    }
}

/// Node-major numbering: node `n` owns the unknowns
/// `[stride·n, stride·(n+1))`, ordered `(u_1..u_dim, θ, p_1..p_m)`.
///
/// When the mesh contains a third medium every node carries the auxiliary
/// fields. Nodes with no medium element keep them as dormant unknowns
/// pinned to zero by an identity row.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub dim: usize,
    pub aux: usize,
    pub stride: usize,
    pub nodes: usize,
    /// node is incident to at least one third-medium element
    pub medium_node: Vec<bool>,
    /// global index → position among the free unknowns
    pub free_index: Vec<Option<usize>>,
    pub free: Vec<usize>,
    pub prescribed: Vec<Prescribed>,
}

impl DofMap {
    pub fn total(&self) -> usize {
        self.stride * self.nodes
    }

    /// The DOF count reported for a model: free unknowns after Dirichlet
    /// elimination.
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn u(&self, node: usize, axis: usize) -> usize {
        self.stride * node + axis
    }

    pub fn theta(&self, node: usize) -> usize {
        self.stride * node + self.dim
    }

    pub fn p(&self, node: usize, i: usize) -> usize {
        self.stride * node + self.dim + 1 + i
    }

    /// Nodes counted per field carrier: every node carries `(u, θ)`, and
    /// meshes with a medium add a second carrier for the auxiliary fields.
    pub fn carrier_node_count(&self) -> usize {
        if self.aux > 0 {
            2 * self.nodes
        } else {
            self.nodes
        }
    }

    pub fn component_dof(&self, node: usize, c: Component) -> Result<usize, SolverError> {
        match c {
            Component::Ux => Ok(self.u(node, 0)),
            Component::Uy => Ok(self.u(node, 1)),
            Component::Uz if self.dim == 3 => Ok(self.u(node, 2)),
            Component::Uz => Err(SolverError::Program("component u_z in a 2D model".into())),
            Component::Theta => Ok(self.theta(node)),
            Component::P1 | Component::P2 | Component::P3 => Err(SolverError::Program(format!(
                "auxiliary field {} cannot be loaded or prescribed",
                c.name()
            ))),
        }
    }
}

pub fn build_dof_map(mesh: &Mesh, program: &LoadProgram) -> Result<DofMap, SolverError> {
    let dim = mesh.dim;
    let aux = if mesh.has_third_medium() { proxy_count(dim) } else { 0 };
    let stride = dim + 1 + aux;
    let nodes = mesh.nodes.len();
    let mut medium_node = vec![false; nodes];
    for e in &mesh.elements {
        if mesh.role_of(e) == RegionRole::ThirdMedium {
            for &n in &e.nodes {
                medium_node[n] = true;
            }
        }
    }
    let mut map = DofMap {
        dim,
        aux,
        stride,
        nodes,
        medium_node,
        free_index: vec![None; stride * nodes],
        free: Vec::new(),
        prescribed: Vec::new(),
    };

    let mut constraint: Vec<Option<(f64, Ramp)>> = vec![None; map.total()];
    for item in &program.dirichlet {
        let set = mesh
            .node_set(&item.set)
            .ok_or_else(|| SolverError::Program(format!("unknown node set '{}'", item.set)))?;
        if !item.value.is_finite() {
            return Err(SolverError::Program(format!("non-finite value on set '{}'", item.set)));
        }
        for &n in &set.nodes {
            let dof = map.component_dof(n, item.component)?;
            match constraint[dof] {
                Some((v, r)) if v != item.value || r != item.ramp => {
                    return Err(SolverError::Program(format!(
                        "node {n}: conflicting prescriptions for {} ({v} vs {})",
                        item.component.name(),
                        item.value
                    )))
                }
                _ => constraint[dof] = Some((item.value, item.ramp)),
            }
        }
    }
    for (dof, c) in constraint.iter().enumerate() {
        match c {
            Some((value, ramp)) => map.prescribed.push(Prescribed {
                dof,
                value: *value,
                ramp: *ramp,
            }),
            None => {
                map.free_index[dof] = Some(map.free.len());
                map.free.push(dof);
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_preset_mesh, Preset, PresetParams};
    use crate::solver::program::DirichletItem;

    fn fix(set: &str, component: Component, value: f64) -> DirichletItem {
        DirichletItem {
            set: set.into(),
            component,
            value,
            ramp: Ramp::Linear,
        }
    }

    #[test]
    fn solid_only_mesh_has_three_unknowns_per_node() {
        let text = "dim 2\nnode 0 0 0\nnode 1 1 0\nnode 2 0 1\nregion s solid\nelement 0 T1 s 0 1 2\n";
        let mesh = crate::mesh::load_mesh(text.as_bytes()).unwrap();
        let map = build_dof_map(&mesh, &LoadProgram::default()).unwrap();
        assert_eq!(map.total(), 9);
        assert_eq!(map.free_count(), 9);
    }

    #[test]
    fn auxiliary_fields_cannot_be_prescribed() {
        let mesh = generate_preset_mesh(Preset::Block2d, &PresetParams::default()).unwrap();
        let program = LoadProgram {
            dirichlet: vec![fix("top", Component::P1, 0.0)],
            ..Default::default()
        };
        assert!(matches!(build_dof_map(&mesh, &program), Err(SolverError::Program(_))));
        let program = LoadProgram {
            dirichlet: vec![fix("top", Component::Uz, 0.0)],
            ..Default::default()
        };
        assert!(build_dof_map(&mesh, &program).is_err());
    }

    #[test]
    fn conflicting_prescriptions_are_rejected() {
        let mesh = generate_preset_mesh(Preset::Block2d, &PresetParams::default()).unwrap();
        let program = LoadProgram {
            dirichlet: vec![fix("top", Component::Ux, 0.0), fix("sides", Component::Ux, 1.0)],
            ..Default::default()
        };
        assert!(build_dof_map(&mesh, &program).is_err());
        let program = LoadProgram {
            dirichlet: vec![fix("top", Component::Ux, 0.0), fix("sides", Component::Ux, 0.0)],
            ..Default::default()
        };
        let map = build_dof_map(&mesh, &program).unwrap();
        assert_eq!(map.prescribed.len(), 33 + 2 * 41 - 2);
    }
}
