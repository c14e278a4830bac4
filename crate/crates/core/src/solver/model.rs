//! A mesh bound to materials and a load program, and the global assembly
//! of residual and tangent.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{element_residual, element_system, ElementLoads, ElementMaterial, ElementSystem, MediumModel, TangentMode};
use crate::error::SolverError;
use crate::material::{ConductivityLaw, MediumParams, SolidParams};
use crate::mesh::{domain_extent, Element, Mesh, RegionRole};

use super::dofmap::{build_dof_map, DofMap};
use super::program::{Component, LoadProgram};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "snake_case")]
pub enum RegionMaterial {
    Solid(SolidParams),
    ThirdMedium(MediumParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub law: ConductivityLaw,
    pub tangent: TangentMode,
    /// worker threads for element evaluation; 1 runs on the caller's thread
    pub threads: usize,
    /// overrides the regularization's domain scale `d`
    pub domain_scale: Option<f64>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions {
            law: ConductivityLaw::Squared,
            tangent: TangentMode::Analytic,
            threads: 1,
            domain_scale: None,
        }
    }
}

/// Reference magnitudes that make the residual rows of different fields
/// comparable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualScales {
    pub force: f64,
    pub heat: f64,
    pub aux: f64,
}

pub struct Model {
    pub mesh: Mesh,
    /// per region
    pub materials: Vec<ElementMaterial>,
    /// per region, at λ = 1
    pub loads: Vec<ElementLoads>,
    pub program: LoadProgram,
    pub dofs: DofMap,
    pub tangent: TangentMode,
    pub domain_scale: f64,
    pub scales: ResidualScales,
    /// `(dof, value, ramp)` nodal loads
    neumann: Vec<(usize, f64, super::program::Ramp)>,
    pool: Option<rayon::ThreadPool>,
}

impl Model {
    pub fn new(
        mesh: Mesh,
        materials: &BTreeMap<String, RegionMaterial>,
        program: LoadProgram,
        options: ModelOptions,
    ) -> Result<Model, SolverError> {
        let err = |m: String| SolverError::Program(m);
        mesh.validate().map_err(|e| err(e.to_string()))?;
        program.controls.validate().map_err(err)?;
        let d = match options.domain_scale {
            Some(d) => d,
            None => domain_extent(&mesh).map_err(|e| err(e.to_string()))?,
        };
        if !(d > 0.0) {
            return Err(err(format!("domain scale must be positive, got {d}")));
        }
        if let Some(name) = materials.keys().find(|n| mesh.region_index(n).is_none()) {
            return Err(err(format!("material given for unknown region '{name}'")));
        }

        let mut region_materials = Vec::with_capacity(mesh.regions.len());
        for region in &mesh.regions {
            let m = materials
                .get(&region.name)
                .ok_or_else(|| err(format!("no material for region '{}'", region.name)))?;
            let em = match (region.role, m) {
                (RegionRole::Solid, RegionMaterial::Solid(p)) => {
                    p.validate().map_err(err)?;
                    ElementMaterial::Solid(*p)
                }
                (RegionRole::ThirdMedium, RegionMaterial::ThirdMedium(p)) => {
                    p.validate().map_err(err)?;
                    ElementMaterial::Medium(MediumModel {
                        params: *p,
                        law: options.law,
                        d,
                    })
                }
                _ => {
                    return Err(err(format!(
                        "region '{}' is {} but its material is not",
                        region.name,
                        region.role.name()
                    )))
                }
            };
            region_materials.push(em);
        }

        let mut loads = vec![ElementLoads::default(); mesh.regions.len()];
        for v in &program.volume {
            let r = mesh
                .region_index(&v.region)
                .ok_or_else(|| err(format!("volume load on unknown region '{}'", v.region)))?;
            loads[r].body_force += Vector3::from(v.body_force);
            loads[r].heat_source += v.heat_source;
        }

        let dofs = build_dof_map(&mesh, &program)?;
        let mut neumann = Vec::new();
        for item in &program.neumann {
            let set = mesh
                .node_set(&item.set)
                .ok_or_else(|| err(format!("unknown node set '{}'", item.set)))?;
            for &n in &set.nodes {
                neumann.push((dofs.component_dof(n, item.component)?, item.value, item.ramp));
            }
        }

        let scales = residual_scales(&mesh, &region_materials, &program, d);
        let pool = if options.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(options.threads)
                    .build()
                    .map_err(|e| err(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Model {
            mesh,
            materials: region_materials,
            loads,
            program,
            dofs,
            tangent: options.tangent,
            domain_scale: d,
            scales,
            neumann,
            pool,
        })
    }

    pub fn material_of(&self, e: &Element) -> &ElementMaterial {
        &self.materials[e.region]
    }

    /// Global indices of an element's local unknowns, in element order.
    pub fn element_dofs(&self, e: &Element) -> Vec<usize> {
        let layout = self.material_of(e).layout(self.mesh.dim);
        let mut out = Vec::with_capacity(layout.per_node() * e.nodes.len());
        for &n in &e.nodes {
            let base = self.dofs.stride * n;
            out.extend(base..base + self.dofs.dim + 1);
            out.extend((0..layout.aux).map(|i| self.dofs.p(n, i)));
        }
        out
    }

    /// Residual scale of a global row.
    pub fn row_scale(&self, dof: usize) -> f64 {
        let local = dof % self.dofs.stride;
        if local < self.dofs.dim {
            self.scales.force
        } else if local == self.dofs.dim {
            self.scales.heat
        } else {
            self.scales.aux
        }
    }

    /// A state vector at λ = 0 with all prescribed values applied.
    pub fn initial_state(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.dofs.total()];
        self.apply_constraints(&mut s, 0.0);
        s
    }

    pub fn apply_constraints(&self, state: &mut [f64], lambda: f64) {
        for p in &self.dofs.prescribed {
            state[p.dof] = p.at(lambda);
        }
    }

    fn scaled_loads(&self, lambda: f64) -> Vec<ElementLoads> {
        self.loads
            .iter()
            .map(|l| ElementLoads {
                body_force: l.body_force * lambda,
                heat_source: l.heat_source * lambda,
            })
            .collect()
    }

    fn element_local(&self, e: &Element, state: &[f64]) -> (Vec<[f64; 3]>, Vec<usize>, Vec<f64>) {
        let x = self.mesh.element_coordinates(e);
        let idx = self.element_dofs(e);
        let vals = idx.iter().map(|&g| state[g]).collect();
        (x, idx, vals)
    }

    fn for_each_element<T: Send>(
        &self,
        f: impl Fn(&Element) -> Result<T, SolverError> + Sync + Send,
    ) -> Result<Vec<T>, SolverError> {
        match &self.pool {
            Some(pool) => pool.install(|| self.mesh.elements.par_iter().map(&f).collect()),
            None => self.mesh.elements.iter().map(f).collect(),
        }
    }

    /// Full-length residual `r_int − λ r_ext` including constrained rows,
    /// whose entries are the reactions.
    pub fn residual(&self, state: &[f64], lambda: f64) -> Result<Vec<f64>, SolverError> {
        let loads = self.scaled_loads(lambda);
        let parts = self.for_each_element(|e| {
            let (x, idx, vals) = self.element_local(e, state);
            let r = element_residual(e.kind, &x, &vals, self.material_of(e), &loads[e.region])
                .map_err(|source| SolverError::Element { element: e.id, source })?;
            Ok((idx, r))
        })?;
        let mut r = vec![0.0; self.dofs.total()];
        for (idx, re) in parts {
            for (a, &g) in idx.iter().enumerate() {
                r[g] += re[a];
            }
        }
        self.finish_residual(&mut r, state, lambda);
        Ok(r)
    }

    fn finish_residual(&self, r: &mut [f64], state: &[f64], lambda: f64) {
        for &(dof, value, ramp) in &self.neumann {
            r[dof] -= ramp.factor(lambda) * value;
        }
        for n in self.dormant_nodes() {
            for i in 0..self.dofs.aux {
                let g = self.dofs.p(n, i);
                r[g] = state[g];
            }
        }
    }

    fn dormant_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.dofs.nodes).filter(move |&n| self.dofs.aux > 0 && !self.dofs.medium_node[n])
    }

    /// Residual and the tangent over the free unknowns.
    pub fn system(&self, pattern: &Pattern, state: &[f64], lambda: f64) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let loads = self.scaled_loads(lambda);
        let mut r = vec![0.0; self.dofs.total()];
        let mut values = vec![0.0; pattern.row_idx.len()];
        let scatter = |idx: &[usize], sys: &ElementSystem, r: &mut [f64], values: &mut [f64]| {
            let free: Vec<Option<usize>> = idx.iter().map(|&g| self.dofs.free_index[g]).collect();
            for (a, &g) in idx.iter().enumerate() {
                r[g] += sys.r[a];
            }
            for (b, fb) in free.iter().enumerate() {
                let Some(col) = fb else { continue };
                for (a, fa) in free.iter().enumerate() {
                    if let Some(row) = fa {
                        values[pattern.position(*row, *col)] += sys.k[(a, b)];
                    }
                }
            }
        };
        let eval = |e: &Element| {
            let (x, idx, vals) = self.element_local(e, state);
            let sys = element_system(e.kind, &x, &vals, self.material_of(e), &loads[e.region], self.tangent)
                .map_err(|source| SolverError::Element { element: e.id, source })?;
            Ok((idx, sys))
        };
        if self.pool.is_some() {
            for (idx, sys) in self.for_each_element(eval)? {
                scatter(&idx, &sys, &mut r, &mut values);
            }
        } else {
            for e in &self.mesh.elements {
                let (idx, sys) = eval(e)?;
                scatter(&idx, &sys, &mut r, &mut values);
            }
        }
        self.finish_residual(&mut r, state, lambda);
        for n in self.dormant_nodes() {
            for i in 0..self.dofs.aux {
                if let Some(f) = self.dofs.free_index[self.dofs.p(n, i)] {
                    values[pattern.position(f, f)] += 1.0;
                }
            }
        }
        Ok((r, values))
    }

    /// Sparsity pattern of the free-free tangent.
    pub fn pattern(&self) -> Pattern {
        let n = self.dofs.free_count();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.mesh.elements {
            let free: Vec<usize> = self
                .element_dofs(e)
                .iter()
                .filter_map(|&g| self.dofs.free_index[g])
                .collect();
            for &c in &free {
                cols[c].extend_from_slice(&free);
            }
        }
        for n in self.dormant_nodes() {
            for i in 0..self.dofs.aux {
                if let Some(f) = self.dofs.free_index[self.dofs.p(n, i)] {
                    cols[f].push(f);
                }
            }
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for mut c in cols {
            c.sort_unstable();
            c.dedup();
            row_idx.extend(c);
            col_ptr.push(row_idx.len());
        }
        Pattern { n, col_ptr, row_idx }
    }

    /// Free part of a full-length vector.
    pub fn free_part(&self, full: &[f64]) -> Vec<f64> {
        self.dofs.free.iter().map(|&g| full[g]).collect()
    }

    /// Residual scales: `K·d^(dim−1)` for force rows, `k·ΔT·d^(dim−2)` for
    /// thermal rows and 1 for auxiliary rows.
    pub fn scaled_max_norm(&self, full: &[f64]) -> f64 {
        self.dofs
            .free
            .iter()
            .map(|&g| (full[g] / self.row_scale(g)).abs())
            .fold(0.0, f64::max)
    }

    /// Net prescribed-value reaction of `component` over a node set.
    pub fn reaction(&self, residual: &[f64], set: &str, component: Component) -> Result<f64, SolverError> {
        let set = self
            .mesh
            .node_set(set)
            .ok_or_else(|| SolverError::Program(format!("unknown node set '{set}'")))?;
        set.nodes
            .iter()
            .map(|&n| self.dofs.component_dof(n, component).map(|g| residual[g]))
            .sum()
    }
}

fn residual_scales(mesh: &Mesh, materials: &[ElementMaterial], program: &LoadProgram, d: f64) -> ResidualScales {
    let (mut k_mech, mut k_heat) = (0.0f64, 0.0f64);
    for m in materials {
        if let ElementMaterial::Solid(p) = m {
            k_mech = k_mech.max(p.bulk);
            k_heat = k_heat.max(p.conductivity);
        }
    }
    for m in materials {
        if let ElementMaterial::Medium(mm) = m {
            if k_mech == 0.0 {
                k_mech = mm.params.gamma;
            }
            if k_heat == 0.0 {
                k_heat = mm.params.k_cap;
            }
        }
    }
    let temps: Vec<f64> = program
        .dirichlet
        .iter()
        .filter(|i| i.component == Component::Theta)
        .map(|i| i.value)
        .chain(std::iter::once(0.0))
        .collect();
    let spread = temps.iter().cloned().fold(f64::MIN, f64::max) - temps.iter().cloned().fold(f64::MAX, f64::min);
    let delta_t = if spread > 0.0 { spread } else { 1.0 };
    let dim = mesh.dim as i32;
    ResidualScales {
        force: k_mech * d.powi(dim - 1),
        heat: k_heat * delta_t * d.powi(dim - 2),
        aux: 1.0,
    }
}

/// Compressed-column pattern with sorted row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
}

impl Pattern {
    pub fn position(&self, row: usize, col: usize) -> usize {
        let lo = self.col_ptr[col];
        let hi = self.col_ptr[col + 1];
        match self.row_idx[lo..hi].binary_search(&row) {
            Ok(k) => lo + k,
            Err(_) => panic!("entry ({row}, {col}) outside the assembled pattern"),
        }
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn to_dense(&self, values: &[f64]) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for c in 0..self.n {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                m[(self.row_idx[k], c)] = values[k];
            }
        }
        m
    }
}
