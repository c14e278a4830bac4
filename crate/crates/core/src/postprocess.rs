//! Derived fields, line profiles and file export.

use std::io::{self, Write};

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{parent_shape, point_kinematics, ElementMaterial};
use crate::error::SolverError;
use crate::mesh::{Element, ElementKind, RegionRole};
use crate::solver::{deformed_position, Model, SolveHistory};

/// Spatial quantities at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFields {
    pub element: usize,
    /// reference volume represented by the point
    pub weight: f64,
    pub j: f64,
    /// Cauchy stress; plane-strain models keep the out-of-plane σ₃₃
    pub sigma: Matrix3<f64>,
    /// `−tr σ / 3`
    pub pressure: f64,
    /// spatial heat flux `J⁻¹ F Q`
    pub q: Vector3<f64>,
}

/// Volume-weighted nodal averages over one region role.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalAverages {
    /// `None` for nodes not touched by the role
    pub sigma: Vec<Option<Matrix3<f64>>>,
    pub q: Vec<Option<Vector3<f64>>>,
}

impl NodalAverages {
    pub fn pressure(&self, node: usize) -> Option<f64> {
        self.sigma[node].map(|s| -s.trace() / 3.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub points: Vec<PointFields>,
    pub solid: NodalAverages,
    pub medium: NodalAverages,
}

impl DerivedFields {
    /// Solid average where a node touches a solid, medium average otherwise.
    pub fn nodal_sigma(&self, node: usize) -> Matrix3<f64> {
        self.solid.sigma[node].or(self.medium.sigma[node]).unwrap_or_else(Matrix3::zeros)
    }

    pub fn nodal_q(&self, node: usize) -> Vector3<f64> {
        self.solid.q[node].or(self.medium.q[node]).unwrap_or_else(Vector3::zeros)
    }
}

/// Nodal values of an element as `(u, θ)`.
fn element_state(model: &Model, e: &Element, state: &[f64]) -> (Vec<Vector3<f64>>, Vec<f64>) {
    let dim = model.mesh.dim;
    let u = e
        .nodes
        .iter()
        .map(|&n| {
            let mut v = Vector3::zeros();
            for a in 0..dim {
                v[a] = state[model.dofs.u(n, a)];
            }
            v
        })
        .collect();
    let theta = e.nodes.iter().map(|&n| state[model.dofs.theta(n)]).collect();
    (u, theta)
}

fn element_points(model: &Model, index: usize, state: &[f64]) -> Result<Vec<PointFields>, SolverError> {
    let e = &model.mesh.elements[index];
    let x = model.mesh.element_coordinates(e);
    let (u, theta) = element_state(model, e, state);
    let material = model.material_of(e);
    let law = material.hyperelastic();
    let pts = point_kinematics(e.kind, &x, &u).map_err(|source| SolverError::Element { element: index, source })?;
    Ok(pts
        .into_iter()
        .map(|(qp, sh, kin)| {
            let th: f64 = sh.n.iter().zip(&theta).map(|(n, t)| n * t).sum();
            let grad: Vector3<f64> = sh.grad_n.iter().zip(&theta).map(|(g, t)| g * *t).sum();
            let stress = law.stress(&kin, th);
            let sigma = stress.p * kin.f.transpose() / kin.j;
            let k = material.conductivity(kin.j).0;
            let q_ref = -(kin.c_inv * grad) * (kin.j * k);
            PointFields {
                element: index,
                weight: qp.weight * sh.det_j,
                j: kin.j,
                sigma,
                pressure: -sigma.trace() / 3.0,
                q: kin.f * q_ref / kin.j,
            }
        })
        .collect())
}

fn role_of(material: &ElementMaterial) -> RegionRole {
    match material {
        ElementMaterial::Solid(_) => RegionRole::Solid,
        ElementMaterial::Medium(_) => RegionRole::ThirdMedium,
    }
}

/// Cauchy stress, pressure and spatial heat flux at every quadrature point
/// of a converged state, plus per-role nodal averages.
pub fn derive_fields(model: &Model, state: &[f64]) -> Result<DerivedFields, SolverError> {
    let per_element: Vec<Vec<PointFields>> = (0..model.mesh.elements.len())
        .into_par_iter()
        .map(|i| element_points(model, i, state))
        .collect::<Result<_, _>>()?;

    let nodes = model.mesh.nodes.len();
    let mut acc = [
        (vec![Matrix3::zeros(); nodes], vec![Vector3::zeros(); nodes], vec![0.0; nodes]),
        (vec![Matrix3::zeros(); nodes], vec![Vector3::zeros(); nodes], vec![0.0; nodes]),
    ];
    for (e, pts) in model.mesh.elements.iter().zip(&per_element) {
        let slot = match role_of(model.material_of(e)) {
            RegionRole::Solid => 0,
            RegionRole::ThirdMedium => 1,
        };
        let (sig, q, w) = &mut acc[slot];
        // every corner of an element collects all of its points
        for p in pts {
            for &n in &e.nodes {
                sig[n] += p.sigma * p.weight;
                q[n] += p.q * p.weight;
                w[n] += p.weight;
            }
        }
    }
    let [solid, medium] = acc.map(|(sig, q, w)| NodalAverages {
        sigma: sig.iter().zip(&w).map(|(s, &w)| (w > 0.0).then(|| s / w)).collect(),
        q: q.iter().zip(&w).map(|(v, &w)| (w > 0.0).then(|| v / w)).collect(),
    });
    Ok(DerivedFields {
        points: per_element.into_iter().flatten().collect(),
        solid,
        medium,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileField {
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "u_x")]
    Ux,
    #[serde(rename = "u_y")]
    Uy,
    #[serde(rename = "u_z")]
    Uz,
}

impl ProfileField {
    pub fn name(self) -> &'static str {
        match self {
            ProfileField::Theta => "theta",
            ProfileField::Ux => "u_x",
            ProfileField::Uy => "u_y",
            ProfileField::Uz => "u_z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    /// position along the line, 0 at the start and 1 at the end
    pub s: f64,
    pub reference: [f64; 3],
    /// `None` when the point lies outside the mesh
    pub deformed: Option<[f64; 3]>,
    pub value: Option<f64>,
}

const INSIDE_TOL: f64 = 1e-9;

fn inside_parent(kind: ElementKind, xi: &[f64; 3]) -> bool {
    match kind {
        ElementKind::T1 => xi[0] >= -INSIDE_TOL && xi[1] >= -INSIDE_TOL && xi[0] + xi[1] <= 1.0 + INSIDE_TOL,
        ElementKind::Q1 => xi[..2].iter().all(|v| v.abs() <= 1.0 + INSIDE_TOL),
        ElementKind::H1 => xi.iter().all(|v| v.abs() <= 1.0 + INSIDE_TOL),
    }
}

/// Parent coordinates of `point` in an element, by Newton iteration on the
/// isoparametric map. `None` if the point is outside.
fn locate(kind: ElementKind, x: &[[f64; 3]], point: &[f64; 3], dim: usize) -> Option<Vec<f64>> {
    let (lo, hi) = x.iter().fold(([f64::INFINITY; 3], [f64::NEG_INFINITY; 3]), |(mut lo, mut hi), p| {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
        (lo, hi)
    });
    let size = (0..dim).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if (0..dim).any(|a| point[a] < lo[a] - INSIDE_TOL * size || point[a] > hi[a] + INSIDE_TOL * size) {
        return None;
    }
    let mut xi = match kind {
        ElementKind::T1 => [1.0 / 3.0, 1.0 / 3.0, 0.0],
        _ => [0.0; 3],
    };
    for _ in 0..30 {
        let (n, dn) = parent_shape(kind, &xi);
        let mut r = Vector3::zeros();
        let mut jac = Matrix3::identity();
        for a in 0..dim {
            r[a] = n.iter().zip(x).map(|(n, p)| n * p[a]).sum::<f64>() - point[a];
            for b in 0..dim {
                jac[(a, b)] = dn.iter().zip(x).map(|(d, p)| d[b] * p[a]).sum();
            }
        }
        if r.norm() <= 1e-13 * size.max(1e-300) {
            break;
        }
        let step = jac.lu().solve(&r)?;
        for a in 0..dim {
            xi[a] -= step[a];
        }
    }
    let (n, _) = parent_shape(kind, &xi);
    let miss: f64 = (0..dim)
        .map(|a| (n.iter().zip(x).map(|(n, p)| n * p[a]).sum::<f64>() - point[a]).abs())
        .fold(0.0, f64::max);
    (miss <= 1e-9 * size && inside_parent(kind, &xi)).then_some(n)
}

/// Samples `field` at `samples` equally spaced material points on the
/// reference segment from `start` to `end`. Each sample is interpolated in
/// the first element containing it.
pub fn extract_profile(
    model: &Model,
    state: &[f64],
    start: [f64; 3],
    end: [f64; 3],
    samples: usize,
    field: ProfileField,
) -> Vec<ProfileSample> {
    let mesh = &model.mesh;
    let dim = mesh.dim;
    (0..samples)
        .map(|i| {
            let s = if samples > 1 { i as f64 / (samples - 1) as f64 } else { 0.0 };
            let mut point = [0.0; 3];
            for a in 0..3 {
                point[a] = start[a] + s * (end[a] - start[a]);
            }
            let found = mesh.elements.iter().find_map(|e| {
                let x = mesh.element_coordinates(e);
                locate(e.kind, &x, &point, dim).map(|n| (e, n))
            });
            let Some((e, n)) = found else {
                return ProfileSample {
                    s,
                    reference: point,
                    deformed: None,
                    value: None,
                };
            };
            let mut deformed = point;
            let mut value = 0.0;
            for (w, &node) in n.iter().zip(&e.nodes) {
                for a in 0..dim {
                    deformed[a] += w * state[model.dofs.u(node, a)];
                }
                let v = match field {
                    ProfileField::Theta => state[model.dofs.theta(node)],
                    ProfileField::Ux => state[model.dofs.u(node, 0)],
                    ProfileField::Uy => state[model.dofs.u(node, 1)],
                    ProfileField::Uz if dim == 3 => state[model.dofs.u(node, 2)],
                    ProfileField::Uz => 0.0,
                };
                value += w * v;
            }
            ProfileSample {
                s,
                reference: point,
                deformed: Some(deformed),
                value: Some(value),
            }
        })
        .collect()
}

/// CSV with columns `s,x,y,z,x_def,y_def,z_def,<field>`; missing samples
/// leave the deformed and value columns empty.
pub fn write_profile(samples: &[ProfileSample], field: ProfileField, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "s,x,y,z,x_def,y_def,z_def,{}", field.name())?;
    for p in samples {
        write!(out, "{},{},{},{}", num(p.s), num(p.reference[0]), num(p.reference[1]), num(p.reference[2]))?;
        match (p.deformed, p.value) {
            (Some(d), Some(v)) => writeln!(out, ",{},{},{},{}", num(d[0]), num(d[1]), num(d[2]), num(v))?,
            _ => writeln!(out, ",,,,")?,
        }
    }
    Ok(())
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VtkOptions {
    pub omit_medium: bool,
}

fn vtk_cell_type(kind: ElementKind) -> u8 {
    match kind {
        ElementKind::T1 => 5,
        ElementKind::Q1 => 9,
        ElementKind::H1 => 12,
    }
}

/// Legacy ASCII unstructured grid on the deformed configuration.
pub fn export_vtk(
    model: &Model,
    state: &[f64],
    derived: &DerivedFields,
    options: VtkOptions,
    out: &mut impl Write,
) -> io::Result<()> {
    let mesh = &model.mesh;
    let dofs = &model.dofs;
    let nodes = mesh.nodes.len();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "thermo-mechanical third-medium contact")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {nodes} double")?;
    for n in 0..nodes {
        let x = deformed_position(mesh, dofs, state, n);
        writeln!(out, "{} {} {}", num(x[0]), num(x[1]), num(x[2]))?;
    }

    let cells: Vec<&Element> = mesh
        .elements
        .iter()
        .filter(|e| !(options.omit_medium && mesh.role_of(e) == RegionRole::ThirdMedium))
        .collect();
    let size: usize = cells.iter().map(|e| e.nodes.len() + 1).sum();
    writeln!(out, "CELLS {} {size}", cells.len())?;
    for e in &cells {
        write!(out, "{}", e.nodes.len())?;
        for n in &e.nodes {
            write!(out, " {n}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "CELL_TYPES {}", cells.len())?;
    for e in &cells {
        writeln!(out, "{}", vtk_cell_type(e.kind))?;
    }

    writeln!(out, "POINT_DATA {nodes}")?;
    writeln!(out, "VECTORS displacement double")?;
    for n in 0..nodes {
        let u: Vec<f64> = (0..3).map(|a| if a < mesh.dim { state[dofs.u(n, a)] } else { 0.0 }).collect();
        writeln!(out, "{} {} {}", num(u[0]), num(u[1]), num(u[2]))?;
    }
    let mut scalar = |name: &str, f: &dyn Fn(usize) -> f64| -> io::Result<()> {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for n in 0..nodes {
            writeln!(out, "{}", num(f(n)))?;
        }
        Ok(())
    };
    scalar("temperature", &|n| state[dofs.theta(n)])?;
    for i in 0..dofs.aux {
        scalar(&format!("p_{}", i + 1), &|n| state[dofs.p(n, i)])?;
    }
    for (name, (a, b)) in [
        ("sigma_xx", (0, 0)),
        ("sigma_yy", (1, 1)),
        ("sigma_zz", (2, 2)),
        ("sigma_xy", (0, 1)),
        ("sigma_yz", (1, 2)),
        ("sigma_xz", (0, 2)),
    ] {
        scalar(name, &|n| derived.nodal_sigma(n)[(a, b)])?;
    }
    scalar("pressure", &|n| -derived.nodal_sigma(n).trace() / 3.0)?;
    writeln!(out, "VECTORS heat_flux double")?;
    for n in 0..nodes {
        let q = derived.nodal_q(n);
        writeln!(out, "{} {} {}", num(q[0]), num(q[1]), num(q[2]))?;
    }

    writeln!(out, "CELL_DATA {}", cells.len())?;
    writeln!(out, "SCALARS region int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for e in &cells {
        writeln!(out, "{}", e.region)?;
    }
    Ok(())
}

pub fn export_history(history: &SolveHistory, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "step,lambda,dlambda,iterations,residual,gap")?;
    for r in &history.records {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.step,
            num(r.lambda),
            num(r.dlambda),
            r.iterations,
            num(r.residual),
            num(r.gap)
        )?;
    }
    Ok(())
}
