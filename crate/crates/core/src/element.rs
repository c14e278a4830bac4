//! Linear isoparametric elements and the coupled element residual/tangent.
//!
//! Local unknowns are ordered node-major. Solid nodes carry
//! `(u_1..u_dim, θ)`; third-medium nodes additionally carry the auxiliary
//! fields `p_1..p_m` that stand in for the rotation proxies in the
//! gradient regularization.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector3};

use crate::error::ElementError;
use crate::kinematics::{
    deformation_gradient, kinematic_state, proxy_count, proxy_derivatives, KinematicState,
};
use crate::material::{
    medium_conductivity_with_slope, ConductivityLaw, Elasticity, Hyperelastic, MediumParams,
    SolidParams,
};
use crate::mesh::ElementKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub xi: [f64; 3],
    pub weight: f64,
}

/// Full Gauss rules: centroid for T1, 2×2 for Q1, 2×2×2 for H1.
pub fn quadrature(kind: ElementKind) -> Vec<QuadPoint> {
    let g = 1.0 / 3f64.sqrt();
    match kind {
        ElementKind::T1 => vec![QuadPoint {
            xi: [1.0 / 3.0, 1.0 / 3.0, 0.0],
            weight: 0.5,
        }],
        ElementKind::Q1 => {
            let mut pts = Vec::with_capacity(4);
            for &eta in &[-g, g] {
                for &xi in &[-g, g] {
                    pts.push(QuadPoint {
                        xi: [xi, eta, 0.0],
                        weight: 1.0,
                    });
                }
            }
            pts
        }
        ElementKind::H1 => {
            let mut pts = Vec::with_capacity(8);
            for &zeta in &[-g, g] {
                for &eta in &[-g, g] {
                    for &xi in &[-g, g] {
                        pts.push(QuadPoint {
                            xi: [xi, eta, zeta],
                            weight: 1.0,
                        });
                    }
                }
            }
            pts
        }
    }
}

const Q1_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
const H1_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Parent-domain corner coordinates of each node.
pub fn parent_nodes(kind: ElementKind) -> Vec<[f64; 3]> {
    match kind {
        ElementKind::T1 => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        ElementKind::Q1 => Q1_CORNERS.iter().map(|c| [c[0], c[1], 0.0]).collect(),
        ElementKind::H1 => H1_CORNERS.to_vec(),
    }
}

/// Shape function values and parent-coordinate derivatives.
pub fn parent_shape(kind: ElementKind, xi: &[f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    match kind {
        ElementKind::T1 => (
            vec![1.0 - xi[0] - xi[1], xi[0], xi[1]],
            vec![[-1.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        ),
        ElementKind::Q1 => Q1_CORNERS
            .iter()
            .map(|c| {
                let a = 1.0 + c[0] * xi[0];
                let b = 1.0 + c[1] * xi[1];
                (0.25 * a * b, [0.25 * c[0] * b, 0.25 * c[1] * a, 0.0])
            })
            .unzip(),
        ElementKind::H1 => H1_CORNERS
            .iter()
            .map(|c| {
                let a = 1.0 + c[0] * xi[0];
                let b = 1.0 + c[1] * xi[1];
                let d = 1.0 + c[2] * xi[2];
                (
                    0.125 * a * b * d,
                    [0.125 * c[0] * b * d, 0.125 * c[1] * a * d, 0.125 * c[2] * a * b],
                )
            })
            .unzip(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeEval {
    pub n: Vec<f64>,
    /// gradients with respect to reference coordinates; third entry zero in 2D
    pub grad_n: Vec<Vector3<f64>>,
    /// determinant of the parent-to-reference map
    pub det_j: f64,
}

pub fn shape_eval(kind: ElementKind, xi: &[f64; 3], x_nodes: &[[f64; 3]]) -> Result<ShapeEval, ElementError> {
    let (n, dn) = parent_shape(kind, xi);
    if x_nodes.len() != n.len() {
        return Err(ElementError::Layout {
            expected: n.len(),
            got: x_nodes.len(),
        });
    }
    if kind.dim() == 2 {
        let mut jac = Matrix2::<f64>::zeros();
        for (x, d) in x_nodes.iter().zip(&dn) {
            for a in 0..2 {
                for b in 0..2 {
                    jac[(a, b)] += x[a] * d[b];
                }
            }
        }
        let det_j = jac.determinant();
        let inv = jac
            .try_inverse()
            .filter(|_| det_j.abs() > 1e-300)
            .ok_or(ElementError::SingularJacobian(det_j))?;
        let grad_n = dn
            .iter()
            .map(|d| {
                // ∇_X N = J⁻ᵀ ∇_ξ N
                let gx = inv[(0, 0)] * d[0] + inv[(1, 0)] * d[1];
                let gy = inv[(0, 1)] * d[0] + inv[(1, 1)] * d[1];
                Vector3::new(gx, gy, 0.0)
            })
            .collect();
        Ok(ShapeEval { n, grad_n, det_j })
    } else {
        let mut jac = Matrix3::<f64>::zeros();
        for (x, d) in x_nodes.iter().zip(&dn) {
            for a in 0..3 {
                for b in 0..3 {
                    jac[(a, b)] += x[a] * d[b];
                }
            }
        }
        let det_j = jac.determinant();
        let inv_t = jac
            .try_inverse()
            .filter(|_| det_j.abs() > 1e-300)
            .ok_or(ElementError::SingularJacobian(det_j))?
            .transpose();
        let grad_n = dn.iter().map(|d| inv_t * Vector3::new(d[0], d[1], d[2])).collect();
        Ok(ShapeEval { n, grad_n, det_j })
    }
}

/// Unknowns per node and their offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ElementDofLayout {
    pub dim: usize,
    /// number of auxiliary fields per node (0 for solids)
    pub aux: usize,
}

impl ElementDofLayout {
    pub fn solid(dim: usize) -> Self {
        ElementDofLayout { dim, aux: 0 }
    }

    pub fn medium(dim: usize) -> Self {
        ElementDofLayout {
            dim,
            aux: proxy_count(dim),
        }
    }

    pub fn per_node(&self) -> usize {
        self.dim + 1 + self.aux
    }

    pub fn theta(&self) -> usize {
        self.dim
    }

    pub fn aux_offset(&self, i: usize) -> usize {
        self.dim + 1 + i
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumModel {
    pub params: MediumParams,
    pub law: ConductivityLaw,
    /// domain scale `d` in the regularization
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementMaterial {
    Solid(SolidParams),
    Medium(MediumModel),
}

impl ElementMaterial {
    pub fn layout(&self, dim: usize) -> ElementDofLayout {
        match self {
            ElementMaterial::Solid(_) => ElementDofLayout::solid(dim),
            ElementMaterial::Medium(_) => ElementDofLayout::medium(dim),
        }
    }

    pub fn hyperelastic(&self) -> Hyperelastic {
        match self {
            ElementMaterial::Solid(p) => Hyperelastic::from(p),
            ElementMaterial::Medium(m) => Hyperelastic::from(&m.params),
        }
    }

    /// Conductivity and its derivative with respect to `ln J`.
    pub fn conductivity(&self, j: f64) -> (f64, f64) {
        match self {
            ElementMaterial::Solid(p) => (p.conductivity, 0.0),
            ElementMaterial::Medium(m) => medium_conductivity_with_slope(j, &m.params, m.law),
        }
    }
}

/// Volumetric loads `b̄` and `R̄`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementLoads {
    pub body_force: Vector3<f64>,
    pub heat_source: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TangentMode {
    #[default]
    Analytic,
    Fd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementSystem {
    pub r: DVector<f64>,
    pub k: DMatrix<f64>,
}

/// Nodal values of one element, split out of the flat local vector.
struct NodalFields {
    u: Vec<Vector3<f64>>,
    theta: Vec<f64>,
    aux: Vec<[f64; 3]>,
}

fn split_fields(layout: &ElementDofLayout, nodes: usize, dofs: &[f64]) -> Result<NodalFields, ElementError> {
    let per = layout.per_node();
    if dofs.len() != per * nodes {
        return Err(ElementError::Layout {
            expected: per * nodes,
            got: dofs.len(),
        });
    }
    let mut u = Vec::with_capacity(nodes);
    let mut theta = Vec::with_capacity(nodes);
    let mut aux = Vec::with_capacity(nodes);
    for chunk in dofs.chunks(per) {
        let mut v = Vector3::zeros();
        v.as_mut_slice()[..layout.dim].copy_from_slice(&chunk[..layout.dim]);
        u.push(v);
        theta.push(chunk[layout.theta()]);
        let mut p = [0.0; 3];
        p[..layout.aux].copy_from_slice(&chunk[layout.dim + 1..]);
        aux.push(p);
    }
    Ok(NodalFields { u, theta, aux })
}

/// Kinematic state at every quadrature point together with the shape data.
pub fn point_kinematics(
    kind: ElementKind,
    x_nodes: &[[f64; 3]],
    u_nodes: &[Vector3<f64>],
) -> Result<Vec<(QuadPoint, ShapeEval, KinematicState)>, ElementError> {
    quadrature(kind)
        .into_iter()
        .enumerate()
        .map(|(qp, q)| {
            let sh = shape_eval(kind, &q.xi, x_nodes)?;
            let kin = deformation_gradient(&sh.grad_n, u_nodes)
                .and_then(|f| kinematic_state(&f))
                .map_err(|source| ElementError::Kinematics { qp, source })?;
            Ok((q, sh, kin))
        })
        .collect()
}

pub fn element_residual(
    kind: ElementKind,
    x_nodes: &[[f64; 3]],
    dofs: &[f64],
    material: &ElementMaterial,
    loads: &ElementLoads,
) -> Result<DVector<f64>, ElementError> {
    evaluate(kind, x_nodes, dofs, material, loads, false).map(|(r, _)| r)
}

/// Residual vector and consistent tangent of one element.
pub fn element_system(
    kind: ElementKind,
    x_nodes: &[[f64; 3]],
    dofs: &[f64],
    material: &ElementMaterial,
    loads: &ElementLoads,
    tangent: TangentMode,
) -> Result<ElementSystem, ElementError> {
    match tangent {
        TangentMode::Analytic => {
            let (r, k) = evaluate(kind, x_nodes, dofs, material, loads, true)?;
            Ok(ElementSystem {
                r,
                k: k.expect("tangent requested"),
            })
        }
        TangentMode::Fd => {
            let r = element_residual(kind, x_nodes, dofs, material, loads)?;
            let n = dofs.len();
            let mut k = DMatrix::zeros(n, n);
            let mut work = dofs.to_vec();
            for c in 0..n {
                let h = 1e-7 * (1.0 + dofs[c].abs());
                work[c] = dofs[c] + h;
                let rp = element_residual(kind, x_nodes, &work, material, loads)?;
                work[c] = dofs[c] - h;
                let rm = element_residual(kind, x_nodes, &work, material, loads)?;
                work[c] = dofs[c];
                k.set_column(c, &((rp - rm) / (2.0 * h)));
            }
            Ok(ElementSystem { r, k })
        }
    }
}

fn evaluate(
    kind: ElementKind,
    x_nodes: &[[f64; 3]],
    dofs: &[f64],
    material: &ElementMaterial,
    loads: &ElementLoads,
    with_tangent: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>), ElementError> {
    let dim = kind.dim();
    let nodes = kind.nodes();
    let layout = material.layout(dim);
    let per = layout.per_node();
    let fields = split_fields(&layout, nodes, dofs)?;
    let law = material.hyperelastic();
    let medium = match material {
        ElementMaterial::Medium(m) => {
            if !(m.d > 0.0) {
                return Err(ElementError::DomainScale(m.d));
            }
            Some(m)
        }
        ElementMaterial::Solid(_) => None,
    };

    let ndof = per * nodes;
    let mut r = DVector::zeros(ndof);
    let mut k = with_tangent.then(|| DMatrix::zeros(ndof, ndof));

    for (qp, q, sh, kin) in point_kinematics(kind, x_nodes, &fields.u)?
        .into_iter()
        .enumerate()
        .map(|(i, (q, sh, kin))| (i, q, sh, kin))
    {
        let dv = sh.det_j * q.weight;
        let theta: f64 = sh.n.iter().zip(&fields.theta).map(|(n, t)| n * t).sum();
        let grad_theta: Vector3<f64> = sh.grad_n.iter().zip(&fields.theta).map(|(g, t)| g * *t).sum();

        let mut p_total = law.stress(&kin, theta).p;
        let mut a_total: Option<Elasticity> = with_tangent.then(|| law.first_elasticity(&kin, theta));

        // regularization terms; proxies enter P and A, auxiliary rows handled below
        let mut reg = Vec::new();
        if let Some(m) = medium {
            for i in 0..layout.aux {
                let pd = proxy_derivatives(&kin.f, i).map_err(|source| ElementError::Kinematics { qp, source })?;
                let p_q: f64 = sh.n.iter().zip(&fields.aux).map(|(n, p)| n * p[i]).sum();
                let gp: Vector3<f64> = sh.grad_n.iter().zip(&fields.aux).map(|(g, p)| g * p[i]).sum();
                let e = pd.value - p_q / m.d;
                let b1 = m.params.beta1;
                p_total += pd.grad * (b1 * e);
                if let Some(a) = a_total.as_mut() {
                    let gv = flatten(&pd.grad);
                    *a += (gv * gv.transpose()) * b1 + pd.hessian * (b1 * e);
                }
                reg.push((pd.grad, e, gp));
            }
        }

        let (cond, cond_slope) = material.conductivity(kin.j);
        let c_inv_g = kin.c_inv * grad_theta;
        // −Q
        let flux = c_inv_g * (kin.j * cond);

        for a in 0..nodes {
            let ga = sh.grad_n[a];
            let na = sh.n[a];
            let pa = p_total * ga;
            for i in 0..dim {
                r[a * per + i] += dv * (pa[i] - loads.body_force[i] * na);
            }
            r[a * per + dim] += dv * (ga.dot(&flux) - loads.heat_source * na);
            if let Some(m) = medium {
                for (i, (_, e, gp)) in reg.iter().enumerate() {
                    r[a * per + layout.aux_offset(i)] +=
                        dv * (-m.params.beta1 / m.d * e * na + m.params.beta2 * gp.dot(&ga));
                }
            }
        }

        let Some(kmat) = k.as_mut() else { continue };
        let a_total = a_total.expect("tangent requested");
        let d_p_d_theta = law.thermal_sensitivity(&kin);
        let f_inv_t = kin.f_inv.transpose();
        let f_inv_t_g = f_inv_t * grad_theta;
        let kj = cond * kin.j;

        // A contracted with ∇N_b over the last index: 9 × dim per node
        let contracted: Vec<[[f64; 3]; 9]> = sh
            .grad_n
            .iter()
            .map(|gb| {
                let mut out = [[0.0; 3]; 9];
                for (row, o) in out.iter_mut().enumerate() {
                    for (kk, slot) in o.iter_mut().enumerate().take(dim) {
                        *slot = (0..dim).map(|l| a_total[(row, 3 * kk + l)] * gb[l]).sum();
                    }
                }
                out
            })
            .collect();

        for a in 0..nodes {
            let ga = sh.grad_n[a];
            let na = sh.n[a];
            let row_u = a * per;
            let row_t = a * per + dim;

            // ∂(kJ C⁻¹ ∇θ · ∇N_a)/∂F_kL
            let c_inv_h = kin.c_inv * ga;
            let f_inv_t_h = f_inv_t * ga;
            let h_c_g = ga.dot(&c_inv_g);
            let mut d_flux = Matrix3::zeros();
            for kk in 0..3 {
                for l in 0..3 {
                    d_flux[(kk, l)] = (cond_slope + cond) * kin.j * f_inv_t[(kk, l)] * h_c_g
                        - kj * (f_inv_t_h[kk] * c_inv_g[l] + c_inv_h[l] * f_inv_t_g[kk]);
                }
            }

            #[allow(clippy::needless_range_loop)]
            for b in 0..nodes {
                let gb = sh.grad_n[b];
                let nb = sh.n[b];
                let col_u = b * per;
                let col_t = b * per + dim;
                let cb = &contracted[b];
                for i in 0..dim {
                    for kk in 0..dim {
                        let v: f64 = (0..dim).map(|m| ga[m] * cb[3 * i + m][kk]).sum();
                        kmat[(row_u + i, col_u + kk)] += dv * v;
                    }
                    let v: f64 = (0..dim).map(|m| d_p_d_theta[(i, m)] * ga[m]).sum();
                    kmat[(row_u + i, col_t)] += dv * v * nb;
                }
                for kk in 0..dim {
                    let v: f64 = (0..dim).map(|l| d_flux[(kk, l)] * gb[l]).sum();
                    kmat[(row_t, col_u + kk)] += dv * v;
                }
                kmat[(row_t, col_t)] += dv * kj * ga.dot(&(kin.c_inv * gb));

                if let Some(m) = medium {
                    let b1 = m.params.beta1;
                    for (i, (grad, _, _)) in reg.iter().enumerate() {
                        let row_p = a * per + layout.aux_offset(i);
                        let col_p = b * per + layout.aux_offset(i);
                        for kk in 0..dim {
                            let up: f64 = (0..dim).map(|mm| grad[(kk, mm)] * ga[mm]).sum();
                            kmat[(row_u + kk, col_p)] += dv * b1 * (-nb / m.d) * up;
                            let pu: f64 = (0..dim).map(|l| grad[(kk, l)] * gb[l]).sum();
                            kmat[(row_p, col_u + kk)] += dv * (-b1 / m.d) * na * pu;
                        }
                        kmat[(row_p, col_p)] += dv * (b1 / (m.d * m.d) * na * nb + m.params.beta2 * ga.dot(&gb));
                    }
                }
            }
        }
    }
    Ok((r, k))
}

fn flatten(m: &Matrix3<f64>) -> nalgebra::SVector<f64, 9> {
    nalgebra::SVector::<f64, 9>::from_fn(|r, _| m[(r / 3, r % 3)])
}
