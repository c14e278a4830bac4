//! Deformation measures evaluated at a material point.
//!
//! All tensors are 3×3. Two-dimensional problems are embedded as plane
//! strain: nodal displacements and shape gradients carry a zero third
//! component, so `F₃₃ = 1` and the three-dimensional formulas apply verbatim.

use nalgebra::{Matrix3, SMatrix, Vector3};

use crate::error::KinematicsError;

/// Below this value of `det F` a point counts as inverted.
pub const INVERSION_THRESHOLD: f64 = 1e-12;

/// Rotation proxies with a smaller denominator are reported as degenerate.
pub const PROXY_DENOMINATOR_GUARD: f64 = 1e-8;

/// Index pairs `(a, b)` of the proxies `(F_ab − F_ba) / (F_aa + F_bb)`.
pub const PROXY_AXES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeformationGradient(pub Matrix3<f64>);

impl DeformationGradient {
    pub fn identity() -> Self {
        DeformationGradient(Matrix3::identity())
    }
}

/// `F = I + Σ_I u_I ⊗ ∇_X N_I`.
pub fn deformation_gradient(
    grad_n: &[Vector3<f64>],
    u_nodes: &[Vector3<f64>],
) -> Result<DeformationGradient, KinematicsError> {
    if grad_n.len() != u_nodes.len() {
        return Err(KinematicsError::DimensionMismatch(format!(
            "{} shape gradients for {} nodal displacements",
            grad_n.len(),
            u_nodes.len()
        )));
    }
    let mut f = Matrix3::identity();
    for (g, u) in grad_n.iter().zip(u_nodes) {
        f += u * g.transpose();
    }
    Ok(DeformationGradient(f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub f: Matrix3<f64>,
    pub f_inv: Matrix3<f64>,
    pub j: f64,
    pub c: Matrix3<f64>,
    pub c_inv: Matrix3<f64>,
    /// `J^(−2/3) tr C`
    pub tr_c_iso: f64,
}

impl KinematicState {
    pub fn ln_j(&self) -> f64 {
        self.j.ln()
    }
}

pub fn kinematic_state(f: &DeformationGradient) -> Result<KinematicState, KinematicsError> {
    let f = f.0;
    let j = f.determinant();
    if !(j > INVERSION_THRESHOLD) {
        return Err(KinematicsError::Inversion { j });
    }
    let f_inv = f.try_inverse().ok_or(KinematicsError::Inversion { j })?;
    let c = f.transpose() * f;
    let c_inv = f_inv * f_inv.transpose();
    let tr_c_iso = j.powf(-2.0 / 3.0) * c.trace();
    Ok(KinematicState {
        f,
        f_inv,
        j,
        c,
        c_inv,
        tr_c_iso,
    })
}

/// One rotation proxy `f = (F_ab − F_ba) / (F_aa + F_bb)` with its first and
/// second derivatives with respect to `F`.
///
/// The Hessian is indexed by flattened components, `3·i + J` for `F_iJ`.
#[derive(Debug, Clone, Copy)]
pub struct ProxyDerivatives {
    pub value: f64,
    pub grad: Matrix3<f64>,
    pub hessian: SMatrix<f64, 9, 9>,
}

fn proxy_denominator(f: &Matrix3<f64>, index: usize) -> Result<f64, KinematicsError> {
    let (a, b) = PROXY_AXES[index];
    let s = f[(a, a)] + f[(b, b)];
    if s.abs() < PROXY_DENOMINATOR_GUARD {
        return Err(KinematicsError::DegenerateProxy {
            index,
            denominator: s,
        });
    }
    Ok(s)
}

/// Number of rotation proxies used for a spatial dimension.
pub fn proxy_count(dim: usize) -> usize {
    if dim == 2 {
        1
    } else {
        3
    }
}

/// Rotation proxies of `F`. In 2D only the first entry is meaningful and
/// `count` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationProxies {
    pub values: [f64; 3],
    pub count: usize,
}

impl RotationProxies {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.count]
    }
}

pub fn rotation_proxies(f: &DeformationGradient, dim: usize) -> Result<RotationProxies, KinematicsError> {
    let count = proxy_count(dim);
    let mut values = [0.0; 3];
    for (i, v) in values.iter_mut().enumerate().take(count) {
        let (a, b) = PROXY_AXES[i];
        let s = proxy_denominator(&f.0, i)?;
        *v = (f.0[(a, b)] - f.0[(b, a)]) / s;
    }
    Ok(RotationProxies { values, count })
}

pub fn proxy_derivatives(f: &Matrix3<f64>, index: usize) -> Result<ProxyDerivatives, KinematicsError> {
    let (a, b) = PROXY_AXES[index];
    let s = proxy_denominator(f, index)?;
    let n = f[(a, b)] - f[(b, a)];
    let value = n / s;

    let mut grad = Matrix3::zeros();
    grad[(a, b)] = 1.0 / s;
    grad[(b, a)] = -1.0 / s;
    grad[(a, a)] = -n / (s * s);
    grad[(b, b)] = -n / (s * s);

    let ab = 3 * a + b;
    let ba = 3 * b + a;
    let aa = 3 * a + a;
    let bb = 3 * b + b;
    let s2 = 1.0 / (s * s);
    let s3 = 2.0 * n / (s * s * s);
    let mut hessian = SMatrix::<f64, 9, 9>::zeros();
    for &(r, c, v) in &[(ab, aa, -s2), (ab, bb, -s2), (ba, aa, s2), (ba, bb, s2)] {
        hessian[(r, c)] = v;
        hessian[(c, r)] = v;
    }
    for &(r, c) in &[(aa, aa), (aa, bb), (bb, aa), (bb, bb)] {
        hessian[(r, c)] = s3;
    }
    Ok(ProxyDerivatives { value, grad, hessian })
}

/// Volume ratio of free thermal expansion, `exp(3 α (θ − θ₀))`.
pub fn thermal_jacobian(theta: f64, theta0: f64, alpha: f64) -> f64 {
    (3.0 * alpha * (theta - theta0)).exp()
}
