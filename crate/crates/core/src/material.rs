//! Constitutive laws for the solids and the third medium.
//!
//! Both use the same volumetric–isochoric neo-Hookean energy with a
//! thermal-expansion term,
//!
//! ```text
//! Ψ = (K/2)(ln J)² + (μ/2)(J^(−2/3) tr C − 3) − 3α(θ − θ₀) K ln J
//! ```
//!
//! with `K = μ = γ` for the medium. The temperature factor `(θ − θ₀)` is a
//! parameter of the stress, not differentiated together with `ln J`.
//! Conduction follows the pulled-back Fourier law `Q = −J k C⁻¹ ∇_X θ`.

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::ElementError;
use crate::kinematics::KinematicState;

/// Fourth-order tensor `∂P_iJ/∂F_kL` stored at `(3·i + J, 3·k + L)`.
pub type Elasticity = SMatrix<f64, 9, 9>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolidParams {
    pub bulk: f64,
    pub shear: f64,
    pub alpha: f64,
    pub conductivity: f64,
    pub theta0: f64,
}

impl SolidParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.bulk > 0.0 && self.shear > 0.0 && self.conductivity > 0.0 && self.theta0 >= 0.0) {
            return Err(format!("solid parameters must be positive: {self:?}"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    pub gamma: f64,
    pub alpha: f64,
    /// gas conductivity `k_TM`
    pub k_gas: f64,
    /// conductivity cap, the neighbouring solid's `k_θ`
    pub k_cap: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub theta0: f64,
}

impl MediumParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.beta1 > 0.0 && self.beta2 > 0.0 && self.theta0 >= 0.0) {
            return Err(format!("medium parameters must be positive: {self:?}"));
        }
        if !(self.k_gas > 0.0 && self.k_gas <= self.k_cap) {
            return Err(format!(
                "medium conductivity must satisfy 0 < k_gas <= k_cap (got {} and {})",
                self.k_gas, self.k_cap
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConductivityLaw {
    /// `min(k_TM (ln J)², k_cap)`
    #[default]
    Squared,
    /// `min(k_TM max(1, (ln J)²), k_cap)`, conducts at `k_TM` when uncompressed
    Floored,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressState {
    pub s: Matrix3<f64>,
    pub p: Matrix3<f64>,
}

/// Coefficients of the shared hyperelastic law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperelastic {
    pub bulk: f64,
    pub shear: f64,
    pub alpha: f64,
    pub theta0: f64,
}

impl From<&SolidParams> for Hyperelastic {
    fn from(p: &SolidParams) -> Self {
        Hyperelastic {
            bulk: p.bulk,
            shear: p.shear,
            alpha: p.alpha,
            theta0: p.theta0,
        }
    }
}

impl From<&MediumParams> for Hyperelastic {
    fn from(p: &MediumParams) -> Self {
        Hyperelastic {
            bulk: p.gamma,
            shear: p.gamma,
            alpha: p.alpha,
            theta0: p.theta0,
        }
    }
}

impl Hyperelastic {
    fn expansion(&self, theta: f64) -> f64 {
        3.0 * self.alpha * (theta - self.theta0)
    }

    pub fn energy(&self, kin: &KinematicState, theta: f64) -> f64 {
        let ln_j = kin.ln_j();
        0.5 * self.bulk * ln_j * ln_j + 0.5 * self.shear * (kin.tr_c_iso - 3.0)
            - self.expansion(theta) * self.bulk * ln_j
    }

    pub fn stress(&self, kin: &KinematicState, theta: f64) -> StressState {
        let vol = self.bulk * (kin.ln_j() - self.expansion(theta));
        let iso = self.shear * kin.j.powf(-2.0 / 3.0);
        let s = kin.c_inv * vol + (Matrix3::identity() - kin.c_inv * (kin.c.trace() / 3.0)) * iso;
        StressState { s, p: kin.f * s }
    }

    /// `∂P/∂F` at fixed temperature.
    pub fn first_elasticity(&self, kin: &KinematicState, theta: f64) -> Elasticity {
        let f = &kin.f;
        let fi = &kin.f_inv;
        let fit = fi.transpose();
        let vol = self.bulk * (kin.ln_j() - self.expansion(theta));
        let b = self.shear * kin.j.powf(-2.0 / 3.0);
        let i1 = kin.c.trace();
        let dev = f - fit * (i1 / 3.0);

        let mut a = Elasticity::zeros();
        for i in 0..3 {
            for jj in 0..3 {
                let r = 3 * i + jj;
                for k in 0..3 {
                    for l in 0..3 {
                        let c = 3 * k + l;
                        let swap = fi[(jj, k)] * fi[(l, i)];
                        let mut v = self.bulk * fit[(k, l)] * fit[(i, jj)] - vol * swap;
                        v += -2.0 / 3.0 * b * dev[(i, jj)] * fit[(k, l)];
                        v += b * (-2.0 / 3.0 * fit[(i, jj)] * f[(k, l)] + i1 / 3.0 * swap);
                        if i == k && jj == l {
                            v += b;
                        }
                        a[(r, c)] = v;
                    }
                }
            }
        }
        a
    }

    /// `∂P/∂θ`, the coupling through the thermal-expansion term.
    pub fn thermal_sensitivity(&self, kin: &KinematicState) -> Matrix3<f64> {
        kin.f_inv.transpose() * (-3.0 * self.alpha * self.bulk)
    }
}

pub fn solid_energy(kin: &KinematicState, theta: f64, p: &SolidParams) -> f64 {
    Hyperelastic::from(p).energy(kin, theta)
}

pub fn solid_stress(kin: &KinematicState, theta: f64, p: &SolidParams) -> StressState {
    Hyperelastic::from(p).stress(kin, theta)
}

pub fn medium_energy(kin: &KinematicState, theta: f64, p: &MediumParams) -> f64 {
    Hyperelastic::from(p).energy(kin, theta)
}

pub fn medium_stress(kin: &KinematicState, theta: f64, p: &MediumParams) -> StressState {
    Hyperelastic::from(p).stress(kin, theta)
}

/// Pulled-back Fourier flux `Q = −J k C⁻¹ ∇_X θ`.
pub fn reference_heat_flux(kin: &KinematicState, grad_theta: &Vector3<f64>, k_eff: f64) -> Vector3<f64> {
    -(kin.c_inv * grad_theta) * (kin.j * k_eff)
}

/// Effective third-medium conductivity and its derivative with respect to
/// `ln J`. On the capped branch the derivative is zero.
pub fn medium_conductivity_with_slope(j: f64, p: &MediumParams, law: ConductivityLaw) -> (f64, f64) {
    let ln_j = j.ln();
    let sq = ln_j * ln_j;
    let (raw, slope) = match law {
        ConductivityLaw::Squared => (p.k_gas * sq, 2.0 * p.k_gas * ln_j),
        ConductivityLaw::Floored if sq > 1.0 => (p.k_gas * sq, 2.0 * p.k_gas * ln_j),
        ConductivityLaw::Floored => (p.k_gas, 0.0),
    };
    if raw >= p.k_cap {
        (p.k_cap, 0.0)
    } else {
        (raw, slope)
    }
}

pub fn medium_conductivity(j: f64, p: &MediumParams) -> f64 {
    medium_conductivity_with_slope(j, p, ConductivityLaw::Squared).0
}

/// `Σᵢ (β₁/2)(fᵢ − pᵢ/d)² + (β₂/2)‖∇pᵢ‖²`
pub fn regularization_density(
    proxies: &[f64],
    aux: &[f64],
    grad_aux: &[Vector3<f64>],
    beta1: f64,
    beta2: f64,
    d: f64,
) -> Result<f64, ElementError> {
    if !(d > 0.0) {
        return Err(ElementError::DomainScale(d));
    }
    Ok(proxies
        .iter()
        .zip(aux)
        .zip(grad_aux)
        .map(|((f, p), g)| {
            let e = f - p / d;
            0.5 * beta1 * e * e + 0.5 * beta2 * g.norm_squared()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{kinematic_state, DeformationGradient};

    fn kin(f: Matrix3<f64>) -> KinematicState {
        kinematic_state(&DeformationGradient(f)).unwrap()
    }

    fn solid() -> SolidParams {
        SolidParams {
            bulk: 20.0,
            shear: 10.0,
            alpha: 1e-4,
            conductivity: 100.0,
            theta0: 293.0,
        }
    }

    fn medium() -> MediumParams {
        MediumParams {
            gamma: 1e-4,
            alpha: 1e-5,
            k_gas: 1.0,
            k_cap: 100.0,
            beta1: 1.0,
            beta2: 1e-2,
            theta0: 293.0,
        }
    }

    #[test]
    fn reference_state_is_stress_free() {
        let k = kin(Matrix3::identity());
        assert_eq!(solid_energy(&k, 293.0, &solid()), 0.0);
        assert_eq!(solid_stress(&k, 293.0, &solid()).s, Matrix3::zeros());
        assert_eq!(medium_energy(&k, 293.0, &medium()), 0.0);
        assert_eq!(medium_stress(&k, 293.0, &medium()).s, Matrix3::zeros());
    }

    #[test]
    fn dilation_energy_is_purely_volumetric() {
        let j: f64 = 1.7;
        let k = kin(Matrix3::identity() * j.cbrt());
        let e = solid_energy(&k, 293.0, &solid());
        assert!((e - 10.0 * j.ln().powi(2)).abs() < 1e-13);
    }

    #[test]
    fn uniaxial_energy_matches_scalar_formula() {
        let p = SolidParams { alpha: 0.0, ..solid() };
        let e = solid_energy(&kin(Matrix3::from_diagonal(&Vector3::new(1.2, 1.0, 1.0))), 293.0, &p);
        // 10·ln(1.2)² + 5·(1.2^(−2/3)·3.44 − 3), evaluated by hand
        let expected = 10.0 * 1.2f64.ln().powi(2) + 5.0 * (3.44 * 1.2f64.powf(-2.0 / 3.0) - 3.0);
        assert!((e - expected).abs() < 1e-14);
        assert!((e - 0.563_851_0).abs() < 1e-6);
    }

    #[test]
    fn thermal_prestress() {
        let d_theta = 50.0;
        let p = solid();
        let s = solid_stress(&kin(Matrix3::identity()), p.theta0 + d_theta, &p).s;
        let expected = Matrix3::identity() * (-3.0 * p.alpha * d_theta * p.bulk);
        assert!((s - expected).norm() < 1e-15);
    }

    #[test]
    fn first_piola_is_f_times_second() {
        let f = Matrix3::new(1.1, 0.2, 0.0, -0.1, 0.9, 0.05, 0.0, 0.1, 1.05);
        let k = kin(f);
        let st = solid_stress(&k, 300.0, &solid());
        assert!((st.p - f * st.s).norm() < 1e-14);
        assert!((st.s - st.s.transpose()).norm() < 1e-14);
    }

    #[test]
    fn elasticity_matches_stress_differences() {
        let f = Matrix3::new(1.1, 0.2, -0.05, -0.1, 0.9, 0.05, 0.03, 0.1, 1.05);
        let law = Hyperelastic::from(&solid());
        let a = law.first_elasticity(&kin(f), 320.0);
        let h = 1e-6;
        for c in 0..9 {
            let mut fp = f;
            let mut fm = f;
            fp[(c / 3, c % 3)] += h;
            fm[(c / 3, c % 3)] -= h;
            let dp = (law.stress(&kin(fp), 320.0).p - law.stress(&kin(fm), 320.0).p) / (2.0 * h);
            for r in 0..9 {
                assert!((dp[(r / 3, r % 3)] - a[(r, c)]).abs() < 1e-7, "({r},{c})");
            }
        }
        let ds = (law.stress(&kin(f), 320.0 + h).p - law.stress(&kin(f), 320.0 - h).p) / (2.0 * h);
        assert!((ds - law.thermal_sensitivity(&kin(f))).norm() < 1e-9);
    }

    #[test]
    fn heat_flux_examples() {
        let g = Vector3::new(1.0, 0.0, 0.0);
        let q = reference_heat_flux(&kin(Matrix3::identity()), &g, 3.0);
        assert_eq!(q, Vector3::new(-3.0, 0.0, 0.0));
        let q = reference_heat_flux(&kin(Matrix3::identity() * 2.0), &g, 1.0);
        assert!((q - Vector3::new(-2.0, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(reference_heat_flux(&kin(Matrix3::identity()), &Vector3::zeros(), 3.0), Vector3::zeros());
    }

    #[test]
    fn conductivity_examples() {
        let p = medium();
        assert_eq!(medium_conductivity(1.0, &p), 0.0);
        assert!((medium_conductivity((-1.0f64).exp(), &p) - 1.0).abs() < 1e-15);
        assert_eq!(medium_conductivity(1e-6, &p), 100.0);
        let (k, slope) = medium_conductivity_with_slope(1e-6, &p, ConductivityLaw::Squared);
        assert_eq!((k, slope), (100.0, 0.0));
        let (k, _) = medium_conductivity_with_slope(1.0, &p, ConductivityLaw::Floored);
        assert_eq!(k, 1.0);
    }

    #[test]
    fn medium_barrier_values() {
        let p = medium();
        let k = kin(Matrix3::identity() * 0.01f64.cbrt());
        let e = medium_energy(&k, p.theta0, &p);
        assert!((e - 1.0603e-3).abs() < 1e-7);
        let doubled = MediumParams { gamma: 2e-4, ..p };
        assert_eq!(medium_energy(&k, p.theta0, &doubled), 2.0 * e);
    }

    #[test]
    fn regularization_examples() {
        let g0 = [Vector3::zeros()];
        assert_eq!(regularization_density(&[0.3], &[0.6], &g0, 1.0, 1e-2, 2.0).unwrap(), 0.0);
        assert_eq!(regularization_density(&[0.5], &[0.0], &g0, 1.0, 1e-2, 2.0).unwrap(), 0.125);
        let g = [Vector3::new(2.0, 0.0, 0.0)];
        assert!((regularization_density(&[0.0], &[0.0], &g, 1.0, 1e-2, 2.0).unwrap() - 0.02).abs() < 1e-17);
        assert!(matches!(
            regularization_density(&[0.0], &[0.0], &g0, 1.0, 1e-2, 0.0),
            Err(ElementError::DomainScale(_))
        ));
    }
}
