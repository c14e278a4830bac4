//! Self-check suite behind `tmc verify`: each property compares the
//! implementation with an independent reference on seeded random inputs.

use std::f64::consts::E;

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::element::{
    element_residual, element_system, parent_nodes, quadrature, ElementLoads, ElementMaterial, MediumModel,
    TangentMode,
};
use crate::kinematics::{kinematic_state, rotation_proxies, DeformationGradient, KinematicState};
use crate::material::{
    medium_conductivity_with_slope, regularization_density, ConductivityLaw, Hyperelastic, MediumParams, SolidParams,
};
use crate::mesh::ElementKind;
use crate::oracles::{fd_gradient, fd_jacobian, FdScheme};

pub const GROUPS: [&str; 7] = [
    "stress",
    "tangent",
    "quadrature",
    "rigid",
    "conductivity",
    "barrier",
    "regularization",
];

const KINDS: [ElementKind; 3] = [ElementKind::T1, ElementKind::Q1, ElementKind::H1];
const SEED: u64 = 0x7e6d_2025;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(group: &'static str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            group,
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        format!("{mark} {}/{}: {}", self.group, self.name, self.detail)
    }
}

fn solid() -> SolidParams {
    SolidParams {
        bulk: 20.0,
        shear: 10.0,
        alpha: 1e-3,
        conductivity: 10.0,
        theta0: 20.0,
    }
}

fn medium_params() -> MediumParams {
    MediumParams {
        gamma: 0.3,
        alpha: 1e-3,
        k_gas: 1.0,
        k_cap: 1e6,
        beta1: 1.0,
        beta2: 1e-2,
        theta0: 20.0,
    }
}

fn medium() -> ElementMaterial {
    ElementMaterial::Medium(MediumModel {
        params: medium_params(),
        law: ConductivityLaw::Squared,
        d: 2.25,
    })
}

fn roles() -> [(&'static str, ElementMaterial); 2] {
    [("solid", ElementMaterial::Solid(solid())), ("medium", medium())]
}

fn kin(f: &Matrix3<f64>) -> Option<KinematicState> {
    kinematic_state(&DeformationGradient(*f)).ok()
}

fn random_f(rng: &mut StdRng) -> Matrix3<f64> {
    Matrix3::identity() + Matrix3::from_fn(|_, _| rng.gen_range(-0.3..0.3))
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Compares `stress(F)` with the central-difference gradient of
/// `energy(F)` on `samples` random deformations.
pub fn check_stress_gradient(
    label: &str,
    energy: impl Fn(&Matrix3<f64>) -> Option<f64>,
    stress: impl Fn(&Matrix3<f64>) -> Option<Matrix3<f64>>,
    samples: usize,
) -> Check {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    for _ in 0..samples {
        let f = random_f(&mut rng);
        let Some(p) = stress(&f) else { continue };
        let g = fd_gradient(
            |v| energy(&Matrix3::from_column_slice(v)).ok_or(()),
            f.as_slice(),
            FdScheme::gradient(),
        );
        let Ok(g) = g else { continue };
        worst = worst.max(max_rel(p.as_slice(), &g));
        evaluated += 1;
    }
    Check::new(
        "stress",
        label,
        evaluated > 0 && worst < 1e-6,
        format!("max relative error {worst:.3e} over {evaluated} states"),
    )
}

fn stress_checks(samples: usize) -> Vec<Check> {
    let theta = 35.0;
    let laws = [
        ("solid", Hyperelastic::from(&solid())),
        ("medium", Hyperelastic::from(&medium_params())),
    ];
    laws.iter()
        .map(|(label, law)| {
            check_stress_gradient(
                label,
                |f| kin(f).map(|k| law.energy(&k, theta)),
                |f| kin(f).map(|k| law.stress(&k, theta).p),
                samples,
            )
        })
        .collect()
}

fn random_geometry(kind: ElementKind, rng: &mut StdRng) -> Vec<[f64; 3]> {
    let dim = kind.dim();
    parent_nodes(kind)
        .iter()
        .map(|xi| {
            let mut x = [0.0; 3];
            for a in 0..dim {
                x[a] = xi[a] + rng.gen_range(-0.04..0.04);
            }
            x
        })
        .collect()
}

fn random_dofs(kind: ElementKind, aux: usize, rng: &mut StdRng) -> Vec<f64> {
    let dim = kind.dim();
    let per = dim + 1 + aux;
    (0..per * kind.nodes())
        .map(|i| match i % per {
            c if c < dim => rng.gen_range(-0.08..0.08),
            c if c == dim => rng.gen_range(0.0..100.0),
            _ => rng.gen_range(-0.4..0.4),
        })
        .collect()
}

fn tangent_checks(samples: usize) -> Vec<Check> {
    let loads = ElementLoads::default();
    let mut out = Vec::new();
    for kind in KINDS {
        for (label, material) in roles() {
            let mut rng = StdRng::seed_from_u64(SEED);
            let aux = material.layout(kind.dim()).aux;
            let mut worst = 0.0f64;
            let mut failure = None;
            for _ in 0..samples {
                let x = random_geometry(kind, &mut rng);
                let dofs = random_dofs(kind, aux, &mut rng);
                let result = element_system(kind, &x, &dofs, &material, &loads, TangentMode::Analytic).and_then(|sys| {
                    fd_jacobian(
                        |v| element_residual(kind, &x, v, &material, &loads).map(|r| r.as_slice().to_vec()),
                        &dofs,
                        FdScheme::jacobian(),
                    )
                    .map(|fd: DMatrix<f64>| (sys.k - &fd).abs().max() / fd.abs().max().max(1e-300))
                });
                match result {
                    Ok(e) => worst = worst.max(e),
                    Err(e) => failure = Some(e.to_string()),
                }
            }
            let detail = match &failure {
                Some(e) => format!("evaluation failed: {e}"),
                None => format!("max relative error {worst:.3e} over {samples} states"),
            };
            out.push(Check::new(
                "tangent",
                format!("{}/{label}", kind.name()),
                failure.is_none() && worst < 1e-6,
                detail,
            ));
        }
    }
    out
}

fn quadrature_checks() -> Vec<Check> {
    KINDS
        .iter()
        .map(|&kind| {
            let measure = match kind {
                ElementKind::T1 => 0.5,
                ElementKind::Q1 => 4.0,
                ElementKind::H1 => 8.0,
            };
            let sum: f64 = quadrature(kind).iter().map(|q| q.weight).sum();
            Check::new(
                "quadrature",
                kind.name(),
                sum == measure,
                format!("weights sum to {sum}, parent measure {measure}"),
            )
        })
        .collect()
}

fn rotation(dim: usize, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    if dim == 2 {
        Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
    } else {
        let rz = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c);
        rz * rx
    }
}

/// A rigid rotation plus translation at the reference temperature, with
/// the auxiliary fields at their consistent values, must leave a zero
/// residual.
fn rigid_checks() -> Vec<Check> {
    let loads = ElementLoads::default();
    let mut out = Vec::new();
    for kind in KINDS {
        let dim = kind.dim();
        let r = rotation(dim, 0.3);
        let shift = Vector3::new(0.2, -0.1, if dim == 3 { 0.05 } else { 0.0 });
        for (label, material) in roles() {
            let mut rng = StdRng::seed_from_u64(SEED);
            let x = random_geometry(kind, &mut rng);
            let layout = material.layout(dim);
            let proxies = rotation_proxies(&DeformationGradient(r), dim).expect("well-conditioned rotation");
            let d = match &material {
                ElementMaterial::Medium(m) => m.d,
                ElementMaterial::Solid(_) => 1.0,
            };
            let mut dofs = Vec::new();
            for xn in &x {
                let xv = Vector3::from(*xn);
                let u = r * xv - xv + shift;
                dofs.extend_from_slice(&u.as_slice()[..dim]);
                dofs.push(20.0);
                dofs.extend(proxies.as_slice().iter().take(layout.aux).map(|f| f * d));
            }
            let check = match element_residual(kind, &x, &dofs, &material, &loads) {
                Ok(res) => {
                    let m = res.amax();
                    Check::new("rigid", format!("{}/{label}", kind.name()), m < 1e-12, format!("max |r| = {m:.3e}"))
                }
                Err(e) => Check::new("rigid", format!("{}/{label}", kind.name()), false, e.to_string()),
            };
            out.push(check);
        }
    }
    out
}

fn conductivity_checks() -> Vec<Check> {
    let p = MediumParams {
        k_gas: 2.0,
        k_cap: 50.0,
        ..medium_params()
    };
    let k = |j: f64| medium_conductivity_with_slope(j, &p, ConductivityLaw::Squared).0;
    let j_cap = (-(p.k_cap / p.k_gas).sqrt()).exp();
    vec![
        Check::new("conductivity", "uncompressed", k(1.0) == 0.0, format!("k(1) = {}", k(1.0))),
        Check::new(
            "conductivity",
            "unit_log_strain",
            (k(E.recip()) - p.k_gas).abs() <= 1e-12 * p.k_gas,
            format!("k(1/e) = {}, k_TM = {}", k(E.recip()), p.k_gas),
        ),
        Check::new(
            "conductivity",
            "cap",
            [j_cap, 0.5 * j_cap, 1e-3 * j_cap].iter().all(|&j| (k(j) - p.k_cap).abs() <= 1e-9 * p.k_cap),
            format!("k = k_cap for J <= {j_cap:.6e}"),
        ),
    ]
}

fn barrier_checks() -> Vec<Check> {
    let law = Hyperelastic::from(&medium_params());
    let theta = medium_params().theta0;
    let pressures: Vec<f64> = [0.5, 0.1, 0.01]
        .iter()
        .map(|&j| {
            let f = Matrix3::from_diagonal(&Vector3::new(1.0, j, 1.0));
            let k = kin(&f).expect("positive J");
            let sigma = law.stress(&k, theta).p * f.transpose() / k.j;
            -sigma.trace() / 3.0
        })
        .collect();
    let increasing = pressures.windows(2).all(|w| w[1] > w[0]) && pressures[0] > 0.0;
    vec![Check::new(
        "barrier",
        "pressure_rises_as_volume_vanishes",
        increasing,
        format!("p(J=0.5, 0.1, 0.01) = {:.4e}, {:.4e}, {:.4e}", pressures[0], pressures[1], pressures[2]),
    )]
}

fn regularization_checks() -> Vec<Check> {
    let d = 2.0;
    let zero = [Vector3::zeros()];
    let g = [Vector3::new(0.1, 0.0, 0.0)];
    let density = |f: f64, p: f64, grad: &[Vector3<f64>]| regularization_density(&[f], &[p], grad, 1.0, 1e-2, d);
    let cases = [
        ("consistent_and_flat", density(0.2, 0.4, &zero), true),
        ("penalty_only", density(0.2, 0.0, &zero), false),
        ("gradient_only", density(0.2, 0.4, &g), false),
    ];
    cases
        .into_iter()
        .map(|(name, v, vanishes)| match v {
            Ok(v) => Check::new(
                "regularization",
                name,
                (v == 0.0) == vanishes && v >= 0.0,
                format!("density {v:.3e}"),
            ),
            Err(e) => Check::new("regularization", name, false, e.to_string()),
        })
        .collect()
}

/// Runs the groups named in `only`, or every group when it is empty.
pub fn run_checks(only: &[String]) -> Result<Vec<Check>, String> {
    if let Some(bad) = only.iter().find(|g| !GROUPS.contains(&g.as_str())) {
        return Err(format!("unknown group '{bad}' (expected one of {})", GROUPS.join(", ")));
    }
    let wanted = |g: &str| only.is_empty() || only.iter().any(|o| o == g);
    let mut out = Vec::new();
    for group in GROUPS {
        if !wanted(group) {
            continue;
        }
        out.extend(match group {
            "stress" => stress_checks(50),
            "tangent" => tangent_checks(50),
            "quadrature" => quadrature_checks(),
            "rigid" => rigid_checks(),
            "conductivity" => conductivity_checks(),
            "barrier" => barrier_checks(),
            _ => regularization_checks(),
        });
    }
    Ok(out)
}
