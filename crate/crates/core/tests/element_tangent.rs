mod common;

use common::{element_dofs, element_geometry, materials, KINDS};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use tmc::element::{element_residual, element_system, ElementLoads, TangentMode};
use tmc::oracles::{fd_jacobian, FdScheme};

fn relative_error(k: &DMatrix<f64>, fd: &DMatrix<f64>) -> f64 {
    (k - fd).abs().max() / k.abs().max().max(1e-300)
}

#[test]
fn analytic_tangent_matches_finite_differences() {
    let loads = ElementLoads::default();
    for kind in KINDS {
        for (label, material) in materials() {
            let aux = material.layout(kind.dim()).aux;
            let mut runner = TestRunner::new(Config {
                cases: 50,
                ..Config::default()
            });
            runner
                .run(&(element_geometry(kind), element_dofs(kind, aux)), |(x, dofs)| {
                    let sys = element_system(kind, &x, &dofs, &material, &loads, TangentMode::Analytic).unwrap();
                    let fd = fd_jacobian(
                        |v| element_residual(kind, &x, v, &material, &loads).map(|r| r.as_slice().to_vec()),
                        &dofs,
                        FdScheme::jacobian(),
                    )
                    .unwrap();
                    let err = relative_error(&sys.k, &fd);
                    prop_assert!(err < 1e-6, "{kind:?}/{label}: relative error {err:e}");
                    Ok(())
                })
                .unwrap();
        }
    }
}
