#![allow(dead_code)]

use proptest::prelude::*;
use tmc::element::{parent_nodes, ElementMaterial, MediumModel};
use tmc::material::{ConductivityLaw, MediumParams, SolidParams};
use std::collections::BTreeMap;

use tmc::mesh::{load_mesh, ElementKind};
use tmc::solver::{Component, DirichletItem, LoadProgram, Model, ModelOptions, RegionMaterial};

pub const KINDS: [ElementKind; 3] = [ElementKind::T1, ElementKind::Q1, ElementKind::H1];

pub fn solid() -> SolidParams {
    SolidParams {
        bulk: 20.0,
        shear: 10.0,
        alpha: 1e-3,
        conductivity: 10.0,
        theta0: 20.0,
    }
}

pub fn medium(gamma: f64, k_gas: f64, k_cap: f64, law: ConductivityLaw) -> ElementMaterial {
    ElementMaterial::Medium(MediumModel {
        params: MediumParams {
            gamma,
            alpha: 1e-3,
            k_gas,
            k_cap,
            beta1: 1.0,
            beta2: 1e-2,
            theta0: 20.0,
        },
        law,
        d: 2.25,
    })
}

/// Materials exercised by the tangent oracles: a solid and the medium on
/// both conductivity branches and both laws.
pub fn materials() -> Vec<(&'static str, ElementMaterial)> {
    vec![
        ("solid", ElementMaterial::Solid(solid())),
        ("medium", medium(0.3, 1.0, 1e6, ConductivityLaw::Squared)),
        ("medium_capped", medium(1e-4, 1e6, 1e-3, ConductivityLaw::Squared)),
        ("medium_floored", medium(0.3, 1.0, 1e6, ConductivityLaw::Floored)),
    ]
}

/// Reference coordinates: an affine image of the parent element with a
/// small per-node perturbation.
pub fn element_geometry(kind: ElementKind) -> impl Strategy<Value = Vec<[f64; 3]>> {
    let dim = kind.dim();
    let n = kind.nodes();
    (
        prop::collection::vec(0.7..1.3f64, 3),
        prop::collection::vec(-0.15..0.15f64, 3),
        prop::collection::vec(-0.04..0.04f64, 3 * n),
    )
        .prop_map(move |(scale, shear, jitter)| {
            parent_nodes(kind)
                .iter()
                .enumerate()
                .map(|(i, xi)| {
                    let mut x = [0.0; 3];
                    for a in 0..dim {
                        x[a] = scale[a] * xi[a] + jitter[3 * i + a];
                    }
                    x[0] += shear[0] * xi[1];
                    if dim == 3 {
                        x[1] += shear[1] * xi[2];
                        x[2] += shear[2] * xi[0];
                    }
                    x
                })
                .collect()
        })
}

/// Nodal unknowns laid out per node as (u, θ, p).
pub fn element_dofs(kind: ElementKind, aux: usize) -> impl Strategy<Value = Vec<f64>> {
    let dim = kind.dim();
    let per = dim + 1 + aux;
    prop::collection::vec((-1.0..1.0f64, 0.0..100.0f64), per * kind.nodes()).prop_map(move |raw| {
        raw.iter()
            .enumerate()
            .map(|(i, (unit, temp))| match i % per {
                c if c < dim => 0.08 * unit,
                c if c == dim => *temp,
                _ => 0.4 * unit,
            })
            .collect()
    })
}

/// Two Q1 cells stacked vertically: a unit solid square under a medium
/// cell of height `gap`.
pub fn stacked_pair(gap: f64) -> String {
    let top = 1.0 + gap;
    format!(
        "dim 2
node 0 0 0
node 1 1 0
node 2 0 1
node 3 1 1
node 4 0 {top}
node 5 1 {top}
region body solid
region gas third_medium
element 0 Q1 body 0 1 3 2
element 1 Q1 gas 2 3 5 4
nodeset bottom 0 1
nodeset top 4 5
nodeset interface 2 3
"
    )
}

pub fn gas(gamma: f64) -> MediumParams {
    MediumParams {
        gamma,
        alpha: 1e-3,
        k_gas: 1.0,
        k_cap: 10.0,
        beta1: 1.0,
        beta2: 1e-2,
        theta0: 20.0,
    }
}

pub fn fix(set: &str, component: Component, value: f64) -> DirichletItem {
    DirichletItem {
        set: set.into(),
        component,
        value,
        ramp: Default::default(),
    }
}

/// The stacked pair with its bottom clamped at 20 degrees and its top
/// displaced by `uy` at 60 degrees.
pub fn pair_model(threads: usize, uy: f64) -> Model {
    let mesh = load_mesh(stacked_pair(0.25).as_bytes()).unwrap();
    let mut materials = BTreeMap::new();
    materials.insert("body".to_string(), RegionMaterial::Solid(solid()));
    materials.insert("gas".to_string(), RegionMaterial::ThirdMedium(gas(0.05)));
    let program = LoadProgram {
        dirichlet: vec![
            fix("bottom", Component::Ux, 0.0),
            fix("bottom", Component::Uy, 0.0),
            fix("bottom", Component::Theta, 20.0),
            fix("top", Component::Ux, 0.0),
            fix("top", Component::Uy, uy),
            fix("top", Component::Theta, 60.0),
        ],
        ..Default::default()
    };
    let options = ModelOptions {
        threads,
        ..Default::default()
    };
    Model::new(mesh, &materials, program, options).unwrap()
}
