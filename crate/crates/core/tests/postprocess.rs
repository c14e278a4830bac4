mod common;

use common::{pair_model, solid};
use nalgebra::{Matrix3, Vector3};
use tmc::mesh::RegionRole;
use tmc::postprocess::{derive_fields, export_history, export_vtk, extract_profile, ProfileField, VtkOptions};
use tmc::solver::{run_load_program, GapProbe, Model};
use vtkio::model::{Attribute, DataSet, Piece};
use vtkio::Vtk;

/// A state with displacement `(s − 1) X` and a temperature given per node.
fn dilated(model: &Model, s: f64, theta: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
    let mut state = vec![0.0; model.dofs.total()];
    for (n, x) in model.mesh.nodes.iter().enumerate() {
        for a in 0..model.mesh.dim {
            state[model.dofs.u(n, a)] = (s - 1.0) * x[a];
        }
        state[model.dofs.theta(n)] = theta(*x);
    }
    state
}

fn solid_points(model: &Model) -> impl Fn(&&tmc::postprocess::PointFields) -> bool + '_ {
    |p| model.mesh.role_of(&model.mesh.elements[p.element]) == RegionRole::Solid
}

#[test]
fn reference_state_is_stress_and_flux_free() {
    let model = pair_model(1, 0.0);
    let state = dilated(&model, 1.0, |_| 20.0);
    let d = derive_fields(&model, &state).unwrap();
    for p in &d.points {
        assert!(p.sigma.abs().max() < 1e-12, "{}", p.sigma);
        assert!(p.q.abs().max() == 0.0);
        assert!((p.j - 1.0).abs() < 1e-15);
    }
}

#[test]
fn uniform_dilation_matches_closed_form() {
    let model = pair_model(1, 0.0);
    let (s, theta) = (1.05, 45.0);
    let state = dilated(&model, s, |_| theta);
    let d = derive_fields(&model, &state).unwrap();

    // plane strain: F = diag(s, s, 1)
    let m = solid();
    let j = s * s;
    let b = Matrix3::from_diagonal(&Vector3::new(s * s, s * s, 1.0));
    let tau = Matrix3::identity() * (m.bulk * j.ln() - 3.0 * m.alpha * m.bulk * (theta - m.theta0))
        + (b - Matrix3::identity() * (b.trace() / 3.0)) * (m.shear * j.powf(-2.0 / 3.0));
    let expected = tau / j;

    let solid_pts: Vec<_> = d.points.iter().filter(solid_points(&model)).collect();
    assert!(!solid_pts.is_empty());
    for p in &solid_pts {
        assert!((p.sigma - expected).abs().max() < 1e-12 * expected.abs().max(), "{} vs {expected}", p.sigma);
        assert!((p.pressure + expected.trace() / 3.0).abs() < 1e-12);
    }
    // a constant field survives nodal averaging unchanged
    for n in 0..4 {
        let avg = d.solid.sigma[n].unwrap();
        assert!((avg - expected).abs().max() < 1e-12 * expected.abs().max());
    }
    assert!(d.solid.sigma[4].is_none() && d.medium.sigma[4].is_some());
}

#[test]
fn linear_temperature_gives_constant_flux() {
    let model = pair_model(1, 0.0);
    // k = 10 and ∂θ/∂y = 0.2 give q = (0, −2)
    let state = dilated(&model, 1.0, |x| 20.0 + 0.2 * x[1]);
    let d = derive_fields(&model, &state).unwrap();
    let expected = Vector3::new(0.0, -2.0, 0.0);
    for p in d.points.iter().filter(solid_points(&model)) {
        assert!((p.q - expected).norm() < 1e-12, "{}", p.q);
    }
    for n in 0..4 {
        assert!((d.nodal_q(n) - expected).norm() < 1e-12);
    }
}

#[test]
fn profile_interpolates_linear_fields_exactly() {
    let model = pair_model(1, 0.0);
    let state = dilated(&model, 1.02, |x| 20.0 + 3.0 * x[0] + 0.5 * x[1]);
    let samples = extract_profile(&model, &state, [0.3, 0.0, 0.0], [0.3, 1.25, 0.0], 26, ProfileField::Theta);
    for p in &samples {
        let x = p.reference;
        assert!((p.value.unwrap() - (20.0 + 0.9 + 0.5 * x[1])).abs() < 1e-10);
        assert!((p.deformed.unwrap()[1] - 1.02 * x[1]).abs() < 1e-12);
    }
    let outside = extract_profile(&model, &state, [2.0, 0.5, 0.0], [2.0, 0.5, 0.0], 1, ProfileField::Theta);
    assert_eq!(outside[0].value, None);
}

fn vtk_text(model: &Model, state: &[f64], omit_medium: bool) -> Vec<u8> {
    let d = derive_fields(model, state).unwrap();
    let mut out = Vec::new();
    export_vtk(model, state, &d, VtkOptions { omit_medium }, &mut out).unwrap();
    out
}

#[test]
fn vtk_export_parses_and_is_reproducible() {
    let model = pair_model(1, -0.1);
    let (state, _) = run_load_program(&model, None, |_, _| {}).unwrap();
    let full = vtk_text(&model, &state.values, false);
    assert_eq!(full, vtk_text(&model, &state.values, false));

    let parse = |bytes: &[u8]| {
        let vtk = Vtk::parse_legacy_be(bytes).unwrap();
        let DataSet::UnstructuredGrid { pieces, .. } = vtk.data else {
            panic!("not an unstructured grid")
        };
        let Some(Piece::Inline(piece)) = pieces.into_iter().next() else {
            panic!("no inline piece")
        };
        *piece
    };
    let piece = parse(&full);
    assert_eq!(piece.num_points(), model.mesh.nodes.len());
    assert_eq!(piece.cells.num_cells(), 2);
    let names: Vec<String> = piece
        .data
        .point
        .iter()
        .map(|a| match a {
            Attribute::DataArray(d) => d.name.clone(),
            Attribute::Field { name, .. } => name.clone(),
        })
        .collect();
    for want in ["displacement", "temperature", "p_1", "sigma_xy", "pressure", "heat_flux"] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }

    let solid_only = parse(&vtk_text(&model, &state.values, true));
    assert_eq!(solid_only.cells.num_cells(), 1);
    assert_eq!(solid_only.num_points(), model.mesh.nodes.len());
}

#[test]
fn history_csv_records_a_closing_gap() {
    let model = pair_model(1, -0.2);
    let probe = GapProbe {
        lower: "interface".into(),
        upper: "top".into(),
        axis: 1,
    };
    let (state, history) = run_load_program(&model, Some(&probe), |_, _| {}).unwrap();
    let mut out = Vec::new();
    export_history(&history, &mut out).unwrap();

    let mut reader = csv::Reader::from_reader(out.as_slice());
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["step", "lambda", "dlambda", "iterations", "residual", "gap"]);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), history.steps());
    assert_eq!(rows.last().unwrap()[1], 1.0);
    for w in rows.windows(2) {
        assert!(w[1][1] > w[0][1]);
        assert!(w[1][5] < w[0][5], "gap not closing: {} then {}", w[0][5], w[1][5]);
    }
    // both surfaces are flat, so the gap is the height difference of any
    // vertically aligned node pair
    let y = |n: usize| model.mesh.nodes[n][1] + state.values[model.dofs.u(n, 1)];
    let direct = (y(4) - y(2)).min(y(5) - y(3));
    assert_eq!(rows.last().unwrap()[5], direct);
}
