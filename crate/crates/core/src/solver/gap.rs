//! Gap between opposing node sets in the deformed configuration.

use crate::error::SolverError;
use crate::mesh::Mesh;

use super::dofmap::DofMap;

pub fn deformed_position(mesh: &Mesh, dofs: &DofMap, state: &[f64], node: usize) -> [f64; 3] {
    let mut x = mesh.nodes[node];
    for (a, xa) in x.iter_mut().enumerate().take(mesh.dim) {
        *xa += state[dofs.u(node, a)];
    }
    x
}

/// For every upper node, the distance along `axis` to the deformed lower
/// surface; returns the minimum, clamped at 0.
///
/// In 2D the lower set is treated as a polyline ordered along the
/// transverse direction and interpolated at the upper node. In 3D the
/// lower node nearest in the transverse plane stands in for the surface.
pub fn measure_gap(
    mesh: &Mesh,
    dofs: &DofMap,
    state: &[f64],
    lower: &str,
    upper: &str,
    axis: usize,
) -> Result<f64, SolverError> {
    let set = |name: &str| {
        mesh.node_set(name)
            .filter(|s| !s.nodes.is_empty())
            .ok_or_else(|| SolverError::Program(format!("gap node set '{name}' missing or empty")))
    };
    if axis >= mesh.dim {
        return Err(SolverError::Program(format!("gap axis {axis} in a {}D mesh", mesh.dim)));
    }
    let mut lo: Vec<[f64; 3]> = set(lower)?.nodes.iter().map(|&n| deformed_position(mesh, dofs, state, n)).collect();
    let mut gap = f64::INFINITY;
    if mesh.dim == 2 {
        let t = 1 - axis;
        lo.sort_by(|a, b| a[t].total_cmp(&b[t]));
        for &n in &set(upper)?.nodes {
            let x = deformed_position(mesh, dofs, state, n);
            gap = gap.min(x[axis] - surface_height(&lo, t, axis, x[t]));
        }
    } else {
        for &n in &set(upper)?.nodes {
            let x = deformed_position(mesh, dofs, state, n);
            let transverse =
                |y: &[f64; 3]| (0..3).filter(|&a| a != axis).map(|a| (x[a] - y[a]).powi(2)).sum::<f64>();
            let nearest = lo
                .iter()
                .min_by(|a, b| transverse(a).total_cmp(&transverse(b)))
                .expect("non-empty");
            gap = gap.min(x[axis] - nearest[axis]);
        }
    }
    Ok(gap.max(0.0))
}

/// Height along `axis` of a polyline sorted by coordinate `t`, at `at`;
/// constant beyond the ends.
fn surface_height(line: &[[f64; 3]], t: usize, axis: usize, at: f64) -> f64 {
    let k = line.partition_point(|p| p[t] < at);
    if k == 0 {
        return line[0][axis];
    }
    if k == line.len() {
        return line[k - 1][axis];
    }
    let (a, b) = (line[k - 1], line[k]);
    let span = b[t] - a[t];
    if span <= 0.0 {
        return a[axis].max(b[axis]);
    }
    a[axis] + (b[axis] - a[axis]) * (at - a[t]) / span
}
