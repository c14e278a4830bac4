//! Structured benchmark geometries.
//!
//! Every preset is a stack of layers (solid, third medium, solid) over a
//! rectangular footprint. In 2D the layers are bounded by curves `y(x)`,
//! which lets the wavy preset reuse the same generator.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Element, ElementKind, Mesh, MirrorPlane, NodeSet, Region, RegionRole};
use crate::error::MeshError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Block2d,
    TwoBlocks2d,
    WavyInterface2d,
    BlockPlate3d,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Block2d,
        Preset::TwoBlocks2d,
        Preset::WavyInterface2d,
        Preset::BlockPlate3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Block2d => "block2d",
            Preset::TwoBlocks2d => "two_blocks2d",
            Preset::WavyInterface2d => "wavy_interface2d",
            Preset::BlockPlate3d => "block_plate3d",
        }
    }
}

impl FromStr for Preset {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| MeshError::UnknownPreset(s.to_string()))
    }
}

/// Resolution and geometry overrides. Unset fields take the preset's
/// defaults.
///
/// Layers are counted bottom to top: `lower` solid, `medium`, `upper`
/// solid. `block2d` has no lower solid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    pub element: Option<ElementKind>,
    /// elements across the width (each in-plane direction in 3D)
    pub nx: Option<usize>,
    pub lower_layers: Option<usize>,
    pub medium_layers: Option<usize>,
    pub upper_layers: Option<usize>,
    /// footprint side; for `block_plate3d` the side of the modelled quarter
    pub width: Option<f64>,
    pub lower_height: Option<f64>,
    pub medium_height: Option<f64>,
    pub upper_height: Option<f64>,
    /// wave amplitude of the lower solid's surface (`wavy_interface2d`)
    pub amplitude: Option<f64>,
    pub wavelength: Option<f64>,
    /// wave amplitude of the upper solid's surface, in phase with the lower
    pub upper_amplitude: Option<f64>,
}

fn bad(name: &str, message: impl Into<String>) -> MeshError {
    MeshError::BadParameter {
        name: name.to_string(),
        message: message.into(),
    }
}

fn count(value: Option<usize>, default: usize, name: &str) -> Result<usize, MeshError> {
    match value.unwrap_or(default) {
        0 => Err(bad(name, "resolution must be at least 1")),
        n => Ok(n),
    }
}

fn length(value: Option<f64>, default: f64, name: &str) -> Result<f64, MeshError> {
    let v = value.unwrap_or(default);
    if !(v.is_finite() && v > 0.0) {
        return Err(bad(name, format!("must be positive, got {v}")));
    }
    Ok(v)
}

struct Layer {
    region: usize,
    count: usize,
}

/// Layer interfaces as functions of the in-plane coordinate.
type Surface = Box<dyn Fn(f64) -> f64>;

struct Stack {
    width: f64,
    nx: usize,
    layers: Vec<Layer>,
    /// `layers.len() + 1` bounding surfaces, bottom first
    surfaces: Vec<Surface>,
    regions: Vec<Region>,
}

impl Stack {
    fn rows(&self) -> usize {
        self.layers.iter().map(|l| l.count).sum()
    }

    /// Height coordinate of node row `row` at in-plane position `x`.
    fn row_height(&self, row: usize, x: f64) -> f64 {
        let mut start = 0;
        for (k, layer) in self.layers.iter().enumerate() {
            if row <= start + layer.count {
                let t = (row - start) as f64 / layer.count as f64;
                let lo = (self.surfaces[k])(x);
                let hi = (self.surfaces[k + 1])(x);
                return lo + t * (hi - lo);
            }
            start += layer.count;
        }
        unreachable!("row {row} outside stack")
    }

    fn row_of_surface(&self, k: usize) -> usize {
        self.layers[..k].iter().map(|l| l.count).sum()
    }

    fn layer_of_cell_row(&self, row: usize) -> usize {
        let mut start = 0;
        for layer in &self.layers {
            if row < start + layer.count {
                return layer.region;
            }
            start += layer.count;
        }
        unreachable!("cell row {row} outside stack")
    }
}

/// Node sets shared by the 2D presets; `patch` filters the loaded part of
/// the top edge.
fn build_2d(stack: &Stack, kind: ElementKind, gap_surfaces: (usize, usize), patch: impl Fn(f64) -> bool) -> Mesh {
    let nx = stack.nx;
    let rows = stack.rows();
    let stride = nx + 1;
    let id = |i: usize, r: usize| r * stride + i;

    let mut nodes = Vec::with_capacity(stride * (rows + 1));
    for r in 0..=rows {
        for i in 0..=nx {
            let x = stack.width * i as f64 / nx as f64;
            let y = stack.row_height(r, x);
            nodes.push([x, y, 0.0]);
        }
    }

    let mut elements = Vec::new();
    for r in 0..rows {
        let region = stack.layer_of_cell_row(r);
        for i in 0..nx {
            let q = [id(i, r), id(i + 1, r), id(i + 1, r + 1), id(i, r + 1)];
            match kind {
                ElementKind::T1 => {
                    for nodes in [vec![q[0], q[1], q[2]], vec![q[0], q[2], q[3]]] {
                        elements.push(Element {
                            id: elements.len(),
                            kind,
                            nodes,
                            region,
                        });
                    }
                }
                _ => elements.push(Element {
                    id: elements.len(),
                    kind,
                    nodes: q.to_vec(),
                    region,
                }),
            }
        }
    }

    let row_nodes = |r: usize| (0..=nx).map(move |i| id(i, r)).collect::<Vec<_>>();
    let top = row_nodes(rows);
    let mut sides: Vec<usize> = (0..=rows).flat_map(|r| [id(0, r), id(nx, r)]).collect();
    sides.sort_unstable();
    let loaded = top.iter().copied().filter(|&n| patch(nodes[n][0])).collect();
    let node_sets = vec![
        NodeSet {
            name: "bottom".into(),
            nodes: row_nodes(0),
        },
        NodeSet {
            name: "top".into(),
            nodes: top,
        },
        NodeSet {
            name: "sides".into(),
            nodes: sides,
        },
        NodeSet {
            name: "loaded_patch".into(),
            nodes: loaded,
        },
        NodeSet {
            name: "gap_lower".into(),
            nodes: row_nodes(stack.row_of_surface(gap_surfaces.0)),
        },
        NodeSet {
            name: "gap_upper".into(),
            nodes: row_nodes(stack.row_of_surface(gap_surfaces.1)),
        },
    ];

    Mesh {
        dim: 2,
        nodes,
        elements,
        regions: stack.regions.clone(),
        node_sets,
        mirrors: vec![],
    }
}

/// Quarter model with symmetry planes at `x = 0` and `y = 0`; the loaded
/// patch covers `[0, width/2]²` on the top face.
fn build_3d(stack: &Stack, gap_surfaces: (usize, usize)) -> Mesh {
    let n = stack.nx;
    let rows = stack.rows();
    let s = n + 1;
    let id = |i: usize, j: usize, r: usize| (r * s + j) * s + i;

    let mut nodes = Vec::with_capacity(s * s * (rows + 1));
    for r in 0..=rows {
        let z = stack.row_height(r, 0.0);
        for j in 0..=n {
            for i in 0..=n {
                let h = stack.width / n as f64;
                nodes.push([h * i as f64, h * j as f64, z]);
            }
        }
    }

    let mut elements = Vec::new();
    for r in 0..rows {
        let region = stack.layer_of_cell_row(r);
        for j in 0..n {
            for i in 0..n {
                let conn = vec![
                    id(i, j, r),
                    id(i + 1, j, r),
                    id(i + 1, j + 1, r),
                    id(i, j + 1, r),
                    id(i, j, r + 1),
                    id(i + 1, j, r + 1),
                    id(i + 1, j + 1, r + 1),
                    id(i, j + 1, r + 1),
                ];
                elements.push(Element {
                    id: elements.len(),
                    kind: ElementKind::H1,
                    nodes: conn,
                    region,
                });
            }
        }
    }

    let layer = |r: usize| (0..s * s).map(move |k| r * s * s + k).collect::<Vec<_>>();
    let select = |pred: &dyn Fn(usize, usize, usize) -> bool| {
        let mut out = Vec::new();
        for r in 0..=rows {
            for j in 0..=n {
                for i in 0..=n {
                    if pred(i, j, r) {
                        out.push(id(i, j, r));
                    }
                }
            }
        }
        out
    };
    let half = n / 2;
    let node_sets = vec![
        NodeSet {
            name: "bottom".into(),
            nodes: layer(0),
        },
        NodeSet {
            name: "top".into(),
            nodes: layer(rows),
        },
        NodeSet {
            name: "sides".into(),
            nodes: select(&|i, j, _| i == n || j == n),
        },
        NodeSet {
            name: "sym_x".into(),
            nodes: select(&|i, _, _| i == 0),
        },
        NodeSet {
            name: "sym_y".into(),
            nodes: select(&|_, j, _| j == 0),
        },
        NodeSet {
            name: "loaded_patch".into(),
            nodes: select(&|i, j, r| r == rows && i <= half && j <= half),
        },
        NodeSet {
            name: "gap_lower".into(),
            nodes: layer(stack.row_of_surface(gap_surfaces.0)),
        },
        NodeSet {
            name: "gap_upper".into(),
            nodes: layer(stack.row_of_surface(gap_surfaces.1)),
        },
    ];

    Mesh {
        dim: 3,
        nodes,
        elements,
        regions: stack.regions.clone(),
        node_sets,
        mirrors: vec![
            MirrorPlane {
                axis: 0,
                coordinate: 0.0,
            },
            MirrorPlane {
                axis: 1,
                coordinate: 0.0,
            },
        ],
    }
}

fn regions(names: &[(&str, RegionRole)]) -> Vec<Region> {
    names
        .iter()
        .map(|(n, r)| Region {
            name: n.to_string(),
            role: *r,
        })
        .collect()
}

fn flat(y: f64) -> Surface {
    Box::new(move |_| y)
}

fn kind_2d(p: &PresetParams, default: ElementKind) -> Result<ElementKind, MeshError> {
    match p.element.unwrap_or(default) {
        ElementKind::H1 => Err(bad("element", "H1 is not a 2D element")),
        k => Ok(k),
    }
}

/// Three-layer stack (lower solid, medium, upper solid) used by all presets
/// except `block2d`.
#[allow(clippy::too_many_arguments)]
fn sandwich(
    p: &PresetParams,
    nx: usize,
    counts: [usize; 3],
    width: f64,
    heights: [f64; 3],
    lower_surface: Surface,
    upper_surface: Surface,
) -> Result<Stack, MeshError> {
    let nx = count(p.nx, nx, "nx")?;
    let lower = count(p.lower_layers, counts[0], "lower_layers")?;
    let medium = count(p.medium_layers, counts[1], "medium_layers")?;
    let upper = count(p.upper_layers, counts[2], "upper_layers")?;
    let top = heights.iter().sum::<f64>();
    Ok(Stack {
        width,
        nx,
        layers: vec![
            Layer { region: 0, count: lower },
            Layer { region: 1, count: medium },
            Layer { region: 2, count: upper },
        ],
        surfaces: vec![flat(0.0), lower_surface, upper_surface, flat(top)],
        regions: regions(&[
            ("lower", RegionRole::Solid),
            ("medium", RegionRole::ThirdMedium),
            ("upper", RegionRole::Solid),
        ]),
    })
}

pub fn generate_preset_mesh(preset: Preset, p: &PresetParams) -> Result<Mesh, MeshError> {
    let mesh = match preset {
        Preset::Block2d => {
            let kind = kind_2d(p, ElementKind::Q1)?;
            let width = length(p.width, 1.0, "width")?;
            let hm = length(p.medium_height, 0.25, "medium_height")?;
            let hu = length(p.upper_height, 2.0, "upper_height")?;
            let stack = Stack {
                width,
                nx: count(p.nx, 32, "nx")?,
                layers: vec![
                    Layer {
                        region: 0,
                        count: count(p.medium_layers, 8, "medium_layers")?,
                    },
                    Layer {
                        region: 1,
                        count: count(p.upper_layers, 32, "upper_layers")?,
                    },
                ],
                surfaces: vec![flat(0.0), flat(hm), flat(hm + hu)],
                regions: regions(&[("medium", RegionRole::ThirdMedium), ("upper", RegionRole::Solid)]),
            };
            build_2d(&stack, kind, (0, 1), |_| true)
        }
        Preset::TwoBlocks2d => {
            let kind = kind_2d(p, ElementKind::Q1)?;
            let width = length(p.width, 1.0, "width")?;
            let h = [
                length(p.lower_height, 1.0, "lower_height")?,
                length(p.medium_height, 0.25, "medium_height")?,
                length(p.upper_height, 1.0, "upper_height")?,
            ];
            let stack = sandwich(p, 64, [64, 16, 64], width, h, flat(h[0]), flat(h[0] + h[1]))?;
            build_2d(&stack, kind, (1, 2), |x| x >= 0.5 * width - 1e-12 * width)
        }
        Preset::WavyInterface2d => {
            let kind = kind_2d(p, ElementKind::Q1)?;
            let amplitude = p.amplitude.ok_or_else(|| bad("amplitude", "required for wavy_interface2d"))?;
            let wavelength = p.wavelength.ok_or_else(|| bad("wavelength", "required for wavy_interface2d"))?;
            let upper_amplitude = p.upper_amplitude.unwrap_or(0.0);
            let width = length(p.width, 1.0, "width")?;
            let wavelength = length(Some(wavelength), 0.0, "wavelength")?;
            let h = [
                length(p.lower_height, 1.5, "lower_height")?,
                length(p.medium_height, 0.5, "medium_height")?,
                length(p.upper_height, 1.5, "upper_height")?,
            ];
            if !(amplitude.is_finite() && upper_amplitude.is_finite()) {
                return Err(bad("amplitude", "must be finite"));
            }
            if amplitude.abs() + upper_amplitude.abs() >= h[1] {
                return Err(bad("amplitude", "waves would close the medium layer"));
            }
            if amplitude.abs() >= h[0] || upper_amplitude.abs() >= h[2] {
                return Err(bad("amplitude", "waves exceed the solid thickness"));
            }
            let k = 2.0 * PI / wavelength;
            let (hl, hm) = (h[0], h[1]);
            let lower: Surface = Box::new(move |x| hl + amplitude * (k * x).sin());
            let upper: Surface = Box::new(move |x| hl + hm + upper_amplitude * (k * x).sin());
            let stack = sandwich(p, 24, [12, 6, 12], width, h, lower, upper)?;
            build_2d(&stack, kind, (1, 2), |_| true)
        }
        Preset::BlockPlate3d => {
            if matches!(p.element, Some(k) if k != ElementKind::H1) {
                return Err(bad("element", "block_plate3d uses H1 elements"));
            }
            if p.amplitude.is_some() || p.wavelength.is_some() || p.upper_amplitude.is_some() {
                return Err(bad("amplitude", "only used by wavy_interface2d"));
            }
            let nx = count(p.nx, 8, "nx")?;
            // solid layering scales with the in-plane resolution: 5/3 at 8×8
            let scaled = |base: usize| (base * nx).div_ceil(8).max(1);
            let width = length(p.width, 4.0, "width")?;
            let h = [
                length(p.lower_height, 2.0, "lower_height")?,
                length(p.medium_height, 0.5, "medium_height")?,
                length(p.upper_height, 1.0, "upper_height")?,
            ];
            let stack = sandwich(
                p,
                nx,
                [scaled(5), scaled(2), scaled(3)],
                width,
                h,
                flat(h[0]),
                flat(h[0] + h[1]),
            )?;
            build_3d(&stack, (1, 2))
        }
    };
    mesh.validate()?;
    Ok(mesh)
}
