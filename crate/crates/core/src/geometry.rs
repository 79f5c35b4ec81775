//! Domains, uniform meshes and the interior degree-of-freedom map.
//!
//! The exterior condition `u = 0` outside the domain is realized by simply
//! not giving boundary nodes a degree of freedom: every discrete function is
//! a combination of interior hat functions, which vanish on the boundary and
//! are extended by zero.

use std::cmp::Ordering;
use std::collections::HashMap;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points are stored in the plane; interval meshes keep the second
/// coordinate at zero.
pub type Point = Vector2<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { bounds: [f64; 2] },
    Rectangle { bounds: [[f64; 2]; 2] },
    /// Disk approximated by the union of grid cells whose centroid lies inside.
    Disk { center: [f64; 2], radius: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Interval { bounds: [a, b] }
    }

    pub fn rectangle(x: [f64; 2], y: [f64; 2]) -> Self {
        Domain::Rectangle { bounds: [x, y] }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        Domain::Disk { center, radius }
    }

    pub fn spatial_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } | Domain::Disk { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let interval_ok = |[a, b]: [f64; 2]| a.is_finite() && b.is_finite() && a < b;
        let ok = match *self {
            Domain::Interval { bounds } => interval_ok(bounds),
            Domain::Rectangle { bounds } => interval_ok(bounds[0]) && interval_ok(bounds[1]),
            Domain::Disk { center, radius } => {
                center.iter().all(|c| c.is_finite()) && radius.is_finite() && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDomain(format!("degenerate bounds in {self:?}")))
        }
    }
}

/// Description of the discrete domain used by the exterior tail integral:
/// either an interval, or an axis-aligned box minus a set of removed cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Footprint {
    Interval { a: f64, b: f64 },
    /// `bbox` and each hole are `[xmin, xmax, ymin, ymax]`.
    BoxWithHoles { bbox: [f64; 4], holes: Vec<[f64; 4]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DofMap {
    pub node_to_dof: Vec<Option<usize>>,
    pub dof_to_node: Vec<usize>,
}

impl DofMap {
    pub fn len(&self) -> usize {
        self.dof_to_node.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dof_to_node.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub nodes: Vec<Point>,
    /// Intervals (2 nodes) or counter-clockwise triangles (3 nodes).
    pub elements: Vec<Vec<usize>>,
    /// Maximum element diameter.
    pub h: f64,
    pub interior: DofMap,
    pub footprint: Footprint,
}

impl Mesh {
    pub fn num_dofs(&self) -> usize {
        self.interior.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.interior.node_to_dof[node]
    }

    pub fn element_points(&self, e: usize) -> Vec<Point> {
        self.elements[e].iter().map(|&n| self.nodes[n]).collect()
    }

    /// Measure (length or area) of element `e`.
    pub fn element_measure(&self, e: usize) -> f64 {
        let p = self.element_points(e);
        match p.len() {
            2 => (p[1] - p[0]).norm(),
            _ => 0.5 * cross(&(p[1] - p[0]), &(p[2] - p[0])).abs(),
        }
    }

    pub fn element_diameter(&self, e: usize) -> f64 {
        let p = self.element_points(e);
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max((p[i] - p[j]).norm());
            }
        }
        d
    }

    pub fn diameter(&self) -> f64 {
        match &self.footprint {
            Footprint::Interval { a, b } => b - a,
            Footprint::BoxWithHoles { bbox, .. } => {
                ((bbox[1] - bbox[0]).powi(2) + (bbox[3] - bbox[2]).powi(2)).sqrt()
            }
        }
    }

    /// Facets (sorted node tuples) that belong to exactly one element.
    pub fn boundary_facets(&self) -> HashMap<Vec<usize>, usize> {
        let mut count: HashMap<Vec<usize>, (usize, usize)> = HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            for skip in 0..el.len() {
                let mut facet: Vec<usize> = el
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &n)| n)
                    .collect();
                facet.sort_unstable();
                count.entry(facet).or_insert((0, e)).0 += 1;
            }
        }
        count
            .into_iter()
            .filter(|(_, (c, _))| *c == 1)
            .map(|(f, (_, e))| (f, e))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.h <= 0.0 || !self.h.is_finite() {
            return Err(Error::InvalidArgument(format!("mesh size h = {}", self.h)));
        }
        for el in &self.elements {
            if el.len() != self.dim + 1 || el.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::InvalidArgument(format!("bad element {el:?}")));
            }
        }
        if self.interior.node_to_dof.len() != self.nodes.len() {
            return Err(Error::InvalidArgument("dof map does not match node count".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "nodes": self.nodes.iter().map(|p| p.iter().take(self.dim).copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            "elements": self.elements,
            "interior_index": self.interior.node_to_dof,
            "h": self.h,
            "footprint": self.footprint,
        })
    }
}

pub(crate) fn cross(a: &Point, b: &Point) -> f64 {
    a.x * b.y - a.y * b.x
}

fn lex(a: &Point, b: &Point) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Build a uniform mesh of `domain` with `resolution` cells per axis.
pub fn build_mesh(domain: &Domain, resolution: usize) -> Result<Mesh> {
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 2, got {resolution}"
        )));
    }
    domain.validate()?;
    match *domain {
        Domain::Interval { bounds: [a, b] } => Ok(interval_mesh(a, b, resolution)),
        Domain::Rectangle { bounds } => {
            grid_mesh(bounds[0], bounds[1], resolution, |_, _| true)
        }
        Domain::Disk { center, radius } => {
            let [cx, cy] = center;
            grid_mesh(
                [cx - radius, cx + radius],
                [cy - radius, cy + radius],
                resolution,
                |x, y| (x - cx).hypot(y - cy) < radius,
            )
        }
    }
}

fn interval_mesh(a: f64, b: f64, n: usize) -> Mesh {
    let h = (b - a) / n as f64;
    let nodes: Vec<Point> = (0..=n)
        .map(|i| {
            // pin the right end exactly
            let x = if i == n { b } else { a + i as f64 * h };
            Point::new(x, 0.0)
        })
        .collect();
    let elements = (0..n).map(|i| vec![i, i + 1]).collect();
    let mut mesh = Mesh {
        dim: 1,
        nodes,
        elements,
        h,
        interior: DofMap {
            node_to_dof: vec![],
            dof_to_node: vec![],
        },
        footprint: Footprint::Interval { a, b },
    };
    let interior: Vec<bool> = (0..=n).map(|i| i != 0 && i != n).collect();
    mesh.interior = interior_dof_map_from_flags(&mesh.nodes, &interior);
    mesh
}

/// Tensor grid over `x × y`, keeping the cells accepted by `keep(centroid)`.
/// Each kept cell is split into two triangles with alternating diagonals.
fn grid_mesh(
    x: [f64; 2],
    y: [f64; 2],
    n: usize,
    keep: impl Fn(f64, f64) -> bool,
) -> Result<Mesh> {
    let dx = (x[1] - x[0]) / n as f64;
    let dy = (y[1] - y[0]) / n as f64;
    let coord = |i: usize, lo: f64, hi: f64, step: f64| {
        if i == n {
            hi
        } else {
            lo + i as f64 * step
        }
    };
    let kept: Vec<bool> = (0..n * n)
        .map(|c| {
            let (i, j) = (c / n, c % n);
            keep(
                x[0] + (i as f64 + 0.5) * dx,
                y[0] + (j as f64 + 0.5) * dy,
            )
        })
        .collect();
    let is_kept = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < n && (j as usize) < n && kept[i as usize * n + j as usize]
    };

    // Grid vertex (i, j) -> mesh node, created in lexicographic order.
    let mut node_of = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut nodes = Vec::new();
    let mut interior_flags = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let (ii, jj) = (i as isize, j as isize);
            let incident = [
                is_kept(ii - 1, jj - 1),
                is_kept(ii, jj - 1),
                is_kept(ii - 1, jj),
                is_kept(ii, jj),
            ];
            if incident.iter().any(|&k| k) {
                node_of[i * (n + 1) + j] = nodes.len();
                nodes.push(Point::new(coord(i, x[0], x[1], dx), coord(j, y[0], y[1], dy)));
                interior_flags.push(incident.iter().all(|&k| k));
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::InvalidDomain("no grid cell lies inside the domain".into()));
    }

    let mut elements = Vec::new();
    let mut holes = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let cell = [
                x[0] + i as f64 * dx,
                coord(i + 1, x[0], x[1], dx),
                y[0] + j as f64 * dy,
                coord(j + 1, y[0], y[1], dy),
            ];
            if !kept[i * n + j] {
                holes.push(cell);
                continue;
            }
            let v = |a: usize, b: usize| node_of[a * (n + 1) + b];
            let (n00, n10, n11, n01) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            if (i + j) % 2 == 0 {
                elements.push(vec![n00, n10, n11]);
                elements.push(vec![n00, n11, n01]);
            } else {
                elements.push(vec![n00, n10, n01]);
                elements.push(vec![n10, n11, n01]);
            }
        }
    }

    let mut mesh = Mesh {
        dim: 2,
        nodes,
        elements,
        h: 0.0,
        interior: DofMap {
            node_to_dof: vec![],
            dof_to_node: vec![],
        },
        footprint: Footprint::BoxWithHoles {
            bbox: [x[0], x[1], y[0], y[1]],
            holes,
        },
    };
    mesh.h = (0..mesh.elements.len())
        .map(|e| mesh.element_diameter(e))
        .fold(0.0, f64::max);
    mesh.interior = interior_dof_map_from_flags(&mesh.nodes, &interior_flags);
    Ok(mesh)
}

fn interior_dof_map_from_flags(nodes: &[Point], interior: &[bool]) -> DofMap {
    let mut order: Vec<usize> = (0..nodes.len()).filter(|&i| interior[i]).collect();
    order.sort_by(|&a, &b| lex(&nodes[a], &nodes[b]).then(a.cmp(&b)));
    let mut node_to_dof = vec![None; nodes.len()];
    for (dof, &node) in order.iter().enumerate() {
        node_to_dof[node] = Some(dof);
    }
    DofMap {
        node_to_dof,
        dof_to_node: order,
    }
}

/// Recompute the interior dof map of `mesh`: nodes not lying on a boundary
/// facet, numbered lexicographically by coordinates.
pub fn interior_dof_map(mesh: &Mesh) -> DofMap {
    let mut on_boundary = vec![false; mesh.nodes.len()];
    for facet in mesh.boundary_facets().keys() {
        for &n in facet {
            on_boundary[n] = true;
        }
    }
    let used = {
        let mut used = vec![false; mesh.nodes.len()];
        for el in &mesh.elements {
            for &n in el {
                used[n] = true;
            }
        }
        used
    };
    let flags: Vec<bool> = (0..mesh.nodes.len())
        .map(|i| used[i] && !on_boundary[i])
        .collect();
    interior_dof_map_from_flags(&mesh.nodes, &flags)
}
