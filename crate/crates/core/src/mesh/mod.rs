//! Quadrilateral meshes of the sample cross-section.
//!
//! A [`QuadMesh`] is immutable once built: every constructor runs the full
//! validation (index range, counter-clockwise convex elements, no coincident
//! nodes), so downstream code can assume well-formed elements.

mod basis;
mod generate;
mod stiffness;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use basis::{element_bases, element_coefficients, BilinearCoeffs, ElementBasis, LocalFrame};
pub use generate::{build_ring_plug_mesh, build_ring_plug_mesh_with_layout, build_structured_mesh, RingPlugLayout};
pub(crate) use generate::validate_ring_plug;
pub use stiffness::{assemble_stiffness, StiffnessMatrix};

/// Smallest admissible corner Jacobian determinant, in m².
pub const MIN_CORNER_JACOBIAN: f64 = 1e-14;

/// Nodes closer than this (in m) are considered coincident.
pub const COINCIDENT_NODE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(self.x + t * (other.x - self.x), self.y + t * (other.y - self.y))
    }
}

impl std::ops::Add for Point2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Rectangle,
    RingPlug,
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadMesh {
    nodes: Vec<Point2>,
    elements: Vec<[usize; 4]>,
    domain_kind: DomainKind,
    center: Point2,
    radius: f64,
}

impl QuadMesh {
    /// Validates and wraps the given nodes and elements.
    pub fn new(nodes: Vec<Point2>, elements: Vec<[usize; 4]>, domain_kind: DomainKind) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        if let Some(i) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidMesh(format!("node {i} has non-finite coordinates")));
        }
        for (e, elem) in elements.iter().enumerate() {
            for (k, &n) in elem.iter().enumerate() {
                if n >= nodes.len() {
                    return Err(Error::InvalidMesh(format!(
                        "element {e} references node {n} but the mesh has {} nodes",
                        nodes.len()
                    )));
                }
                if elem[..k].contains(&n) {
                    return Err(Error::InvalidMesh(format!("element {e} repeats node {n}")));
                }
            }
            let corners = elem.map(|n| nodes[n]);
            let det = min_corner_jacobian(&corners);
            if det < MIN_CORNER_JACOBIAN {
                return Err(Error::DegenerateElement {
                    element: e,
                    reason: format!(
                        "corner Jacobian determinant {det:e} m² (elements must be convex and counter-clockwise)"
                    ),
                });
            }
        }
        check_coincident_nodes(&nodes)?;

        let (center, radius) = bounding_circle(&nodes);
        Ok(Self {
            nodes,
            elements,
            domain_kind,
            center,
            radius,
        })
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn domain_kind(&self) -> DomainKind {
        self.domain_kind
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn element_corners(&self, element: usize) -> [Point2; 4] {
        self.elements[element].map(|n| self.nodes[n])
    }

    /// Center of the node bounding box; rays are parameterized about this point.
    pub fn center(&self) -> Point2 {
        self.center
    }

    /// Radius of the smallest circle about [`Self::center`] containing every node.
    pub fn bounding_radius(&self) -> f64 {
        self.radius
    }

    pub fn element_area(&self, element: usize) -> f64 {
        polygon_area(&self.element_corners(element))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.element_count()).map(|e| self.element_area(e)).sum()
    }

    /// True if `p` lies inside or on the boundary of `element` (within `tol` m).
    pub fn element_contains(&self, element: usize, p: Point2, tol: f64) -> bool {
        let c = self.element_corners(element);
        (0..4).all(|i| {
            let a = c[i];
            let b = c[(i + 1) % 4];
            let edge = b - a;
            edge.cross(p - a) / edge.norm() >= -tol
        })
    }

    /// Index of the first element containing `p`, if any.
    pub fn locate(&self, p: Point2, tol: f64) -> Option<usize> {
        (0..self.element_count()).find(|&e| self.element_contains(e, p, tol))
    }

    pub fn to_json(&self) -> String {
        let file = MeshFileRef {
            nodes: self.nodes.iter().map(|p| [p.x, p.y]).collect(),
            elements: &self.elements,
            domain_kind: self.domain_kind,
        };
        let mut s = serde_json::to_string(&file).expect("mesh serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile = serde_json::from_str(text)?;
        let nodes = file.nodes.into_iter().map(|[x, y]| Point2::new(x, y)).collect();
        Self::new(nodes, file.elements, file.domain_kind)
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        writer.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn read_json<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize)]
struct MeshFileRef<'a> {
    nodes: Vec<[f64; 2]>,
    elements: &'a [[usize; 4]],
    domain_kind: DomainKind,
}

#[derive(Deserialize)]
struct MeshFile {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    domain_kind: DomainKind,
}

/// Smallest corner Jacobian determinant of the bilinear map from the unit
/// square; positive for strictly convex, counter-clockwise quadrilaterals.
pub(crate) fn min_corner_jacobian(corners: &[Point2; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let p = corners[i];
            let next = corners[(i + 1) % 4];
            let prev = corners[(i + 3) % 4];
            (next - p).cross(prev - p)
        })
        .fold(f64::INFINITY, f64::min)
}

pub(crate) fn polygon_area(corners: &[Point2]) -> f64 {
    let n = corners.len();
    0.5 * (0..n).map(|i| corners[i].cross(corners[(i + 1) % n])).sum::<f64>()
}

fn bounding_circle(nodes: &[Point2]) -> (Point2, f64) {
    let (mut lo, mut hi) = (Point2::new(f64::INFINITY, f64::INFINITY), Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in nodes {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let center = lo.lerp(hi, 0.5);
    let radius = nodes.iter().map(|p| p.distance(center)).fold(0.0, f64::max);
    (center, radius)
}

fn check_coincident_nodes(nodes: &[Point2]) -> Result<()> {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].x.total_cmp(&nodes[b].x));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if nodes[j].x - nodes[i].x > COINCIDENT_NODE_TOL {
                break;
            }
            if nodes[i].distance(nodes[j]) <= COINCIDENT_NODE_TOL {
                return Err(Error::InvalidMesh(format!("nodes {} and {} coincide", i.min(j), i.max(j))));
            }
        }
    }
    Ok(())
}
