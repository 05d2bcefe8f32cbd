//! Parallel-beam ray sets and their chord segments through a quad mesh.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::mesh::{min_corner_jacobian, Point2, QuadMesh};

/// Chords shorter than this (m) are dropped.
pub const MIN_CHORD: f64 = 1e-12;

/// Half-plane clipping tolerance (m).
pub const CLIP_TOL: f64 = 1e-12;

/// A directed line `origin + s·direction`, `s` in metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    /// Projection angle θ in radians.
    pub angle: f64,
    /// Signed perpendicular offset of the line from the reference center (m).
    pub offset: f64,
    pub origin: Point2,
    /// `(cos θ, sin θ)`.
    pub direction: Point2,
}

impl Ray {
    /// The ray at `(angle, offset)` about `center`, starting upstream of the
    /// circle of radius `radius` about `center`.
    pub fn through(center: Point2, radius: f64, angle: f64, offset: f64) -> Self {
        let direction = Point2::new(angle.cos(), angle.sin());
        let normal = Point2::new(-direction.y, direction.x);
        let origin = center + normal * offset - direction * (2.0 * radius);
        Self {
            angle,
            offset,
            origin,
            direction,
        }
    }

    /// A ray from an explicit origin; the offset is measured from the
    /// coordinate origin.
    pub fn from_origin(origin: Point2, angle: f64) -> Self {
        let direction = Point2::new(angle.cos(), angle.sin());
        let normal = Point2::new(-direction.y, direction.x);
        Self {
            angle,
            offset: origin.dot(normal),
            origin,
            direction,
        }
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        self.origin + self.direction * s
    }

    /// The same line traversed backwards, starting at arc length `s_start`
    /// of this ray.
    pub fn reversed_from(&self, s_start: f64) -> Self {
        let angle = (self.angle + PI).rem_euclid(TAU);
        Self {
            angle,
            offset: -self.offset,
            origin: self.point_at(s_start),
            direction: self.direction * -1.0,
        }
    }
}

/// The part of a ray inside one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub element: usize,
    pub s_in: f64,
    pub s_out: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.s_out - self.s_in
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayPath {
    pub ray: Ray,
    /// Sorted by `s_in`.
    pub segments: Vec<Segment>,
    /// Total in-sample length (m).
    pub length: f64,
}

impl RayPath {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// `n_angles × n_offsets` rays, angle-major. Angles are `2πi/n_angles`;
/// offsets are cell centers of a uniform grid over `[-R, R]`, `R` the mesh
/// bounding radius, so no ray is exactly tangent to the bounding circle.
pub fn generate_rays(mesh: &QuadMesh, n_angles: usize, n_offsets: usize) -> Vec<Ray> {
    let center = mesh.center();
    let radius = mesh.bounding_radius();
    let step = 2.0 * radius / n_offsets as f64;
    let mut rays = Vec::with_capacity(n_angles * n_offsets);
    for i in 0..n_angles {
        let angle = TAU * (i as f64 / n_angles as f64);
        for j in 0..n_offsets {
            let offset = -radius + (j as f64 + 0.5) * step;
            rays.push(Ray::through(center, radius, angle, offset));
        }
    }
    rays
}

/// Parameter interval of `ray` inside `element`, by clipping against the
/// four edge half-planes. `None` when the chord is shorter than [`MIN_CHORD`].
///
/// A ray running exactly along an edge is assigned to the element on its
/// left, so a line along a shared edge is counted once.
pub fn clip_ray_to_element(ray: &Ray, mesh: &QuadMesh, element: usize) -> Result<Option<(f64, f64)>> {
    let corners = mesh.element_corners(element);
    if min_corner_jacobian(&corners) <= 0.0 {
        return Err(Error::DegenerateElement {
            element,
            reason: "element is not convex".into(),
        });
    }
    Ok(clip_convex(ray, &corners))
}

fn clip_convex(ray: &Ray, corners: &[Point2; 4]) -> Option<(f64, f64)> {
    let (mut s_in, mut s_out) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..4 {
        let a = corners[i];
        let edge = corners[(i + 1) % 4] - a;
        let len = edge.norm();
        // signed distance of the ray point from the edge line: dist0 + s·rate
        let dist0 = edge.cross(ray.origin - a) / len;
        let rate = edge.cross(ray.direction) / len;
        if rate.abs() < 1e-15 {
            let inside = if dist0.abs() <= CLIP_TOL {
                edge.dot(ray.direction) > 0.0
            } else {
                dist0 > 0.0
            };
            if !inside {
                return None;
            }
            continue;
        }
        let s = -dist0 / rate;
        if rate > 0.0 {
            s_in = s_in.max(s);
        } else {
            s_out = s_out.min(s);
        }
    }
    (s_out - s_in >= MIN_CHORD).then_some((s_in, s_out))
}

/// All chord segments of `ray` through `mesh`, ordered along the ray.
pub fn trace(ray: &Ray, mesh: &QuadMesh) -> RayPath {
    let normal = Point2::new(-ray.direction.y, ray.direction.x);
    let mut segments = Vec::new();
    for element in 0..mesh.element_count() {
        let corners = mesh.element_corners(element);
        // cheap reject: all corners strictly on one side of the line
        let side = corners.map(|p| (p - ray.origin).dot(normal));
        let lo = side.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = side.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo > CLIP_TOL || hi < -CLIP_TOL {
            continue;
        }
        if let Some((s_in, s_out)) = clip_convex(ray, &corners) {
            segments.push(Segment { element, s_in, s_out });
        }
    }
    segments.sort_by(|a, b| a.s_in.total_cmp(&b.s_in).then(a.element.cmp(&b.element)));
    let length = segments.iter().map(Segment::length).sum();
    RayPath {
        ray: *ray,
        segments,
        length,
    }
}
