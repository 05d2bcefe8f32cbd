use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::{polygon_area, DomainKind, Point2, QuadMesh};
use crate::error::{Error, Result};

/// Rectangular grid of `nx × ny` elements with row-major node numbering
/// (node `(i, j)` has index `j·(nx+1) + i`).
pub fn build_structured_mesh(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<QuadMesh> {
    let finite = [x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite());
    if !finite || !(x_max > x_min) || !(y_max > y_min) {
        return Err(Error::InvalidGeometry(format!(
            "degenerate rectangle [{x_min}, {x_max}] × [{y_min}, {y_max}]"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidGeometry(format!("need at least one division per axis, got {nx}×{ny}")));
    }
    let coord = |lo: f64, hi: f64, i: usize, n: usize| {
        if i == n {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / n as f64)
        }
    };
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = coord(y_min, y_max, j, ny);
        for i in 0..=nx {
            nodes.push(Point2::new(coord(x_min, x_max, i, nx), y));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elements.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    QuadMesh::new(nodes, elements, DomainKind::Rectangle)
}

/// Division counts of the ring-and-plug block decomposition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingPlugLayout {
    /// Arc divisions per quarter of the bore circle; also the side count of
    /// the plug's central square.
    pub quarter_divisions: usize,
    /// Layers between the central square and the bore circle.
    pub plug_layers: usize,
    /// Radial layers across the ring.
    pub ring_layers: usize,
}

impl RingPlugLayout {
    pub fn element_count(&self) -> usize {
        let n = self.quarter_divisions;
        n * n + 4 * n * (self.plug_layers + self.ring_layers)
    }

    fn for_divisions(n: usize, outer_radius: f64, bore_radius: f64) -> Self {
        let half = SQUARE_FRACTION * bore_radius;
        let nf = n as f64;
        // plug layers sized to the mean of square and arc spacings
        let plug_layers = (nf * (bore_radius - half) / (half + FRAC_PI_4 * bore_radius)).round().max(1.0) as usize;
        // geometric radial grading keeps ring cells close to square
        let ring_layers = ((outer_radius / bore_radius).ln() * 4.0 * nf / (2.0 * PI)).round().max(1.0) as usize;
        Self {
            quarter_divisions: n,
            plug_layers,
            ring_layers,
        }
    }

    /// Picks the layout whose element count is closest to `π·R²/h²`.
    pub fn for_target(outer_radius: f64, bore_radius: f64, target_element_size: f64) -> Result<Self> {
        let target = PI * outer_radius * outer_radius / (target_element_size * target_element_size);
        if !target.is_finite() || target > 5e6 {
            return Err(Error::InvalidGeometry(format!(
                "element size {target_element_size} m gives an unreasonable element count"
            )));
        }
        let mut best = Self::for_divisions(1, outer_radius, bore_radius);
        for n in 2..=4096 {
            let layout = Self::for_divisions(n, outer_radius, bore_radius);
            let err = |l: &Self| (l.element_count() as f64 - target).abs();
            if err(&layout) < err(&best) {
                best = layout;
            }
            if layout.element_count() as f64 > 2.0 * target {
                break;
            }
        }
        Ok(best)
    }
}

/// Half-width of the plug's central square relative to the bore radius.
const SQUARE_FRACTION: f64 = 0.5;

/// All-quad mesh of a disc of radius `outer_radius` centered at the origin
/// containing a plug of radius `bore_radius` centered at `(bore_offset, 0)`.
///
/// The plug is a central square surrounded by four blocks that blend to the
/// bore circle; the ring is swept from the bore circle to the outer circle
/// with geometrically graded layers. Ring and plug share the interface nodes.
pub fn build_ring_plug_mesh(outer_radius: f64, bore_radius: f64, bore_offset: f64, target_element_size: f64) -> Result<QuadMesh> {
    validate_ring_plug(outer_radius, bore_radius, bore_offset)?;
    if !(target_element_size > 0.0) || !target_element_size.is_finite() {
        return Err(Error::InvalidGeometry(format!(
            "target element size must be positive, got {target_element_size}"
        )));
    }
    let layout = RingPlugLayout::for_target(outer_radius, bore_radius, target_element_size)?;
    build_ring_plug_mesh_with_layout(outer_radius, bore_radius, bore_offset, layout)
}

pub(crate) fn validate_ring_plug(outer_radius: f64, bore_radius: f64, bore_offset: f64) -> Result<()> {
    let finite = [outer_radius, bore_radius, bore_offset].iter().all(|v| v.is_finite());
    if !finite || !(bore_radius > 0.0) || !(bore_offset.abs() + bore_radius < outer_radius) {
        return Err(Error::InvalidGeometry(format!(
            "bore of radius {bore_radius} at offset {bore_offset} does not fit inside radius {outer_radius}"
        )));
    }
    Ok(())
}

pub fn build_ring_plug_mesh_with_layout(
    outer_radius: f64,
    bore_radius: f64,
    bore_offset: f64,
    layout: RingPlugLayout,
) -> Result<QuadMesh> {
    validate_ring_plug(outer_radius, bore_radius, bore_offset)?;
    let RingPlugLayout {
        quarter_divisions: n,
        plug_layers,
        ring_layers,
    } = layout;
    if n == 0 || plug_layers == 0 || ring_layers == 0 {
        return Err(Error::InvalidGeometry(format!("invalid layout {layout:?}")));
    }

    let bore_center = Point2::new(bore_offset, 0.0);
    let half = SQUARE_FRACTION * bore_radius;
    let nf = n as f64;
    let mut builder = MeshBuilder::new(1e-9 * outer_radius);

    // central square
    let grid = |i: usize, j: usize| {
        bore_center + Point2::new(-half + 2.0 * half * (i as f64 / nf), -half + 2.0 * half * (j as f64 / nf))
    };
    for j in 0..n {
        for i in 0..n {
            builder.add_quad([grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)]);
        }
    }

    // q indexes 4n stations counter-clockwise, starting at the (+,-) square corner
    let square_point = |q: usize| {
        let q = q % (4 * n);
        let t = (q % n) as f64 / nf;
        let side = 2.0 * half * t;
        let offset = match q / n {
            0 => Point2::new(half, -half + side),
            1 => Point2::new(half - side, half),
            2 => Point2::new(-half, half - side),
            _ => Point2::new(-half + side, -half),
        };
        bore_center + offset
    };
    let angle = |q: usize| -FRAC_PI_4 + FRAC_PI_2 * (q as f64 / nf);
    let arc_point = |q: usize| {
        let phi = angle(q);
        bore_center + Point2::new(bore_radius * phi.cos(), bore_radius * phi.sin())
    };

    // blend blocks between the square and the bore circle
    let blend = |q: usize, k: usize| {
        if k == plug_layers {
            arc_point(q)
        } else {
            square_point(q).lerp(arc_point(q), k as f64 / plug_layers as f64)
        }
    };
    for q in 0..4 * n {
        for k in 0..plug_layers {
            builder.add_quad([blend(q, k), blend(q + 1, k), blend(q + 1, k + 1), blend(q, k + 1)]);
        }
    }

    // ring: geometric layers from the bore circle to the outer circle
    let ratio = outer_radius / bore_radius;
    let grade = |k: usize| match k {
        0 => 0.0,
        k if k == ring_layers => 1.0,
        k => (bore_radius * ratio.powf(k as f64 / ring_layers as f64) - bore_radius) / (outer_radius - bore_radius),
    };
    let ring = |q: usize, k: usize| {
        if k == 0 {
            return arc_point(q);
        }
        let phi = angle(q);
        let outer = Point2::new(outer_radius * phi.cos(), outer_radius * phi.sin());
        arc_point(q).lerp(outer, grade(k))
    };
    for q in 0..4 * n {
        for k in 0..ring_layers {
            builder.add_quad([ring(q, k), ring(q, k + 1), ring(q + 1, k + 1), ring(q + 1, k)]);
        }
    }

    let (nodes, elements) = builder.finish();
    QuadMesh::new(nodes, elements, DomainKind::RingPlug).map_err(|e| match e {
        Error::DegenerateElement { element, reason } => Error::InvalidGeometry(format!(
            "generated element {element} is degenerate ({reason}); reduce the bore offset or element size"
        )),
        other => other,
    })
}

/// Accumulates quads given by corner coordinates, merging nodes that lie
/// within `tol` of each other and orienting every element counter-clockwise.
struct MeshBuilder {
    tol: f64,
    nodes: Vec<Point2>,
    cells: HashMap<(i64, i64), Vec<usize>>,
    elements: Vec<[usize; 4]>,
}

impl MeshBuilder {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            nodes: Vec::new(),
            cells: HashMap::new(),
            elements: Vec::new(),
        }
    }

    fn cell(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn node(&mut self, p: Point2) -> usize {
        let (cx, cy) = self.cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(cx + dx, cy + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| self.nodes[id].distance(p) <= self.tol) {
                        return id;
                    }
                }
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.cells.entry((cx, cy)).or_default().push(id);
        id
    }

    fn add_quad(&mut self, corners: [Point2; 4]) {
        let corners = if polygon_area(&corners) < 0.0 {
            [corners[0], corners[3], corners[2], corners[1]]
        } else {
            corners
        };
        let ids = corners.map(|p| self.node(p));
        self.elements.push(ids);
    }

    fn finish(self) -> (Vec<Point2>, Vec<[usize; 4]>) {
        (self.nodes, self.elements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_unit_square() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        assert_eq!(mesh.node_count(), 4);
        assert_eq!(mesh.element_count(), 1);
        assert_eq!(
            mesh.element_corners(0),
            [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(1.0, 1.0), Point2::new(0.0, 1.0)]
        );
        assert_eq!(mesh.domain_kind(), DomainKind::Rectangle);
    }

    #[test]
    fn beam_grid_counts() {
        let mesh = build_structured_mesh(0.0, 0.02, -0.005, 0.005, 20, 10).unwrap();
        assert_eq!(mesh.node_count(), 231);
        assert_eq!(mesh.element_count(), 200);
        let area = mesh.total_area();
        assert!((area - 0.02 * 0.01).abs() <= 1e-12 * 2e-4);
    }

    #[test]
    fn neighbouring_elements_share_an_edge() {
        let mesh = build_structured_mesh(0.0, 2.0, 0.0, 1.0, 2, 1).unwrap();
        let (a, b) = (mesh.elements()[0], mesh.elements()[1]);
        let shared: Vec<usize> = a.iter().copied().filter(|n| b.contains(n)).collect();
        assert_eq!(shared.len(), 2);
        for n in shared {
            assert_eq!(mesh.nodes()[n].x, 1.0);
        }
    }

    #[test]
    fn degenerate_bounds_rejected() {
        assert!(matches!(
            build_structured_mesh(1.0, 1.0, 0.0, 1.0, 2, 2),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            build_structured_mesh(0.0, 1.0, 0.0, 1.0, 0, 2),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(build_structured_mesh(0.0, f64::NAN, 0.0, 1.0, 1, 1).is_err());
    }

    #[test]
    fn ring_plug_rejects_infeasible_bore() {
        assert!(matches!(
            build_ring_plug_mesh(0.02, 0.012, 0.008, 0.001),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(build_ring_plug_mesh(0.02, 0.0, 0.0, 0.001).is_err());
        assert!(build_ring_plug_mesh(0.02, 0.01, 0.0, 0.0).is_err());
    }

    #[test]
    fn ring_plug_element_count_and_area() {
        for (offset, h) in [(0.0, 0.002), (0.003, 0.0015), (-0.002, 0.001)] {
            let (r, b) = (0.025, 0.01);
            let mesh = build_ring_plug_mesh(r, b, offset, h).unwrap();
            let target = PI * r * r / (h * h);
            let count = mesh.element_count() as f64;
            assert!((count - target).abs() <= 0.2 * target, "{count} vs {target}");
            let area = mesh.total_area();
            assert!((area - PI * r * r).abs() <= 0.01 * PI * r * r);
        }
    }

    #[test]
    fn concentric_ring_plug_is_mirror_symmetric() {
        let mesh = build_ring_plug_mesh(0.02, 0.01, 0.0, 0.0015).unwrap();
        let mut sorted: Vec<Point2> = mesh.nodes().to_vec();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
        for p in mesh.nodes() {
            let mirror = Point2::new(-p.x, p.y);
            let start = sorted.partition_point(|q| q.x < mirror.x - 1e-9);
            let found = sorted[start..]
                .iter()
                .take_while(|q| q.x <= mirror.x + 1e-9)
                .any(|q| q.distance(mirror) <= 1e-9);
            assert!(found, "no mirror image for {p:?}");
        }
    }

    #[test]
    fn ring_and_plug_share_interface_nodes() {
        let (b, offset) = (0.01, 0.004);
        let mesh = build_ring_plug_mesh(0.025, b, offset, 0.002).unwrap();
        let center = Point2::new(offset, 0.0);
        let on_interface = |n: usize| (mesh.nodes()[n].distance(center) - b).abs() < 1e-12;
        let layout = RingPlugLayout::for_target(0.025, b, 0.002).unwrap();
        let n = layout.quarter_divisions;
        let interface: Vec<usize> = (0..mesh.node_count()).filter(|&i| on_interface(i)).collect();
        assert_eq!(interface.len(), 4 * n);
        // every interface node belongs to both a plug element and a ring element
        let plug_end = n * n + 4 * n * layout.plug_layers;
        for node in interface {
            let owners: Vec<usize> = (0..mesh.element_count())
                .filter(|&e| mesh.elements()[e].contains(&node))
                .collect();
            assert!(owners.iter().any(|&e| e < plug_end));
            assert!(owners.iter().any(|&e| e >= plug_end));
        }
    }
}
