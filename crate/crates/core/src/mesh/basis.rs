use nalgebra::{Matrix4, Vector4};

use super::{polygon_area, Point2, QuadMesh};
use crate::error::{Error, Result};

/// Elements whose scaled interpolation determinant falls below this are
/// treated as degenerate.
const MIN_SCALED_DETERMINANT: f64 = 1e-10;

/// Translated and rotated Cartesian frame attached to an element.
///
/// The origin is the element's first corner and the local x' axis follows
/// the mean direction of the edges 0→1 and 3→2. For axis-aligned elements
/// the rotation is the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalFrame {
    pub origin: Point2,
    pub cos: f64,
    pub sin: f64,
}

impl LocalFrame {
    pub fn for_corners(corners: &[Point2; 4]) -> Self {
        let axis = (corners[1] - corners[0]) + (corners[2] - corners[3]);
        let len = axis.norm();
        Self {
            origin: corners[0],
            cos: axis.x / len,
            sin: axis.y / len,
        }
    }

    pub fn to_local(&self, p: Point2) -> Point2 {
        let d = p - self.origin;
        Point2::new(self.cos * d.x + self.sin * d.y, -self.sin * d.x + self.cos * d.y)
    }
}

/// Coefficients of `β + γx' + ηy' + ζx'y'` for one strain component on one
/// element, with `(x', y')` the element's [`LocalFrame`] coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearCoeffs {
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
    pub zeta: f64,
    pub frame: LocalFrame,
}

impl BilinearCoeffs {
    pub fn evaluate(&self, p: Point2) -> f64 {
        let q = self.frame.to_local(p);
        self.beta + self.gamma * q.x + self.eta * q.y + self.zeta * q.x * q.y
    }
}

/// Precomputed interpolation data for one element: maps the four nodal values
/// of a strain component onto its bilinear coefficients.
#[derive(Clone, Debug)]
pub struct ElementBasis {
    frame: LocalFrame,
    /// Inverse of the corner matrix with rows `[1, x'ᵢ, y'ᵢ, x'ᵢy'ᵢ]`.
    inverse: Matrix4<f64>,
    area: f64,
    /// ∬x' dA and ∬y' dA over the element.
    first_moments: Point2,
}

impl ElementBasis {
    pub fn new(corners: &[Point2; 4], element: usize) -> Result<Self> {
        let frame = LocalFrame::for_corners(corners);
        let local = corners.map(|p| frame.to_local(p));
        let area = polygon_area(&local);
        if !(area > 0.0) {
            return Err(Error::DegenerateElement {
                element,
                reason: format!("non-positive area {area:e}"),
            });
        }
        // work in coordinates scaled by the element size so the determinant
        // test is dimensionless
        let h = area.sqrt();
        let scaled = Matrix4::from_fn(|i, j| {
            let q = local[i] * (1.0 / h);
            [1.0, q.x, q.y, q.x * q.y][j]
        });
        let det = scaled.determinant();
        if det.abs() < MIN_SCALED_DETERMINANT {
            return Err(Error::DegenerateElement {
                element,
                reason: format!("singular corner interpolation matrix (scaled determinant {det:e})"),
            });
        }
        let scaled_inverse = scaled.try_inverse().ok_or_else(|| Error::DegenerateElement {
            element,
            reason: "corner interpolation matrix is not invertible".into(),
        })?;
        let unscale = Matrix4::from_diagonal(&Vector4::new(1.0, 1.0 / h, 1.0 / h, 1.0 / (h * h)));
        let inverse = unscale * scaled_inverse;

        Ok(Self {
            frame,
            inverse,
            area,
            first_moments: first_moments(&local),
        })
    }

    pub fn frame(&self) -> LocalFrame {
        self.frame
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn coefficients(&self, nodal: [f64; 4]) -> BilinearCoeffs {
        let c = self.inverse * Vector4::from(nodal);
        BilinearCoeffs {
            beta: c[0],
            gamma: c[1],
            eta: c[2],
            zeta: c[3],
            frame: self.frame,
        }
    }

    /// Weights `w` such that the interpolated value at `p` is `Σ wᵢ·nodalᵢ`.
    pub fn shape_values(&self, p: Point2) -> [f64; 4] {
        let q = self.frame.to_local(p);
        self.project([1.0, q.x, q.y, q.x * q.y])
    }

    /// Nodal weights of `∬ ∂f/∂x dA` and `∬ ∂f/∂y dA` over the element.
    pub fn integrated_gradient_weights(&self) -> ([f64; 4], [f64; 4]) {
        let (c, s) = (self.frame.cos, self.frame.sin);
        let a = self.area;
        let (mx, my) = (self.first_moments.x, self.first_moments.y);
        // ∂x' /∂x = c, ∂y'/∂x = -s, ∂x'/∂y = s, ∂y'/∂y = c
        let dx = [0.0, c * a, -s * a, c * my - s * mx];
        let dy = [0.0, s * a, c * a, s * my + c * mx];
        (self.project(dx), self.project(dy))
    }

    /// Contracts a monomial-space row vector with the inverse corner matrix.
    fn project(&self, monomials: [f64; 4]) -> [f64; 4] {
        let mut w = [0.0; 4];
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = (0..4).map(|j| monomials[j] * self.inverse[(j, k)]).sum();
        }
        w
    }
}

/// Exact first moments ∬x dA, ∬y dA of a counter-clockwise polygon.
fn first_moments(poly: &[Point2; 4]) -> Point2 {
    let mut m = Point2::default();
    for i in 0..4 {
        let (p, q) = (poly[i], poly[(i + 1) % 4]);
        let cross = p.cross(q);
        m.x += (p.x + q.x) * cross;
        m.y += (p.y + q.y) * cross;
    }
    m * (1.0 / 6.0)
}

/// Solves for the bilinear coefficients reproducing `nodal_values` (ordered as
/// the element's nodes) at the element corners.
pub fn element_coefficients(mesh: &QuadMesh, element_id: usize, nodal_values: [f64; 4]) -> Result<BilinearCoeffs> {
    if element_id >= mesh.element_count() {
        return Err(Error::InvalidParameter(format!(
            "element {element_id} out of range ({} elements)",
            mesh.element_count()
        )));
    }
    let basis = ElementBasis::new(&mesh.element_corners(element_id), element_id)?;
    Ok(basis.coefficients(nodal_values))
}

/// Interpolation data for every element of `mesh`, in element order.
pub fn element_bases(mesh: &QuadMesh) -> Result<Vec<ElementBasis>> {
    (0..mesh.element_count())
        .map(|e| ElementBasis::new(&mesh.element_corners(e), e))
        .collect()
}
