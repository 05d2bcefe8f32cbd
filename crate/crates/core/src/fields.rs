//! Closed-form strain fields used as ground truth: the Saint-Venant
//! cantilever and the Lamé shrink-fit ring-and-plug.

use crate::error::{Error, Result};
use crate::mesh::{Point2, QuadMesh};
use crate::raytrace::Ray;
use crate::strain::{NodalStrainField, StrainTensor};

/// Points this far (m) outside a field's domain are still accepted.
pub const DOMAIN_TOL: f64 = 1e-9;

/// A strain field defined analytically over part of the plane.
pub trait AnalyticField: Sync {
    fn strain(&self, p: Point2) -> Result<StrainTensor>;

    /// Arc lengths along `ray` at which the field is not smooth. Exact line
    /// quadrature splits the path there.
    fn kinks(&self, _ray: &Ray) -> Vec<f64> {
        Vec::new()
    }
}

/// The same tensor everywhere.
#[derive(Clone, Copy, Debug)]
pub struct UniformField(pub StrainTensor);

impl AnalyticField for UniformField {
    fn strain(&self, _p: Point2) -> Result<StrainTensor> {
        Ok(self.0)
    }
}

/// End-loaded cantilever on `[0, length] × [-width/2, width/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeamParams {
    /// m
    pub length: f64,
    /// m
    pub width: f64,
    /// m
    pub thickness: f64,
    /// Pa
    pub young: f64,
    pub poisson: f64,
    /// N
    pub load: f64,
}

impl Default for BeamParams {
    /// 20 mm × 10 mm × 5 mm steel beam under a 2 kN end load.
    fn default() -> Self {
        Self {
            length: 0.020,
            width: 0.010,
            thickness: 0.005,
            young: 200e9,
            poisson: 0.3,
            load: 2000.0,
        }
    }
}

impl BeamParams {
    /// Second moment of area `t·W³/12` (m⁴).
    pub fn moment(&self) -> f64 {
        self.thickness * self.width.powi(3) / 12.0
    }

    /// `P/(E·I)` in m⁻².
    pub fn curvature_scale(&self) -> f64 {
        self.load / (self.young * self.moment())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.length, self.width, self.thickness, self.young, self.load];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter(format!("beam parameters must be positive: {self:?}")));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(Error::InvalidParameter(format!("Poisson ratio {} outside [0, 0.5)", self.poisson)));
        }
        Ok(())
    }

    fn contains(&self, x: f64, y: f64) -> bool {
        (-DOMAIN_TOL..=self.length + DOMAIN_TOL).contains(&x) && y.abs() <= self.width / 2.0 + DOMAIN_TOL
    }
}

/// Plane-stress Saint-Venant strain of the end-loaded cantilever.
pub fn beam_strain(x: f64, y: f64, p: &BeamParams) -> Result<StrainTensor> {
    if !p.contains(x, y) {
        return Err(Error::OutsideDomain { x, y });
    }
    let k = p.curvature_scale();
    let nu = p.poisson;
    let half = p.width / 2.0;
    let bending = (p.length - x) * y * k;
    Ok(StrainTensor::new(
        bending,
        -0.5 * (1.0 + nu) * (half * half - y * y) * k,
        -nu * bending,
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct BeamField {
    params: BeamParams,
}

impl BeamField {
    pub fn new(params: BeamParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }
}

impl AnalyticField for BeamField {
    fn strain(&self, p: Point2) -> Result<StrainTensor> {
        beam_strain(p.x, p.y, &self.params)
    }
}

/// Disc of radius `outer_radius` about the origin with a plug of radius
/// `bore_radius` shrink-fitted into a bore centered at `(bore_offset, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RingPlugParams {
    pub outer_radius: f64,
    pub bore_radius: f64,
    pub bore_offset: f64,
    /// Diametral interference (m).
    pub interference: f64,
    pub young: f64,
    pub poisson: f64,
}

impl Default for RingPlugParams {
    /// Concentric 50 mm disc with a 21 mm plug and 40 μm interference.
    fn default() -> Self {
        Self {
            outer_radius: 0.025,
            bore_radius: 0.0105,
            bore_offset: 0.0,
            interference: 40e-6,
            young: 200e9,
            poisson: 0.3,
        }
    }
}

impl RingPlugParams {
    pub fn validate(&self) -> Result<()> {
        crate::mesh::validate_ring_plug(self.outer_radius, self.bore_radius, self.bore_offset)?;
        if !(self.interference >= 0.0) || !self.interference.is_finite() {
            return Err(Error::InvalidParameter(format!("interference {} must be non-negative", self.interference)));
        }
        if !(self.young > 0.0) || !self.young.is_finite() {
            return Err(Error::InvalidParameter(format!("Young's modulus {} must be positive", self.young)));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(Error::InvalidParameter(format!("Poisson ratio {} outside [0, 0.5)", self.poisson)));
        }
        Ok(())
    }

    pub fn bore_center(&self) -> Point2 {
        Point2::new(self.bore_offset, 0.0)
    }

    /// Plane-stress contact pressure (Pa) of a solid plug in a ring of the
    /// same material with outer radius `outer_radius`.
    pub fn contact_pressure(&self) -> f64 {
        let (b2, c2) = (self.bore_radius.powi(2), self.outer_radius.powi(2));
        let radial_interference = 0.5 * self.interference;
        self.young * radial_interference / (self.bore_radius * ((c2 + b2) / (c2 - b2) + 1.0))
    }
}

/// Lamé shrink-fit solution about the bore center.
///
/// For an offset bore the concentric solution is still evaluated about the
/// bore center, with the outer radius unchanged; such fields are only
/// approximate and [`RingPlugField::is_approximate`] reports it.
#[derive(Clone, Copy, Debug)]
pub struct RingPlugField {
    params: RingPlugParams,
    pressure: f64,
}

impl RingPlugField {
    pub fn new(params: RingPlugParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            pressure: params.contact_pressure(),
            params,
        })
    }

    pub fn params(&self) -> &RingPlugParams {
        &self.params
    }

    pub fn is_approximate(&self) -> bool {
        self.params.bore_offset != 0.0
    }

    /// Radial and hoop strain at distance `r` from the bore center.
    pub fn polar_strain(&self, r: f64) -> (f64, f64) {
        let RingPlugParams {
            bore_radius: b,
            outer_radius: c,
            young,
            poisson: nu,
            ..
        } = self.params;
        let p = self.pressure;
        if r <= b {
            let e = -p * (1.0 - nu) / young;
            return (e, e);
        }
        let a = p * b * b / (c * c - b * b);
        let ratio = c * c / (r * r);
        let sr = a * (1.0 - ratio);
        let st = a * (1.0 + ratio);
        ((sr - nu * st) / young, (st - nu * sr) / young)
    }
}

impl AnalyticField for RingPlugField {
    fn strain(&self, p: Point2) -> Result<StrainTensor> {
        if p.norm() > self.params.outer_radius + DOMAIN_TOL {
            return Err(Error::OutsideDomain { x: p.x, y: p.y });
        }
        let d = p - self.params.bore_center();
        let r = d.norm();
        let (er, et) = self.polar_strain(r);
        if r == 0.0 {
            return Ok(StrainTensor::new(er, 0.0, et));
        }
        let (c, s) = (d.x / r, d.y / r);
        Ok(StrainTensor::new(
            er * c * c + et * s * s,
            (er - et) * s * c,
            er * s * s + et * c * c,
        ))
    }

    fn kinks(&self, ray: &Ray) -> Vec<f64> {
        // |o + s·n - c|² = b²
        let d = ray.origin - self.params.bore_center();
        let half_b = d.dot(ray.direction);
        let disc = half_b * half_b - (d.dot(d) - self.params.bore_radius.powi(2));
        if disc <= 0.0 {
            return Vec::new();
        }
        let root = disc.sqrt();
        vec![-half_b - root, -half_b + root]
    }
}

/// Plane-stress Lamé strain of the ring-and-plug at `(x, y)`.
pub fn ring_plug_strain(x: f64, y: f64, p: &RingPlugParams) -> Result<StrainTensor> {
    RingPlugField::new(*p)?.strain(Point2::new(x, y))
}

/// Samples `field` at every mesh node.
pub fn interpolate_to_nodes(field: &dyn AnalyticField, mesh: &QuadMesh) -> Result<NodalStrainField> {
    let tensors = mesh.nodes().iter().map(|&p| field.strain(p)).collect::<Result<Vec<_>>>()?;
    Ok(NodalStrainField::from_fn(mesh.node_count(), |i| tensors[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::strain::Component;

    #[test]
    fn beam_prefactor() {
        let p = BeamParams::default();
        // I = 5e-3·(1e-2)³/12 = 4.1667e-10 m⁴, E·I = 83.333 N·m², P/(EI) = 24 m⁻²
        assert!((p.moment() - 5e-9 / 12.0).abs() < 1e-12 * p.moment());
        assert!((p.curvature_scale() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn beam_fixed_end_top_fibre() {
        let e = beam_strain(0.0, 0.005, &BeamParams::default()).unwrap();
        assert!((e.xx - 2.4e-3).abs() < 1e-15);
        assert!((e.yy + 7.2e-4).abs() < 1e-15);
        assert!(e.xy.abs() < 1e-18);
    }

    #[test]
    fn beam_neutral_axis_and_free_end() {
        let p = BeamParams::default();
        for x in [0.0, 0.007, 0.02] {
            let e = beam_strain(x, 0.0, &p).unwrap();
            assert_eq!((e.xx, e.yy), (0.0, 0.0));
        }
        let a = beam_strain(0.02, 0.003, &p).unwrap();
        let b = beam_strain(0.02, -0.003, &p).unwrap();
        assert_eq!((a.xx, a.yy), (0.0, 0.0));
        assert_eq!(a.xy, b.xy);
        assert_eq!(a.xy, beam_strain(0.005, 0.003, &p).unwrap().xy);
    }

    #[test]
    fn beam_shear_vanishes_on_free_surfaces() {
        let p = BeamParams::default();
        for x in [0.0, 0.01, 0.02] {
            assert!(beam_strain(x, 0.005, &p).unwrap().xy.abs() < 1e-18);
            assert!(beam_strain(x, -0.005, &p).unwrap().xy.abs() < 1e-18);
        }
    }

    #[test]
    fn beam_outside_domain() {
        let p = BeamParams::default();
        assert!(matches!(beam_strain(0.021, 0.0, &p), Err(Error::OutsideDomain { .. })));
        assert!(matches!(beam_strain(0.01, -0.006, &p), Err(Error::OutsideDomain { .. })));
    }

    /// Residuals of the plane-stress equilibrium equations by central differences.
    fn equilibrium_residual(field: &dyn AnalyticField, p: Point2, nu: f64, h: f64) -> (f64, f64) {
        let at = |dx: f64, dy: f64| field.strain(Point2::new(p.x + dx, p.y + dy)).unwrap();
        let ddx = |f: &dyn Fn(StrainTensor) -> f64| (f(at(h, 0.0)) - f(at(-h, 0.0))) / (2.0 * h);
        let ddy = |f: &dyn Fn(StrainTensor) -> f64| (f(at(0.0, h)) - f(at(0.0, -h))) / (2.0 * h);
        let r1 = ddx(&|e| e.xx + nu * e.yy) + (1.0 - nu) * ddy(&|e| e.xy);
        let r2 = ddy(&|e| e.yy + nu * e.xx) + (1.0 - nu) * ddx(&|e| e.xy);
        (r1, r2)
    }

    #[test]
    fn beam_satisfies_equilibrium() {
        let p = BeamParams::default();
        let field = BeamField::new(p).unwrap();
        let scale = p.curvature_scale();
        for &(x, y) in &[(0.002, 0.001), (0.01, -0.004), (0.017, 0.0035)] {
            let (r1, r2) = equilibrium_residual(&field, Point2::new(x, y), p.poisson, 1e-5);
            assert!(r1.abs() <= 1e-6 * scale && r2.abs() <= 1e-6 * scale, "{r1} {r2}");
        }
    }

    #[test]
    fn concentric_ring_satisfies_equilibrium() {
        let params = RingPlugParams::default();
        let field = RingPlugField::new(params).unwrap();
        let scale = field.polar_strain(params.outer_radius).1.abs() / params.outer_radius;
        for &(x, y) in &[(0.015, 0.0), (0.0, -0.02), (-0.012, 0.011), (0.008, 0.016)] {
            let (r1, r2) = equilibrium_residual(&field, Point2::new(x, y), params.poisson, 1e-6);
            assert!(r1.abs() <= 1e-6 * scale && r2.abs() <= 1e-6 * scale, "{r1} {r2}");
        }
        assert!(!field.is_approximate());
    }

    #[test]
    fn plug_center_is_equibiaxial() {
        let field = RingPlugField::new(RingPlugParams::default()).unwrap();
        let e = field.strain(Point2::new(0.0, 0.0)).unwrap();
        assert_eq!(e.xx, e.yy);
        assert_eq!(e.xy, 0.0);
        assert!(e.xx < 0.0);
    }

    #[test]
    fn ring_hoop_strain_decays_and_interface_is_compressed() {
        let params = RingPlugParams::default();
        let field = RingPlugField::new(params).unwrap();
        let radii: Vec<f64> = (0..=20)
            .map(|i| params.bore_radius * (1.0 + 1e-9) + (params.outer_radius - params.bore_radius) * i as f64 / 20.0)
            .collect();
        let hoop: Vec<f64> = radii.iter().map(|&r| field.polar_strain(r).1).collect();
        assert!(hoop.windows(2).all(|w| w[1].abs() < w[0].abs()));
        assert!(hoop.iter().all(|&h| h > 0.0));
        // radial stress at the interface: σr = E/(1-ν²)(εr + ν εθ)
        let (er, et) = field.polar_strain(radii[0]);
        assert!(er + params.poisson * et < 0.0);
        assert!((field.contact_pressure_check(radii[0]) + field.pressure).abs() < 1e-6 * field.pressure);
    }

    impl RingPlugField {
        fn contact_pressure_check(&self, r: f64) -> f64 {
            let (er, et) = self.polar_strain(r);
            let nu = self.params.poisson;
            self.params.young / (1.0 - nu * nu) * (er + nu * et)
        }
    }

    #[test]
    fn zero_interference_gives_zero_field() {
        let field = RingPlugField::new(RingPlugParams {
            interference: 0.0,
            ..Default::default()
        })
        .unwrap();
        for p in [Point2::new(0.0, 0.0), Point2::new(0.02, 0.0), Point2::new(-0.001, 0.015)] {
            assert_eq!(field.strain(p).unwrap().components().map(f64::abs), [0.0; 3]);
        }
    }

    #[test]
    fn offset_bore_is_flagged_approximate() {
        let field = RingPlugField::new(RingPlugParams {
            bore_offset: 0.004,
            ..Default::default()
        })
        .unwrap();
        assert!(field.is_approximate());
        assert!(field.strain(Point2::new(0.0, 0.026)).is_err());
    }

    #[test]
    fn nodal_interpolation_matches_formula() {
        let p = BeamParams::default();
        let mesh = build_structured_mesh(0.0, p.length, -p.width / 2.0, p.width / 2.0, 20, 10).unwrap();
        let field = interpolate_to_nodes(&BeamField::new(p).unwrap(), &mesh).unwrap();
        for (i, node) in mesh.nodes().iter().enumerate() {
            let e = beam_strain(node.x, node.y, &p).unwrap();
            let got = field.at_node(i);
            for (a, b) in got.components().iter().zip(e.components()) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
        let uniform = interpolate_to_nodes(&UniformField(StrainTensor::new(1.0, 2.0, 3.0)), &mesh).unwrap();
        assert!(uniform.component(Component::Xy).iter().all(|&v| v == 2.0));
    }

    #[test]
    fn nodes_outside_the_field_are_rejected() {
        let mesh = build_structured_mesh(0.0, 0.03, -0.005, 0.005, 3, 1).unwrap();
        let field = BeamField::new(BeamParams::default()).unwrap();
        assert!(matches!(interpolate_to_nodes(&field, &mesh), Err(Error::OutsideDomain { .. })));
    }
}
