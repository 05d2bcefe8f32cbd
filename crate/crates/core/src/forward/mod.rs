//! The LRT measurement operator over nodal strain unknowns, and synthetic
//! sinograms.

mod simulate;
mod sinogram;

pub use simulate::{exact_line_average, simulate_sinogram, FieldSource, GRAZING_FRACTION};
pub use sinogram::{Sinogram, SinogramRecord, SINOGRAM_HEADER};

pub use crate::strain::NodalStrainField;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{element_bases, BilinearCoeffs, ElementBasis, QuadMesh};
use crate::raytrace::{trace, Ray, RayPath};
use crate::sparse::{CsrMatrix, SparseRow};

const GAUSS_2: f64 = 0.577_350_269_189_625_8; // 1/√3

/// `∫ f(x(s), y(s)) ds` over `[s_in, s_out]` for a bilinear `f`.
///
/// The integrand is quadratic in `s`, so two Gauss points are exact.
pub fn integrate_segment(coeffs: &BilinearCoeffs, ray: &Ray, s_in: f64, s_out: f64) -> f64 {
    let mid = 0.5 * (s_in + s_out);
    let half = 0.5 * (s_out - s_in);
    half * (coeffs.evaluate(ray.point_at(mid - half * GAUSS_2)) + coeffs.evaluate(ray.point_at(mid + half * GAUSS_2)))
}

/// Per-row metadata of a [`MeasurementOperator`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RowInfo {
    /// Index of the ray in the list the operator was assembled from.
    pub ray_index: usize,
    pub ray: Ray,
    /// In-sample path length (m).
    pub length: f64,
}

/// Sparse `N × 3m` matrix `K` with `K·ε` the path-averaged normal strains.
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    pub matrix: CsrMatrix,
    pub rows: Vec<RowInfo>,
}

impl MeasurementOperator {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, field: &NodalStrainField) -> Result<Vec<f64>> {
        if field.values().len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator has {} columns, field has {} values",
                self.matrix.ncols(),
                field.values().len()
            )));
        }
        Ok(self.matrix.mul_vec(field.values()))
    }
}

/// Operator row for a traced path; `basis_of(i)` is the basis of segment `i`.
fn row_for_path<'a>(path: &RayPath, basis_of: impl Fn(usize) -> &'a ElementBasis, mesh: &QuadMesh) -> SparseRow {
    let m = mesh.node_count();
    let d = path.ray.direction;
    let weights = [d.x * d.x, 2.0 * d.x * d.y, d.y * d.y];
    let mut row = SparseRow::with_capacity(12 * path.segments.len());
    let inv_len = 1.0 / path.length;
    for (i, seg) in path.segments.iter().enumerate() {
        let basis = basis_of(i);
        let nodes = mesh.elements()[seg.element];
        let mid = 0.5 * (seg.s_in + seg.s_out);
        let half = 0.5 * seg.length();
        let a = basis.shape_values(path.ray.point_at(mid - half * GAUSS_2));
        let b = basis.shape_values(path.ray.point_at(mid + half * GAUSS_2));
        for (c, w) in weights.iter().enumerate() {
            for k in 0..4 {
                row.push(c * m + nodes[k], w * half * (a[k] + b[k]) * inv_len);
            }
        }
    }
    row.finish()
}

/// One operator row: `row·ε = (1/L) ∫ n̂ᵀ ε(s) n̂ ds` along `ray`.
pub fn assemble_row(ray: &Ray, mesh: &QuadMesh) -> Result<SparseRow> {
    let path = trace(ray, mesh);
    if path.is_empty() {
        return Err(Error::NoIntersection);
    }
    let bases = path
        .segments
        .iter()
        .map(|s| ElementBasis::new(&mesh.element_corners(s.element), s.element))
        .collect::<Result<Vec<_>>>()?;
    Ok(row_for_path(&path, |i| &bases[i], mesh))
}

/// Traces every ray in parallel; results stay in ray order.
pub(crate) fn trace_all(rays: &[Ray], mesh: &QuadMesh) -> Vec<RayPath> {
    rays.par_iter().map(|r| trace(r, mesh)).collect()
}

fn build(paths: Vec<(usize, RayPath)>, mesh: &QuadMesh) -> Result<MeasurementOperator> {
    let bases = element_bases(mesh)?;
    let rows: Vec<SparseRow> = paths
        .par_iter()
        .map(|(_, p)| row_for_path(p, |i| &bases[p.segments[i].element], mesh)).collect();
    let info = paths
        .iter()
        .map(|(i, p)| RowInfo {
            ray_index: *i,
            ray: p.ray,
            length: p.length,
        })
        .collect();
    Ok(MeasurementOperator {
        matrix: CsrMatrix::from_rows(3 * mesh.node_count(), &rows),
        rows: info,
    })
}

/// Rows for every ray that hits the mesh, in ray order. Missing rays are
/// skipped; [`RowInfo::ray_index`] maps rows back to rays.
pub fn assemble_operator(rays: &[Ray], mesh: &QuadMesh) -> Result<MeasurementOperator> {
    let paths = trace_all(rays, mesh).into_iter().enumerate().filter(|(_, p)| !p.is_empty()).collect();
    build(paths, mesh)
}

/// One row per ray; any ray that misses the mesh is an error.
pub fn assemble_operator_strict(rays: &[Ray], mesh: &QuadMesh) -> Result<MeasurementOperator> {
    let paths = trace_all(rays, mesh);
    if paths.iter().any(RayPath::is_empty) {
        return Err(Error::NoIntersection);
    }
    build(paths.into_iter().enumerate().collect(), mesh)
}

/// Operator matching a sinogram's records one-to-one.
pub fn operator_for_sinogram(sinogram: &Sinogram, mesh: &QuadMesh) -> Result<MeasurementOperator> {
    assemble_operator_strict(&sinogram.rays(mesh), mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, element_coefficients, Point2};
    use crate::raytrace::generate_rays;
    use crate::strain::StrainTensor;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn segment_integral_of_constant() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let c = element_coefficients(&mesh, 0, [3.0; 4]).unwrap();
        let ray = Ray::from_origin(Point2::new(-1.0, 0.3), 0.0);
        assert!((integrate_segment(&c, &ray, 1.0, 1.75) - 2.25).abs() < 1e-14);
        assert_eq!(integrate_segment(&c, &ray, 1.2, 1.2), 0.0);
    }

    #[test]
    fn segment_integral_of_xy_along_diagonal() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        // xy at corners (0,0),(1,0),(1,1),(0,1)
        let c = element_coefficients(&mesh, 0, [0.0, 0.0, 1.0, 0.0]).unwrap();
        let ray = Ray::from_origin(Point2::new(0.0, 0.0), FRAC_PI_4);
        let v = integrate_segment(&c, &ray, 0.0, 2f64.sqrt());
        assert!((v - 2f64.sqrt() / 3.0).abs() < 1e-14);
    }

    #[test]
    fn uniform_fields_on_axis_and_diagonal() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 3, 2).unwrap();
        let m = mesh.node_count();
        let row = assemble_row(&Ray::from_origin(Point2::new(-1.0, 0.4), 0.0), &mesh).unwrap();
        let f = NodalStrainField::constant(m, StrainTensor::new(0.7, 0.0, 0.0));
        assert!((row.dot(f.values()) - 0.7).abs() < 1e-14);
        let row = assemble_row(&Ray::from_origin(Point2::new(-0.5, -0.4), FRAC_PI_4), &mesh).unwrap();
        let f = NodalStrainField::constant(m, StrainTensor::new(0.0, 0.7, 0.0));
        assert!((row.dot(f.values()) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn row_nonzeros_bounded_by_elements() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let ray = Ray::from_origin(Point2::new(-1.0, 0.33), 0.1);
        let path = trace(&ray, &mesh);
        let row = assemble_row(&ray, &mesh).unwrap();
        assert!(row.nnz() <= 12 * path.segments.len());
        assert!(row.entries().iter().all(|(_, v)| v.is_finite()));
    }

    #[test]
    fn missing_ray_is_an_error() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 1, 1).unwrap();
        let ray = Ray::from_origin(Point2::new(-1.0, 3.0), 0.0);
        assert!(matches!(assemble_row(&ray, &mesh), Err(Error::NoIntersection)));
        let op = assemble_operator(&[ray], &mesh).unwrap();
        assert_eq!(op.nrows(), 0);
        assert!(assemble_operator_strict(&[ray], &mesh).is_err());
    }

    #[test]
    fn operator_rows_match_single_row_assembly() {
        let mesh = build_structured_mesh(0.0, 2.0, -0.5, 0.5, 6, 3).unwrap();
        let rays = generate_rays(&mesh, 7, 5);
        let op = assemble_operator(&rays, &mesh).unwrap();
        let hits = rays.iter().filter(|r| !trace(r, &mesh).is_empty()).count();
        assert!(hits < rays.len());
        assert_eq!(op.nrows(), hits);
        assert!(op.rows.windows(2).all(|w| w[0].ray_index < w[1].ray_index));
        for (r, info) in op.rows.iter().enumerate() {
            let single = assemble_row(&rays[info.ray_index], &mesh).unwrap();
            let (cols, vals) = op.matrix.row_slices(r);
            assert_eq!(cols.len(), single.nnz());
            for ((c, v), (sc, sv)) in cols.iter().zip(vals).zip(single.entries()) {
                assert_eq!(c, sc);
                assert!((v - sv).abs() <= 1e-15 * sv.abs().max(1.0));
            }
        }
        assert_eq!(assemble_operator(&[], &mesh).unwrap().nrows(), 0);
    }
}
