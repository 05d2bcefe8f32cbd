use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{assemble_operator, NodalStrainField, Sinogram, SinogramRecord};
use crate::error::{Error, Result};
use crate::fields::{interpolate_to_nodes, AnalyticField};
use crate::mesh::QuadMesh;
use crate::raytrace::{Ray, RayPath};

/// Rays whose in-sample path is shorter than this fraction of the mesh
/// bounding radius are discarded as grazers.
pub const GRAZING_FRACTION: f64 = 1e-3;

/// 5-point Gauss-Legendre rule on [-1, 1].
const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// What a sinogram is simulated from.
#[derive(Clone, Copy)]
pub enum FieldSource<'a> {
    /// Nodal values, projected with the discrete operator.
    Nodal(&'a NodalStrainField),
    /// Sampled at the mesh nodes, then projected with the discrete operator.
    /// Reconstructions from such data commit the inverse crime.
    Interpolated(&'a dyn AnalyticField),
    /// Line averages of the analytic field by direct quadrature along each
    /// traced path.
    Exact(&'a dyn AnalyticField),
}

/// `(1/L) ∫ n̂ᵀ ε n̂ ds` of an analytic field along a traced path, by
/// Gauss-Legendre quadrature on every segment, split at the field's kinks.
pub fn exact_line_average(field: &dyn AnalyticField, path: &RayPath) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::NoIntersection);
    }
    let ray = &path.ray;
    let kinks = field.kinks(ray);
    let mut total = 0.0;
    for seg in &path.segments {
        let mut cuts = vec![seg.s_in];
        cuts.extend(kinks.iter().copied().filter(|&k| k > seg.s_in && k < seg.s_out));
        cuts.push(seg.s_out);
        for w in cuts.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for &(x, wt) in &GL5 {
                total += wt * half * field.strain(ray.point_at(mid + half * x))?.normal(ray.direction);
            }
        }
    }
    Ok(total / path.length)
}

/// Simulated sinogram for `rays`. Misses and grazing rays are dropped; the
/// rest keep their order. Gaussian noise of standard deviation
/// `noise_sigma` is drawn from a ChaCha generator seeded with `seed`, one
/// sample per record in record order.
pub fn simulate_sinogram(
    mesh: &QuadMesh,
    source: FieldSource<'_>,
    rays: &[Ray],
    noise_sigma: f64,
    seed: u64,
) -> Result<Sinogram> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidParameter(format!("noise sigma {noise_sigma} must be non-negative")));
    }
    let min_length = GRAZING_FRACTION * mesh.bounding_radius();
    let mut samples: Vec<(Ray, f64, f64)> = match source {
        FieldSource::Exact(field) => {
            let paths = super::trace_all(rays, mesh);
            paths
                .par_iter()
                .filter(|p| p.length >= min_length)
                .map(|p| Ok((p.ray, p.length, exact_line_average(field, p)?)))
                .collect::<Result<Vec<_>>>()?
        }
        FieldSource::Nodal(_) | FieldSource::Interpolated(_) => {
            let owned;
            let nodal = match source {
                FieldSource::Nodal(f) => f,
                FieldSource::Interpolated(f) => {
                    owned = interpolate_to_nodes(f, mesh)?;
                    &owned
                }
                FieldSource::Exact(_) => unreachable!(),
            };
            if nodal.node_count() != mesh.node_count() {
                return Err(Error::MeshMismatch(format!(
                    "field has {} nodes, mesh has {}",
                    nodal.node_count(),
                    mesh.node_count()
                )));
            }
            let op = assemble_operator(rays, mesh)?;
            let values = op.apply(nodal)?;
            op.rows
                .iter()
                .zip(values)
                .filter(|(info, _)| info.length >= min_length)
                .map(|(info, v)| (info.ray, info.length, v))
                .collect()
        }
    };

    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut samples {
            s.2 += normal.sample(&mut rng);
        }
    }

    Sinogram::new(
        samples
            .into_iter()
            .map(|(ray, length, value)| SinogramRecord {
                theta: ray.angle,
                offset: ray.offset,
                length,
                value,
                sigma: noise_sigma,
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{BeamField, BeamParams, UniformField};
    use crate::mesh::build_structured_mesh;
    use crate::raytrace::generate_rays;
    use crate::strain::StrainTensor;

    fn beam_mesh() -> QuadMesh {
        build_structured_mesh(0.0, 0.02, -0.005, 0.005, 20, 10).unwrap()
    }

    #[test]
    fn noiseless_constant_field_gives_normal_components() {
        let mesh = beam_mesh();
        let t = StrainTensor::new(1e-3, -4e-4, 2.5e-4);
        let rays = generate_rays(&mesh, 12, 9);
        let nodal = NodalStrainField::constant(mesh.node_count(), t);
        for source in [
            FieldSource::Nodal(&nodal),
            FieldSource::Interpolated(&UniformField(t)),
            FieldSource::Exact(&UniformField(t)),
        ] {
            let sino = simulate_sinogram(&mesh, source, &rays, 0.0, 0).unwrap();
            assert!(!sino.is_empty());
            for r in sino.records() {
                let n = crate::mesh::Point2::new(r.theta.cos(), r.theta.sin());
                assert!((r.value - t.normal(n)).abs() < 1e-15, "{}", r.value - t.normal(n));
                assert_eq!(r.sigma, 0.0);
            }
        }
    }

    #[test]
    fn grazers_are_discarded() {
        let mesh = beam_mesh();
        let rays = generate_rays(&mesh, 36, 40);
        let sino = simulate_sinogram(&mesh, FieldSource::Exact(&UniformField(StrainTensor::ZERO)), &rays, 0.0, 0).unwrap();
        let min = GRAZING_FRACTION * mesh.bounding_radius();
        assert!(sino.len() < rays.len());
        assert!(sino.records().iter().all(|r| r.length >= min));
    }

    #[test]
    fn exact_and_discrete_agree_for_bilinear_interpolant() {
        // the beam ε11 and ε22 are bilinear, so only ε12 differs between modes
        let mesh = beam_mesh();
        let params = BeamParams { poisson: 0.0, ..Default::default() };
        let field = BeamField::new(params).unwrap();
        let rays: Vec<Ray> = generate_rays(&mesh, 8, 10).into_iter().filter(|r| r.angle.sin().abs() < 1e-12).collect();
        let a = simulate_sinogram(&mesh, FieldSource::Exact(&field), &rays, 0.0, 0).unwrap();
        let b = simulate_sinogram(&mesh, FieldSource::Interpolated(&field), &rays, 0.0, 0).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.records().iter().zip(b.records()) {
            assert!((x.value - y.value).abs() < 1e-15);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible_and_has_the_requested_spread() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let rays = generate_rays(&mesh, 100, 100);
        let zero = UniformField(StrainTensor::ZERO);
        let a = simulate_sinogram(&mesh, FieldSource::Interpolated(&zero), &rays, 1e-4, 7).unwrap();
        let b = simulate_sinogram(&mesh, FieldSource::Interpolated(&zero), &rays, 1e-4, 7).unwrap();
        assert_eq!(a, b);
        let c = simulate_sinogram(&mesh, FieldSource::Interpolated(&zero), &rays, 1e-4, 8).unwrap();
        assert_ne!(a, c);
        let n = a.len() as f64;
        assert!(n > 9000.0);
        let mean = a.records().iter().map(|r| r.value).sum::<f64>() / n;
        let var = a.records().iter().map(|r| (r.value - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((var.sqrt() / 1e-4 - 1.0).abs() < 0.05);
        assert!(a.records().iter().all(|r| r.sigma == 1e-4));
    }

    #[test]
    fn negative_sigma_is_rejected() {
        let mesh = beam_mesh();
        let zero = UniformField(StrainTensor::ZERO);
        assert!(simulate_sinogram(&mesh, FieldSource::Exact(&zero), &[], -1.0, 0).is_err());
    }
}
