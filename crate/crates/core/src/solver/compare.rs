use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::strain::{Component, NodalStrainField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentError {
    pub rmse: f64,
    pub max_abs_error: f64,
    /// RMSE divided by `max |b|`; `None` when `b` vanishes identically.
    pub normalized_rmse: Option<f64>,
    /// RMSE divided by the RMS of `b`; `None` when `b` vanishes identically.
    pub relative_rmse: Option<f64>,
}

/// Nodal error of `a` against the reference `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldComparison {
    pub exx: ComponentError,
    pub exy: ComponentError,
    pub eyy: ComponentError,
}

impl FieldComparison {
    pub fn component(&self, c: Component) -> &ComponentError {
        match c {
            Component::Xx => &self.exx,
            Component::Xy => &self.exy,
            Component::Yy => &self.eyy,
        }
    }
}

fn component_error(a: &[f64], b: &[f64]) -> ComponentError {
    let n = a.len().max(1) as f64;
    let mse = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n;
    let rmse = mse.sqrt();
    let max_abs_error = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let max_b = b.iter().fold(0.0f64, |m, y| m.max(y.abs()));
    let rms_b = (b.iter().map(|y| y * y).sum::<f64>() / n).sqrt();
    ComponentError {
        rmse,
        max_abs_error,
        normalized_rmse: (max_b > 0.0).then(|| rmse / max_b),
        relative_rmse: (rms_b > 0.0).then(|| rmse / rms_b),
    }
}

/// Per-component error of `a` against `b`, both nodal fields on `mesh`.
pub fn compare_fields(a: &NodalStrainField, b: &NodalStrainField, mesh: &QuadMesh) -> Result<FieldComparison> {
    let m = mesh.node_count();
    if a.node_count() != m || b.node_count() != m {
        return Err(Error::MeshMismatch(format!(
            "fields have {} and {} nodes, mesh has {m}",
            a.node_count(),
            b.node_count()
        )));
    }
    let e = |c| component_error(a.component(c), b.component(c));
    Ok(FieldComparison {
        exx: e(Component::Xx),
        exy: e(Component::Xy),
        eyy: e(Component::Yy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_structured_mesh;
    use crate::strain::StrainTensor;

    #[test]
    fn identical_fields_have_zero_error() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let f = NodalStrainField::from_fn(9, |i| StrainTensor::new(i as f64, 1.0, -2.0));
        let r = compare_fields(&f, &f, &mesh).unwrap();
        for c in Component::ALL {
            let e = r.component(c);
            assert_eq!((e.rmse, e.max_abs_error), (0.0, 0.0));
            assert_eq!(e.normalized_rmse, Some(0.0));
        }
    }

    #[test]
    fn constant_against_zero() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let a = NodalStrainField::constant(9, StrainTensor::new(-3.0, 0.5, 2.0));
        let b = NodalStrainField::zeros(9);
        let r = compare_fields(&a, &b, &mesh).unwrap();
        assert!((r.exx.rmse - 3.0).abs() < 1e-15);
        assert!((r.exy.rmse - 0.5).abs() < 1e-15);
        assert_eq!(r.eyy.max_abs_error, 2.0);
        assert_eq!(r.exx.normalized_rmse, None);
    }

    #[test]
    fn node_count_mismatch() {
        let mesh = build_structured_mesh(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let a = NodalStrainField::zeros(9);
        let b = NodalStrainField::zeros(4);
        assert!(matches!(compare_fields(&a, &b, &mesh), Err(Error::MeshMismatch(_))));
    }
}
