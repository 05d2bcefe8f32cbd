//! Strain tensors and nodal strain vectors.

use crate::error::{Error, Result};
use crate::mesh::Point2;

/// Symmetric 2-D strain tensor; `xy` is the tensor (not engineering) shear.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StrainTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl StrainTensor {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    /// Normal component `n̂ᵀ ε n̂` along the unit vector `n`.
    pub fn normal(&self, n: Point2) -> f64 {
        n.x * n.x * self.xx + 2.0 * n.x * n.y * self.xy + n.y * n.y * self.yy
    }

    pub fn components(&self) -> [f64; 3] {
        [self.xx, self.xy, self.yy]
    }
}

/// Which strain component a block of the unknown vector holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Xx = 0,
    Xy = 1,
    Yy = 2,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Xx, Component::Xy, Component::Yy];

    pub fn name(self) -> &'static str {
        match self {
            Component::Xx => "exx",
            Component::Xy => "exy",
            Component::Yy => "eyy",
        }
    }
}

/// Nodal strain unknowns in component-major layout:
/// `[ε11 at all nodes | ε12 at all nodes | ε22 at all nodes]`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalStrainField {
    values: Vec<f64>,
}

impl NodalStrainField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(3) {
            return Err(Error::DimensionMismatch(format!(
                "strain vector length {} is not a multiple of 3",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn zeros(node_count: usize) -> Self {
        Self {
            values: vec![0.0; 3 * node_count],
        }
    }

    pub fn constant(node_count: usize, tensor: StrainTensor) -> Self {
        Self::from_fn(node_count, |_| tensor)
    }

    pub fn from_fn(node_count: usize, mut f: impl FnMut(usize) -> StrainTensor) -> Self {
        let mut values = vec![0.0; 3 * node_count];
        for i in 0..node_count {
            let t = f(i);
            values[i] = t.xx;
            values[node_count + i] = t.xy;
            values[2 * node_count + i] = t.yy;
        }
        Self { values }
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / 3
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: Component) -> &[f64] {
        let m = self.node_count();
        &self.values[c as usize * m..(c as usize + 1) * m]
    }

    pub fn at_node(&self, node: usize) -> StrainTensor {
        let m = self.node_count();
        StrainTensor::new(self.values[node], self.values[m + node], self.values[2 * m + node])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_major_layout() {
        let f = NodalStrainField::from_fn(2, |i| StrainTensor::new(i as f64, 10.0 + i as f64, 20.0 + i as f64));
        assert_eq!(f.values(), &[0.0, 1.0, 10.0, 11.0, 20.0, 21.0]);
        assert_eq!(f.component(Component::Xy), &[10.0, 11.0]);
        assert_eq!(f.at_node(1), StrainTensor::new(1.0, 11.0, 21.0));
        assert!(NodalStrainField::new(vec![0.0; 4]).is_err());
    }

    #[test]
    fn shear_counts_twice_in_the_normal_component() {
        let t = StrainTensor::new(0.0, 1.0, 0.0);
        let d = std::f64::consts::FRAC_1_SQRT_2;
        assert!((t.normal(Point2::new(d, d)) - 1.0).abs() < 1e-15);
    }
}
