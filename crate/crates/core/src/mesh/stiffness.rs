use super::QuadMesh;
use crate::sparse::CsrMatrix;

/// Gradient stiffness `S_ij = ∫ ∇φ_i·∇φ_j` of the isoparametric bilinear
/// basis, an `m × m` symmetric positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessMatrix(CsrMatrix);

impl StiffnessMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CsrMatrix {
        self.0
    }

    /// `blockdiag(S, S, S)` acting on the component-major strain vector.
    pub fn regularizer(&self) -> CsrMatrix {
        CsrMatrix::block_diagonal(&self.0, 3)
    }
}

const REFERENCE_CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

/// Element stiffness of one quad by 2×2 Gauss quadrature.
fn element_stiffness(mesh: &QuadMesh, element: usize) -> [[f64; 4]; 4] {
    let corners = mesh.element_corners(element);
    let g = 1.0 / 3f64.sqrt();
    let mut ke = [[0.0; 4]; 4];
    for (xi, eta) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
        // reference derivatives of N_i = (1 + ξ ξ_i)(1 + η η_i)/4
        let dn: [(f64, f64); 4] =
            REFERENCE_CORNERS.map(|(a, b)| (0.25 * a * (1.0 + eta * b), 0.25 * b * (1.0 + xi * a)));
        let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
        for (d, p) in dn.iter().zip(corners) {
            j11 += d.0 * p.x;
            j12 += d.0 * p.y;
            j21 += d.1 * p.x;
            j22 += d.1 * p.y;
        }
        let det = j11 * j22 - j12 * j21;
        let grads = dn.map(|(dxi, deta)| ((j22 * dxi - j12 * deta) / det, (-j21 * dxi + j11 * deta) / det));
        for a in 0..4 {
            for b in 0..4 {
                ke[a][b] += (grads[a].0 * grads[b].0 + grads[a].1 * grads[b].1) * det;
            }
        }
    }
    ke
}

pub fn assemble_stiffness(mesh: &QuadMesh) -> StiffnessMatrix {
    let mut triplets = Vec::with_capacity(16 * mesh.element_count());
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let ke = element_stiffness(mesh, e);
        for a in 0..4 {
            for b in 0..4 {
                triplets.push((nodes[a], nodes[b], ke[a][b]));
            }
        }
    }
    let m = mesh.node_count();
    StiffnessMatrix(CsrMatrix::from_triplets(m, m, &triplets))
}
