//! Integrated plane-stress equilibrium constraints `C·ε = 0`, two rows per
//! element.

use crate::error::{Error, Result};
use crate::mesh::{ElementBasis, QuadMesh};
use crate::sparse::{CsrMatrix, SparseRow};

#[derive(Clone, Debug)]
pub struct ConstraintMatrix {
    /// `(2·elements) × 3m`; rows `2e` and `2e+1` belong to element `e`.
    pub matrix: CsrMatrix,
    pub nu: f64,
}

fn check_nu(nu: f64) -> Result<()> {
    if !(0.0..0.5).contains(&nu) {
        return Err(Error::InvalidParameter(format!("Poisson ratio {nu} outside [0, 0.5)")));
    }
    Ok(())
}

/// The two rows of element `element_id`:
///
/// ```text
/// ∬ ∂x(ε11 + ν ε22) + (1-ν) ∂y ε12 dA = 0
/// ∬ ∂y(ε22 + ν ε11) + (1-ν) ∂x ε12 dA = 0
/// ```
///
/// With `ν = 0` the cross-coupling entries are left out entirely.
pub fn element_equilibrium_rows(mesh: &QuadMesh, element_id: usize, nu: f64) -> Result<[SparseRow; 2]> {
    check_nu(nu)?;
    if element_id >= mesh.element_count() {
        return Err(Error::InvalidParameter(format!(
            "element {element_id} out of range ({} elements)",
            mesh.element_count()
        )));
    }
    let basis = ElementBasis::new(&mesh.element_corners(element_id), element_id)?;
    Ok(rows_for(&basis, mesh.elements()[element_id], mesh.node_count(), nu))
}

fn rows_for(basis: &ElementBasis, nodes: [usize; 4], m: usize, nu: f64) -> [SparseRow; 2] {
    let (gx, gy) = basis.integrated_gradient_weights();
    let (xx, xy, yy) = (0, m, 2 * m);
    let mut r1 = SparseRow::with_capacity(12);
    let mut r2 = SparseRow::with_capacity(12);
    for k in 0..4 {
        let n = nodes[k];
        r1.push(xx + n, gx[k]);
        r1.push(xy + n, (1.0 - nu) * gy[k]);
        r2.push(yy + n, gy[k]);
        r2.push(xy + n, (1.0 - nu) * gx[k]);
        if nu != 0.0 {
            r1.push(yy + n, nu * gx[k]);
            r2.push(xx + n, nu * gy[k]);
        }
    }
    [r1.finish(), r2.finish()]
}

/// Equilibrium rows of every element, stacked in element order.
pub fn assemble_constraints(mesh: &QuadMesh, nu: f64) -> Result<ConstraintMatrix> {
    check_nu(nu)?;
    let m = mesh.node_count();
    let mut rows = Vec::with_capacity(2 * mesh.element_count());
    for (e, nodes) in mesh.elements().iter().enumerate() {
        let basis = ElementBasis::new(&mesh.element_corners(e), e)?;
        rows.extend(rows_for(&basis, *nodes, m, nu));
    }
    Ok(ConstraintMatrix {
        matrix: CsrMatrix::from_rows(3 * m, &rows),
        nu,
    })
}
