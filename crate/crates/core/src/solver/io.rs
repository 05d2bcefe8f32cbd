//! Nodal strain field files: CSV and legacy VTK.

use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use crate::error::{Error, Result};
use crate::mesh::{Point2, QuadMesh};
use crate::strain::{NodalStrainField, StrainTensor};

pub const FIELD_HEADER: &str = "node_id,x_m,y_m,exx,exy,eyy";

fn check_sizes(mesh: &QuadMesh, field: &NodalStrainField) -> Result<()> {
    if field.node_count() != mesh.node_count() {
        return Err(Error::MeshMismatch(format!(
            "field has {} nodes, mesh has {}",
            field.node_count(),
            mesh.node_count()
        )));
    }
    Ok(())
}

pub fn write_field_csv<W: Write>(mesh: &QuadMesh, field: &NodalStrainField, writer: W) -> Result<()> {
    check_sizes(mesh, field)?;
    let mut w = BufWriter::new(writer);
    writeln!(w, "{FIELD_HEADER}")?;
    for (i, p) in mesh.nodes().iter().enumerate() {
        let e = field.at_node(i);
        writeln!(w, "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, e.xx, e.xy, e.yy)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a field CSV; node ids must run `0, 1, 2, …`. Returns the node
/// coordinates alongside the field.
pub fn read_field_csv<R: Read>(reader: R, source: &str) -> Result<(Vec<Point2>, NodalStrainField)> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.to_string(),
        line,
        message,
    };
    let mut points = Vec::new();
    let mut tensors = Vec::new();
    let mut saw_header = false;
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != FIELD_HEADER {
                return Err(err(i + 1, format!("expected header `{FIELD_HEADER}`")));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(err(i + 1, format!("expected 6 fields, found {}", fields.len())));
        }
        let id: usize = fields[0].parse().map_err(|e| err(i + 1, format!("bad node id `{}`: {e}", fields[0])))?;
        if id != points.len() {
            return Err(err(i + 1, format!("expected node id {}, found {id}", points.len())));
        }
        let mut v = [0.0f64; 5];
        for (slot, f) in v.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|e| err(i + 1, format!("bad number `{f}`: {e}")))?;
            if !slot.is_finite() {
                return Err(err(i + 1, format!("non-finite value `{f}`")));
            }
        }
        points.push(Point2::new(v[0], v[1]));
        tensors.push(StrainTensor::new(v[2], v[3], v[4]));
    }
    if !saw_header {
        return Err(err(0, "empty field file".into()));
    }
    let field = NodalStrainField::from_fn(tensors.len(), |i| tensors[i]);
    Ok((points, field))
}

/// Legacy ASCII VTK unstructured grid with point data `exx`, `exy`, `eyy`.
pub fn write_vtk<W: Write>(mesh: &QuadMesh, field: &NodalStrainField, writer: W) -> Result<()> {
    check_sizes(mesh, field)?;
    let mut w = BufWriter::new(writer);
    let (m, ne) = (mesh.node_count(), mesh.element_count());
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "nodal strain field")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {m} double")?;
    for p in mesh.nodes() {
        writeln!(w, "{:.16e} {:.16e} 0", p.x, p.y)?;
    }
    writeln!(w, "CELLS {ne} {}", 5 * ne)?;
    for el in mesh.elements() {
        writeln!(w, "4 {} {} {} {}", el[0], el[1], el[2], el[3])?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "9")?;
    }
    writeln!(w, "POINT_DATA {m}")?;
    for c in crate::strain::Component::ALL {
        writeln!(w, "SCALARS {} double 1", c.name())?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in field.component(c) {
            writeln!(w, "{v:.16e}")?;
        }
    }
    w.flush()?;
    Ok(())
}
