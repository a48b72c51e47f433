//! Legacy ASCII VTK unstructured-grid output.
//!
//! Quads are written as cell type 9 and duplicated slit nodes as distinct
//! points, so opened cracks render as geometric gaps.

use std::io::{self, Write};
use std::path::Path;

use crate::mesh::Mesh;

/// A nodal field attached to the output. Vector fields store interleaved
/// (x, y) pairs.
#[derive(Clone, Copy, Debug)]
pub enum PointField<'a> {
    Scalar(&'a str, &'a [f64]),
    Vector2(&'a str, &'a [f64]),
}

pub fn write_vtk(
    out: &mut impl Write,
    mesh: &Mesh,
    title: &str,
    fields: &[PointField],
) -> io::Result<()> {
    let n = mesh.num_nodes();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {n} double")?;
    for p in &mesh.nodes {
        writeln!(out, "{:.9e} {:.9e} 0.0", p[0], p[1])?;
    }
    let nels = mesh.num_elements();
    writeln!(out, "CELLS {nels} {}", 5 * nels)?;
    for conn in &mesh.elements {
        writeln!(out, "4 {} {} {} {}", conn[0], conn[1], conn[2], conn[3])?;
    }
    writeln!(out, "CELL_TYPES {nels}")?;
    for _ in 0..nels {
        writeln!(out, "9")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {n}")?;
        for field in fields {
            match field {
                PointField::Scalar(name, data) => {
                    assert_eq!(data.len(), n, "scalar field {name} length");
                    writeln!(out, "SCALARS {name} double 1")?;
                    writeln!(out, "LOOKUP_TABLE default")?;
                    for v in *data {
                        writeln!(out, "{v:.9e}")?;
                    }
                }
                PointField::Vector2(name, data) => {
                    assert_eq!(data.len(), 2 * n, "vector field {name} length");
                    writeln!(out, "VECTORS {name} double")?;
                    for i in 0..n {
                        writeln!(out, "{:.9e} {:.9e} 0.0", data[2 * i], data[2 * i + 1])?;
                    }
                }
            }
        }
    }
    Ok(())
}

pub fn write_vtk_file(
    path: impl AsRef<Path>,
    mesh: &Mesh,
    title: &str,
    fields: &[PointField],
) -> io::Result<()> {
    let mut file = io::BufWriter::new(std::fs::File::create(path)?);
    write_vtk(&mut file, mesh, title, fields)?;
    file.flush()
}
