//! Legacy ASCII VTK output for triangle meshes.

use std::io::{self, Write};

use nalgebra::Vector2;

use super::CtMesh;
use crate::geometry::Point;

/// Unstructured triangle grid with optional point and cell data.
pub struct VtkTriangles<'a> {
    pub title: &'a str,
    pub points: &'a [Point],
    pub triangles: &'a [[usize; 3]],
    pub point_vectors: Vec<(&'a str, &'a [Vector2<f64>])>,
    pub cell_scalars: Vec<(&'a str, &'a [f64])>,
}

impl VtkTriangles<'_> {
    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "{}", self.title.lines().next().unwrap_or(""))?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.points.len())?;
        for p in self.points {
            writeln!(w, "{:e} {:e} 0", p.x, p.y)?;
        }
        let nt = self.triangles.len();
        writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
        for t in self.triangles {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "5")?;
        }
        if !self.cell_scalars.is_empty() {
            writeln!(w, "CELL_DATA {nt}")?;
            for (name, values) in &self.cell_scalars {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for v in values.iter() {
                    writeln!(w, "{v:e}")?;
                }
            }
        }
        if !self.point_vectors.is_empty() {
            writeln!(w, "POINT_DATA {}", self.points.len())?;
            for (name, values) in &self.point_vectors {
                writeln!(w, "VECTORS {name} double")?;
                for v in values.iter() {
                    writeln!(w, "{:e} {:e} 0", v.x, v.y)?;
                }
            }
        }
        Ok(())
    }
}

/// Writes the micro triangulation with the macro parent of each cell.
pub fn write_mesh<W: Write>(mesh: &CtMesh, w: W) -> io::Result<()> {
    let parents: Vec<f64> = mesh.parents().iter().map(|&p| p as f64).collect();
    VtkTriangles {
        title: "Clough-Tocher mesh",
        points: mesh.vertices(),
        triangles: mesh.triangles(),
        point_vectors: Vec::new(),
        cell_scalars: vec![("parent", &parents)],
    }
    .write(w)
}
