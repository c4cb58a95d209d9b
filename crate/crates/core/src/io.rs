//! Text exports: legacy ASCII VTK and plain CSV.

use std::io::Write;

use crate::geometry::CutGeometries;
use crate::mesh::Mesh;
use crate::postprocess::SurfaceSample;

/// Tetrahedral mesh as a legacy VTK unstructured grid with optional scalar
/// point and cell data.
pub fn write_mesh_vtk<W: Write>(
    mut w: W,
    mesh: &Mesh,
    point_data: &[(&str, &[f64])],
    cell_data: &[(&str, &[f64])],
) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "ife mesh N={}", mesh.n)?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_nodes())?;
    for p in &mesh.nodes {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    let ne = mesh.n_elements();
    writeln!(w, "CELLS {} {}", ne, 5 * ne)?;
    for t in &mesh.elements {
        writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "10")?;
    }
    write_scalars(&mut w, "POINT_DATA", mesh.n_nodes(), point_data)?;
    write_scalars(&mut w, "CELL_DATA", ne, cell_data)?;
    Ok(())
}

fn write_scalars<W: Write>(w: &mut W, section: &str, n: usize, data: &[(&str, &[f64])]) -> std::io::Result<()> {
    if data.is_empty() {
        return Ok(());
    }
    writeln!(w, "{section} {n}")?;
    for (name, values) in data {
        if values.len() != n {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("{name}: expected {n} values, got {}", values.len()),
            ));
        }
        writeln!(w, "SCALARS {} double 1", name.replace(' ', "_"))?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in *values {
            writeln!(w, "{v}")?;
        }
    }
    Ok(())
}

/// The planar interface pieces as a triangle soup, with an optional value
/// per triangle.
pub fn write_interface_vtk<W: Write>(mut w: W, cuts: &CutGeometries, values: Option<&[f64]>) -> std::io::Result<()> {
    let tris: Vec<_> = cuts.iter().flat_map(|g| g.interface_triangles.iter().copied()).collect();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "ife interface")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 3 * tris.len())?;
    for t in &tris {
        for p in t {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
    }
    writeln!(w, "CELLS {} {}", tris.len(), 4 * tris.len())?;
    for k in 0..tris.len() {
        writeln!(w, "3 {} {} {}", 3 * k, 3 * k + 1, 3 * k + 2)?;
    }
    writeln!(w, "CELL_TYPES {}", tris.len())?;
    for _ in 0..tris.len() {
        writeln!(w, "5")?;
    }
    if let Some(v) = values {
        write_scalars(&mut w, "CELL_DATA", tris.len(), &[("value", v)])?;
    }
    Ok(())
}

/// Surface error samples as VTK point data.
pub fn write_surface_vtk<W: Write>(mut w: W, samples: &[SurfaceSample]) -> std::io::Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "ife interface error")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET POLYDATA")?;
    writeln!(w, "POINTS {} double", samples.len())?;
    for s in samples {
        writeln!(w, "{} {} {}", s.point.x, s.point.y, s.point.z)?;
    }
    writeln!(w, "VERTICES {} {}", samples.len(), 2 * samples.len())?;
    for k in 0..samples.len() {
        writeln!(w, "1 {k}")?;
    }
    let errs: Vec<f64> = samples.iter().map(|s| s.error).collect();
    write_scalars(&mut w, "POINT_DATA", samples.len(), &[("error", &errs)])
}

/// `x,y,z,err` rows with a header.
pub fn write_surface_csv<W: Write>(mut w: W, samples: &[SurfaceSample]) -> std::io::Result<()> {
    writeln!(w, "x,y,z,err")?;
    for s in samples {
        writeln!(w, "{},{},{},{}", s.point.x, s.point.y, s.point.z, s.error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, BoxDomain, Subdivision};
    use crate::Vec3;

    #[test]
    fn vtk_counts() {
        let mesh = build_mesh(BoxDomain::unit(), 2, Subdivision::SixTet).unwrap();
        let vals = vec![1.0; mesh.n_nodes()];
        let mut buf = Vec::new();
        write_mesh_vtk(&mut buf, &mesh, &[("u", &vals)], &[]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("POINTS 27 double"));
        assert!(s.contains("CELLS 48 240"));
        assert!(s.contains("POINT_DATA 27"));
        assert_eq!(s.lines().filter(|l| *l == "10").count(), 48);
        let mut buf = Vec::new();
        assert!(write_mesh_vtk(&mut buf, &mesh, &[("u", &vals[1..])], &[]).is_err());
    }

    #[test]
    fn surface_csv() {
        let s = [SurfaceSample { element: 3, point: Vec3::new(0.5, 0.25, 1.0), error: 0.125 }];
        let mut buf = Vec::new();
        write_surface_csv(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y,z,err\n0.5,0.25,1,0.125\n");
        let mut buf = Vec::new();
        write_surface_vtk(&mut buf, &s).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("POINT_DATA 1\nSCALARS error double 1"));
    }
}
