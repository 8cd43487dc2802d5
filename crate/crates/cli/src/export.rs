//! Field output as legacy VTK and flat CSV.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use cahn_hilliard::fem::P2Space;

/// Local node triples of the four linear sub-triangles of a P2 triangle
/// with local order `[v0, v1, v2, m01, m12, m20]`.
const SUB_TRIANGLES: [[usize; 3]; 4] = [[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]];

fn check(space: &P2Space, values: &[f64]) -> io::Result<()> {
    if values.len() != space.n_dof() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("field has {} values, space has {} nodes", values.len(), space.n_dof()),
        ));
    }
    Ok(())
}

pub fn vtk_string(space: &P2Space, values: &[f64], name: &str) -> io::Result<String> {
    check(space, values)?;
    let n = space.n_dof();
    let nt = space.num_triangles();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{name}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {n} double");
    for p in space.nodes() {
        let _ = writeln!(out, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let _ = writeln!(out, "CELLS {} {}", 4 * nt, 16 * nt);
    for t in 0..nt {
        let dofs = space.element_dofs(t);
        for s in SUB_TRIANGLES {
            let _ = writeln!(out, "3 {} {} {}", dofs[s[0]], dofs[s[1]], dofs[s[2]]);
        }
    }
    let _ = writeln!(out, "CELL_TYPES {}", 4 * nt);
    for _ in 0..4 * nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {n}");
    let _ = writeln!(out, "SCALARS {name} double 1");
    out.push_str("LOOKUP_TABLE default\n");
    for v in values {
        let _ = writeln!(out, "{v:.16e}");
    }
    Ok(out)
}

pub fn csv_string(space: &P2Space, values: &[f64]) -> io::Result<String> {
    check(space, values)?;
    let mut out = String::from("x,y,value\n");
    for (p, v) in space.nodes().iter().zip(values) {
        let _ = writeln!(out, "{:.16e},{:.16e},{v:.16e}", p[0], p[1]);
    }
    Ok(out)
}

/// Writes `<stem>.vtk` and `<stem>.csv` into `dir`.
pub fn export_field(space: &P2Space, values: &[f64], dir: &Path, stem: &str) -> io::Result<()> {
    fs::write(dir.join(format!("{stem}.vtk")), vtk_string(space, values, "phi")?)?;
    fs::write(dir.join(format!("{stem}.csv")), csv_string(space, values)?)?;
    Ok(())
}

/// Reads `(x, y, value)` rows written by [`csv_string`].
pub fn read_field_csv(text: &str) -> io::Result<Vec<[f64; 3]>> {
    let invalid = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(invalid(format!("expected 3 columns: `{line}`")));
            }
            let mut row = [0.0; 3];
            for (r, c) in row.iter_mut().zip(&cols) {
                *r = c.trim().parse().map_err(|_| invalid(format!("bad number `{c}`")))?;
            }
            Ok(row)
        })
        .collect()
}
