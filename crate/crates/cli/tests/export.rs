use cahn_hilliard::fem::FemHierarchy;
use cahn_hilliard_cli::export::{csv_string, export_field, read_field_csv, vtk_string};

fn section<'a>(vtk: &'a str, header: &str) -> Vec<&'a str> {
    let mut lines = vtk.lines().skip_while(|l| !l.starts_with(header));
    let head = lines.next().unwrap();
    let count: usize = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let skip = if header == "POINT_DATA" { 2 } else { 0 };
    lines.skip(skip).take(count).collect()
}

#[test]
fn level_one_counts() {
    let fem = FemHierarchy::with_finest_level(1).unwrap();
    let space = fem.space();
    let values = vec![0.5; space.n_dof()];
    let vtk = vtk_string(space, &values, "phi").unwrap();
    assert!(vtk.contains("POINTS 41 double"));
    assert!(vtk.contains("CELLS 64 256"));
    assert!(vtk.contains("CELL_TYPES 64"));
    assert_eq!(section(&vtk, "POINTS").len(), 41);
    let cells = section(&vtk, "CELLS");
    assert_eq!(cells.len(), 64);
    for c in cells {
        let ids: Vec<usize> = c.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(ids[0], 3);
        assert!(ids[1..].iter().all(|&i| i < 41));
    }
}

#[test]
fn sub_triangles_cover_each_element() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    let space = fem.space();
    let vtk = vtk_string(space, &vec![0.0; space.n_dof()], "phi").unwrap();
    let nodes = space.nodes();
    let area = |ids: &[usize]| {
        let (a, b, c) = (nodes[ids[0]], nodes[ids[1]], nodes[ids[2]]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    };
    let total: f64 = section(&vtk, "CELLS")
        .iter()
        .map(|c| {
            let ids: Vec<usize> = c.split_whitespace().skip(1).map(|t| t.parse().unwrap()).collect();
            let a = area(&ids);
            assert!(a > 0.0);
            a
        })
        .sum();
    assert!((total - 1.0).abs() < 1e-14);
}

#[test]
fn constant_field_values() {
    let fem = FemHierarchy::with_finest_level(2).unwrap();
    let space = fem.space();
    let vtk = vtk_string(space, &vec![1.0; space.n_dof()], "phi").unwrap();
    let data = section(&vtk, "POINT_DATA");
    assert_eq!(data.len(), space.n_dof());
    assert!(data.iter().all(|v| v.parse::<f64>().unwrap() == 1.0));
}

#[test]
fn csv_round_trip() {
    let fem = FemHierarchy::with_finest_level(3).unwrap();
    let space = fem.space();
    let values = space.interpolate(|p| (7.0 * p[0]).sin() * (3.0 * p[1]).exp() / 3.0);
    let rows = read_field_csv(&csv_string(space, &values).unwrap()).unwrap();
    assert_eq!(rows.len(), values.len());
    for ((row, v), p) in rows.iter().zip(&values).zip(space.nodes()) {
        assert!((row[2] - v).abs() <= 1e-12);
        assert!((row[0] - p[0]).abs() <= 1e-15 && (row[1] - p[1]).abs() <= 1e-15);
    }
}

#[test]
fn files_and_length_check() {
    let dir = tempfile::tempdir().unwrap();
    let fem = FemHierarchy::with_finest_level(1).unwrap();
    let space = fem.space();
    export_field(space, &vec![0.0; space.n_dof()], dir.path(), "field_0").unwrap();
    assert!(dir.path().join("field_0.vtk").exists());
    assert!(dir.path().join("field_0.csv").exists());
    assert!(vtk_string(space, &[0.0; 3], "phi").is_err());
}
