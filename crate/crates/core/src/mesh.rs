//! Criss-cross triangulations of the unit square and their uniform refinements.
//!
//! Level 0 is the square cut by its two diagonals (4 triangles around the
//! centre). Each further level splits every triangle into four congruent
//! children through its edge midpoints. Entity ordering is canonical:
//! vertices are sorted lexicographically by `(y, x)`, edges by
//! `(min index, max index)`, triangles are counterclockwise and children of
//! coarse triangle `t` occupy indices `4t..4t+4`.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Edge indices of each triangle, local order (v0,v1), (v1,v2), (v2,v0).
    triangle_edges: Vec<[usize; 3]>,
    level: usize,
}

/// Fine-to-coarse genealogy produced by one uniform refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildMap {
    /// Coarse parent triangle of every fine triangle.
    pub parent_triangle: Vec<usize>,
}

impl Mesh {
    /// The four-triangle mesh generated by the two diagonals of the unit square.
    pub fn unit_square_initial() -> Self {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.5, 0.5], [0.0, 1.0], [1.0, 1.0]];
        let triangles = vec![[0, 1, 2], [1, 4, 2], [4, 3, 2], [3, 0, 2]];
        Self::from_parts(vertices, triangles, 0)
    }

    fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, level: usize) -> Self {
        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|t| {
                [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
                    .map(|(a, b)| [a.min(b), a.max(b)])
            })
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let find = |a: usize, b: usize| -> usize {
            let key = [a.min(b), a.max(b)];
            edges.binary_search(&key).expect("edge of a triangle is in the edge list")
        };
        let triangle_edges = triangles
            .iter()
            .map(|t| [find(t[0], t[1]), find(t[1], t[2]), find(t[2], t[0])])
            .collect();

        Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            level,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Length of the axis-aligned edges of the underlying square cells, `2^-level`.
    pub fn h(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    /// Signed area of triangle `t` (positive for counterclockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }

    /// Splits every triangle into four congruent children via its edge midpoints.
    pub fn refine_uniform(&self) -> (Mesh, ChildMap) {
        let nv = self.num_vertices();
        let mut vertices = self.vertices.clone();
        vertices.extend((0..self.num_edges()).map(|e| self.edge_midpoint(e)));

        let mut triangles = Vec::with_capacity(4 * self.num_triangles());
        let mut parent_triangle = Vec::with_capacity(4 * self.num_triangles());
        for (t, (tri, te)) in self.triangles.iter().zip(&self.triangle_edges).enumerate() {
            let [a, b, c] = *tri;
            let [ab, bc, ca] = te.map(|e| nv + e);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
            parent_triangle.extend([t; 4]);
        }

        // Renumber vertices into canonical (y, x) order.
        let mut order: Vec<usize> = (0..vertices.len()).collect();
        order.sort_by(|&i, &j| cmp_yx(&vertices[i], &vertices[j]));
        let mut new_index = vec![0; vertices.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let vertices = order.iter().map(|&i| vertices[i]).collect();
        for tri in triangles.iter_mut() {
            *tri = tri.map(|v| new_index[v]);
        }

        (
            Mesh::from_parts(vertices, triangles, self.level + 1),
            ChildMap { parent_triangle },
        )
    }

    /// Barycentric coordinates of `p` with respect to triangle `t`.
    pub fn barycentric(&self, t: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}

fn cmp_yx(p: &Point, q: &Point) -> Ordering {
    p[1].total_cmp(&q[1]).then(p[0].total_cmp(&q[0]))
}

/// Nested meshes from coarsest (`levels[0]`, the initial mesh) to finest.
#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    levels: Vec<Arc<Mesh>>,
    /// `child_maps[k]` maps triangles of `levels[k + 1]` to triangles of `levels[k]`.
    child_maps: Vec<ChildMap>,
}

impl MeshHierarchy {
    pub fn new(num_levels: usize) -> Result<Self> {
        if num_levels == 0 {
            return Err(Error::InvalidArgument(
                "a mesh hierarchy needs at least one level".into(),
            ));
        }
        let mut levels = vec![Arc::new(Mesh::unit_square_initial())];
        let mut child_maps = Vec::with_capacity(num_levels - 1);
        for _ in 1..num_levels {
            let (fine, map) = levels.last().unwrap().refine_uniform();
            levels.push(Arc::new(fine));
            child_maps.push(map);
        }
        Ok(MeshHierarchy { levels, child_maps })
    }

    /// Hierarchy whose finest mesh has axis-aligned edge length `h = 2^-level`.
    pub fn with_finest_level(level: usize) -> Self {
        Self::new(level + 1).expect("at least one level")
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Arc<Mesh>] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> &Arc<Mesh> {
        &self.levels[k]
    }

    pub fn finest(&self) -> &Arc<Mesh> {
        self.levels.last().unwrap()
    }

    pub fn child_map(&self, fine_level: usize) -> &ChildMap {
        &self.child_maps[fine_level - 1]
    }

    /// Every fine vertex coincides with a coarse vertex or a coarse edge
    /// midpoint, and lies inside its recorded parent triangle.
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).zip(&self.child_maps).all(|(pair, map)| {
            let (coarse, fine) = (&pair[0], &pair[1]);
            let mut coarse_nodes: Vec<Point> = coarse.vertices().to_vec();
            coarse_nodes.extend((0..coarse.num_edges()).map(|e| coarse.edge_midpoint(e)));
            coarse_nodes.sort_by(cmp_yx);
            let on_coarse_node = fine
                .vertices()
                .iter()
                .all(|p| coarse_nodes.binary_search_by(|q| cmp_yx(q, p)).is_ok());
            let inside_parent = fine.triangles().iter().enumerate().all(|(t, tri)| {
                tri.iter().all(|&v| {
                    coarse
                        .barycentric(map.parent_triangle[t], fine.vertices()[v])
                        .iter()
                        .all(|&l| l >= -1e-14)
                })
            });
            on_coarse_node && inside_parent
        })
    }
}

/// Number of quadratic Lagrange nodes (vertices plus edge midpoints) on the
/// mesh obtained by `refinements` uniform refinements of the initial mesh,
/// computed from the entity-count recurrences without building the mesh.
pub fn p2_node_count(refinements: u32) -> u64 {
    let (mut v, mut e, mut t) = (5u64, 8u64, 4u64);
    for _ in 0..refinements {
        (v, e, t) = (v + e, 2 * e + 3 * t, 4 * t);
    }
    v + e
}
