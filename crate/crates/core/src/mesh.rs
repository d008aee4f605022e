//! Structured simplicial meshes of the unit square and unit cube.
//!
//! Each box of an `n^d` grid is split into 2 triangles along its `(0,0)-(1,1)`
//! diagonal, or into 6 tetrahedra by the Kuhn (Freudenthal) subdivision. Both
//! splits contain the planes `x_i = x_j` of every diagonal box, so the mesh
//! resolves piecewise-linear fields whose kinks lie on grid planes and on
//! those diagonals.
//!
//! Facets carry a global orientation: their vertices are stored in ascending
//! global index order and the global normal is derived from that order. A
//! cell's orientation sign for one of its facets is `+1` when the global
//! normal points out of the cell.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("unsupported mesh dimension {0} (expected 2 or 3)")]
    Dimension(usize),
    #[error("cells per axis must be at least 1, got {0}")]
    Resolution(usize),
}

/// A conforming simplicial mesh with oriented facets.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    n: usize,
    vertices: Vec<[f64; 3]>,
    /// `dim + 1` vertex indices per cell, positively oriented.
    cells: Vec<usize>,
    /// `dim` vertex indices per facet, ascending.
    facets: Vec<usize>,
    /// Facet opposite local vertex `i`, `dim + 1` entries per cell.
    cell_facets: Vec<usize>,
    cell_facet_signs: Vec<i8>,
    facet_cells: Vec<[usize; 2]>,
    boundary: Vec<bool>,
    region_id: Vec<u32>,
}

/// Affine map `x = jacobian · ξ + offset` from the unit reference simplex,
/// whose vertex `i > 0` is the unit vector `e_i` and vertex 0 the origin.
/// With this convention `det = d! · volume`.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub dim: usize,
    pub jacobian: Matrix3<f64>,
    pub offset: Vector3<f64>,
    pub det: f64,
}

impl AffineMap {
    pub fn apply(&self, xi: &[f64; 3]) -> [f64; 3] {
        let x = self.jacobian * Vector3::from(*xi) + self.offset;
        [x[0], x[1], x[2]]
    }
}

impl Mesh {
    /// Uniform `n^dim` grid of the unit square (2 triangles per box) or unit
    /// cube (6 Kuhn tetrahedra per box).
    pub fn structured(dim: usize, n: usize) -> Result<Mesh, MeshError> {
        if dim != 2 && dim != 3 {
            return Err(MeshError::Dimension(dim));
        }
        if n < 1 {
            return Err(MeshError::Resolution(n));
        }
        let h = 1.0 / n as f64;
        let np = n + 1;
        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut vertices = Vec::new();
        let kmax = if dim == 3 { n } else { 0 };
        for k in 0..=kmax {
            for j in 0..=n {
                for i in 0..=n {
                    vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                }
            }
        }
        let mut cells = Vec::new();
        if dim == 2 {
            for j in 0..n {
                for i in 0..n {
                    let v00 = vid(i, j, 0);
                    let v10 = vid(i + 1, j, 0);
                    let v01 = vid(i, j + 1, 0);
                    let v11 = vid(i + 1, j + 1, 0);
                    cells.extend([v00, v10, v11]);
                    cells.extend([v00, v11, v01]);
                }
            }
        } else {
            const PERMS: [[usize; 3]; 6] = [
                [0, 1, 2],
                [0, 2, 1],
                [1, 0, 2],
                [1, 2, 0],
                [2, 0, 1],
                [2, 1, 0],
            ];
            for k in 0..n {
                for j in 0..n {
                    for i in 0..n {
                        for perm in PERMS {
                            let mut c = [i, j, k];
                            let mut tet = [vid(c[0], c[1], c[2]); 4];
                            for (s, &axis) in perm.iter().enumerate() {
                                c[axis] += 1;
                                tet[s + 1] = vid(c[0], c[1], c[2]);
                            }
                            cells.extend(tet);
                        }
                    }
                }
            }
        }
        let mut mesh = Mesh {
            dim,
            n,
            vertices,
            cells,
            facets: Vec::new(),
            cell_facets: Vec::new(),
            cell_facet_signs: Vec::new(),
            facet_cells: Vec::new(),
            boundary: Vec::new(),
            region_id: Vec::new(),
        };
        mesh.orient_cells();
        mesh.build_facets();
        mesh.region_id = vec![0; mesh.num_cells()];
        Ok(mesh)
    }

    fn orient_cells(&mut self) {
        let nv = self.dim + 1;
        for c in 0..self.num_cells() {
            if self.signed_det(c) < 0.0 {
                self.cells.swap(c * nv + nv - 2, c * nv + nv - 1);
            }
        }
    }

    fn signed_det(&self, cell: usize) -> f64 {
        let v = self.cell(cell);
        let x0 = self.vertices[v[0]];
        let mut j = Matrix3::<f64>::identity();
        for (col, &vi) in v.iter().enumerate().skip(1) {
            for r in 0..self.dim {
                j[(r, col - 1)] = self.vertices[vi][r] - x0[r];
            }
        }
        j.determinant()
    }

    fn build_facets(&mut self) {
        let (facets, cell_facets, facet_cells) = Self::facet_tables(self.dim, &self.cells);
        self.facets = facets;
        self.cell_facets = cell_facets;
        self.facet_cells = facet_cells;
        self.boundary = self
            .facet_cells
            .iter()
            .map(|fc| fc[1] == usize::MAX)
            .collect();
        let nv = self.dim + 1;
        let mut signs = vec![0i8; self.cells.len()];
        for c in 0..self.num_cells() {
            let centroid = self.cell_centroid(c);
            for i in 0..nv {
                let f = self.cell_facets[c * nv + i];
                let n = self.facet_normal(f);
                let fc = self.facet_centroid(f);
                let dot: f64 = (0..self.dim).map(|r| n[r] * (fc[r] - centroid[r])).sum();
                signs[c * nv + i] = if dot > 0.0 { 1 } else { -1 };
            }
        }
        self.cell_facet_signs = signs;
    }

    /// Facet list, cell-to-facet table and facet-to-cell table generated
    /// from a cell list in cell order.
    #[allow(clippy::type_complexity)]
    pub fn facet_tables(
        dim: usize,
        cells: &[usize],
    ) -> (Vec<usize>, Vec<usize>, Vec<[usize; 2]>) {
        let nv = dim + 1;
        let mut lookup: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut facets = Vec::new();
        let mut cell_facets = Vec::with_capacity(cells.len());
        let mut facet_cells: Vec<[usize; 2]> = Vec::new();
        for (c, cell) in cells.chunks(nv).enumerate() {
            for i in 0..nv {
                let mut key: Vec<usize> = (0..nv).filter(|&j| j != i).map(|j| cell[j]).collect();
                key.sort_unstable();
                let idx = *lookup.entry(key.clone()).or_insert_with(|| {
                    facets.extend(&key);
                    facet_cells.push([usize::MAX, usize::MAX]);
                    facet_cells.len() - 1
                });
                let slot = &mut facet_cells[idx];
                if slot[0] == usize::MAX {
                    slot[0] = c;
                } else {
                    slot[1] = c;
                }
                cell_facets.push(idx);
            }
        }
        (facets, cell_facets, facet_cells)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis of the generating grid.
    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// Mesh size `√d / n` (diameter of a grid box).
    pub fn h(&self) -> f64 {
        (self.dim as f64).sqrt() / self.n as f64
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len() / (self.dim + 1)
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len() / self.dim
    }

    pub fn vertex(&self, v: usize) -> [f64; 3] {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cells[c * nv..(c + 1) * nv]
    }

    pub fn cells_flat(&self) -> &[usize] {
        &self.cells
    }

    /// Vertices of a facet in ascending global order.
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f * self.dim..(f + 1) * self.dim]
    }

    /// Facet opposite each local vertex of `c`.
    pub fn cell_facets(&self, c: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.cell_facets[c * nv..(c + 1) * nv]
    }

    pub fn cell_facet_signs(&self, c: usize) -> &[i8] {
        let nv = self.dim + 1;
        &self.cell_facet_signs[c * nv..(c + 1) * nv]
    }

    /// The one or two cells adjacent to a facet; the second is `usize::MAX`
    /// on the boundary.
    pub fn facet_cells(&self, f: usize) -> [usize; 2] {
        self.facet_cells[f]
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.boundary[f]
    }

    pub fn region_id(&self, c: usize) -> u32 {
        self.region_id[c]
    }

    /// Label each cell by evaluating `label` at its centroid.
    pub fn label_regions(&mut self, label: impl Fn(&[f64; 3]) -> u32) {
        self.region_id = (0..self.num_cells())
            .map(|c| label(&self.cell_centroid(c)))
            .collect();
    }

    pub fn affine_map(&self, c: usize) -> AffineMap {
        let v = self.cell(c);
        let x0 = self.vertices[v[0]];
        let mut j = Matrix3::<f64>::identity();
        for (col, &vi) in v.iter().enumerate().skip(1) {
            for r in 0..self.dim {
                j[(r, col - 1)] = self.vertices[vi][r] - x0[r];
            }
        }
        let det = j.determinant();
        AffineMap {
            dim: self.dim,
            jacobian: j,
            offset: Vector3::from(x0),
            det,
        }
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        let det = self.affine_map(c).det;
        let fact = if self.dim == 2 { 2.0 } else { 6.0 };
        det / fact
    }

    pub fn cell_centroid(&self, c: usize) -> [f64; 3] {
        centroid(self.cell(c).iter().map(|&v| self.vertices[v]))
    }

    /// Longest edge of a cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let v = self.cell(c);
        let mut d: f64 = 0.0;
        for a in 0..v.len() {
            for b in a + 1..v.len() {
                let p = self.vertices[v[a]];
                let q = self.vertices[v[b]];
                let e = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                    .sqrt();
                d = d.max(e);
            }
        }
        d
    }

    pub fn facet_centroid(&self, f: usize) -> [f64; 3] {
        centroid(self.facet(f).iter().map(|&v| self.vertices[v]))
    }

    /// Unit normal induced by the ascending vertex order of the facet.
    pub fn facet_normal(&self, f: usize) -> [f64; 3] {
        let (n, _) = self.facet_normal_and_measure(f);
        n
    }

    pub fn facet_measure(&self, f: usize) -> f64 {
        self.facet_normal_and_measure(f).1
    }

    fn facet_normal_and_measure(&self, f: usize) -> ([f64; 3], f64) {
        let v = self.facet(f);
        let a = self.vertices[v[0]];
        let b = self.vertices[v[1]];
        if self.dim == 2 {
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            ([t[1] / len, -t[0] / len, 0.0], len)
        } else {
            let c = self.vertices[v[2]];
            let e1 = Vector3::new(b[0] - a[0], b[1] - a[1], b[2] - a[2]);
            let e2 = Vector3::new(c[0] - a[0], c[1] - a[1], c[2] - a[2]);
            let n = e1.cross(&e2);
            let norm = n.norm();
            ([n[0] / norm, n[1] / norm, n[2] / norm], 0.5 * norm)
        }
    }

    /// Plain-text dump: a vertex block followed by a cell block.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "vertices {}", self.num_vertices());
        for v in &self.vertices {
            let coords: Vec<String> = v[..self.dim].iter().map(|x| format!("{x:.17e}")).collect();
            let _ = writeln!(s, "{}", coords.join(" "));
        }
        let _ = writeln!(s, "cells {}", self.num_cells());
        for c in 0..self.num_cells() {
            let ids: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{} {}", ids.join(" "), self.region_id[c]);
        }
        s
    }

    pub fn export_text(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_text())
    }
}

fn centroid(points: impl Iterator<Item = [f64; 3]>) -> [f64; 3] {
    let mut s = [0.0; 3];
    let mut n = 0.0;
    for p in points {
        for r in 0..3 {
            s[r] += p[r];
        }
        n += 1.0;
    }
    [s[0] / n, s[1] / n, s[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_meshes() {
        let m = Mesh::structured(2, 1).unwrap();
        assert_eq!((m.num_cells(), m.num_vertices(), m.num_facets()), (2, 4, 5));
        let m = Mesh::structured(3, 1).unwrap();
        assert_eq!(m.num_cells(), 6);
        let m = Mesh::structured(2, 4).unwrap();
        assert_eq!(m.num_cells(), 32);
        let area: f64 = (0..m.num_cells()).map(|c| m.cell_volume(c)).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(Mesh::structured(1, 2), Err(MeshError::Dimension(1))));
        assert!(matches!(Mesh::structured(4, 2), Err(MeshError::Dimension(4))));
        assert!(matches!(Mesh::structured(2, 0), Err(MeshError::Resolution(0))));
    }

    #[test]
    fn positive_orientation_and_unit_volume() {
        for dim in [2, 3] {
            for n in [1, 2, 3, 5] {
                let m = Mesh::structured(dim, n).unwrap();
                let mut vol = 0.0;
                for c in 0..m.num_cells() {
                    let a = m.affine_map(c);
                    assert!(a.det > 0.0);
                    vol += m.cell_volume(c);
                }
                assert!((vol - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn facet_incidence_and_signs() {
        for dim in [2, 3] {
            let m = Mesh::structured(dim, 3).unwrap();
            let mut count = vec![0usize; m.num_facets()];
            for c in 0..m.num_cells() {
                for &f in m.cell_facets(c) {
                    count[f] += 1;
                }
            }
            for f in 0..m.num_facets() {
                let expected = if m.is_boundary_facet(f) { 1 } else { 2 };
                assert_eq!(count[f], expected);
                let [a, b] = m.facet_cells(f);
                if b != usize::MAX {
                    let sa = sign_of(&m, a, f);
                    let sb = sign_of(&m, b, f);
                    assert_eq!(sa, -sb);
                }
            }
        }
    }

    fn sign_of(m: &Mesh, c: usize, f: usize) -> i8 {
        let i = m.cell_facets(c).iter().position(|&g| g == f).unwrap();
        m.cell_facet_signs(c)[i]
    }

    #[test]
    fn regenerated_incidence_matches() {
        for dim in [2, 3] {
            let m = Mesh::structured(dim, 2).unwrap();
            let (facets, cf, fc) = Mesh::facet_tables(dim, m.cells_flat());
            assert_eq!(facets, m.facets);
            assert_eq!(cf, m.cell_facets);
            assert_eq!(fc, m.facet_cells);
        }
    }

    #[test]
    fn closed_surface_identity() {
        for dim in [2, 3] {
            let m = Mesh::structured(dim, 2).unwrap();
            for c in 0..m.num_cells() {
                let mut s = [0.0; 3];
                for (i, &f) in m.cell_facets(c).iter().enumerate() {
                    let n = m.facet_normal(f);
                    let sign = m.cell_facet_signs(c)[i] as f64;
                    let a = m.facet_measure(f);
                    for r in 0..3 {
                        s[r] += sign * n[r] * a;
                    }
                }
                assert!(s.iter().all(|x| x.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn reference_cell_map_is_identity() {
        let m = Mesh::structured(2, 1).unwrap();
        // first triangle is (0,0),(1,0),(1,1); its map is not the identity but
        // its determinant is 2·area
        let a = m.affine_map(0);
        assert!((a.det - 2.0 * m.cell_volume(0)).abs() < 1e-15);
        let m3 = Mesh::structured(3, 1).unwrap();
        for c in 0..m3.num_cells() {
            let a = m3.affine_map(c);
            assert!((a.det - 6.0 * m3.cell_volume(c)).abs() < 1e-15);
            assert!((a.det - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn scaled_cells_have_scaled_determinant() {
        for dim in [2usize, 3] {
            let n = 4;
            let m = Mesh::structured(dim, n).unwrap();
            let expected = (1.0 / n as f64).powi(dim as i32);
            for c in 0..m.num_cells() {
                assert!((m.affine_map(c).det - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn text_export_lists_all_entities() {
        let m = Mesh::structured(2, 2).unwrap();
        let t = m.to_text();
        assert_eq!(t.lines().count(), 3 + m.num_vertices() + m.num_cells());
    }
}
