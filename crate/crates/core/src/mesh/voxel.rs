//! Voxel booleans, used when the exact path cannot close the result.

use std::collections::HashMap;

use super::{BooleanOp, Box3, Mesh, MeshError, Point3, Vector3};

/// Largest grid the fallback will allocate before coarsening.
const MAX_VOXELS: f64 = 48e6;

struct Grid {
    origin: Point3,
    size: f64,
    dims: [usize; 3],
    cells: Vec<bool>,
}

impl Grid {
    fn new(bounds: &Box3, size: f64) -> Grid {
        let mut size = size;
        let ext = bounds.extents();
        let count = |s: f64| (0..3).map(|i| (ext[i] / s).ceil() + 4.0).product::<f64>();
        while count(size) > MAX_VOXELS {
            size *= 1.25;
        }
        let origin = bounds.min - Vector3::repeat(2.0 * size);
        let dims = [0, 1, 2].map(|i| (ext[i] / size).ceil() as usize + 4);
        Grid {
            origin,
            size,
            dims,
            cells: vec![false; dims[0] * dims[1] * dims[2]],
        }
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    fn get(&self, i: i64, j: i64, k: i64) -> bool {
        if i < 0 || j < 0 || k < 0 {
            return false;
        }
        let (i, j, k) = (i as usize, j as usize, k as usize);
        if i >= self.dims[0] || j >= self.dims[1] || k >= self.dims[2] {
            return false;
        }
        self.cells[self.index(i, j, k)]
    }

    /// Occupancy of `m` sampled at voxel centers by x-ray parity.
    fn rasterize(&self, m: &Mesh) -> Vec<bool> {
        let [nx, ny, nz] = self.dims;
        // a tiny skew keeps rays off mesh vertices and edges on lattice grids
        let jitter_y = 1.234_567e-7 * self.size;
        let jitter_z = 2.345_678e-7 * self.size;
        let cy = |j: usize| self.origin.y + (j as f64 + 0.5) * self.size + jitter_y;
        let cz = |k: usize| self.origin.z + (k as f64 + 0.5) * self.size + jitter_z;
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ny * nz];
        for [a, b, c] in m.triangle_points() {
            let ymin = a.y.min(b.y).min(c.y);
            let ymax = a.y.max(b.y).max(c.y);
            let zmin = a.z.min(b.z).min(c.z);
            let zmax = a.z.max(b.z).max(c.z);
            let j0 = (((ymin - self.origin.y) / self.size - 0.5).floor().max(0.0)) as usize;
            let j1 = (((ymax - self.origin.y) / self.size - 0.5).ceil().max(0.0) as usize).min(ny - 1);
            let k0 = (((zmin - self.origin.z) / self.size - 0.5).floor().max(0.0)) as usize;
            let k1 = (((zmax - self.origin.z) / self.size - 0.5).ceil().max(0.0) as usize).min(nz - 1);
            let det = (b.y - a.y) * (c.z - a.z) - (c.y - a.y) * (b.z - a.z);
            if det == 0.0 {
                continue;
            }
            for k in k0..=k1 {
                for j in j0..=j1 {
                    let (py, pz) = (cy(j), cz(k));
                    let u = ((py - a.y) * (c.z - a.z) - (c.y - a.y) * (pz - a.z)) / det;
                    let v = ((b.y - a.y) * (pz - a.z) - (py - a.y) * (b.z - a.z)) / det;
                    if u < 0.0 || v < 0.0 || u + v > 1.0 {
                        continue;
                    }
                    let x = a.x + u * (b.x - a.x) + v * (c.x - a.x);
                    columns[k * ny + j].push(x);
                }
            }
        }
        let mut inside = vec![false; nx * ny * nz];
        for k in 0..nz {
            for j in 0..ny {
                let col = &mut columns[k * ny + j];
                if col.is_empty() {
                    continue;
                }
                col.sort_by(f64::total_cmp);
                let mut next = 0;
                for i in 0..nx {
                    let x = self.origin.x + (i as f64 + 0.5) * self.size;
                    while next < col.len() && col[next] < x {
                        next += 1;
                    }
                    inside[self.index(i, j, k)] = next % 2 == 1;
                }
            }
        }
        inside
    }

    /// Fills cells until no lattice edge is shared by exactly two
    /// diagonally opposite occupied cells, so every surface edge is manifold.
    fn make_edge_manifold(&mut self) {
        loop {
            let mut changed = false;
            let [nx, ny, nz] = self.dims;
            for axis in 0..3 {
                let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                for k in 0..nz {
                    for j in 0..ny {
                        for i in 0..nx {
                            let base = [i as i64, j as i64, k as i64];
                            // the four cells around the edge at the max corner of `base`
                            let cell = |db: i64, dc: i64| {
                                let mut p = base;
                                p[b] += db;
                                p[c] += dc;
                                p
                            };
                            let quad = [cell(0, 0), cell(1, 0), cell(1, 1), cell(0, 1)];
                            let occ = quad.map(|p| self.get(p[0], p[1], p[2]));
                            let diagonal = (occ[0] && occ[2] && !occ[1] && !occ[3])
                                || (occ[1] && occ[3] && !occ[0] && !occ[2]);
                            if diagonal {
                                let fill = if occ[0] { quad[1] } else { quad[0] };
                                if fill.iter().zip(self.dims).all(|(&v, d)| v >= 0 && (v as usize) < d) {
                                    let idx = self.index(fill[0] as usize, fill[1] as usize, fill[2] as usize);
                                    self.cells[idx] = true;
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    fn surface(&self, name: &str) -> Mesh {
        let [nx, ny, nz] = self.dims;
        let mut ids: HashMap<[usize; 3], usize> = HashMap::new();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        let mut vid = |p: [usize; 3], vertices: &mut Vec<Point3>| {
            *ids.entry(p).or_insert_with(|| {
                vertices.push(self.origin + Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64) * self.size);
                vertices.len() - 1
            })
        };
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if !self.cells[self.index(i, j, k)] {
                        continue;
                    }
                    let cell = [i, j, k];
                    for axis in 0..3 {
                        let (b, c) = ((axis + 1) % 3, (axis + 2) % 3);
                        for positive in [false, true] {
                            let mut n = [i as i64, j as i64, k as i64];
                            n[axis] += if positive { 1 } else { -1 };
                            if self.get(n[0], n[1], n[2]) {
                                continue;
                            }
                            let corner = |db: usize, dc: usize| {
                                let mut p = cell;
                                p[axis] += positive as usize;
                                p[b] += db;
                                p[c] += dc;
                                p
                            };
                            let mut q = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
                            if !positive {
                                q.reverse();
                            }
                            let v = q.map(|p| vid(p, &mut vertices));
                            triangles.push([v[0], v[1], v[2]]);
                            triangles.push([v[0], v[2], v[3]]);
                        }
                    }
                }
            }
        }
        Mesh::new(name, vertices, triangles)
    }
}

pub(crate) fn voxel_boolean(a: &Mesh, b: &Mesh, op: BooleanOp, size: f64) -> Result<Mesh, MeshError> {
    if !(size > 0.0) {
        return Err(MeshError::BooleanFailure(format!("voxel size must be positive, got {size}")));
    }
    let (ba, bb) = (a.bounding_box()?, b.bounding_box()?);
    let bounds = match op {
        BooleanOp::Union => ba.union(&bb),
        _ => ba,
    };
    let mut grid = Grid::new(&bounds, size);
    let ia = grid.rasterize(a);
    let ib = grid.rasterize(b);
    for (cell, (&x, &y)) in grid.cells.iter_mut().zip(ia.iter().zip(&ib)) {
        *cell = match op {
            BooleanOp::Intersect => x && y,
            BooleanOp::Subtract => x && !y,
            BooleanOp::Union => x || y,
        };
    }
    grid.make_edge_manifold();
    let mesh = grid.surface("voxel");
    if !mesh.is_empty() && !mesh.is_watertight() {
        return Err(MeshError::BooleanFailure("voxel surface is not closed".into()));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_box, make_uv_sphere};

    #[test]
    fn diagonal_cells_become_manifold() {
        let a = make_box(&Box3::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0)));
        let b = a.translated(Vector3::new(1.0, 1.0, 0.0));
        let u = voxel_boolean(&a, &b, BooleanOp::Union, 1.0).unwrap();
        assert!(u.is_watertight());
        assert!((u.volume() - 3.0).abs() < 1e-9, "{}", u.volume());
    }

    #[test]
    fn sphere_volume_converges() {
        let s = make_uv_sphere(Point3::origin(), 10.0, 24, 48);
        let big = make_box(&Box3::new(Point3::new(-20.0, -20.0, -20.0), Point3::new(20.0, 20.0, 20.0)));
        let r = voxel_boolean(&s, &big, BooleanOp::Intersect, 0.5).unwrap();
        assert!((r.volume() - s.volume()).abs() / s.volume() < 0.03, "{} vs {}", r.volume(), s.volume());
    }
}
