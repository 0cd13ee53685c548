use std::f64::consts::TAU;

use nalgebra::{Isometry3, Rotation3, Translation3, UnitQuaternion};

use super::{Axis, Box3, Mesh, MeshError, Point3, Vector3, Welder};

pub fn make_box(b: &Box3) -> Mesh {
    let vertices = b.corners().to_vec();
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 7, 6],
        [3, 6, 2],
        [0, 4, 7],
        [0, 7, 3],
        [1, 2, 6],
        [1, 6, 5],
    ];
    Mesh::new("box", vertices, triangles)
}

/// Box whose faces are tessellated into a grid with cells no larger than
/// `max_cell` mm.
pub fn make_grid_box(b: &Box3, max_cell: f64) -> Mesh {
    let ext = b.extents();
    let ticks: Vec<Vec<f64>> = (0..3)
        .map(|k| {
            let n = ((ext[k] / max_cell).ceil() as usize).max(1);
            (0..=n)
                .map(|i| {
                    if i == n {
                        b.max[k]
                    } else {
                        b.min[k] + ext[k] * i as f64 / n as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut welder = Welder::new(1e-12);
    let mut triangles = Vec::new();
    for axis in Axis::ALL {
        let k = axis.index();
        let [ai, aj] = axis.others();
        let (i, j) = (ai.index(), aj.index());
        for (side, fixed) in [(false, b.min[k]), (true, b.max[k])] {
            let (ni, nj) = (ticks[i].len(), ticks[j].len());
            let mut ids = vec![0usize; ni * nj];
            for (ui, &u) in ticks[i].iter().enumerate() {
                for (vj, &v) in ticks[j].iter().enumerate() {
                    let mut p = Point3::origin();
                    p[k] = fixed;
                    p[i] = u;
                    p[j] = v;
                    ids[ui * nj + vj] = welder.insert(p);
                }
            }
            for ui in 0..ni - 1 {
                for vj in 0..nj - 1 {
                    let a = ids[ui * nj + vj];
                    let bb = ids[(ui + 1) * nj + vj];
                    let c = ids[(ui + 1) * nj + vj + 1];
                    let d = ids[ui * nj + vj + 1];
                    // e_i × e_j = e_k, so (a, b, c) faces +k
                    if side {
                        triangles.push([a, bb, c]);
                        triangles.push([a, c, d]);
                    } else {
                        triangles.push([a, c, bb]);
                        triangles.push([a, d, c]);
                    }
                }
            }
        }
    }
    Mesh::new("grid_box", welder.into_points(), triangles)
}

/// Oriented box centered at `center`, with local axes given by the columns
/// of `rotation` and half extents `half`.
pub fn make_frame_box(center: Point3, rotation: &Rotation3<f64>, half: Vector3) -> Mesh {
    let local = make_box(&Box3::new(Point3::from(-half), Point3::from(half)));
    let iso = Isometry3::from_parts(
        Translation3::from(center.coords),
        UnitQuaternion::from_rotation_matrix(rotation),
    );
    local.transformed(&iso).with_name("frame_box")
}

fn orthonormal_pair(axis: &Vector3) -> (Vector3, Vector3) {
    let helper = if axis.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = helper.cross(axis).normalize();
    let v = axis.cross(&u);
    (u, v)
}

pub fn make_cylinder(
    axis_start: Point3,
    axis_end: Point3,
    radius: f64,
    segments: usize,
) -> Result<Mesh, MeshError> {
    let d = axis_end - axis_start;
    if !(d.norm() > 1e-9) {
        return Err(MeshError::DegenerateAxis);
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(MeshError::InvalidRadius(radius));
    }
    if segments < 8 {
        return Err(MeshError::TooFewSegments {
            min: 8,
            got: segments,
        });
    }
    let (u, _) = orthonormal_pair(&d.normalize());
    make_cylinder_from(axis_start, axis_end, radius, segments, u)
}

/// Like [`make_cylinder`], with the first rim vertex in direction `start`
/// (projected off the axis).
pub fn make_cylinder_from(
    axis_start: Point3,
    axis_end: Point3,
    radius: f64,
    segments: usize,
    start: Vector3,
) -> Result<Mesh, MeshError> {
    let d = axis_end - axis_start;
    if !(d.norm() > 1e-9) {
        return Err(MeshError::DegenerateAxis);
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(MeshError::InvalidRadius(radius));
    }
    if segments < 8 {
        return Err(MeshError::TooFewSegments {
            min: 8,
            got: segments,
        });
    }
    let axis = d.normalize();
    let off_axis = start - axis * start.dot(&axis);
    let u = if off_axis.norm() > 1e-9 {
        off_axis.normalize()
    } else {
        orthonormal_pair(&axis).0
    };
    let v = axis.cross(&u);
    let mut vertices = Vec::with_capacity(2 * segments + 2);
    for i in 0..segments {
        let a = TAU * i as f64 / segments as f64;
        let off = (u * a.cos() + v * a.sin()) * radius;
        vertices.push(axis_start + off);
        vertices.push(axis_end + off);
    }
    let cb = vertices.len();
    vertices.push(axis_start);
    let ct = vertices.len();
    vertices.push(axis_end);
    let mut triangles = Vec::with_capacity(4 * segments);
    for i in 0..segments {
        let j = (i + 1) % segments;
        let (b0, t0, b1, t1) = (2 * i, 2 * i + 1, 2 * j, 2 * j + 1);
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        triangles.push([cb, b1, b0]);
        triangles.push([ct, t0, t1]);
    }
    Ok(Mesh::new("cylinder", vertices, triangles))
}

pub fn make_uv_sphere(center: Point3, radius: f64, stacks: usize, slices: usize) -> Mesh {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut vertices = vec![center + Vector3::z() * radius];
    for k in 1..stacks {
        let phi = std::f64::consts::PI * k as f64 / stacks as f64;
        for j in 0..slices {
            let theta = TAU * j as f64 / slices as f64;
            vertices.push(
                center
                    + Vector3::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
                        * radius,
            );
        }
    }
    let south = vertices.len();
    vertices.push(center - Vector3::z() * radius);
    let ring = |k: usize, j: usize| 1 + (k - 1) * slices + (j % slices);
    let mut triangles = Vec::new();
    for j in 0..slices {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for k in 1..stacks - 1 {
        for j in 0..slices {
            let (u0, u1) = (ring(k, j), ring(k, j + 1));
            let (l0, l1) = (ring(k + 1, j), ring(k + 1, j + 1));
            triangles.push([u0, l0, l1]);
            triangles.push([u0, l1, u1]);
        }
    }
    for j in 0..slices {
        triangles.push([south, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    Mesh::new("sphere", vertices, triangles)
}

/// Torus around the +Z axis through `center`.
pub fn make_torus(
    center: Point3,
    major: f64,
    minor: f64,
    major_segments: usize,
    minor_segments: usize,
) -> Mesh {
    let (n, m) = (major_segments.max(3), minor_segments.max(3));
    let mut vertices = Vec::with_capacity(n * m);
    for i in 0..n {
        let theta = TAU * i as f64 / n as f64;
        for j in 0..m {
            let phi = TAU * j as f64 / m as f64;
            let r = major + minor * phi.cos();
            vertices.push(center + Vector3::new(r * theta.cos(), r * theta.sin(), minor * phi.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % n) * m + (j % m);
    let mut triangles = Vec::with_capacity(2 * n * m);
    for i in 0..n {
        for j in 0..m {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new("torus", vertices, triangles)
}

/// Thick circular-arc band (a "C" when `sweep` < 2π) extruded along
/// `axis_dir`, centered on `center`. The arc starts at `start_dir` (which
/// must be perpendicular to the axis) and runs counter-clockwise.
#[allow(clippy::too_many_arguments)]
pub fn make_annular_sector(
    center: Point3,
    axis_dir: Vector3,
    start_dir: Vector3,
    inner: f64,
    outer: f64,
    sweep: f64,
    length: f64,
    segments: usize,
) -> Result<Mesh, MeshError> {
    if !(inner > 0.0) || !(outer > inner) {
        return Err(MeshError::InvalidRadius(inner));
    }
    if axis_dir.norm() < 1e-12 || !(length > 0.0) {
        return Err(MeshError::DegenerateAxis);
    }
    let a = axis_dir.normalize();
    let x0 = (start_dir - a * start_dir.dot(&a)).normalize();
    let y0 = a.cross(&x0);
    let full = sweep >= TAU - 1e-12;
    let segments = segments.max(8);
    let samples = if full { segments } else { segments + 1 };
    let half = a * (length / 2.0);
    let mut vertices = Vec::with_capacity(samples * 4);
    for k in 0..samples {
        let t = if full { TAU } else { sweep } * k as f64 / segments as f64;
        let dir = x0 * t.cos() + y0 * t.sin();
        vertices.push(center - half + dir * inner);
        vertices.push(center - half + dir * outer);
        vertices.push(center + half + dir * inner);
        vertices.push(center + half + dir * outer);
    }
    let idx = |k: usize, c: usize| (k % samples) * 4 + c;
    let mut mesh = Mesh::new("annular_sector", vertices, Vec::new());
    let spans = if full { samples } else { samples - 1 };
    for k in 0..spans {
        let mid = (k as f64 + 0.5) * if full { TAU } else { sweep } / segments as f64;
        let radial = x0 * mid.cos() + y0 * mid.sin();
        push_quad(&mut mesh, [idx(k, 1), idx(k + 1, 1), idx(k + 1, 3), idx(k, 3)], radial);
        push_quad(&mut mesh, [idx(k, 0), idx(k + 1, 0), idx(k + 1, 2), idx(k, 2)], -radial);
        push_quad(&mut mesh, [idx(k, 0), idx(k + 1, 0), idx(k + 1, 1), idx(k, 1)], -a);
        push_quad(&mut mesh, [idx(k, 2), idx(k + 1, 2), idx(k + 1, 3), idx(k, 3)], a);
    }
    if !full {
        let tangent0 = -y0;
        let t1 = sweep;
        let tangent1 = -x0 * t1.sin() + y0 * t1.cos();
        let last = samples - 1;
        push_quad(&mut mesh, [idx(0, 0), idx(0, 1), idx(0, 3), idx(0, 2)], tangent0);
        push_quad(&mut mesh, [idx(last, 0), idx(last, 1), idx(last, 3), idx(last, 2)], tangent1);
    }
    Ok(mesh)
}

/// Appends a planar quad as two triangles wound to face `outward`.
fn push_quad(mesh: &mut Mesh, q: [usize; 4], outward: Vector3) {
    let [a, b, c, d] = q;
    let n = (mesh.vertices[b] - mesh.vertices[a]).cross(&(mesh.vertices[c] - mesh.vertices[a]));
    if n.dot(&outward) >= 0.0 {
        mesh.triangles.push([a, b, c]);
        mesh.triangles.push([a, c, d]);
    } else {
        mesh.triangles.push([a, c, b]);
        mesh.triangles.push([a, d, c]);
    }
}
