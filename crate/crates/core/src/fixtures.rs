//! Synthetic demo objects with ready-made design files: a spatula (slender
//! handle, blade on the end-effector) and a piggy bank (thick mid-section,
//! pick and place).

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use crate::mesh::{make_uv_sphere, write_stl_binary, Axis, Mesh, Point3, Vector3};
use crate::pipeline::{DesignFile, EndEffectorOn};
use crate::selection::SweepSelection;
use crate::task::{Action, MotionPoint};

/// One ring of a loft: station along X and half extents along Y and Z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub x: f64,
    pub half_y: f64,
    pub half_z: f64,
}

fn superellipse(theta: f64, exponent: f64) -> (f64, f64) {
    let p = 2.0 / exponent;
    let (s, c) = theta.sin_cos();
    (c.signum() * c.abs().powf(p), s.signum() * s.abs().powf(p))
}

/// Closed tube along +X through superellipse rings, flat-capped at both ends.
pub fn loft_x(stations: &[Station], exponent: f64, segments: usize) -> Mesh {
    assert!(stations.len() >= 2 && segments >= 3);
    let mut vertices = Vec::with_capacity(stations.len() * segments + 2);
    for s in stations {
        for j in 0..segments {
            let (u, v) = superellipse(TAU * j as f64 / segments as f64, exponent);
            vertices.push(Point3::new(s.x, s.half_y * u, s.half_z * v));
        }
    }
    let at = |k: usize, j: usize| k * segments + j % segments;
    let mut triangles = Vec::new();
    for k in 0..stations.len() - 1 {
        for j in 0..segments {
            let (a, b, c, d) = (at(k, j), at(k, j + 1), at(k + 1, j), at(k + 1, j + 1));
            triangles.push([a, b, c]);
            triangles.push([b, d, c]);
        }
    }
    let first = vertices.len();
    vertices.push(Point3::new(stations[0].x, 0.0, 0.0));
    let last = vertices.len();
    let n = stations.len() - 1;
    vertices.push(Point3::new(stations[n].x, 0.0, 0.0));
    for j in 0..segments {
        triangles.push([first, at(0, j + 1), at(0, j)]);
        triangles.push([last, at(n, j), at(n, j + 1)]);
    }
    Mesh::new("loft", vertices, triangles)
}

/// Handle section (mm): rounded square tube 40 × 36, 220 long from x = 0.
pub const SPATULA_HANDLE: [f64; 3] = [220.0, 40.0, 36.0];

/// About 10k triangles: rounded handle, short neck, thin blade.
pub fn spatula_mesh() -> Mesh {
    let [len, w, h] = SPATULA_HANDLE;
    let mut stations = Vec::new();
    let handle_rings = 40;
    for k in 0..=handle_rings {
        stations.push(Station {
            x: len * k as f64 / handle_rings as f64,
            half_y: w / 2.0,
            half_z: h / 2.0,
        });
    }
    // neck tapers into the blade
    for k in 1..=6 {
        let t = k as f64 / 6.0;
        stations.push(Station {
            x: len + 30.0 * t,
            half_y: w / 2.0 + (30.0 - w / 2.0) * t,
            half_z: h / 2.0 + (3.0 - h / 2.0) * t,
        });
    }
    for k in 1..=4 {
        stations.push(Station {
            x: len + 30.0 + 20.0 * k as f64,
            half_y: 30.0,
            half_z: 3.0,
        });
    }
    loft_x(&stations, 4.0, 96).with_name("spatula")
}

/// Semi-axes of the piggy bank body, mm.
pub const PIGGYBANK_AXES: [f64; 3] = [110.0, 75.0, 70.0];

/// Ellipsoid of about 10k triangles centred at the origin.
pub fn piggybank_mesh() -> Mesh {
    let mut m = make_uv_sphere(Point3::origin(), 1.0, 71, 72);
    let [a, b, c] = PIGGYBANK_AXES;
    for v in &mut m.vertices {
        *v = Point3::new(v.x * a, v.y * b, v.z * c);
    }
    m.with_name("piggybank")
}

/// Eight points on a horizontal circle, traced as one loop.
pub fn stirring_circle(center: Point3, radius: f64) -> Vec<MotionPoint> {
    (0..8)
        .map(|k| {
            let a = TAU * k as f64 / 8.0;
            MotionPoint::new(center + Vector3::new(a.cos(), a.sin(), 0.0) * radius, Action::Trajectory)
        })
        .collect()
}

pub fn spatula_design(mesh_path: impl Into<PathBuf>) -> DesignFile {
    DesignFile {
        mesh_path: mesh_path.into(),
        selection: SweepSelection {
            axis: Axis::X,
            start: 0.0,
            end: SPATULA_HANDLE[0],
        },
        end_effector_on: EndEffectorOn::Static,
        motorized: true,
        motion_points: stirring_circle(SPATULA_STIR_CENTER, SPATULA_STIR_RADIUS),
        attach_surface: None,
        references: Vec::new(),
        resolution: None,
        speed_deg_s: None,
    }
}

pub const SPATULA_STIR_CENTER: Point3 = Point3::new(120.0, 150.0, -60.0);
pub const SPATULA_STIR_RADIUS: f64 = 30.0;

pub fn piggybank_design(mesh_path: impl Into<PathBuf>) -> DesignFile {
    let points = vec![
        MotionPoint::new(Point3::new(20.0, 60.0, 120.0), Action::Pick),
        MotionPoint::new(Point3::new(0.0, 20.0, 150.0), Action::Trajectory),
        MotionPoint::new(Point3::new(-20.0, -60.0, 110.0), Action::Place),
    ];
    DesignFile {
        mesh_path: mesh_path.into(),
        selection: SweepSelection {
            axis: Axis::X,
            start: -30.0,
            end: 30.0,
        },
        end_effector_on: EndEffectorOn::Transformable,
        motorized: true,
        motion_points: points,
        attach_surface: None,
        references: Vec::new(),
        resolution: None,
        speed_deg_s: None,
    }
}

/// Names accepted by [`write_fixture`].
pub const FIXTURES: [&str; 2] = ["spatula", "piggybank"];

/// Writes `<name>.stl` and `<name>.json` into `dir`; returns the design path.
pub fn write_fixture(name: &str, dir: &Path) -> std::io::Result<PathBuf> {
    let stl = PathBuf::from(format!("{name}.stl"));
    let (mesh, design) = match name {
        "spatula" => (spatula_mesh(), spatula_design(&stl)),
        "piggybank" => (piggybank_mesh(), piggybank_design(&stl)),
        _ => {
            return Err(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("unknown fixture {name}; expected one of {FIXTURES:?}"),
            ))
        }
    };
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(&stl), write_stl_binary(&mesh))?;
    let path = dir.join(format!("{name}.json"));
    let mut json = serde_json::to_vec_pretty(&design)?;
    json.push(b'\n');
    std::fs::write(&path, json)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_closed_and_near_10k_triangles() {
        for m in [spatula_mesh(), piggybank_mesh()] {
            assert!(m.is_watertight(), "{}", m.name);
            assert!(m.volume() > 0.0);
            let n = m.triangles.len();
            assert!((9_000..=11_000).contains(&n), "{} has {n}", m.name);
        }
    }

    #[test]
    fn elliptic_loft_volume() {
        let s = [
            Station { x: 0.0, half_y: 10.0, half_z: 5.0 },
            Station { x: 20.0, half_y: 10.0, half_z: 5.0 },
        ];
        let m = loft_x(&s, 2.0, 256);
        let ellipse = std::f64::consts::PI * 10.0 * 5.0 * 20.0;
        assert!((m.volume() - ellipse).abs() / ellipse < 1e-3);
    }
}
