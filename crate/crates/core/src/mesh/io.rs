use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Mesh, MeshError, Point3, MERGE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MeshFormat {
    StlBinary,
    StlAscii,
    Obj,
}

impl MeshFormat {
    /// Guesses the format from the extension and, for STL, the payload.
    pub fn detect(path: &Path, data: &[u8]) -> Option<MeshFormat> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(Self::detect_stl(data)),
            _ => None,
        }
    }

    pub fn detect_stl(data: &[u8]) -> MeshFormat {
        if data.len() >= 84 {
            let n = u32::from_le_bytes([data[80], data[81], data[82], data[83]]) as usize;
            if 84 + n * 50 == data.len() {
                return MeshFormat::StlBinary;
            }
        }
        if data.trim_ascii_start().starts_with(b"solid") {
            MeshFormat::StlAscii
        } else {
            MeshFormat::StlBinary
        }
    }
}

/// Parses a mesh and cleans it: vertices within 1e-6 mm are merged and
/// degenerate triangles dropped.
pub fn load_mesh(data: &[u8], format: MeshFormat) -> Result<Mesh, MeshError> {
    let raw = match format {
        MeshFormat::StlBinary => parse_stl_binary(data)?,
        MeshFormat::StlAscii => parse_stl_ascii(data)?,
        MeshFormat::Obj => parse_obj(data)?,
    };
    let mesh = raw.cleaned(MERGE_TOLERANCE);
    if mesh.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    Ok(mesh)
}

pub fn load_mesh_file(path: &Path) -> Result<Mesh, MeshError> {
    let data = std::fs::read(path).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    let format = MeshFormat::detect(path, &data)
        .ok_or_else(|| MeshError::Parse(format!("unknown mesh extension: {}", path.display())))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh")
        .to_string();
    Ok(load_mesh(&data, format)?.with_name(name))
}

fn triangle_soup(name: &str, tris: Vec<[Point3; 3]>) -> Mesh {
    let vertices = tris.iter().flatten().copied().collect();
    let triangles = (0..tris.len()).map(|i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();
    Mesh::new(name, vertices, triangles)
}

fn parse_stl_binary(data: &[u8]) -> Result<Mesh, MeshError> {
    if data.len() < 84 {
        return Err(MeshError::Parse("binary STL shorter than its 84-byte header".into()));
    }
    let n = u32::from_le_bytes([data[80], data[81], data[82], data[83]]) as usize;
    let need = 84 + n * 50;
    if data.len() < need {
        return Err(MeshError::Parse(format!(
            "binary STL declares {n} triangles but holds {} bytes",
            data.len()
        )));
    }
    let f = |off: usize| f32::from_le_bytes([data[off], data[off + 1], data[off + 2], data[off + 3]]) as f64;
    let mut tris = Vec::with_capacity(n);
    for t in 0..n {
        let base = 84 + t * 50 + 12; // skip the facet normal
        let mut tri = [Point3::origin(); 3];
        for (k, p) in tri.iter_mut().enumerate() {
            let o = base + k * 12;
            *p = Point3::new(f(o), f(o + 4), f(o + 8));
        }
        if tri.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(MeshError::Parse(format!("non-finite coordinate in facet {t}")));
        }
        tris.push(tri);
    }
    Ok(triangle_soup("stl", tris))
}

fn parse_stl_ascii(data: &[u8]) -> Result<Mesh, MeshError> {
    let text = std::str::from_utf8(data).map_err(|e| MeshError::Parse(format!("ASCII STL is not UTF-8: {e}")))?;
    let mut tris = Vec::new();
    let mut current: Vec<Point3> = Vec::with_capacity(3);
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("vertex") => {
                let coords: Result<Vec<f64>, _> = tokens.map(str::parse::<f64>).collect();
                match coords {
                    Ok(c) if c.len() == 3 && c.iter().all(|v| v.is_finite()) => {
                        current.push(Point3::new(c[0], c[1], c[2]))
                    }
                    _ => return Err(MeshError::Parse(format!("bad vertex on line {}", lineno + 1))),
                }
            }
            Some("endloop") => {
                if current.len() != 3 {
                    return Err(MeshError::Parse(format!(
                        "facet ending on line {} has {} vertices",
                        lineno + 1,
                        current.len()
                    )));
                }
                tris.push([current[0], current[1], current[2]]);
                current.clear();
            }
            _ => {}
        }
    }
    if !current.is_empty() {
        return Err(MeshError::Parse("unterminated facet loop".into()));
    }
    Ok(triangle_soup("stl", tris))
}

fn parse_obj(data: &[u8]) -> Result<Mesh, MeshError> {
    let text = std::str::from_utf8(data).map_err(|e| MeshError::Parse(format!("OBJ is not UTF-8: {e}")))?;
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Result<Vec<f64>, _> = tokens.take(3).map(str::parse::<f64>).collect();
                match coords {
                    Ok(c) if c.len() == 3 && c.iter().all(|v| v.is_finite()) => {
                        vertices.push(Point3::new(c[0], c[1], c[2]))
                    }
                    _ => return Err(MeshError::Parse(format!("bad vertex on line {}", lineno + 1))),
                }
            }
            Some("f") => {
                let idx: Result<Vec<i64>, _> = tokens
                    .map(|t| t.split('/').next().unwrap_or("").parse::<i64>())
                    .collect();
                let idx = idx.map_err(|_| MeshError::Parse(format!("bad face on line {}", lineno + 1)))?;
                if idx.len() < 3 {
                    return Err(MeshError::Parse(format!("face with < 3 vertices on line {}", lineno + 1)));
                }
                faces.push((lineno + 1, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut triangles = Vec::new();
    for (lineno, idx) in faces {
        // OBJ indices are 1-based; negative values count back from the end
        let resolved: Result<Vec<usize>, MeshError> = idx
            .iter()
            .map(|&i| {
                let r = if i > 0 { i - 1 } else { n + i };
                if i == 0 || r < 0 || r >= n {
                    Err(MeshError::Parse(format!(
                        "face on line {lineno} references vertex {i} but only {n} exist"
                    )))
                } else {
                    Ok(r as usize)
                }
            })
            .collect();
        let r = resolved?;
        for k in 1..r.len() - 1 {
            triangles.push([r[0], r[k], r[k + 1]]);
        }
    }
    Ok(Mesh::new("obj", vertices, triangles))
}

/// Serializes to binary STL with a fixed header so output is reproducible.
pub fn write_stl_binary(mesh: &Mesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + mesh.triangles.len() * 50);
    let mut header = [0u8; 80];
    let label = format!("binary STL: {}", mesh.name);
    let n = label.len().min(80);
    header[..n].copy_from_slice(&label.as_bytes()[..n]);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for [a, b, c] in mesh.triangle_points() {
        let nrm = (b - a).cross(&(c - a));
        let nrm = if nrm.norm() > 0.0 { nrm.normalize() } else { nrm };
        for v in [nrm.x, nrm.y, nrm.z] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for p in [a, b, c] {
            for v in [p.x, p.y, p.z] {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_box, Box3};

    fn cube_ascii() -> String {
        let cube = make_box(&Box3::new(Point3::origin(), Point3::new(1.0, 1.0, 1.0)));
        let mut s = String::from("solid cube\n");
        for [a, b, c] in cube.triangle_points() {
            s.push_str("  facet normal 0 0 0\n    outer loop\n");
            for p in [a, b, c] {
                s.push_str(&format!("      vertex {} {} {}\n", p.x, p.y, p.z));
            }
            s.push_str("    endloop\n  endfacet\n");
        }
        s.push_str("endsolid cube\n");
        s
    }

    #[test]
    fn ascii_cube_merges_to_eight_vertices() {
        let m = load_mesh(cube_ascii().as_bytes(), MeshFormat::StlAscii).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
        assert!(m.is_watertight());
    }

    #[test]
    fn binary_coincident_vertices_merge() {
        // small coordinates so the 1e-9 offset survives the f32 round trip
        let s = 1e-3;
        let tri_a = [Point3::origin(), Point3::new(s + 1e-9, 0.0, 0.0), Point3::new(0.0, s, 0.0)];
        let tri_b = [Point3::new(s, 0.0, 0.0), Point3::new(s, s, 0.0), Point3::new(0.0, s, 0.0)];
        assert_ne!((s + 1e-9) as f32, s as f32);
        let soup = triangle_soup("pair", vec![tri_a, tri_b]);
        let bytes = write_stl_binary(&soup);
        assert_eq!(MeshFormat::detect_stl(&bytes), MeshFormat::StlBinary);
        let m = load_mesh(&bytes, MeshFormat::StlBinary).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles.len(), 2);
    }

    #[test]
    fn obj_index_out_of_range_is_parse_error() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n";
        assert!(matches!(load_mesh(src.as_bytes(), MeshFormat::Obj), Err(MeshError::Parse(_))));
    }

    #[test]
    fn obj_quads_and_slashes() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\n";
        let m = load_mesh(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.triangles.len(), 2);
    }

    #[test]
    fn degenerate_only_input_is_empty() {
        let src = "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n";
        assert_eq!(load_mesh(src.as_bytes(), MeshFormat::Obj), Err(MeshError::EmptyMesh));
    }

    #[test]
    fn truncated_binary_is_parse_error() {
        let mut bytes = vec![0u8; 84];
        bytes[80] = 2;
        assert!(matches!(load_mesh(&bytes, MeshFormat::StlBinary), Err(MeshError::Parse(_))));
    }
}
