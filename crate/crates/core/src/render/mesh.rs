use std::collections::HashMap;
use std::path::Path;

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Untextured triangle mesh with per-vertex normals.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<DVec3>,
    normals: Vec<DVec3>,
    triangles: Vec<[u32; 3]>,
}

#[derive(Serialize, Deserialize)]
struct JsonMesh {
    vertices: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normals: Option<Vec<[f64; 3]>>,
    triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    /// Builds a mesh, dropping zero-area triangles. Normals are recomputed
    /// (area-weighted) when absent or when any given normal is degenerate.
    pub fn new(
        vertices: Vec<DVec3>,
        normals: Option<Vec<DVec3>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self> {
        let n = vertices.len();
        if let Some(bad) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("vertex {bad} is not finite")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&i) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {i}, mesh has {n}"
                )));
            }
        }
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                (b - a).cross(c - a).length() * 0.5 > MIN_TRIANGLE_AREA
            })
            .collect();

        let normals = match normals {
            Some(ns) if ns.len() == n && ns.iter().all(|v| v.is_finite() && v.length() > 1e-9) => {
                ns.into_iter().map(DVec3::normalize).collect()
            }
            Some(ns) if ns.len() != n => {
                return Err(Error::InvalidMesh(format!(
                    "{} normals for {n} vertices",
                    ns.len()
                )))
            }
            _ => vertex_normals(&vertices, &triangles),
        };
        Ok(TriMesh {
            vertices,
            normals,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[DVec3] {
        &self.vertices
    }

    pub fn normals(&self) -> &[DVec3] {
        &self.normals
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Loads `.obj` or `.json` by extension.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json(&text),
            _ => Self::from_obj(&text),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: JsonMesh = serde_json::from_str(text)?;
        let v = m.vertices.into_iter().map(DVec3::from_array).collect();
        let n = m
            .normals
            .map(|ns| ns.into_iter().map(DVec3::from_array).collect());
        Self::new(v, n, m.triangles)
    }

    pub fn to_json(&self) -> Result<String> {
        let m = JsonMesh {
            vertices: self.vertices.iter().map(|v| v.to_array()).collect(),
            normals: Some(self.normals.iter().map(|v| v.to_array()).collect()),
            triangles: self.triangles.clone(),
        };
        Ok(serde_json::to_string(&m)?)
    }

    /// Parses the `v`, `vn` and `f` records of a Wavefront OBJ file. Polygons
    /// are fan-triangulated; texture coordinates and other records are
    /// ignored.
    pub fn from_obj(text: &str) -> Result<Self> {
        let mut positions = Vec::new();
        let mut obj_normals = Vec::new();
        let mut corners: Vec<[(usize, Option<usize>); 3]> = Vec::new();

        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let mut it = raw.split_whitespace();
            let err = |msg: String| Error::MeshParse { line, msg };
            match it.next() {
                Some("v") | Some("vn") => {
                    let tag = raw.split_whitespace().next().unwrap();
                    let xs: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}"))))
                        .collect::<Result<_>>()?;
                    if xs.len() != 3 {
                        return Err(err(format!("`{tag}` needs 3 coordinates")));
                    }
                    let v = DVec3::new(xs[0], xs[1], xs[2]);
                    if tag == "v" {
                        positions.push(v);
                    } else {
                        obj_normals.push(v);
                    }
                }
                Some("f") => {
                    let refs: Vec<(usize, Option<usize>)> = it
                        .map(|tok| parse_face_ref(tok, positions.len(), obj_normals.len()))
                        .collect::<std::result::Result<_, String>>()
                        .map_err(err)?;
                    if refs.len() < 3 {
                        return Err(err("face needs at least 3 vertices".into()));
                    }
                    for k in 1..refs.len() - 1 {
                        corners.push([refs[0], refs[k], refs[k + 1]]);
                    }
                }
                _ => {}
            }
        }

        let all_have_normals = !corners.is_empty()
            && corners.iter().flatten().all(|(_, n)| n.is_some());
        if !all_have_normals {
            let tris = corners
                .iter()
                .map(|c| c.map(|(v, _)| v as u32))
                .collect();
            return Self::new(positions, None, tris);
        }

        // split vertices so each (position, normal) pair is unique
        let mut remap: HashMap<(usize, usize), u32> = HashMap::new();
        let mut verts = Vec::new();
        let mut norms = Vec::new();
        let mut tris = Vec::with_capacity(corners.len());
        for c in &corners {
            tris.push(c.map(|(v, n)| {
                let n = n.unwrap();
                *remap.entry((v, n)).or_insert_with(|| {
                    verts.push(positions[v]);
                    norms.push(obj_normals[n]);
                    (verts.len() - 1) as u32
                })
            }));
        }
        Self::new(verts, Some(norms), tris)
    }

    /// Square grid in the XZ plane at height `y`, normals up.
    pub fn grid_plane(center: DVec3, size: f64, cells: u32) -> Self {
        let cells = cells.max(1);
        let n = cells + 1;
        let mut vertices = Vec::with_capacity((n * n) as usize);
        for j in 0..n {
            for i in 0..n {
                let x = center.x - size / 2.0 + size * i as f64 / cells as f64;
                let z = center.z - size / 2.0 + size * j as f64 / cells as f64;
                vertices.push(DVec3::new(x, center.y, z));
            }
        }
        let mut triangles = Vec::with_capacity((cells * cells * 2) as usize);
        for j in 0..cells {
            for i in 0..cells {
                let a = j * n + i;
                let (b, c, d) = (a + 1, a + n, a + n + 1);
                triangles.push([a, c, b]);
                triangles.push([b, c, d]);
            }
        }
        let normals = vec![DVec3::Y; vertices.len()];
        Self::new(vertices, Some(normals), triangles).expect("grid is well formed")
    }

    /// Closed room shell (floor, ceiling-less walls and a central partition)
    /// with a small deterministic surface ripple, tessellated to roughly
    /// `target_triangles`. Stands in for a scanned spatial mesh.
    pub fn synthetic_room(width: f64, length: f64, height: f64, target_triangles: usize) -> Self {
        // panels: floor, four walls, partition (both faces)
        let panels: [(DVec3, DVec3, DVec3, f64); 7] = [
            (DVec3::ZERO, DVec3::X * width, DVec3::Z * length, 1.0),
            (DVec3::ZERO, DVec3::Z * length, DVec3::Y * height, 0.35),
            (DVec3::X * width, DVec3::Z * length, DVec3::Y * height, 0.35),
            (DVec3::ZERO, DVec3::X * width, DVec3::Y * height, 0.2),
            (DVec3::Z * length, DVec3::X * width, DVec3::Y * height, 0.2),
            (
                DVec3::new(width * 0.25, 0.0, length * 0.53),
                DVec3::X * width * 0.5,
                DVec3::Y * height * 0.8,
                0.1,
            ),
            (
                DVec3::new(width * 0.25, 0.0, length * 0.53 + 0.1),
                DVec3::X * width * 0.5,
                DVec3::Y * height * 0.8,
                0.1,
            ),
        ];
        let total_weight: f64 = panels.iter().map(|p| p.3).sum();
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (origin, du, dv, weight) in panels {
            let tris = (target_triangles as f64 * weight / total_weight).max(2.0);
            let aspect = du.length() / dv.length();
            let cells_v = ((tris / 2.0 / aspect).sqrt().round() as u32).max(1);
            let cells_u = ((tris / 2.0 / cells_v as f64).round() as u32).max(1);
            let normal = du.cross(dv).normalize();
            let base = vertices.len() as u32;
            for j in 0..=cells_v {
                for i in 0..=cells_u {
                    let s = i as f64 / cells_u as f64;
                    let t = j as f64 / cells_v as f64;
                    let p = origin + du * s + dv * t;
                    let ripple = 0.01 * ((p.x * 7.1).sin() + (p.y * 5.3).cos() + (p.z * 6.7).sin());
                    vertices.push(p + normal * ripple);
                }
            }
            let row = cells_u + 1;
            for j in 0..cells_v {
                for i in 0..cells_u {
                    let a = base + j * row + i;
                    triangles.push([a, a + 1, a + row]);
                    triangles.push([a + 1, a + row + 1, a + row]);
                }
            }
        }
        Self::new(vertices, None, triangles).expect("room mesh is well formed")
    }
}

fn parse_face_ref(
    tok: &str,
    n_pos: usize,
    n_norm: usize,
) -> std::result::Result<(usize, Option<usize>), String> {
    let resolve = |s: &str, count: usize| -> std::result::Result<usize, String> {
        let i: i64 = s.parse().map_err(|e| format!("index `{s}`: {e}"))?;
        let idx = if i > 0 {
            i - 1
        } else if i < 0 {
            count as i64 + i
        } else {
            return Err("index 0 is invalid".into());
        };
        if idx < 0 || idx as usize >= count {
            return Err(format!("index {i} out of range"));
        }
        Ok(idx as usize)
    };
    let mut parts = tok.split('/');
    let v = resolve(parts.next().unwrap_or(""), n_pos)?;
    let _vt = parts.next();
    let n = match parts.next() {
        Some(s) if !s.is_empty() => Some(resolve(s, n_norm)?),
        _ => None,
    };
    Ok((v, n))
}

fn vertex_normals(vertices: &[DVec3], triangles: &[[u32; 3]]) -> Vec<DVec3> {
    let mut acc = vec![DVec3::ZERO; vertices.len()];
    for t in triangles {
        let [a, b, c] = t.map(|i| vertices[i as usize]);
        // unnormalized cross product weights by area
        let n = (b - a).cross(c - a);
        for &i in t {
            acc[i as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize().unwrap_or(DVec3::Y))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_quad_with_normals() {
        let obj = "# quad\nv 0 0 0\nv 1 0 0\nv 1 0 1\nv 0 0 1\nvn 0 1 0\nf 1//1 2//1 3//1 4//1\n";
        let m = TriMesh::from_obj(obj).unwrap();
        assert_eq!(m.triangle_count(), 2);
        assert_eq!(m.vertices().len(), 4);
        assert!(m.normals().iter().all(|n| (*n - DVec3::Y).length() < 1e-12));
    }

    #[test]
    fn obj_without_normals_recomputes() {
        let obj = "v 0 0 0\nv 0 0 1\nv 1 0 0\nf -3 -2 -1\n";
        let m = TriMesh::from_obj(obj).unwrap();
        // (b - a) x (c - a) = z x x = +y
        assert!((m.normals()[0] - DVec3::Y).length() < 1e-12);
    }

    #[test]
    fn obj_errors() {
        assert!(matches!(
            TriMesh::from_obj("v 0 0\n"),
            Err(Error::MeshParse { line: 1, .. })
        ));
        assert!(TriMesh::from_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(TriMesh::from_obj("v 0 0 0\nv 1 0 0\nf 1 2\n").is_err());
    }

    #[test]
    fn degenerate_triangles_dropped() {
        let v = vec![DVec3::ZERO, DVec3::X, DVec3::X * 2.0, DVec3::Z];
        let m = TriMesh::new(v, None, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(m.triangle_count(), 1);
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(TriMesh::new(vec![DVec3::ZERO], None, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = TriMesh::grid_plane(DVec3::ZERO, 2.0, 3);
        let back = TriMesh::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn generated_meshes_have_unit_normals() {
        let room = TriMesh::synthetic_room(4.5, 8.5, 2.5, 10_000);
        assert!(room.triangle_count() > 8_000 && room.triangle_count() < 12_000);
        assert!(room
            .normals()
            .iter()
            .all(|n| (n.length() - 1.0).abs() < 1e-3));
    }
}
