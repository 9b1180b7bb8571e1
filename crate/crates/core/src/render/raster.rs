//! Tile-binned triangle rasterizer.
//!
//! Rendering runs in two phases per screen tile. Visibility first: every
//! triangle binned to the tile is scan-converted with a nearest-wins depth
//! test, keeping the winning triangle and its perspective-correct
//! barycentrics. Shading second: each covered pixel is shaded once from the
//! interpolated world position and normal. Skipped stencil fragments still
//! occlude, so the surface's own base shading shows through the gaps.
//!
//! Tiles are independent, so they run in parallel; the result does not
//! depend on scheduling.

use glam::{DVec2, DVec3};

use super::camera::{Camera, View, NEAR_PLANE_M};
use super::mesh::TriMesh;
use super::shade::Shader;
use super::Frame;
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_BACKGROUND: [u8; 3] = [128, 128, 128];
pub const DEFAULT_TILE: u32 = 32;

const NO_TRIANGLE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Color where no surface is hit.
    pub background: [u8; 3],
    /// Square tile edge in pixels.
    pub tile_size: u32,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            background: DEFAULT_BACKGROUND,
            tile_size: DEFAULT_TILE,
        }
    }
}

/// Flat lambertian gray for the bare surface.
#[inline]
pub fn base_shade(normal: DVec3) -> [u8; 3] {
    const LIGHT: DVec3 = DVec3::new(0.352_180_362_530_6, 0.880_450_906_326_5, 0.317_007_726_288_4);
    let g = (70.0 + 120.0 * normal.dot(LIGHT).abs()).round() as u8;
    [g, g, g]
}

/// One screen-space triangle after near-plane clipping.
#[derive(Debug, Clone, Copy)]
struct Setup {
    tri: u32,
    p: [DVec2; 3],
    inv_z: [f64; 3],
    /// Barycentrics of each vertex relative to the source triangle.
    bary: [DVec3; 3],
    inv_area: f64,
    min: [u32; 2],
    max: [u32; 2],
}

#[inline]
fn edge(a: DVec2, b: DVec2, c: DVec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn setup_triangle(view: &View, mesh: &TriMesh, tri: u32) -> Vec<Setup> {
    let idx = mesh.triangles()[tri as usize];
    let vs = idx.map(|i| view.to_view(mesh.vertices()[i as usize]));
    let barys = [DVec3::X, DVec3::Y, DVec3::Z];

    // clip against z >= near
    let mut poly: Vec<(DVec3, DVec3)> = Vec::with_capacity(4);
    for k in 0..3 {
        let (a, ba) = (vs[k], barys[k]);
        let (b, bb) = (vs[(k + 1) % 3], barys[(k + 1) % 3]);
        let a_in = a.z >= NEAR_PLANE_M;
        let b_in = b.z >= NEAR_PLANE_M;
        if a_in {
            poly.push((a, ba));
        }
        if a_in != b_in {
            let t = (NEAR_PLANE_M - a.z) / (b.z - a.z);
            poly.push((a + (b - a) * t, ba + (bb - ba) * t));
        }
    }
    if poly.len() < 3 {
        return Vec::new();
    }

    let (w, h) = (view.width as f64, view.height as f64);
    let projected: Vec<(DVec2, f64, DVec3)> = poly
        .iter()
        .map(|&(v, b)| (view.project(v), 1.0 / v.z, b))
        .collect();
    let mut out = Vec::with_capacity(poly.len() - 2);
    for k in 1..projected.len() - 1 {
        let corners = [projected[0], projected[k], projected[k + 1]];
        let p = corners.map(|c| c.0);
        let area = edge(p[0], p[1], p[2]);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        let lo = p[0].min(p[1]).min(p[2]);
        let hi = p[0].max(p[1]).max(p[2]);
        // pixel i covers [i, i+1) with its center at i + 0.5
        let x0 = (lo.x - 0.5).ceil().max(0.0);
        let y0 = (lo.y - 0.5).ceil().max(0.0);
        let x1 = (hi.x - 0.5).floor().min(w - 1.0);
        let y1 = (hi.y - 0.5).floor().min(h - 1.0);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        out.push(Setup {
            tri,
            p,
            inv_z: corners.map(|c| c.1),
            bary: corners.map(|c| c.2),
            inv_area: 1.0 / area,
            min: [x0 as u32, y0 as u32],
            max: [x1 as u32, y1 as u32],
        });
    }
    out
}

struct TileRect {
    x0: u32,
    y0: u32,
    x1: u32, // exclusive
    y1: u32,
}

struct TileOut {
    color: Vec<[u8; 4]>,
    depth: Vec<f64>,
}

/// Renders `mesh` shaded by `shader` from `camera` with default options.
pub fn render(mesh: &TriMesh, shader: &Shader, camera: &Camera) -> Result<Frame> {
    render_with(mesh, shader, camera, &RenderOptions::default())
}

pub fn render_with(
    mesh: &TriMesh,
    shader: &Shader,
    camera: &Camera,
    opts: &RenderOptions,
) -> Result<Frame> {
    if mesh.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let view = camera.view()?;
    let ts = opts.tile_size.max(1);
    let (w, h) = (camera.width, camera.height);
    let tiles_x = w.div_ceil(ts);
    let tiles_y = h.div_ceil(ts);

    let setups: Vec<Setup> = par::map_range(mesh.triangle_count(), |t| {
        setup_triangle(&view, mesh, t as u32)
    })
    .into_iter()
    .flatten()
    .collect();

    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); (tiles_x * tiles_y) as usize];
    for (i, s) in setups.iter().enumerate() {
        for ty in s.min[1] / ts..=s.max[1] / ts {
            for tx in s.min[0] / ts..=s.max[0] / ts {
                bins[(ty * tiles_x + tx) as usize].push(i as u32);
            }
        }
    }

    let tiles: Vec<TileRect> = (0..tiles_y)
        .flat_map(|ty| {
            (0..tiles_x).map(move |tx| TileRect {
                x0: tx * ts,
                y0: ty * ts,
                x1: ((tx + 1) * ts).min(w),
                y1: ((ty + 1) * ts).min(h),
            })
        })
        .collect();

    let outputs: Vec<Result<TileOut>> = par::map_range(tiles.len(), |i| {
        render_tile(&tiles[i], &bins[i], &setups, mesh, shader, opts)
    });

    let mut frame = Frame::new(w, h, opts.background);
    for (rect, out) in tiles.iter().zip(outputs) {
        let out = out?;
        let tw = (rect.x1 - rect.x0) as usize;
        for y in rect.y0..rect.y1 {
            let row = (y - rect.y0) as usize * tw;
            let dst = (y * w + rect.x0) as usize;
            frame.color[dst..dst + tw].copy_from_slice(&out.color[row..row + tw]);
            frame.depth[dst..dst + tw].copy_from_slice(&out.depth[row..row + tw]);
        }
    }
    Ok(frame)
}

fn render_tile(
    rect: &TileRect,
    bin: &[u32],
    setups: &[Setup],
    mesh: &TriMesh,
    shader: &Shader,
    opts: &RenderOptions,
) -> Result<TileOut> {
    let tw = (rect.x1 - rect.x0) as usize;
    let th = (rect.y1 - rect.y0) as usize;
    let n = tw * th;
    let mut depth = vec![f64::INFINITY; n];
    let mut winner = vec![NO_TRIANGLE; n];
    let mut bary = vec![DVec3::ZERO; n];

    for &si in bin {
        let s = &setups[si as usize];
        let x0 = s.min[0].max(rect.x0);
        let x1 = s.max[0].min(rect.x1 - 1);
        let y0 = s.min[1].max(rect.y0);
        let y1 = s.max[1].min(rect.y1 - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let c = DVec2::new(x as f64 + 0.5, y as f64 + 0.5);
                let l0 = edge(s.p[1], s.p[2], c) * s.inv_area;
                let l1 = edge(s.p[2], s.p[0], c) * s.inv_area;
                let l2 = edge(s.p[0], s.p[1], c) * s.inv_area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                let q0 = l0 * s.inv_z[0];
                let q1 = l1 * s.inv_z[1];
                let q2 = l2 * s.inv_z[2];
                let iz = q0 + q1 + q2;
                let z = 1.0 / iz;
                let k = (y - rect.y0) as usize * tw + (x - rect.x0) as usize;
                if z < depth[k] {
                    depth[k] = z;
                    winner[k] = s.tri;
                    bary[k] = (s.bary[0] * q0 + s.bary[1] * q1 + s.bary[2] * q2) * z;
                }
            }
        }
    }

    let mut color = vec![[0u8; 4]; n];
    let [br, bg, bb] = opts.background;
    for k in 0..n {
        let tri = winner[k];
        if tri == NO_TRIANGLE {
            color[k] = [br, bg, bb, 255];
            continue;
        }
        let idx = mesh.triangles()[tri as usize];
        let b = bary[k];
        let [v0, v1, v2] = idx.map(|i| mesh.vertices()[i as usize]);
        let [n0, n1, n2] = idx.map(|i| mesh.normals()[i as usize]);
        let pos = v0 * b.x + v1 * b.y + v2 * b.z;
        let normal = (n0 * b.x + n1 * b.y + n2 * b.z)
            .try_normalize()
            .unwrap_or_else(|| (v1 - v0).cross(v2 - v0).normalize());
        let base = base_shade(normal);
        let rgb = match shader.shade(pos, normal)? {
            Some(shade) => shade.over(base),
            None => base,
        };
        color[k] = [rgb[0], rgb[1], rgb[2], 255];
    }
    Ok(TileOut { color, depth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{ColorLut, EncodingKind, EncodingSpec};
    use crate::field::{Field, RadiationSource};

    fn shader(kind: EncodingKind) -> Shader {
        let field = Field::new(
            vec![RadiationSource::new(DVec3::new(0.0, 0.0, 0.0), 1e-3).unwrap()],
            None,
        )
        .unwrap();
        Shader::new(field, EncodingSpec::new(kind), ColorLut::viridis()).unwrap()
    }

    fn top_down(w: u32) -> Camera {
        Camera {
            position: DVec3::new(0.0, 5.0, 0.0),
            look_at: DVec3::ZERO,
            up: DVec3::Z,
            fov_deg: 60.0,
            width: w,
            height: w,
        }
    }

    #[test]
    fn empty_mesh_rejected() {
        let mesh = TriMesh::new(vec![], None, vec![]).unwrap();
        assert!(matches!(
            render(&mesh, &shader(EncodingKind::Continuous), &top_down(32)),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn plane_fills_view_and_depth_is_camera_distance() {
        let mesh = TriMesh::grid_plane(DVec3::ZERO, 20.0, 4);
        let f = render(&mesh, &shader(EncodingKind::Continuous), &top_down(64)).unwrap();
        let c = f.index(32, 32);
        assert!((f.depth[c] - 5.0).abs() < 1e-9);
        assert!(f.depth.iter().all(|d| d.is_finite()));
    }

    #[test]
    fn nearer_plane_occludes() {
        // lower plane carries the field, upper plane covers the left half
        let low = TriMesh::grid_plane(DVec3::ZERO, 20.0, 2);
        let mut verts = low.vertices().to_vec();
        let mut tris = low.triangles().to_vec();
        let hi = TriMesh::grid_plane(DVec3::new(5.0, 1.0, 0.0), 10.0, 2);
        let off = verts.len() as u32;
        verts.extend_from_slice(hi.vertices());
        tris.extend(hi.triangles().iter().map(|t| t.map(|i| i + off)));
        let mesh = TriMesh::new(verts, None, tris).unwrap();
        let f = render(&mesh, &shader(EncodingKind::Continuous), &top_down(64)).unwrap();
        // camera right is -x, so +x lies on the left of the image
        let left = f.index(8, 32);
        let right = f.index(56, 32);
        assert!((f.depth[left] - 4.0).abs() < 1e-9);
        assert!((f.depth[right] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn tile_size_does_not_change_image() {
        let mesh = TriMesh::synthetic_room(4.5, 8.5, 2.5, 2_000);
        let cam = Camera::new(DVec3::new(2.2, 1.6, 0.5), DVec3::new(2.2, 0.8, 6.0), 70.0, 96, 64);
        let s = shader(EncodingKind::Arrow);
        let a = render_with(&mesh, &s, &cam, &RenderOptions { tile_size: 7, ..Default::default() }).unwrap();
        let b = render_with(&mesh, &s, &cam, &RenderOptions { tile_size: 64, ..Default::default() }).unwrap();
        assert_eq!(a.color, b.color);
    }

    #[test]
    fn triangle_crossing_near_plane_is_clipped() {
        let mesh = TriMesh::grid_plane(DVec3::ZERO, 40.0, 1);
        let cam = Camera::new(DVec3::new(0.0, 0.5, 0.0), DVec3::new(0.0, 0.0, 3.0), 90.0, 32, 32);
        let f = render(&mesh, &shader(EncodingKind::Continuous), &cam).unwrap();
        // lower half of the image sees the floor
        assert!(f.depth[f.index(16, 30)].is_finite());
        assert!(f.depth[f.index(16, 2)].is_infinite());
    }
}
