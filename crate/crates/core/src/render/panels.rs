//! Reference renders: the six encodings on a flat 4 x 4 m plane lit by three
//! sources. These are pinned as golden images.

use glam::DVec3;

use super::{render, Camera, Frame, Shader, TriMesh};
use crate::encoding::{ColorLut, EncodingKind, EncodingSpec};
use crate::error::Result;
use crate::field::{Field, RadiationSource};

pub const PANEL_SIZE: u32 = 256;

pub fn panel_sources() -> Vec<RadiationSource> {
    [
        DVec3::new(-1.0, 0.0, -0.6),
        DVec3::new(1.1, 0.0, -0.9),
        DVec3::new(0.3, 0.0, 1.1),
    ]
    .into_iter()
    .map(|p| RadiationSource {
        position: p,
        rate_at_1m: 1e-3,
    })
    .collect()
}

pub fn panel_mesh() -> TriMesh {
    TriMesh::grid_plane(DVec3::ZERO, 4.0, 16)
}

pub fn panel_camera(size: u32) -> Camera {
    Camera::new(DVec3::new(0.0, 4.6, -1.6), DVec3::ZERO, 55.0, size, size)
}

pub fn panel(kind: EncodingKind, size: u32) -> Result<Frame> {
    let field = Field::new(panel_sources(), None)?;
    let shader = Shader::new(field, EncodingSpec::new(kind), ColorLut::viridis())?;
    render(&panel_mesh(), &shader, &panel_camera(size))
}

/// All six panels in [`EncodingKind::ALL`] order.
pub fn all_panels(size: u32) -> Result<Vec<(EncodingKind, Frame)>> {
    EncodingKind::ALL
        .into_iter()
        .map(|k| panel(k, size).map(|f| (k, f)))
        .collect()
}

pub fn panel_file_name(kind: EncodingKind) -> String {
    format!("panel_{kind}.png")
}
