use glam::DVec3;

use crate::encoding::{self, ColorLut, EncodingSpec, Shade};
use crate::error::Result;
use crate::field::Field;
use crate::stencil::{self, StencilPattern, TriplanarSample};

/// Everything a fragment needs to be colored: the field, the active encoding
/// and the color table.
#[derive(Debug, Clone)]
pub struct Shader {
    field: Field,
    spec: EncodingSpec,
    lut: ColorLut,
    pattern: Option<StencilPattern>,
}

impl Shader {
    pub fn new(field: Field, spec: EncodingSpec, lut: ColorLut) -> Result<Self> {
        spec.validate()?;
        Ok(Shader {
            pattern: StencilPattern::for_encoding(spec.kind),
            field,
            spec,
            lut,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    pub fn lut(&self) -> &ColorLut {
        &self.lut
    }

    /// Shades one surface point. `None` means the stencil rejected the
    /// fragment and the surface underneath stays visible.
    pub fn shade(&self, world_pos: DVec3, normal: DVec3) -> Result<Option<Shade>> {
        if let Some(pattern) = self.pattern {
            let tile = self.spec.tile_scale;
            let sample = TriplanarSample::new(world_pos, normal, tile)?;
            let rotations = self.rotations(&sample, pattern);
            if !stencil::stencil_test(sample.coverage(pattern, rotations)) {
                return Ok(None);
            }
        }
        let u = self.field.intensity(world_pos);
        Ok(Some(encoding::shade_unchecked(u, &self.spec, &self.lut)))
    }

    /// Per-plane arrow rotations. Each plane's arrow is aimed from the tile
    /// center so the whole arrow in a tile turns rigidly.
    fn rotations(&self, sample: &TriplanarSample, pattern: StencilPattern) -> [f64; 3] {
        if pattern != StencilPattern::Arrow {
            return [0.0; 3];
        }
        let mut r = [0.0; 3];
        for (axis, rot) in r.iter_mut().enumerate() {
            if sample.weights[axis] > 0.0 {
                let center = sample.tile_center(axis, self.spec.tile_scale);
                let centroid = self.field.centroid(center);
                *rot = stencil::arrow_rotation(axis, center, centroid);
            }
        }
        r
    }
}

/// Free-function form of [`Shader::shade`].
pub fn shade_fragment(
    world_pos: DVec3,
    normal: DVec3,
    field: &Field,
    spec: &EncodingSpec,
    lut: &ColorLut,
) -> Result<Option<Shade>> {
    Shader::new(field.clone(), *spec, lut.clone())?.shade(world_pos, normal)
}
