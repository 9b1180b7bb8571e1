//! Color lookup and the six visual encodings.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LUT_SIZE: usize = 256;
pub const DEFAULT_BANDS: u32 = 8;
pub const TRANSPARENT_ALPHA: f64 = 0.33;

/// Stencil tile sizes in meters.
pub const CIRCLE_TILE_M: f64 = 0.30;
pub const HEX_TILE_M: f64 = 0.30;
pub const ARROW_TILE_M: f64 = 0.35;

const BAND_EPS: f64 = 1e-9;

const VIRIDIS_CSV: &str = include_str!("../data/viridis.csv");

/// 256-entry opaque color table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorLut {
    name: String,
    entries: Vec<[u8; 4]>,
}

impl ColorLut {
    pub fn viridis() -> Self {
        Self::from_csv("viridis", VIRIDIS_CSV).expect("bundled viridis table is valid")
    }

    /// Parses 256 lines of `R,G,B` decimal triples.
    pub fn from_csv(name: &str, text: &str) -> Result<Self> {
        let mut entries = Vec::with_capacity(LUT_SIZE);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let channels: Vec<&str> = line.split(',').map(str::trim).collect();
            if channels.len() != 3 {
                return Err(Error::InvalidLut(format!(
                    "line {}: expected R,G,B, got `{line}`",
                    i + 1
                )));
            }
            let mut rgba = [0, 0, 0, 255];
            for (c, s) in channels.iter().enumerate() {
                rgba[c] = s.parse::<u8>().map_err(|e| {
                    Error::InvalidLut(format!("line {}: channel `{s}`: {e}", i + 1))
                })?;
            }
            entries.push(rgba);
        }
        if entries.len() != LUT_SIZE {
            return Err(Error::InvalidLut(format!(
                "expected {LUT_SIZE} entries, found {}",
                entries.len()
            )));
        }
        Ok(ColorLut {
            name: name.to_owned(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv(&name, &text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entries(&self) -> &[[u8; 4]] {
        &self.entries
    }

    /// Interpolated lookup without range checks; `u` must lie in [0, 1].
    #[inline]
    pub(crate) fn lerp(&self, u: f64) -> [u8; 3] {
        let pos = u * (LUT_SIZE - 1) as f64;
        let i = (pos.floor() as usize).min(LUT_SIZE - 2);
        let f = pos - i as f64;
        let (a, b) = (self.entries[i], self.entries[i + 1]);
        let mix = |c: usize| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8;
        [mix(0), mix(1), mix(2)]
    }
}

/// Linearly interpolated LUT color at `u` in [0, 1].
pub fn sample_continuous(u: f64, lut: &ColorLut) -> Result<[u8; 4]> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfUnitRange {
            what: "normalized intensity",
            value: u,
        });
    }
    let [r, g, b] = lut.lerp(u);
    Ok([r, g, b, 255])
}

/// Center of the band containing `u` when [0, 1] is split into `n` bands.
#[inline]
pub fn band_quantize(u: f64, n: u32) -> f64 {
    let n = n as f64;
    ((u.min(1.0 - BAND_EPS) * n).floor() + 0.5) / n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Continuous,
    Banded,
    Transparent,
    Circle,
    Hex,
    Arrow,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 6] = [
        EncodingKind::Continuous,
        EncodingKind::Banded,
        EncodingKind::Transparent,
        EncodingKind::Circle,
        EncodingKind::Hex,
        EncodingKind::Arrow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::Continuous => "continuous",
            EncodingKind::Banded => "banded",
            EncodingKind::Transparent => "transparent",
            EncodingKind::Circle => "circle",
            EncodingKind::Hex => "hex",
            EncodingKind::Arrow => "arrow",
        }
    }

    pub fn is_stencil(self) -> bool {
        matches!(
            self,
            EncodingKind::Circle | EncodingKind::Hex | EncodingKind::Arrow
        )
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncodingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncodingKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownEncoding(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    #[serde(default = "default_bands")]
    pub bands: u32,
    pub alpha: f64,
    /// Meters per stencil tile; ignored by non-stencil kinds.
    pub tile_scale: f64,
}

fn default_bands() -> u32 {
    DEFAULT_BANDS
}

impl EncodingSpec {
    pub fn new(kind: EncodingKind) -> Self {
        let alpha = if kind == EncodingKind::Transparent {
            TRANSPARENT_ALPHA
        } else {
            1.0
        };
        let tile_scale = match kind {
            EncodingKind::Hex => HEX_TILE_M,
            EncodingKind::Arrow => ARROW_TILE_M,
            _ => CIRCLE_TILE_M,
        };
        EncodingSpec {
            kind,
            bands: DEFAULT_BANDS,
            alpha,
            tile_scale,
        }
    }

    pub fn with_tile_scale(mut self, tile_scale: f64) -> Self {
        self.tile_scale = tile_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bands < 2 {
            return Err(Error::InvalidEncoding(format!(
                "bands must be >= 2, got {}",
                self.bands
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidEncoding(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.kind != EncodingKind::Transparent && self.alpha != 1.0 {
            return Err(Error::InvalidEncoding(format!(
                "{} encoding is opaque, got alpha {}",
                self.kind, self.alpha
            )));
        }
        if !(self.tile_scale > 0.0 && self.tile_scale.is_finite()) {
            return Err(Error::InvalidEncoding(format!(
                "tile scale must be positive, got {}",
                self.tile_scale
            )));
        }
        Ok(())
    }
}

impl From<EncodingKind> for EncodingSpec {
    fn from(kind: EncodingKind) -> Self {
        EncodingSpec::new(kind)
    }
}

/// An RGB color with a straight (non-premultiplied) opacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shade {
    pub rgb: [u8; 3],
    pub alpha: f64,
}

impl Shade {
    pub fn to_rgba8(self) -> [u8; 4] {
        let [r, g, b] = self.rgb;
        [r, g, b, (self.alpha * 255.0).round() as u8]
    }

    /// Source-over onto an opaque background.
    #[inline]
    pub fn over(self, base: [u8; 3]) -> [u8; 3] {
        if self.alpha >= 1.0 {
            return self.rgb;
        }
        let a = self.alpha;
        let mix = |c: usize| (a * self.rgb[c] as f64 + (1.0 - a) * base[c] as f64).round() as u8;
        [mix(0), mix(1), mix(2)]
    }
}

/// Final surface color for normalized intensity `u`.
pub fn shade_color(u: f64, spec: &EncodingSpec, lut: &ColorLut) -> Result<Shade> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfUnitRange {
            what: "normalized intensity",
            value: u,
        });
    }
    Ok(shade_unchecked(u, spec, lut))
}

#[inline]
pub(crate) fn shade_unchecked(u: f64, spec: &EncodingSpec, lut: &ColorLut) -> Shade {
    match spec.kind {
        EncodingKind::Banded => Shade {
            rgb: lut.lerp(band_quantize(u, spec.bands)),
            alpha: 1.0,
        },
        EncodingKind::Transparent => Shade {
            rgb: lut.lerp(u),
            alpha: spec.alpha,
        },
        _ => Shade {
            rgb: lut.lerp(u),
            alpha: 1.0,
        },
    }
}
