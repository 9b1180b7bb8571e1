//! Point-source radiation field.
//!
//! Dose rates are carried in Sv/h. Each source follows bare inverse-square
//! falloff from its rate at 1 m, with the distance clamped at
//! [`SINGULARITY_CLAMP_M`] so the field stays finite at the emitter.

use glam::DVec3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum distance (m) used when evaluating a source contribution.
pub const SINGULARITY_CLAMP_M: f64 = 0.05;

/// Distance at which a lone source of the strongest rate fades to the bottom
/// of the default color range.
pub const VISUALIZATION_RADIUS_M: f64 = 2.0;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationSource {
    pub position: DVec3,
    /// Dose rate at 1 m, Sv/h.
    #[serde(rename = "rate_sv_per_h")]
    pub rate_at_1m: f64,
}

impl RadiationSource {
    pub fn new(position: DVec3, rate_at_1m: f64) -> Result<Self> {
        let source = RadiationSource {
            position,
            rate_at_1m,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() {
            return Err(Error::InvalidSource(format!(
                "non-finite position {}",
                self.position
            )));
        }
        if !(self.rate_at_1m > 0.0 && self.rate_at_1m.is_finite()) {
            return Err(Error::InvalidSource(format!(
                "rate at 1 m must be positive, got {}",
                self.rate_at_1m
            )));
        }
        Ok(())
    }

    /// Contribution of this source at `point`, Sv/h.
    #[inline]
    pub fn contribution(&self, point: DVec3) -> f64 {
        let d = self.position.distance(point).max(SINGULARITY_CLAMP_M);
        self.rate_at_1m / (d * d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityRange {
    pub min: f64,
    pub max: f64,
}

impl IntensityRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let range = IntensityRange { min, max };
        range.validate()?;
        Ok(range)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min > 0.0 && self.min < self.max && self.max.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidRange {
                min: self.min,
                max: self.max,
            })
        }
    }
}

/// Total dose rate (Sv/h) at `point`.
pub fn dose_rate(point: DVec3, sources: &[RadiationSource]) -> Result<f64> {
    if sources.is_empty() {
        return Err(Error::NoSources);
    }
    Ok(sources.iter().map(|s| s.contribution(point)).sum())
}

/// Maps a dose rate onto [0, 1] on a logarithmic scale, clamping outside the
/// range.
pub fn normalized_intensity(rate: f64, range: &IntensityRange) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::NonPositiveIntensity(rate));
    }
    range.validate()?;
    let (lo, hi) = (range.min.ln(), range.max.ln());
    Ok(((rate.ln() - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Source position average weighted by each source's local contribution at
/// `point`.
pub fn weighted_source_centroid(point: DVec3, sources: &[RadiationSource]) -> Result<DVec3> {
    if sources.is_empty() {
        return Err(Error::NoSources);
    }
    let mut acc = DVec3::ZERO;
    let mut total = 0.0;
    for s in sources {
        let w = s.contribution(point);
        acc += w * s.position;
        total += w;
    }
    Ok(acc / total)
}

/// Default color range: the strongest source reaches the bottom of the range
/// at [`VISUALIZATION_RADIUS_M`] and saturates at the singularity clamp.
pub fn default_range(sources: &[RadiationSource]) -> Result<IntensityRange> {
    let strongest = sources
        .iter()
        .map(|s| s.rate_at_1m)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
        .ok_or(Error::NoSources)?;
    IntensityRange::new(
        strongest / (VISUALIZATION_RADIUS_M * VISUALIZATION_RADIUS_M),
        strongest / (SINGULARITY_CLAMP_M * SINGULARITY_CLAMP_M),
    )
}

/// `override_range` when given, else [`default_range`].
pub fn range_or_default(
    sources: &[RadiationSource],
    override_range: Option<IntensityRange>,
) -> Result<IntensityRange> {
    match override_range {
        Some(r) => {
            r.validate()?;
            Ok(r)
        }
        None => default_range(sources),
    }
}

/// Sources plus the color range used to shade them.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub sources: Vec<RadiationSource>,
    pub range: IntensityRange,
}

impl Field {
    pub fn new(sources: Vec<RadiationSource>, range: Option<IntensityRange>) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::NoSources);
        }
        for s in &sources {
            s.validate()?;
        }
        let range = range_or_default(&sources, range)?;
        Ok(Field { sources, range })
    }

    #[inline]
    pub fn dose_rate(&self, point: DVec3) -> f64 {
        self.sources.iter().map(|s| s.contribution(point)).sum()
    }

    #[inline]
    pub fn intensity(&self, point: DVec3) -> f64 {
        let (lo, hi) = (self.range.min.ln(), self.range.max.ln());
        ((self.dose_rate(point).ln() - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    #[inline]
    pub fn centroid(&self, point: DVec3) -> DVec3 {
        let mut acc = DVec3::ZERO;
        let mut total = 0.0;
        for s in &self.sources {
            let w = s.contribution(point);
            acc += w * s.position;
            total += w;
        }
        acc / total
    }

    /// Gradient of the total dose rate (Sv/h per m), by central differences.
    pub fn gradient(&self, point: DVec3) -> DVec3 {
        const H: f64 = 1e-4;
        let dx = DVec3::X * H;
        let dy = DVec3::Y * H;
        let dz = DVec3::Z * H;
        DVec3::new(
            self.dose_rate(point + dx) - self.dose_rate(point - dx),
            self.dose_rate(point + dy) - self.dose_rate(point - dy),
            self.dose_rate(point + dz) - self.dose_rate(point - dz),
        ) / (2.0 * H)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const MSV: f64 = 1e-3;

    fn src(x: f64, y: f64, z: f64, rate: f64) -> RadiationSource {
        RadiationSource::new(DVec3::new(x, y, z), rate).unwrap()
    }

    #[test]
    fn one_metre_gives_rate_at_one_metre() {
        let s = [src(0.0, 0.0, 0.0, MSV)];
        assert_relative_eq!(dose_rate(DVec3::X, &s).unwrap(), MSV, max_relative = 1e-15);
        assert_relative_eq!(
            dose_rate(DVec3::new(2.0, 0.0, 0.0), &s).unwrap(),
            0.25 * MSV,
            max_relative = 1e-15
        );
    }

    #[test]
    fn symmetric_pair_adds() {
        let s = [src(1.0, 0.0, 0.0, MSV), src(-1.0, 0.0, 0.0, MSV)];
        assert_relative_eq!(dose_rate(DVec3::ZERO, &s).unwrap(), 2.0 * MSV, max_relative = 1e-15);
    }

    #[test]
    fn clamp_at_source() {
        let s = [src(0.0, 0.0, 0.0, MSV)];
        assert_relative_eq!(dose_rate(DVec3::ZERO, &s).unwrap(), 400.0 * MSV, max_relative = 1e-12);
    }

    #[test]
    fn empty_sources_rejected() {
        assert!(matches!(dose_rate(DVec3::ZERO, &[]), Err(Error::NoSources)));
        assert!(matches!(weighted_source_centroid(DVec3::ZERO, &[]), Err(Error::NoSources)));
        assert!(matches!(default_range(&[]), Err(Error::NoSources)));
    }

    #[test]
    fn invalid_sources_rejected() {
        assert!(RadiationSource::new(DVec3::ZERO, 0.0).is_err());
        assert!(RadiationSource::new(DVec3::new(f64::NAN, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn normalization_endpoints() {
        let r = IntensityRange::new(0.25, 400.0).unwrap();
        assert_eq!(normalized_intensity(0.25, &r).unwrap(), 0.0);
        assert_eq!(normalized_intensity(400.0, &r).unwrap(), 1.0);
        assert_relative_eq!(normalized_intensity(10.0, &r).unwrap(), 0.5, max_relative = 1e-12);
        assert_eq!(normalized_intensity(0.01, &r).unwrap(), 0.0);
        assert_eq!(normalized_intensity(1e6, &r).unwrap(), 1.0);
        assert!(normalized_intensity(0.0, &r).is_err());
        assert!(normalized_intensity(-1.0, &r).is_err());
        let bad = IntensityRange { min: 2.0, max: 1.0 };
        assert!(normalized_intensity(1.0, &bad).is_err());
        assert!(IntensityRange::new(0.0, 1.0).is_err());
    }

    #[test]
    fn centroid_examples() {
        let a = src(1.0, 2.0, 3.0, MSV);
        assert_eq!(weighted_source_centroid(DVec3::ZERO, &[a]).unwrap(), a.position);

        let pair = [src(-1.0, 0.0, 0.0, MSV), src(1.0, 0.0, 0.0, MSV)];
        let c = weighted_source_centroid(DVec3::new(0.0, 0.0, 2.0), &pair).unwrap();
        assert!(c.length() < 1e-15);

        // p1 at distance 1, p2 at distance 2 from the origin
        let p1 = DVec3::new(1.0, 0.0, 0.0);
        let p2 = DVec3::new(0.0, 2.0, 0.0);
        let s = [src(p1.x, p1.y, p1.z, 1.0), src(p2.x, p2.y, p2.z, 1.0)];
        let expected = (1.0 * p1 + 0.25 * p2) / 1.25;
        let got = weighted_source_centroid(DVec3::ZERO, &s).unwrap();
        assert!((got - expected).length() < 1e-15);
    }

    #[test]
    fn default_range_rules() {
        let r = default_range(&[src(0.0, 0.0, 0.0, MSV)]).unwrap();
        assert_relative_eq!(r.min, 0.25 * MSV, max_relative = 1e-15);
        assert_relative_eq!(r.max, 400.0 * MSV, max_relative = 1e-12);
        let r = default_range(&[src(0.0, 0.0, 0.0, 2.0 * MSV)]).unwrap();
        assert_relative_eq!(r.min, 0.5 * MSV, max_relative = 1e-15);

        let custom = IntensityRange::new(1e-5, 1e-2).unwrap();
        let r = range_or_default(&[src(0.0, 0.0, 0.0, MSV)], Some(custom)).unwrap();
        assert_eq!(r, custom);
    }

    #[test]
    fn lone_source_fades_out_at_two_metres() {
        let s = [src(0.0, 0.0, 0.0, MSV)];
        let range = default_range(&s).unwrap();
        let at = |d: f64| normalized_intensity(dose_rate(DVec3::new(d, 0.0, 0.0), &s).unwrap(), &range).unwrap();
        assert_eq!(at(2.0), 0.0);
        assert!(at(1.999) > 0.0);
        assert_eq!(at(3.0), 0.0);
    }

    #[test]
    fn gradient_points_toward_source() {
        let field = Field::new(vec![src(0.0, 0.0, 0.0, MSV)], None).unwrap();
        let g = field.gradient(DVec3::new(1.0, 0.0, 0.0));
        // d/dx (r / x^2) = -2r / x^3
        assert_relative_eq!(g.x, -2.0 * MSV, max_relative = 1e-6);
        assert!(g.y.abs() < 1e-12 && g.z.abs() < 1e-12);
    }

    fn arb_point() -> impl Strategy<Value = DVec3> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| DVec3::new(x, y, z))
    }

    fn arb_source() -> impl Strategy<Value = RadiationSource> {
        (arb_point(), 1e-4..1e-1f64).prop_map(|(p, r)| RadiationSource::new(p, r).unwrap())
    }

    proptest! {
        #[test]
        fn additivity(sources in prop::collection::vec(arb_source(), 2..6), split in 1usize..5, p in arb_point()) {
            let k = split.min(sources.len() - 1);
            let (a, b) = sources.split_at(k);
            let whole = dose_rate(p, &sources).unwrap();
            let parts = dose_rate(p, a).unwrap() + dose_rate(p, b).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-12 * whole);
        }

        #[test]
        fn monotone_normalization(a in 1e-6..1.0f64, b in 1e-6..1.0f64) {
            let r = IntensityRange::new(1e-4, 0.4).unwrap();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(normalized_intensity(lo, &r).unwrap() <= normalized_intensity(hi, &r).unwrap());
        }

        #[test]
        fn centroid_in_bounding_box(sources in prop::collection::vec(arb_source(), 1..5), p in arb_point()) {
            // bounding box is a necessary condition for convex hull membership
            let c = weighted_source_centroid(p, &sources).unwrap();
            let lo = sources.iter().fold(DVec3::splat(f64::INFINITY), |m, s| m.min(s.position));
            let hi = sources.iter().fold(DVec3::splat(f64::NEG_INFINITY), |m, s| m.max(s.position));
            prop_assert!(c.cmpge(lo - 1e-9).all() && c.cmple(hi + 1e-9).all());
        }
    }
}
