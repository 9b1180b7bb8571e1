//! Trajectory ingestion and per-trial exposure metrics.
//!
//! All time integrals use the trapezoidal rule at the logged sample times.
//! Dose rates are in Sv/h, so integrals over seconds are divided by 3600.

use std::io::{Read, Write};
use std::path::Path;

use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SECONDS_PER_HOUR;
use crate::harness::scene::{Scene, Side};
use crate::par;

/// Radius around the table anchor (floor-plane distance) that counts as
/// being at the table.
pub const TABLE_PROXIMITY_M: f64 = 1.5;

pub const TRAJECTORY_HEADER: [&str; 4] = ["t_s", "x_m", "y_m", "z_m"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    /// Seconds since trial start.
    pub t: f64,
    pub position: DVec3,
}

impl TrajectorySample {
    pub fn new(t: f64, position: DVec3) -> Self {
        TrajectorySample { t, position }
    }

    #[inline]
    pub fn floor(&self) -> DVec2 {
        DVec2::new(self.position.x, self.position.z)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub samples: Vec<TrajectorySample>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvSample {
    t_s: f64,
    x_m: f64,
    y_m: f64,
    z_m: f64,
}

impl TrajectoryLog {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self> {
        let log = TrajectoryLog { samples };
        log.validate()?;
        Ok(log)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.t.is_finite() && s.t >= 0.0) {
                return Err(Error::InvalidTrajectory(format!(
                    "sample {i}: time {} is not a nonnegative number",
                    s.t
                )));
            }
            if !s.position.is_finite() {
                return Err(Error::InvalidTrajectory(format!(
                    "sample {i}: non-finite position"
                )));
            }
            if i > 0 && s.t <= self.samples[i - 1].t {
                return Err(Error::InvalidTrajectory(format!(
                    "sample {i}: time {} does not increase",
                    s.t
                )));
            }
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().ne(TRAJECTORY_HEADER) {
            return Err(Error::InvalidTrajectory(format!(
                "expected header {}, got {}",
                TRAJECTORY_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let samples = rdr
            .deserialize::<CsvSample>()
            .map(|r| r.map(|s| TrajectorySample::new(s.t_s, DVec3::new(s.x_m, s.y_m, s.z_m))))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for s in &self.samples {
            w.serialize(CsvSample {
                t_s: s.t,
                x_m: s.position.x,
                y_m: s.position.y,
                z_m: s.position.z,
            })?;
        }
        if self.samples.is_empty() {
            w.write_record(TRAJECTORY_HEADER)?;
        }
        w.flush().map_err(|e| Error::io("<trajectory>", e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

/// Sidecar metadata stored next to each trajectory CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub participant: String,
    pub block: u32,
    pub trial: u32,
    pub scene: String,
    pub encoding: String,
}

impl TrialMeta {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Sv.
    pub cumulative_dose: f64,
    /// Sv/h.
    pub mean_dose_rate: f64,
    /// m, time-weighted.
    pub mean_nearest_dist: f64,
    /// Sv/h.
    pub max_dose_rate: f64,
    /// s.
    pub table_proximity_time: f64,
    /// s.
    pub duration: f64,
}

/// Drops samples outside the room rectangle (i.e. beyond the door
/// thresholds) and re-bases time to the first kept sample.
pub fn clean_trajectory(log: &TrajectoryLog, scene: &Scene) -> Result<TrajectoryLog> {
    let kept: Vec<TrajectorySample> = log
        .samples
        .iter()
        .filter(|s| scene.room.contains(s.floor()))
        .copied()
        .collect();
    let t0 = kept.first().ok_or(Error::EmptyAfterCleaning)?.t;
    Ok(TrajectoryLog {
        samples: kept
            .into_iter()
            .map(|s| TrajectorySample::new(s.t - t0, s.position))
            .collect(),
    })
}

pub fn compute_metrics(log: &TrajectoryLog, scene: &Scene) -> Result<TrialMetrics> {
    if log.len() < 2 {
        return Err(Error::InvalidTrajectory(format!(
            "need at least 2 samples, got {}",
            log.len()
        )));
    }
    log.validate()?;
    let field = scene.field()?;
    let table = DVec2::new(scene.table_anchor.x, scene.table_anchor.z);

    let rates: Vec<f64> = log.samples.iter().map(|s| field.dose_rate(s.position)).collect();
    let nearest: Vec<f64> = log
        .samples
        .iter()
        .map(|s| {
            field
                .sources
                .iter()
                .map(|src| src.position.distance(s.position))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let near_table: Vec<bool> = log
        .samples
        .iter()
        .map(|s| s.floor().distance(table) <= TABLE_PROXIMITY_M)
        .collect();

    let mut dose_hours = 0.0; // Sv/h * s
    let mut dist_time = 0.0;
    let mut proximity = 0.0;
    for i in 0..log.len() - 1 {
        let dt = log.samples[i + 1].t - log.samples[i].t;
        dose_hours += 0.5 * (rates[i] + rates[i + 1]) * dt;
        dist_time += 0.5 * (nearest[i] + nearest[i + 1]) * dt;
        proximity += match (near_table[i], near_table[i + 1]) {
            (true, true) => dt,
            (true, false) | (false, true) => 0.5 * dt,
            (false, false) => 0.0,
        };
    }
    let duration = log.duration();
    let cumulative_dose = dose_hours / SECONDS_PER_HOUR;
    Ok(TrialMetrics {
        cumulative_dose,
        mean_dose_rate: cumulative_dose * SECONDS_PER_HOUR / duration,
        mean_nearest_dist: dist_time / duration,
        max_dose_rate: rates.iter().copied().fold(0.0, f64::max),
        table_proximity_time: proximity,
        duration,
    })
}

/// Metrics for many trials at once; order matches the input.
pub fn compute_metrics_batch(trials: &[(TrajectoryLog, Scene)]) -> Vec<Result<TrialMetrics>> {
    par::map_slice(trials, |(log, scene)| compute_metrics(log, scene))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathChoice {
    pub side: Side,
    /// `None` when the scene designates no higher-exposure side.
    pub took_higher_exposure: Option<bool>,
}

/// Which side of the partition the walker passed on its first crossing of
/// the partition line.
pub fn path_side(log: &TrajectoryLog, scene: &Scene) -> Result<PathChoice> {
    let zp = scene.room.partition.z_m;
    let mid = scene.room.partition_midline_x();
    for w in log.samples.windows(2) {
        let (a, b) = (w[0].floor(), w[1].floor());
        let (da, db) = (a.y - zp, b.y - zp);
        if da == 0.0 && db == 0.0 {
            continue;
        }
        if da * db <= 0.0 {
            let t = da / (da - db);
            let x = a.x + (b.x - a.x) * t;
            let side = if x < mid { Side::Left } else { Side::Right };
            return Ok(PathChoice {
                side,
                took_higher_exposure: scene.higher_exposure_side.map(|s| s == side),
            });
        }
    }
    Err(Error::NoCrossing)
}

/// Row of the per-trial metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub participant: String,
    pub block: u32,
    pub trial: u32,
    pub scene: String,
    pub encoding: String,
    pub cumulative_dose_sv: f64,
    pub mean_dose_rate_sv_per_h: f64,
    pub mean_nearest_dist_m: f64,
    pub max_dose_rate_sv_per_h: f64,
    pub table_proximity_time_s: f64,
    pub duration_s: f64,
    /// `left`, `right`, or empty when the walker never crossed.
    pub path_side: String,
    /// `true`, `false`, or empty when the scene has no worse side.
    pub took_higher_exposure: String,
}

impl MetricsRow {
    pub fn new(meta: &TrialMeta, m: &TrialMetrics, choice: Option<PathChoice>) -> Self {
        MetricsRow {
            participant: meta.participant.clone(),
            block: meta.block,
            trial: meta.trial,
            scene: meta.scene.clone(),
            encoding: meta.encoding.clone(),
            cumulative_dose_sv: m.cumulative_dose,
            mean_dose_rate_sv_per_h: m.mean_dose_rate,
            mean_nearest_dist_m: m.mean_nearest_dist,
            max_dose_rate_sv_per_h: m.max_dose_rate,
            table_proximity_time_s: m.table_proximity_time,
            duration_s: m.duration,
            path_side: choice.map(|c| c.side.as_str().to_owned()).unwrap_or_default(),
            took_higher_exposure: choice
                .and_then(|c| c.took_higher_exposure)
                .map(|b| b.to_string())
                .unwrap_or_default(),
        }
    }
}

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<metrics>", e))?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(reader: R) -> Result<Vec<MetricsRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
