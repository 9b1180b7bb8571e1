//! Batch runs: simulated participants, metrics extraction and the stats
//! report.
//!
//! Simulated walkers react to encodings through an arbitrary per-encoding
//! legibility value. It only exists so that synthetic runs exercise the
//! analysis with non-degenerate data and carries no empirical meaning.

use std::path::{Path, PathBuf};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::agent::{lower_dose_side, simulate_agent, Policy};
use super::scene::Scene;
use super::schedule::{generate_schedule, schedule_rng};
use crate::encoding::EncodingKind;
use crate::error::{Error, Result};
use crate::exposure::{
    clean_trajectory, compute_metrics, path_side, read_metrics_csv, write_metrics_csv, MetricsRow,
    TrajectoryLog, TrialMeta,
};
use crate::par;
use crate::stats::{
    bonferroni, classify_w, friedman, kendall_tau, kendalls_w, wilcoxon_signed_rank, Alternative,
    EffectSize, RepeatedMeasures, TauStrength, WILCOXON_MIN_PAIRS,
};

const JITTER_SALT: u64 = 0x6a09_e667_f3bc_c908;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub step_s: f64,
    pub base_gain: f64,
    pub dwell_s: f64,
    /// Relative spread of the per-trial gain.
    pub gain_jitter: f64,
    /// Relative spread of the per-trial dwell.
    pub dwell_jitter: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            step_s: 0.05,
            base_gain: 0.4,
            dwell_s: 4.0,
            gain_jitter: 0.3,
            dwell_jitter: 0.25,
        }
    }
}

pub fn legibility(kind: EncodingKind) -> f64 {
    match kind {
        EncodingKind::Continuous => 0.7,
        EncodingKind::Banded => 0.6,
        EncodingKind::Transparent => 0.4,
        EncodingKind::Circle => 0.5,
        EncodingKind::Hex => 0.5,
        EncodingKind::Arrow => 0.8,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedTrial {
    pub meta: TrialMeta,
    pub log: TrajectoryLog,
}

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Walks the 30 main trials of one participant's schedule.
pub fn simulate_participant(participant: &str, seed: u64, cfg: &SimulationConfig) -> Result<Vec<SimulatedTrial>> {
    let schedule = generate_schedule(participant, seed);
    let mut rng = schedule_rng(participant, seed ^ JITTER_SALT);
    let mut out = Vec::with_capacity(30);
    for trial in schedule.main_trials() {
        let scene = Scene::builtin(&trial.scene)?;
        let legible = legibility(trial.encoding);
        let gain = cfg.base_gain * (0.5 + legible) * (1.0 + cfg.gain_jitter * (2.0 * unit(&mut rng) - 1.0));
        let dwell = cfg.dwell_s * (1.0 + cfg.dwell_jitter * (2.0 * unit(&mut rng) - 1.0));
        let lower = lower_dose_side(&scene, scene.table_floor(), dwell, cfg.step_s)?;
        let side = if unit(&mut rng) < 0.5 + 0.4 * legible {
            lower
        } else {
            lower.other()
        };
        let policy = Policy::GradientAvoider {
            target: None,
            gain: gain.max(0.0),
            dwell_s: dwell.max(0.0),
            side: Some(side),
        };
        let log = simulate_agent(&scene, &policy, cfg.step_s)?;
        out.push(SimulatedTrial {
            meta: TrialMeta {
                participant: participant.to_owned(),
                block: trial.block,
                trial: trial.trial,
                scene: trial.scene.clone(),
                encoding: trial.encoding.to_string(),
            },
            log,
        });
    }
    Ok(out)
}

/// Participants `P01`, `P02`, ...
pub fn participant_ids(count: usize) -> Vec<String> {
    (1..=count).map(|i| format!("P{i:02}")).collect()
}

pub fn simulate_batch(participants: &[String], seed: u64, cfg: &SimulationConfig) -> Result<Vec<SimulatedTrial>> {
    par::map_slice(participants, |p| simulate_participant(p, seed, cfg))
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().flatten().collect())
}

pub fn trial_stem(meta: &TrialMeta) -> String {
    format!("{}_b{}_t{}", meta.participant, meta.block, meta.trial)
}

/// Writes `<stem>.csv` plus a `<stem>.json` sidecar per trial.
pub fn write_trials(dir: &Path, trials: &[SimulatedTrial]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in trials {
        let stem = trial_stem(&t.meta);
        t.log.save(&dir.join(format!("{stem}.csv")))?;
        t.meta.save(&dir.join(format!("{stem}.json")))?;
    }
    Ok(())
}

/// Trajectory CSVs in `dir` that have a sidecar, sorted by file name.
pub fn trial_files(dir: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let sidecar = path.with_extension("json");
            if sidecar.exists() {
                out.push((path, sidecar));
            }
        }
    }
    out.sort();
    Ok(out)
}

pub fn metrics_row(meta: &TrialMeta, log: &TrajectoryLog) -> Result<MetricsRow> {
    let scene = Scene::resolve(&meta.scene)?;
    let cleaned = clean_trajectory(log, &scene)?;
    let metrics = compute_metrics(&cleaned, &scene)?;
    let choice = match path_side(&cleaned, &scene) {
        Ok(c) => Some(c),
        Err(Error::NoCrossing) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsRow::new(meta, &metrics, choice))
}

pub fn metrics_for_trials(trials: &[SimulatedTrial]) -> Result<Vec<MetricsRow>> {
    par::map_slice(trials, |t| metrics_row(&t.meta, &t.log))
        .into_iter()
        .collect()
}

pub fn metrics_from_dir(dir: &Path) -> Result<Vec<MetricsRow>> {
    let files = trial_files(dir)?;
    par::map_slice(&files, |(csv, sidecar)| {
        let meta = TrialMeta::load(sidecar)?;
        let log = TrajectoryLog::load(csv)?;
        metrics_row(&meta, &log)
    })
    .into_iter()
    .collect()
}

pub fn save_metrics(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics_csv(rows, std::io::BufWriter::new(f))
}

pub fn load_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_metrics_csv(std::io::BufReader::new(f))
}

/// Metrics compared across encodings, as `(column name, accessor)`.
pub const REPORT_METRICS: [(&str, fn(&MetricsRow) -> f64); 5] = [
    ("cumulative_dose_sv", |r| r.cumulative_dose_sv),
    ("mean_dose_rate_sv_per_h", |r| r.mean_dose_rate_sv_per_h),
    ("mean_nearest_dist_m", |r| r.mean_nearest_dist_m),
    ("max_dose_rate_sv_per_h", |r| r.max_dose_rate_sv_per_h),
    ("table_proximity_time_s", |r| r.table_proximity_time_s),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub a: String,
    pub b: String,
    pub w_plus: f64,
    pub n: usize,
    pub p: f64,
    pub p_bonferroni: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub test: String,
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    pub p_asymptotic: f64,
    pub exact: bool,
    pub kendalls_w: f64,
    pub effect: EffectSize,
    /// Two-sided signed-rank tests for every encoding pair; empty with
    /// fewer than 5 subjects.
    pub pairwise: Vec<PairwiseRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathChoiceRow {
    pub encoding: String,
    /// Trials in scenes with a designated worse side.
    pub trials: usize,
    pub took_higher_exposure: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub x: String,
    pub y: String,
    pub tau: Option<f64>,
    pub p: Option<f64>,
    pub strength: Option<TauStrength>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub subjects: Vec<String>,
    /// Participants dropped for missing (encoding) cells.
    pub excluded: Vec<String>,
    pub conditions: Vec<String>,
    pub trials: usize,
    pub metrics: Vec<MetricReport>,
    pub path_choice: Vec<PathChoiceRow>,
    pub correlations: Vec<CorrelationRow>,
}

impl StatsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Per-participant means for each encoding; training rows (block 0) are
/// ignored.
fn cell_means(
    rows: &[&MetricsRow],
    metric: fn(&MetricsRow) -> f64,
    subjects: &[String],
    conditions: &[String],
) -> Vec<Vec<f64>> {
    subjects
        .iter()
        .map(|s| {
            conditions
                .iter()
                .map(|c| {
                    let vals: Vec<f64> = rows
                        .iter()
                        .filter(|r| &r.participant == s && &r.encoding == c)
                        .map(|r| metric(r))
                        .collect();
                    vals.iter().sum::<f64>() / vals.len() as f64
                })
                .collect()
        })
        .collect()
}

pub fn analyze(rows: &[MetricsRow]) -> Result<StatsReport> {
    let main: Vec<&MetricsRow> = rows.iter().filter(|r| r.block > 0).collect();
    let conditions: Vec<String> = EncodingKind::ALL.iter().map(|k| k.to_string()).collect();
    let mut participants: Vec<String> = main.iter().map(|r| r.participant.clone()).collect();
    participants.sort();
    participants.dedup();
    let (subjects, excluded): (Vec<String>, Vec<String>) = participants.into_iter().partition(|p| {
        conditions
            .iter()
            .all(|c| main.iter().any(|r| &r.participant == p && &r.encoding == c))
    });
    if subjects.len() < 3 {
        return Err(Error::InvalidData(format!(
            "need at least 3 complete participants, got {}",
            subjects.len()
        )));
    }
    let main: Vec<&MetricsRow> = main.into_iter().filter(|r| subjects.contains(&r.participant)).collect();

    let metrics = REPORT_METRICS
        .iter()
        .map(|(name, get)| {
            let data = RepeatedMeasures::new(cell_means(&main, *get, &subjects, &conditions), conditions.clone())?;
            let f = friedman(&data);
            let w = kendalls_w(&data);
            let mut pairwise = Vec::new();
            if data.subjects() >= WILCOXON_MIN_PAIRS {
                let k = conditions.len();
                let m = k * (k - 1) / 2;
                for a in 0..k {
                    for b in a + 1..k {
                        let r = wilcoxon_signed_rank(&data.column(a), &data.column(b), Alternative::TwoSided)?;
                        pairwise.push(PairwiseRow {
                            a: conditions[a].clone(),
                            b: conditions[b].clone(),
                            w_plus: r.w_plus,
                            n: r.n,
                            p: r.p,
                            p_bonferroni: bonferroni(&[r.p], m)[0],
                        });
                    }
                }
            }
            Ok(MetricReport {
                metric: (*name).to_owned(),
                test: "friedman".to_owned(),
                chi2: f.chi2,
                df: f.df,
                p: f.p,
                p_asymptotic: f.p_asymptotic,
                exact: f.exact,
                kendalls_w: w,
                effect: classify_w(w),
                pairwise,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let path_choice = conditions
        .iter()
        .map(|c| {
            let marked: Vec<&&MetricsRow> = main
                .iter()
                .filter(|r| &r.encoding == c && !r.took_higher_exposure.is_empty())
                .collect();
            PathChoiceRow {
                encoding: c.clone(),
                trials: marked.len(),
                took_higher_exposure: marked.iter().filter(|r| r.took_higher_exposure == "true").count(),
            }
        })
        .collect();

    let dose: Vec<f64> = main.iter().map(|r| r.cumulative_dose_sv).collect();
    let correlations = [
        ("duration_s", main.iter().map(|r| r.duration_s).collect::<Vec<_>>()),
        ("mean_nearest_dist_m", main.iter().map(|r| r.mean_nearest_dist_m).collect()),
        ("table_proximity_time_s", main.iter().map(|r| r.table_proximity_time_s).collect()),
    ]
    .into_iter()
    .map(|(name, other)| {
        let r = kendall_tau(&dose, &other).ok();
        CorrelationRow {
            x: "cumulative_dose_sv".to_owned(),
            y: name.to_owned(),
            tau: r.map(|r| r.tau),
            p: r.map(|r| r.p),
            strength: r.map(|r| r.strength),
        }
    })
    .collect();

    Ok(StatsReport {
        subjects,
        excluded,
        conditions,
        trials: main.len(),
        metrics,
        path_choice,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn participant_simulation_is_deterministic() {
        let cfg = SimulationConfig::default();
        let a = simulate_participant("P01", 9, &cfg).unwrap();
        let b = simulate_participant("P01", 9, &cfg).unwrap();
        assert_eq!(a.len(), 30);
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_subjects() {
        let cfg = SimulationConfig::default();
        let trials = simulate_participant("P01", 1, &cfg).unwrap();
        let rows = metrics_for_trials(&trials).unwrap();
        assert!(matches!(analyze(&rows), Err(Error::InvalidData(_))));
    }

    #[test]
    fn incomplete_participants_excluded() {
        let cfg = SimulationConfig::default();
        let trials = simulate_batch(&participant_ids(4), 3, &cfg).unwrap();
        let mut rows = metrics_for_trials(&trials).unwrap();
        rows.retain(|r| !(r.participant == "P04" && r.encoding == "hex"));
        let report = analyze(&rows).unwrap();
        assert_eq!(report.excluded, vec!["P04".to_owned()]);
        assert_eq!(report.subjects.len(), 3);
        assert_eq!(report.metrics.len(), 5);
        assert!(report.metrics.iter().all(|m| m.pairwise.is_empty()));
    }
}
