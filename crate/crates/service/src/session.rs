//! Trial lifecycle for one participant. Everything here is synchronous; the
//! HTTP layer serializes access per session.

use std::collections::HashMap;
use std::path::PathBuf;

use glam::{DVec2, DVec3};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use radshade_core::encoding::{EncodingKind, EncodingSpec};
use radshade_core::exposure::{
    compute_metrics, path_side, PathChoice, TrajectoryLog, TrajectorySample, TrialMeta, TrialMetrics,
    TABLE_PROXIMITY_M,
};
use radshade_core::field::{Field, SECONDS_PER_HOUR};
use radshade_core::harness::agent::{AGENT_HEIGHT_M, WALK_SPEED_M_S};
use radshade_core::harness::schedule::{generate_schedule, schedule_rng, shuffle, Schedule, Trial};
use radshade_core::harness::Scene;

use crate::error::{ServiceError, ServiceResult};

pub const CARDS_ON_TABLE: usize = 27;
pub const MAX_DT_S: f64 = 0.1;
/// How close (floor distance) the avatar must be to the exit door to end a
/// trial.
pub const DOOR_REACH_M: f64 = 0.3;
/// Gap kept between the avatar and the partition after a collision.
pub const WALL_CLEARANCE_M: f64 = 1e-3;

const CARD_SALT: u64 = 0xbb67_ae85_84ca_a73b;
const RANKS: [&str; 13] = ["A", "2", "3", "4", "5", "6", "7", "8", "9", "10", "J", "Q", "K"];
const SUITS: [&str; 4] = ["S", "H", "D", "C"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Idle,
    InTrial,
    BetweenBlocks,
    Finished,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Idle => "idle",
            SessionState::InTrial => "in_trial",
            SessionState::BetweenBlocks => "between_blocks",
            SessionState::Finished => "finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CardLayout {
    /// Face-up cards on the table, e.g. `"10H"`.
    pub cards: Vec<String>,
    /// Index of the card matching the one shown to the participant.
    pub target: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    /// Floor position `(x, z)`, m.
    pub position: DVec2,
    /// Sv/h.
    pub dose_rate: f64,
    /// Sv.
    pub cumulative: f64,
    /// s.
    pub elapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PickOutcome {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub task_errors: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub meta: TrialMeta,
    pub metrics: TrialMetrics,
    pub task_errors: u32,
    pub path_choice: Option<PathChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub participant: String,
    pub seed: u64,
    pub generator: String,
    pub trials: usize,
    pub training_order: Vec<EncodingKind>,
    pub block_order: Vec<EncodingKind>,
}

impl From<&Schedule> for ScheduleSummary {
    fn from(s: &Schedule) -> Self {
        ScheduleSummary {
            participant: s.participant.clone(),
            seed: s.seed,
            generator: s.generator.clone(),
            trials: s.len(),
            training_order: s.training.iter().map(|t| t.encoding).collect(),
            block_order: s.blocks.iter().map(|b| b.encoding).collect(),
        }
    }
}

/// Snapshot sent to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub participant: String,
    pub state: SessionState,
    pub block: u32,
    pub trial: u32,
    pub scene: String,
    pub encoding: EncodingKind,
    pub completed: usize,
    pub total: usize,
    pub position: DVec2,
    pub elapsed: f64,
    pub cumulative: f64,
    pub card_collected: bool,
    pub cards: CardLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSubmission {
    /// Encodings from best to worst.
    pub ranking: Vec<EncodingKind>,
    #[serde(default)]
    pub comment: Option<String>,
}

/// Scenes available to sessions, keyed by schedule name.
pub type SceneSet = HashMap<String, Scene>;

pub fn builtin_scenes() -> SceneSet {
    Scene::builtin_names()
        .map(|n| (n.to_owned(), Scene::builtin(n).expect("bundled scenes are valid")))
        .collect()
}

#[derive(Debug)]
pub struct Session {
    id: String,
    schedule: Schedule,
    trials: Vec<Trial>,
    cursor: usize,
    state: SessionState,
    scene: Scene,
    field: Field,
    spec: EncodingSpec,
    position: DVec2,
    clock: f64,
    log: Vec<TrajectorySample>,
    last_rate: f64,
    /// Running trapezoid sum in Sv/h × s.
    dose_hours: f64,
    cards: CardLayout,
    deck: Vec<String>,
    card_collected: bool,
    task_errors: u32,
    rng: ChaCha8Rng,
    scenes: SceneSet,
    records: Vec<TrialRecord>,
    questionnaires: Vec<serde_json::Value>,
    ranking: Option<RankingSubmission>,
    data_dir: Option<PathBuf>,
}

impl Session {
    pub fn new(id: String, participant: &str, seed: u64, scenes: SceneSet, data_dir: Option<PathBuf>) -> ServiceResult<Self> {
        if participant.trim().is_empty() {
            return Err(ServiceError::BadRequest("participant id must not be empty".into()));
        }
        let schedule = generate_schedule(participant, seed);
        let trials: Vec<Trial> = schedule.all_trials().cloned().collect();
        for t in &trials {
            if !scenes.contains_key(&t.scene) {
                return Err(ServiceError::BadRequest(format!("scene `{}` is not available", t.scene)));
            }
        }
        let first = &trials[0];
        let scene = scenes[&first.scene].clone();
        let field = scene.field()?;
        let mut session = Session {
            id,
            schedule,
            cursor: 0,
            state: SessionState::Idle,
            position: scene.doors.entrance.midpoint(),
            spec: EncodingSpec::new(first.encoding),
            trials,
            scene,
            field,
            clock: 0.0,
            log: Vec::new(),
            last_rate: 0.0,
            dose_hours: 0.0,
            cards: CardLayout {
                cards: Vec::new(),
                target: 0,
            },
            deck: Vec::new(),
            card_collected: false,
            task_errors: 0,
            rng: schedule_rng(participant, seed ^ CARD_SALT),
            scenes,
            records: Vec::new(),
            questionnaires: Vec::new(),
            ranking: None,
            data_dir,
        };
        session.deal_block();
        session.deal_trial();
        Ok(session)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn summary(&self) -> ScheduleSummary {
        ScheduleSummary::from(&self.schedule)
    }

    pub fn current_trial(&self) -> Option<&Trial> {
        self.trials.get(self.cursor)
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn spec(&self) -> &EncodingSpec {
        &self.spec
    }

    pub fn cards(&self) -> &CardLayout {
        &self.cards
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn questionnaires(&self) -> &[serde_json::Value] {
        &self.questionnaires
    }

    pub fn ranking(&self) -> Option<&RankingSubmission> {
        self.ranking.as_ref()
    }

    /// The trajectory logged so far in the current (or last) trial.
    pub fn trajectory(&self) -> TrajectoryLog {
        TrajectoryLog {
            samples: self.log.clone(),
        }
    }

    pub fn cumulative(&self) -> f64 {
        self.dose_hours / SECONDS_PER_HOUR
    }

    pub fn view(&self) -> SessionView {
        let t = self.current_trial().or(self.trials.last()).expect("schedule is never empty");
        SessionView {
            id: self.id.clone(),
            participant: self.schedule.participant.clone(),
            state: self.state,
            block: t.block,
            trial: t.trial,
            scene: t.scene.clone(),
            encoding: t.encoding,
            completed: self.records.len(),
            total: self.trials.len(),
            position: self.position,
            elapsed: self.clock,
            cumulative: self.cumulative(),
            card_collected: self.card_collected,
            cards: self.cards.clone(),
        }
    }

    fn expect_state(&self, allowed: &[SessionState]) -> ServiceResult<()> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(ServiceError::InvalidState {
                expected: allowed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" or "),
                actual: self.state.as_str().to_owned(),
            })
        }
    }

    /// Re-randomizes which cards lie on the table.
    fn deal_block(&mut self) {
        let mut deck: Vec<String> = SUITS
            .iter()
            .flat_map(|s| RANKS.iter().map(move |r| format!("{r}{s}")))
            .collect();
        shuffle(&mut deck, &mut self.rng);
        deck.truncate(CARDS_ON_TABLE);
        self.deck = deck;
    }

    /// Picks the target card for the upcoming trial.
    fn deal_trial(&mut self) {
        let mut idx: Vec<usize> = (0..CARDS_ON_TABLE).collect();
        shuffle(&mut idx, &mut self.rng);
        self.cards = CardLayout {
            cards: self.deck.clone(),
            target: idx[0],
        };
    }

    fn sample(&mut self) {
        let p = DVec3::new(self.position.x, AGENT_HEIGHT_M, self.position.y);
        self.last_rate = self.field.dose_rate(p);
        self.log.push(TrajectorySample::new(self.clock, p));
    }

    fn tick(&self) -> Tick {
        Tick {
            position: self.position,
            dose_rate: self.last_rate,
            cumulative: self.cumulative(),
            elapsed: self.clock,
        }
    }

    pub fn start_trial(&mut self) -> ServiceResult<Tick> {
        self.expect_state(&[SessionState::Idle, SessionState::BetweenBlocks])?;
        let trial = self.current_trial().expect("not finished").clone();
        self.scene = self.scenes[&trial.scene].clone();
        self.field = self.scene.field()?;
        self.spec = EncodingSpec::new(trial.encoding);
        self.position = self.scene.doors.entrance.midpoint();
        self.clock = 0.0;
        self.log.clear();
        self.dose_hours = 0.0;
        self.card_collected = false;
        self.task_errors = 0;
        self.sample();
        self.state = SessionState::InTrial;
        Ok(self.tick())
    }

    /// Applies one movement intent. `intent` is a floor direction `(x, z)`
    /// with length at most 1.
    pub fn move_avatar(&mut self, intent: DVec2, dt: f64) -> ServiceResult<Tick> {
        self.expect_state(&[SessionState::InTrial])?;
        if !intent.is_finite() || intent.length() > 1.0 + 1e-9 {
            return Err(ServiceError::BadRequest(format!("intent {intent} must have length <= 1")));
        }
        if !(dt > 0.0 && dt <= MAX_DT_S) {
            return Err(ServiceError::BadRequest(format!("dt {dt} outside (0, {MAX_DT_S}]")));
        }
        let from = self.position;
        let to = self.collide(from, from + intent * WALK_SPEED_M_S * dt);
        let prev_clock = self.clock;
        let prev_rate = self.last_rate;
        self.position = to;
        self.clock = prev_clock + dt;
        self.sample();
        self.dose_hours += 0.5 * (prev_rate + self.last_rate) * (self.clock - prev_clock);
        Ok(self.tick())
    }

    /// Clamps a step to the room and stops it at the partition, sliding
    /// along it.
    fn collide(&self, from: DVec2, to: DVec2) -> DVec2 {
        let room = &self.scene.room;
        let mut to = room.clamp(to);
        if room.segment_hits_partition(from, to) {
            let zp = room.partition.z_m;
            let side = if from.y != zp {
                (from.y - zp).signum()
            } else if to.y != zp {
                (to.y - zp).signum()
            } else {
                -1.0
            };
            to.y = zp + side * WALL_CLEARANCE_M;
            if room.segment_hits_partition(from, to) {
                to = from;
            }
        }
        to
    }

    pub fn pick_card(&mut self, index: usize) -> ServiceResult<PickOutcome> {
        self.expect_state(&[SessionState::InTrial])?;
        if index >= CARDS_ON_TABLE {
            return Err(ServiceError::BadRequest(format!(
                "card index {index} out of range 0..{CARDS_ON_TABLE}"
            )));
        }
        if self.position.distance(self.scene.table_floor()) > TABLE_PROXIMITY_M {
            return Ok(PickOutcome {
                accepted: false,
                reason: Some("too far from the table".into()),
                task_errors: self.task_errors,
            });
        }
        if index == self.cards.target {
            self.card_collected = true;
            Ok(PickOutcome {
                accepted: true,
                reason: None,
                task_errors: self.task_errors,
            })
        } else {
            self.task_errors += 1;
            Ok(PickOutcome {
                accepted: false,
                reason: Some("wrong card".into()),
                task_errors: self.task_errors,
            })
        }
    }

    pub fn end_trial(&mut self) -> ServiceResult<TrialRecord> {
        self.expect_state(&[SessionState::InTrial])?;
        if !self.card_collected {
            return Err(ServiceError::Rejected("target card not collected".into()));
        }
        if !self.scene.doors.exit.contains(self.position, DOOR_REACH_M) {
            return Err(ServiceError::Rejected("not at the exit door".into()));
        }
        let log = self.trajectory();
        let metrics = compute_metrics(&log, &self.scene)?;
        let trial = self.current_trial().expect("in trial").clone();
        let meta = TrialMeta {
            participant: self.schedule.participant.clone(),
            block: trial.block,
            trial: trial.trial,
            scene: trial.scene.clone(),
            encoding: trial.encoding.to_string(),
        };
        let record = TrialRecord {
            meta,
            metrics,
            task_errors: self.task_errors,
            path_choice: path_side(&log, &self.scene).ok(),
        };
        if let Some(dir) = &self.data_dir {
            persist(dir, &record, &log)?;
        }
        self.records.push(record.clone());

        self.cursor += 1;
        self.state = match self.trials.get(self.cursor) {
            None => SessionState::Finished,
            Some(next) if next.block != trial.block => {
                self.deal_block();
                self.deal_trial();
                SessionState::BetweenBlocks
            }
            Some(_) => {
                self.deal_trial();
                SessionState::Idle
            }
        };
        Ok(record)
    }

    /// Stores a questionnaire body as given.
    pub fn submit_questionnaire(&mut self, body: serde_json::Value) -> ServiceResult<usize> {
        if !body.is_object() {
            return Err(ServiceError::BadRequest("questionnaire must be a JSON object".into()));
        }
        self.questionnaires.push(body);
        Ok(self.questionnaires.len())
    }

    pub fn submit_ranking(&mut self, submission: RankingSubmission) -> ServiceResult<()> {
        let mut sorted = submission.ranking.clone();
        sorted.sort();
        let mut all = EncodingKind::ALL.to_vec();
        all.sort();
        if sorted != all {
            return Err(ServiceError::BadRequest(
                "ranking must list each of the six encodings exactly once".into(),
            ));
        }
        self.ranking = Some(submission);
        Ok(())
    }
}

fn persist(dir: &std::path::Path, record: &TrialRecord, log: &TrajectoryLog) -> ServiceResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| ServiceError::Io(e.to_string()))?;
    let stem = radshade_core::harness::pipeline::trial_stem(&record.meta);
    log.save(&dir.join(format!("{stem}.csv")))?;
    record.meta.save(&dir.join(format!("{stem}.json")))?;
    let text = serde_json::to_string_pretty(record).map_err(|e| ServiceError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.record.json")), text).map_err(|e| ServiceError::Io(e.to_string()))?;
    Ok(())
}
