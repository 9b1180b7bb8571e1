//! Per-participant trial schedules.
//!
//! Generator: ChaCha8 keyed with the little-endian bytes of
//! `seed ^ fnv1a64(participant)` in the first 8 key bytes (the remaining
//! 24 are zero). Permutations use Fisher–Yates from the last index down, with
//! `j = (next_u64() * (i + 1)) >> 64` computed in 128 bits. Draw order: main
//! block encodings, then training encodings, then the scene order of each
//! main block in block order. Any implementation following these rules
//! reproduces the same schedules.

use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{MAIN_SCENES, TRAINING_SCENE};
use crate::encoding::EncodingKind;
use crate::error::{Error, Result};

pub const GENERATOR: &str = "chacha8-fnv1a-fisher-yates-v1";
pub const MAIN_BLOCKS: usize = 6;
pub const TRIALS_PER_BLOCK: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    /// 0 for training, 1..=6 for the main blocks.
    pub block: u32,
    /// 1-based position within the block.
    pub trial: u32,
    pub scene: String,
    pub encoding: EncodingKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u32,
    pub encoding: EncodingKind,
    pub trials: Vec<Trial>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub participant: String,
    pub seed: u64,
    pub generator: String,
    pub training: Vec<Trial>,
    pub blocks: Vec<Block>,
}

impl Schedule {
    pub fn main_trials(&self) -> impl Iterator<Item = &Trial> {
        self.blocks.iter().flat_map(|b| b.trials.iter())
    }

    /// Training trials followed by every main trial, in presentation order.
    pub fn all_trials(&self) -> impl Iterator<Item = &Trial> {
        self.training.iter().chain(self.main_trials())
    }

    pub fn len(&self) -> usize {
        self.training.len() + self.blocks.iter().map(|b| b.trials.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lists violated schedule invariants.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.training.len() != EncodingKind::ALL.len() {
            problems.push(format!("training has {} trials", self.training.len()));
        }
        for k in EncodingKind::ALL {
            let n = self.training.iter().filter(|t| t.encoding == k).count();
            if n != 1 {
                problems.push(format!("training shows {k} {n} times"));
            }
        }
        if self.training.iter().any(|t| t.scene != TRAINING_SCENE || t.block != 0) {
            problems.push("training trial outside the training scene or block".to_owned());
        }
        if self.blocks.len() != MAIN_BLOCKS {
            problems.push(format!("{} main blocks", self.blocks.len()));
        }
        for b in &self.blocks {
            if b.trials.len() != TRIALS_PER_BLOCK {
                problems.push(format!("block {} has {} trials", b.index, b.trials.len()));
            }
            if b.trials.iter().any(|t| t.encoding != b.encoding || t.block != b.index) {
                problems.push(format!("block {} mixes encodings", b.index));
            }
        }
        for k in EncodingKind::ALL {
            for s in MAIN_SCENES {
                let n = self
                    .main_trials()
                    .filter(|t| t.encoding == k && t.scene == s)
                    .count();
                if n != 1 {
                    problems.push(format!("({k}, {s}) appears {n} times"));
                }
            }
        }
        problems
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn schedule_rng(participant: &str, seed: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&(seed ^ fnv1a64(participant.as_bytes())).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = ((rng.next_u64() as u128 * (i as u128 + 1)) >> 64) as usize;
        items.swap(i, j);
    }
}

pub fn generate_schedule(participant: &str, seed: u64) -> Schedule {
    let mut rng = schedule_rng(participant, seed);
    let mut block_order = EncodingKind::ALL;
    shuffle(&mut block_order, &mut rng);
    let mut training_order = EncodingKind::ALL;
    shuffle(&mut training_order, &mut rng);

    let training = training_order
        .iter()
        .enumerate()
        .map(|(i, &k)| Trial {
            block: 0,
            trial: i as u32 + 1,
            scene: TRAINING_SCENE.to_owned(),
            encoding: k,
        })
        .collect();
    let blocks = block_order
        .iter()
        .enumerate()
        .map(|(b, &k)| {
            let mut scenes = MAIN_SCENES;
            shuffle(&mut scenes, &mut rng);
            let index = b as u32 + 1;
            Block {
                index,
                encoding: k,
                trials: scenes
                    .iter()
                    .enumerate()
                    .map(|(i, s)| Trial {
                        block: index,
                        trial: i as u32 + 1,
                        scene: (*s).to_owned(),
                        encoding: k,
                    })
                    .collect(),
            }
        })
        .collect();
    Schedule {
        participant: participant.to_owned(),
        seed,
        generator: GENERATOR.to_owned(),
        training,
        blocks,
    }
}
