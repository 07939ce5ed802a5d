//! Trajectory-atomic train/valid/test splits.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::table::FeatureRow;

/// Row indices of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// No target data in training.
    A,
    /// Some minutes of target data join training.
    B,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::A => "A",
            Scenario::B => "B",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Scenario::A),
            "B" | "b" => Ok(Scenario::B),
            _ => Err(Error::InvalidArgument(format!("unknown scenario `{s}`"))),
        }
    }
}

pub(crate) struct Trajectory {
    pub person: String,
    pub rows: Vec<usize>,
    pub duration_s: f64,
}

/// Trajectories in order of first appearance.
pub(crate) fn trajectories(rows: &[FeatureRow]) -> Vec<Trajectory> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut out: Vec<Trajectory> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        match index.get(r.trajectory_id.as_str()) {
            Some(&k) => out[k].rows.push(i),
            None => {
                index.insert(&r.trajectory_id, out.len());
                out.push(Trajectory {
                    person: r.person_id.clone(),
                    rows: vec![i],
                    duration_s: r.trajectory_duration_s,
                });
            }
        }
    }
    out
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

/// Shuffle whole trajectories and move them to validation until it holds a
/// tenth of the samples; the rest is training data.
fn pool_split(pool: &[&Trajectory], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<&Trajectory> = pool.to_vec();
    order.shuffle(&mut rng_for(seed, 1));
    let total: usize = order.iter().map(|t| t.rows.len()).sum();
    let want = total as f64 / 10.0;
    let mut valid = Vec::new();
    let mut train = Vec::new();
    let mut n_valid = 0usize;
    for t in order {
        // Take the trajectory if that brings the count closer to the goal.
        let closer = ((n_valid + t.rows.len()) as f64 - want).abs() < (n_valid as f64 - want).abs();
        if closer && (n_valid as f64) < want {
            n_valid += t.rows.len();
            valid.extend(&t.rows);
        } else {
            train.extend(&t.rows);
        }
    }
    train.sort_unstable();
    valid.sort_unstable();
    (train, valid)
}

fn check_target(trajs: &[Trajectory], target: &str) -> Result<()> {
    if !trajs.iter().any(|t| t.person == target) {
        return Err(Error::MissingTarget(target.to_string()));
    }
    if !trajs.iter().any(|t| t.person != target) {
        return Err(Error::InvalidArgument("need at least two persons".into()));
    }
    Ok(())
}

/// All target data is test data; everyone else is split 9:1.
pub fn split_scenario_a(rows: &[FeatureRow], target: &str, seed: u64) -> Result<Split> {
    split_scenario_b(rows, target, 0.0, seed)
}

/// `target_minutes` of the target's trajectories (whole trajectories, in a
/// seeded random order, until the duration is reached) join the 9:1 pool;
/// the remaining target trajectories are the test set.
pub fn split_scenario_b(rows: &[FeatureRow], target: &str, target_minutes: f64, seed: u64) -> Result<Split> {
    let trajs = trajectories(rows);
    check_target(&trajs, target)?;
    let mut own: Vec<&Trajectory> = trajs.iter().filter(|t| t.person == target).collect();
    let available: f64 = own.iter().map(|t| t.duration_s).sum();
    let want_s = target_minutes * 60.0;
    if want_s > 0.0 && available <= want_s {
        return Err(Error::InsufficientTargetData(format!(
            "{target} has {:.1} min, {target_minutes} min requested for training",
            available / 60.0
        )));
    }
    own.shuffle(&mut rng_for(seed, 2));
    let mut pool: Vec<&Trajectory> = trajs.iter().filter(|t| t.person != target).collect();
    let mut test = Vec::new();
    let mut taken = 0.0;
    for t in own {
        if taken < want_s {
            taken += t.duration_s;
            pool.push(t);
        } else {
            test.extend(&t.rows);
        }
    }
    if test.is_empty() {
        return Err(Error::InsufficientTargetData(format!("no test trajectories left for {target}")));
    }
    // Keep the pool in table order so the split does not depend on which
    // target trajectories were drawn first.
    pool.sort_by_key(|t| t.rows[0]);
    let (train, valid) = pool_split(&pool, seed);
    test.sort_unstable();
    Ok(Split { train, valid, test })
}

/// Whole-corpus trajectory-atomic split with the given fractions of samples
/// for validation and test.
pub fn split_random(rows: &[FeatureRow], valid_frac: f64, test_frac: f64, seed: u64) -> Split {
    let trajs = trajectories(rows);
    let mut order: Vec<&Trajectory> = trajs.iter().collect();
    order.shuffle(&mut rng_for(seed, 3));
    let total = rows.len() as f64;
    let mut split = Split::default();
    let (mut nv, mut nt) = (0.0, 0.0);
    for t in order {
        let n = t.rows.len() as f64;
        if nt < test_frac * total {
            nt += n;
            split.test.extend(&t.rows);
        } else if nv < valid_frac * total {
            nv += n;
            split.valid.extend(&t.rows);
        } else {
            split.train.extend(&t.rows);
        }
    }
    split.train.sort_unstable();
    split.valid.sort_unstable();
    split.test.sort_unstable();
    split
}
