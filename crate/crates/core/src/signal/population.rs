//! Multi-person synthetic walking corpus.
//!
//! Walkers are drawn from a handful of gait groups (think footwear or build).
//! Each group has its own baseline gait and its own gains on the shared
//! emotion modulation, so the mapping from vibration to emotion differs
//! between groups while the direction of every planted effect is common.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::{generate_synthetic_walk, ProfileOffsets, SynthProfile};
use super::{EmotionLabel, EmotionQuadrant, VibrationSignal};
use crate::error::{Error, Result};
use crate::parallel;

/// Emotion effects planted into every walker:
/// cadence up with arousal, contact widths up in HVHA, irregularity and
/// double support up with low valence, peak ratio up in HVLA, energy up with
/// high valence.
pub fn planted_modulation() -> BTreeMap<EmotionQuadrant, ProfileOffsets> {
    let mut m = BTreeMap::new();
    m.insert(
        EmotionQuadrant::Hvha,
        ProfileOffsets {
            step_frequency_hz: 0.3,
            footstep_amplitude: 0.35,
            hs_fwhm_s: 0.005,
            to_fwhm_s: 0.012,
            ..Default::default()
        },
    );
    m.insert(
        EmotionQuadrant::Hvla,
        ProfileOffsets {
            step_frequency_hz: -0.2,
            footstep_amplitude: 0.35,
            hs_to_peak_ratio: 1.0,
            ..Default::default()
        },
    );
    m.insert(
        EmotionQuadrant::Lvha,
        ProfileOffsets {
            step_frequency_hz: 0.3,
            double_support_s: 0.03,
            noise_rms: 0.03,
            ..Default::default()
        },
    );
    m.insert(
        EmotionQuadrant::Lvla,
        ProfileOffsets {
            step_frequency_hz: -0.2,
            double_support_s: 0.03,
            noise_rms: 0.03,
            ..Default::default()
        },
    );
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationSpec {
    pub persons: usize,
    pub trials_per_person: usize,
    pub minutes_per_person: f64,
    pub trajectory_s: f64,
    pub gait_groups: usize,
    /// Half-width of the uniform jitter added to quadrant-centre scores.
    pub label_jitter: f64,
    /// Relative per-person spread around the group baseline.
    pub person_spread: f64,
    pub base: SynthProfile,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            persons: 20,
            trials_per_person: 9,
            minutes_per_person: 23.0,
            trajectory_s: 600.0 / 90.0,
            gait_groups: 4,
            label_jitter: 1.5,
            person_spread: 0.04,
            base: SynthProfile {
                noise_rms: 0.02,
                step_jitter_s: 0.01,
                emotion_modulation: planted_modulation(),
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Walker {
    pub person_id: String,
    pub group: usize,
    pub profile: SynthProfile,
}

impl PopulationSpec {
    pub fn trajectories_per_trial(&self) -> usize {
        let per_trial_s = self.minutes_per_person * 60.0 / self.trials_per_person.max(1) as f64;
        ((per_trial_s / self.trajectory_s).round() as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if self.persons == 0 || self.trials_per_person == 0 || self.gait_groups == 0 {
            return Err(Error::InvalidProfile(
                "persons, trials and groups must be positive".into(),
            ));
        }
        if !(self.minutes_per_person > 0.0 && self.trajectory_s > 0.0) {
            return Err(Error::InvalidProfile("durations must be positive".into()));
        }
        if !(0.0..=2.0).contains(&self.label_jitter) {
            return Err(Error::InvalidProfile("label_jitter must lie in [0, 2]".into()));
        }
        Ok(())
    }

    /// Deterministic walker roster for `seed`.
    pub fn walkers(&self, seed: u64) -> Vec<Walker> {
        let mut group_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6a09_e667_f3bc_c908);
        let groups: Vec<(ProfileOffsets, [f64; 7])> = (0..self.gait_groups)
            .map(|g| {
                let frac = if self.gait_groups > 1 {
                    g as f64 / (self.gait_groups - 1) as f64 - 0.5
                } else {
                    0.0
                };
                let baseline = ProfileOffsets {
                    step_frequency_hz: 0.5 * frac,
                    footstep_amplitude: -0.5 * frac,
                    hs_to_peak_ratio: 1.2 * frac,
                    hs_fwhm_s: 0.008 * frac,
                    to_fwhm_s: -0.016 * frac,
                    double_support_s: 0.05 * frac,
                    noise_rms: 0.0,
                };
                let mut gains = [0.0; 7];
                for x in gains.iter_mut() {
                    *x = group_rng.gen_range(0.3..1.7);
                }
                (baseline, gains)
            })
            .collect();

        (0..self.persons)
            .map(|p| {
                let group = p % self.gait_groups;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003) ^ (p as u64 + 1));
                let (baseline, gains) = &groups[group];
                let mut spread = || 1.0 + self.person_spread * rng.gen_range(-1.0..1.0);
                let b = &self.base;
                let mut profile = SynthProfile {
                    step_frequency_hz: (b.step_frequency_hz + baseline.step_frequency_hz) * spread(),
                    footstep_amplitude: (b.footstep_amplitude + baseline.footstep_amplitude) * spread(),
                    hs_to_peak_ratio: (b.hs_to_peak_ratio + baseline.hs_to_peak_ratio) * spread(),
                    hs_fwhm_s: (b.hs_fwhm_s + baseline.hs_fwhm_s) * spread(),
                    to_fwhm_s: (b.to_fwhm_s + baseline.to_fwhm_s) * spread(),
                    double_support_s: (b.double_support_s + baseline.double_support_s) * spread(),
                    ..b.clone()
                };
                profile.emotion_modulation = b
                    .emotion_modulation
                    .iter()
                    .map(|(q, o)| {
                        let scaled = ProfileOffsets {
                            step_frequency_hz: o.step_frequency_hz * gains[0],
                            footstep_amplitude: o.footstep_amplitude * gains[1],
                            hs_to_peak_ratio: o.hs_to_peak_ratio * gains[2],
                            hs_fwhm_s: o.hs_fwhm_s * gains[3],
                            to_fwhm_s: o.to_fwhm_s * gains[4],
                            double_support_s: o.double_support_s * gains[5],
                            noise_rms: o.noise_rms * gains[6],
                        };
                        (*q, scaled)
                    })
                    .collect();
                Walker {
                    person_id: format!("p{p:02}"),
                    group,
                    profile,
                }
            })
            .collect()
    }

    /// One label per trial: a random opening state, then every quadrant
    /// elicited equally often in shuffled order.
    pub fn trial_labels(&self, seed: u64, person: usize) -> Vec<EmotionLabel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9) ^ ((person as u64) << 20));
        let mut quadrants: Vec<EmotionQuadrant> = Vec::with_capacity(self.trials_per_person);
        if self.trials_per_person > 0 {
            quadrants.push(EmotionQuadrant::ALL[rng.gen_range(0..4)]);
        }
        let mut rest: Vec<EmotionQuadrant> = (0..self.trials_per_person.saturating_sub(1))
            .map(|i| EmotionQuadrant::ALL[i % 4])
            .collect();
        rest.shuffle(&mut rng);
        quadrants.extend(rest);
        quadrants
            .into_iter()
            .map(|q| {
                let centre = |high: bool| if high { 7.0 } else { 3.0 };
                let v = centre(q.high_valence()) + rng.gen_range(-1.0..=1.0) * self.label_jitter;
                let a = centre(q.high_arousal()) + rng.gen_range(-1.0..=1.0) * self.label_jitter;
                EmotionLabel::new(v, a).expect("jitter keeps scores inside [1, 9]")
            })
            .collect()
    }

    /// Render every trajectory of every walker. Output is ordered by person,
    /// trial, trajectory and is independent of `threads`.
    pub fn generate(&self, seed: u64, threads: usize) -> Result<Vec<VibrationSignal>> {
        self.validate()?;
        let walkers = self.walkers(seed);
        let per_trial = self.trajectories_per_trial();
        let jobs: Vec<(usize, usize, usize)> = (0..self.persons)
            .flat_map(|p| {
                (0..self.trials_per_person).flat_map(move |t| (0..per_trial).map(move |r| (p, t, r)))
            })
            .collect();
        let labels: Vec<Vec<EmotionLabel>> =
            (0..self.persons).map(|p| self.trial_labels(seed, p)).collect();
        let out = parallel::map(&jobs, threads, |&(p, t, r)| {
            let walker = &walkers[p];
            let walk_seed = seed
                .wrapping_mul(0x2545_f491_4f6c_dd1d)
                .wrapping_add(((p * 1000 + t) * 1000 + r) as u64);
            let sig = generate_synthetic_walk(&walker.profile, labels[p][t], self.trajectory_s, walk_seed)?;
            let (samples, mut meta) = sig.into_parts();
            meta.person_id = walker.person_id.clone();
            meta.trajectory_id = format!("{}-t{t}-r{r:02}", walker.person_id);
            meta.sensor_id = "s0".into();
            VibrationSignal::new(samples, meta)
        });
        out.into_iter().collect()
    }
}
