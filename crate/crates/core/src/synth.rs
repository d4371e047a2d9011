//! Deterministic synthetic cohorts: sinusoid-plus-noise sensor series and
//! GPS tracks per activity, with persistent per-volunteer style offsets.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gps::EARTH_RADIUS_M;
use crate::ingest::{
    self, Activity, ActivityRecord, Channel, GpsPoint, IngestError, RecordMeta, SensorAxisSeries, Sex, VolunteerProfile,
};
use crate::rng;

/// 2019-12-20 18:14:37 UTC
pub const START_EPOCH: i64 = 1_576_865_677;
pub const MIN_DURATION_S: usize = 60;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("duration {0} s is shorter than {MIN_DURATION_S} s")]
    DurationTooShort(usize),
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    /// Hz; aliased at 1 Hz sampling.
    pub gait_frequency: f64,
    /// m/s²
    pub vertical_amplitude: f64,
    /// degrees
    pub sway_amplitude: f64,
    /// Noise SD per sensor in [`Sensor::ALL`] order, sensor units.
    pub noise_sd: [f64; 6],
    /// m/s
    pub base_speed: f64,
    /// m/s
    pub speed_jitter_sd: f64,
}

impl ActivityProfile {
    pub fn default_for(activity: Activity) -> Self {
        let (gait_frequency, vertical_amplitude, sway_amplitude, base_speed, speed_jitter_sd) =
            match activity {
                Activity::Walking => (1.8, 2.5, 6.0, 1.4, 0.2),
                Activity::Running => (2.8, 6.0, 9.0, 3.3, 0.4),
                Activity::Biking => (1.2, 1.5, 3.0, 5.0, 0.8),
                Activity::EBikeRiding => (0.3, 0.8, 2.0, 7.0, 1.0),
            };
        ActivityProfile {
            gait_frequency,
            vertical_amplitude,
            sway_amplitude,
            noise_sd: [0.4, 0.4, 0.05, 1.0, 1.0, 0.05],
            base_speed,
            speed_jitter_sd,
        }
    }

    /// Zero noise and zero sway: orientation series come out constant.
    pub fn quiet(mut self) -> Self {
        self.noise_sd = [0.0; 6];
        self.sway_amplitude = 0.0;
        self
    }
}

/// Multiplicative per-volunteer perturbations, each in [0.5, 2.0].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StyleOffset {
    pub amplitude: f64,
    pub sway: f64,
    pub noise: f64,
    pub frequency: f64,
    pub speed: f64,
}

impl Default for StyleOffset {
    fn default() -> Self {
        StyleOffset {
            amplitude: 1.0,
            sway: 1.0,
            noise: 1.0,
            frequency: 1.0,
            speed: 1.0,
        }
    }
}

impl StyleOffset {
    pub fn draw(rng: &mut impl Rng) -> Self {
        let mut mult = |sd: f64| {
            let z: f64 = Normal::new(0.0, sd).expect("sd > 0").sample(rng);
            z.exp().clamp(0.5, 2.0)
        };
        StyleOffset {
            amplitude: mult(0.25),
            sway: mult(0.25),
            noise: mult(0.2),
            frequency: mult(0.05),
            speed: mult(0.1),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("finite sd").sample(rng)
}

/// One synthetic session. The label comes from `meta`.
pub fn generate_record(
    meta: &RecordMeta,
    profile: &ActivityProfile,
    style: &StyleOffset,
    duration_s: usize,
    seed: u64,
) -> Result<ActivityRecord> {
    if duration_s < MIN_DURATION_S {
        return Err(SynthError::DurationTooShort(duration_s));
    }
    let mut rng = rng::seeded(seed);
    let n = duration_s;
    let omega = 2.0 * PI * profile.gait_frequency * style.frequency;
    let amp = profile.vertical_amplitude * style.amplitude;
    let sway = profile.sway_amplitude * style.sway;
    let sway_rad = sway.to_radians();
    let noise: Vec<f64> = profile.noise_sd.iter().map(|s| s * style.noise).collect();
    let phase = rng.random_range(0.0..2.0 * PI);
    let heading0 = rng.random_range(0.0..360.0);
    let lean = rng.random_range(-1.0..1.0) * sway / n as f64;

    let mut turn = 0.0;
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 18];
    for i in 0..n {
        let t = i as f64;
        let g = omega * t + phase;
        turn += gaussian(&mut rng, 0.3) * style.sway;
        let tilt = sway_rad * (0.5 * g).sin();

        let lacc = [
            0.35 * amp * (g + 0.7).sin() + 0.15 * amp * (2.0 * g).sin(),
            amp * g.sin(),
            0.5 * amp * (g + 1.3).sin(),
        ];
        let grav = [9.81 * tilt.sin(), 9.81 * tilt.cos(), 0.3 * sway_rad * g.cos()];
        let ori = [
            heading0 + turn + 0.5 * sway * g.sin(),
            0.6 * sway * (g + 0.4).sin(),
            sway * (g + 0.9).sin() + lean * t,
        ];
        let gyr = [
            omega * sway_rad * g.cos(),
            0.6 * omega * sway_rad * (g + 0.4).cos(),
            0.5 * omega * sway_rad * (0.5 * g).cos(),
        ];
        let mag = [
            20.0 + 3.0 * (heading0 + turn).to_radians().cos(),
            -35.0 + 3.0 * (heading0 + turn).to_radians().sin(),
            -40.0 + 0.5 * tilt,
        ];
        for axis in 0..3 {
            let acc = grav[axis] + lacc[axis];
            let clean = [acc, lacc[axis], grav[axis], mag[axis], ori[axis], gyr[axis]];
            for (s, &c) in clean.iter().enumerate() {
                columns[s * 3 + axis].push(c + gaussian(&mut rng, noise[s]));
            }
        }
    }

    let timestamps: Vec<i64> = (0..n as i64).map(|i| START_EPOCH + i).collect();
    let series = Channel::all().zip(columns).map(|(channel, values)| SensorAxisSeries {
        channel,
        timestamps: timestamps.clone(),
        values,
    });

    let gps = generate_track(&mut rng, profile, style, n);
    Ok(ActivityRecord::new(meta.clone(), series, Some(gps))?)
}

fn generate_track(
    rng: &mut ChaCha8Rng,
    profile: &ActivityProfile,
    style: &StyleOffset,
    n: usize,
) -> Vec<GpsPoint> {
    let mut lat = 30.5 + rng.random_range(-0.05..0.05);
    let mut lon = 114.3 + rng.random_range(-0.05..0.05);
    let mut heading = rng.random_range(0.0..2.0 * PI);
    let speed = profile.base_speed * style.speed;
    let mut track = Vec::with_capacity(n);
    for i in 0..n {
        track.push(GpsPoint::new(lat, lon, (START_EPOCH + i as i64) as f64));
        let v = (speed + gaussian(rng, profile.speed_jitter_sd)).max(0.0);
        heading += gaussian(rng, 0.05);
        let dlat = v * heading.cos() / EARTH_RADIUS_M;
        let dlon = v * heading.sin() / (EARTH_RADIUS_M * lat.to_radians().cos());
        lat += dlat.to_degrees();
        lon += dlon.to_degrees();
    }
    track
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    /// Records per activity, in [`Activity::ALL`] order.
    pub counts: [usize; 4],
    pub n_volunteers: usize,
    /// Volunteers `0..n_runners` carry every running record.
    pub n_runners: usize,
    /// Inclusive range of session lengths in seconds.
    pub duration_s: (usize, usize),
}

impl CohortSpec {
    /// 32 biking, 55 e-bike, 45 walking and 139 running records over 33
    /// volunteers, 20 of whom run.
    pub fn paper_shape() -> Self {
        CohortSpec {
            counts: [32, 55, 45, 139],
            n_volunteers: 33,
            n_runners: 20,
            duration_s: (120, 240),
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    fn validate(&self) -> Result<()> {
        if self.counts.iter().any(|&c| c == 0) {
            return Err(SynthError::InvalidSpec("every activity count must be positive".into()));
        }
        if self.n_volunteers < 2 {
            return Err(SynthError::InvalidSpec("need at least 2 volunteers".into()));
        }
        if self.n_runners == 0 || self.n_runners > self.n_volunteers {
            return Err(SynthError::InvalidSpec(format!(
                "{} runners among {} volunteers",
                self.n_runners, self.n_volunteers
            )));
        }
        let (lo, hi) = self.duration_s;
        if lo < MIN_DURATION_S || hi < lo {
            return Err(SynthError::InvalidSpec(format!("duration range {lo}..={hi}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Volunteer {
    pub profile: VolunteerProfile,
    pub style: StyleOffset,
}

pub fn generate_volunteers(n: usize, seed: u64) -> Vec<Volunteer> {
    (0..n)
        .map(|i| {
            let mut r = rng::seeded(rng::mix(seed ^ 0x766f_6c75_6e74_6565, i as u64));
            let sex = if r.random_bool(0.5) { Sex::Male } else { Sex::Female };
            let (h, w) = match sex {
                Sex::Male => (175.0, 72.0),
                Sex::Female => (162.0, 57.0),
            };
            let height = (h + gaussian(&mut r, 7.0)).clamp(140.0, 210.0);
            let weight = (w + gaussian(&mut r, 9.0)).clamp(40.0, 130.0);
            let style = StyleOffset::draw(&mut r);
            Volunteer {
                profile: VolunteerProfile {
                    volunteer_id: format!("v{:02}", i + 1),
                    sex,
                    height: (height * 10.0).round() / 10.0,
                    weight: (weight * 10.0).round() / 10.0,
                },
                style,
            }
        })
        .collect()
}

/// Generates the cohort in activity order. Running records go round-robin
/// over the runners; other records round-robin over the remaining volunteers
/// (or over everyone when all volunteers run).
pub fn generate_cohort(spec: &CohortSpec, seed: u64) -> Result<Vec<ActivityRecord>> {
    spec.validate()?;
    let volunteers = generate_volunteers(spec.n_volunteers, seed);
    let others: Vec<usize> = if spec.n_runners < spec.n_volunteers {
        (spec.n_runners..spec.n_volunteers).collect()
    } else {
        (0..spec.n_volunteers).collect()
    };
    let mut plan = Vec::with_capacity(spec.total());
    let (mut next_runner, mut next_other) = (0, 0);
    for (activity, &count) in Activity::ALL.iter().zip(&spec.counts) {
        for _ in 0..count {
            let v = if *activity == Activity::Running {
                next_runner += 1;
                (next_runner - 1) % spec.n_runners
            } else {
                next_other += 1;
                others[(next_other - 1) % others.len()]
            };
            plan.push((*activity, v));
        }
    }
    plan.par_iter()
        .enumerate()
        .map(|(index, &(activity, v))| {
            let record_seed = rng::mix(seed, index as u64);
            let (lo, hi) = spec.duration_s;
            let duration = lo + (rng::mix(record_seed, 1) % (hi - lo + 1) as u64) as usize;
            let meta = RecordMeta {
                record_id: format!("rec{:04}", index + 1),
                label: activity,
                volunteer: volunteers[v].profile.clone(),
            };
            generate_record(
                &meta,
                &ActivityProfile::default_for(activity),
                &volunteers[v].style,
                duration,
                record_seed,
            )
        })
        .collect()
}

/// Writes every record as the on-disk triple read by [`ingest::read_record`].
pub fn write_cohort(dir: &Path, records: &[ActivityRecord]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for r in records {
        ingest::write_record(dir, r)?;
    }
    Ok(())
}
