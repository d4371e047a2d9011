//! Velocity and acceleration from GPS fixes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::GpsPoint;
use crate::stats;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Consecutive fixes implying a faster speed are treated as positioning jitter.
pub const MAX_PLAUSIBLE_SPEED: f64 = 70.0;

#[derive(Debug, Error, PartialEq)]
pub enum GpsError {
    #[error("non-positive time interval ({t1} -> {t2})")]
    NonPositiveInterval { t1: f64, t2: f64 },
    #[error("track has {len} points, need at least {min}")]
    TooShort { len: usize, min: usize },
}

pub type Result<T, E = GpsError> = std::result::Result<T, E>;

/// Great-circle distance in metres (haversine).
pub fn haversine_distance(p1: &GpsPoint, p2: &GpsPoint) -> f64 {
    let lat1 = p1.lat.to_radians();
    let lat2 = p2.lat.to_radians();
    let d_lat = lat2 - lat1;
    let d_lon = (p2.lon - p1.lon).to_radians();
    let h = (d_lat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (d_lon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Speed in m/s between two fixes.
pub fn haversine_velocity(p1: &GpsPoint, p2: &GpsPoint) -> Result<f64> {
    let dt = p2.timestamp - p1.timestamp;
    if !(dt > 0.0) {
        return Err(GpsError::NonPositiveInterval {
            t1: p1.timestamp,
            t2: p2.timestamp,
        });
    }
    Ok(haversine_distance(p1, p2) / dt)
}

pub fn point_acceleration(v1: f64, v2: f64, t1: f64, t2: f64) -> Result<f64> {
    if !(t2 > t1) {
        return Err(GpsError::NonPositiveInterval { t1, t2 });
    }
    Ok((v2 - v1) / (t2 - t1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinematicSeries {
    /// (timestamp of the later fix, m/s)
    pub velocities: Vec<(f64, f64)>,
    /// (timestamp of the later velocity sample, m/s²)
    pub accelerations: Vec<(f64, f64)>,
    pub earth_radius: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KinematicFeatures {
    pub mean_velocity: f64,
    pub max_velocity: f64,
    pub velocity_sd: f64,
    pub mean_abs_acceleration: f64,
    pub max_abs_acceleration: f64,
}

impl KinematicFeatures {
    pub const NAMES: [&'static str; 5] = [
        "gps_mean_velocity",
        "gps_max_velocity",
        "gps_velocity_sd",
        "gps_mean_abs_acceleration",
        "gps_max_abs_acceleration",
    ];

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.mean_velocity,
            self.max_velocity,
            self.velocity_sd,
            self.mean_abs_acceleration,
            self.max_abs_acceleration,
        ]
    }
}

/// Drops fixes that imply a speed above [`MAX_PLAUSIBLE_SPEED`] relative to
/// the last kept fix, and fixes that do not advance in time.
pub fn drop_jitter(track: &[GpsPoint]) -> Vec<GpsPoint> {
    let mut kept: Vec<GpsPoint> = Vec::with_capacity(track.len());
    for p in track {
        match kept.last() {
            None => kept.push(*p),
            Some(last) => {
                if let Ok(v) = haversine_velocity(last, p) {
                    if v <= MAX_PLAUSIBLE_SPEED {
                        kept.push(*p);
                    }
                }
            }
        }
    }
    kept
}

/// Pairwise velocities, accelerations between consecutive velocity samples,
/// and their aggregates.
pub fn track_kinematics(track: &[GpsPoint]) -> Result<(KinematicSeries, KinematicFeatures)> {
    if track.len() < 3 {
        return Err(GpsError::TooShort {
            len: track.len(),
            min: 3,
        });
    }
    let velocities = track
        .windows(2)
        .map(|w| Ok((w[1].timestamp, haversine_velocity(&w[0], &w[1])?)))
        .collect::<Result<Vec<_>>>()?;
    let accelerations = velocities
        .windows(2)
        .map(|w| Ok((w[1].0, point_acceleration(w[0].1, w[1].1, w[0].0, w[1].0)?)))
        .collect::<Result<Vec<_>>>()?;

    let speeds: Vec<f64> = velocities.iter().map(|&(_, v)| v).collect();
    let abs_acc: Vec<f64> = accelerations.iter().map(|&(_, a)| a.abs()).collect();
    let features = KinematicFeatures {
        mean_velocity: stats::mean(&speeds),
        max_velocity: speeds.iter().copied().fold(0.0, f64::max),
        velocity_sd: stats::population_variance(&speeds).sqrt(),
        mean_abs_acceleration: stats::mean(&abs_acc),
        max_abs_acceleration: abs_acc.iter().copied().fold(0.0, f64::max),
    };
    Ok((
        KinematicSeries {
            velocities,
            accelerations,
            earth_radius: EARTH_RADIUS_M,
        },
        features,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(lat: f64, lon: f64, t: f64) -> GpsPoint {
        GpsPoint::new(lat, lon, t)
    }

    #[test]
    fn zero_distance_is_zero_speed() {
        assert_eq!(
            haversine_velocity(&p(30.0, 114.0, 0.0), &p(30.0, 114.0, 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn one_degree_per_hour_on_equator_and_meridian() {
        // arc length R * pi / 180 metres
        let expected = EARTH_RADIUS_M * std::f64::consts::PI / 180.0 / 3600.0;
        let east = haversine_velocity(&p(0.0, 0.0, 0.0), &p(0.0, 1.0, 3600.0)).unwrap();
        let north = haversine_velocity(&p(0.0, 0.0, 0.0), &p(1.0, 0.0, 3600.0)).unwrap();
        assert_abs_diff_eq!(east, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(north, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(east, 30.888, epsilon = 0.01);
    }

    #[test]
    fn interval_must_be_positive() {
        assert!(matches!(
            haversine_velocity(&p(0.0, 0.0, 5.0), &p(0.0, 1.0, 5.0)),
            Err(GpsError::NonPositiveInterval { .. })
        ));
        assert!(point_acceleration(1.0, 2.0, 3.0, 2.0).is_err());
    }

    #[test]
    fn acceleration_sign_convention() {
        assert_eq!(point_acceleration(0.0, 10.0, 0.0, 5.0).unwrap(), 2.0);
        assert_eq!(point_acceleration(4.0, 4.0, 0.0, 5.0).unwrap(), 0.0);
        assert_eq!(point_acceleration(8.0, 5.0, 1.0, 3.0).unwrap(), -1.5);
    }

    #[test]
    fn stationary_track_is_all_zero() {
        let track: Vec<_> = (0..5).map(|t| p(45.0, 7.0, t as f64)).collect();
        let (series, feats) = track_kinematics(&track).unwrap();
        assert_eq!(series.velocities.len(), 4);
        assert_eq!(series.accelerations.len(), 3);
        assert_eq!(feats, KinematicFeatures::default());
    }

    #[test]
    fn constant_equatorial_speed() {
        let track: Vec<_> = (0..20).map(|t| p(0.0, 1e-4 * t as f64, t as f64)).collect();
        let (series, feats) = track_kinematics(&track).unwrap();
        let step = haversine_distance(&p(0.0, 0.0, 0.0), &p(0.0, 1e-4, 0.0));
        assert_abs_diff_eq!(step, 11.12, epsilon = 0.01);
        for &(_, v) in &series.velocities {
            assert_abs_diff_eq!(v, step, epsilon = 1e-6);
        }
        assert!(feats.max_abs_acceleration < 1e-6);
    }

    #[test]
    fn short_track_is_rejected() {
        assert_eq!(
            track_kinematics(&[p(0.0, 0.0, 0.0), p(0.0, 0.0, 1.0)]).unwrap_err(),
            GpsError::TooShort { len: 2, min: 3 }
        );
    }

    #[test]
    fn jitter_fix_is_dropped() {
        let track = vec![
            p(0.0, 0.0, 0.0),
            p(0.0, 0.00002, 1.0),
            p(0.0, 0.01, 2.0), // ~1.1 km in one second
            p(0.0, 0.00004, 3.0),
        ];
        let kept = drop_jitter(&track);
        assert_eq!(kept.len(), 3);
        assert_eq!(kept[2].timestamp, 3.0);
    }
}
