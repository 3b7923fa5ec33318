use chrono::TimeDelta;

use crate::track::{TrackPoint, TrackSeries};

pub(crate) fn constant_track(n: usize, vp: f64, chi: f64, shear: f64, z: f64) -> TrackSeries {
    let base = TrackPoint {
        vp,
        chi,
        shear,
        z_override: Some(z),
        ..TrackPoint::example()
    };
    let pts = (0..n)
        .map(|i| TrackPoint {
            time: base.time + TimeDelta::hours(6 * i as i64),
            ..base.clone()
        })
        .collect();
    TrackSeries::new("TEST", pts).unwrap()
}
