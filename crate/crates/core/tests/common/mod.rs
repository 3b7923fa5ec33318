#![allow(dead_code)]

use chrono::TimeDelta;
use nalgebra::{DMatrix, DVector};

use cyclone_sde::simulate::{integrate_deterministic, ForcedTrack, Integrator, Scheme};
use cyclone_sde::sindy::{RegressionSystem, RowMeta};
use cyclone_sde::synthetic::{generate_with, SyntheticConfig};
use cyclone_sde::{full_basis, IntensityModel, TrackPoint, TrackSeries};

pub fn constant_track(id: &str, n: usize, vp: f64, chi: f64, shear: f64, z: f64) -> TrackSeries {
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
    TrackSeries::new(id, pts).unwrap()
}

/// Synthetic environments with exact, unquantised intensities that never
/// stop at dissipation.
pub fn raw_corpus(seed: u64, n: usize, steps: usize) -> Vec<TrackSeries> {
    let mut cfg = SyntheticConfig::new(n, steps);
    cfg.quantize = false;
    cfg.dissipation_mps = None;
    generate_with(seed, &cfg).unwrap()
}

/// Replaces each storm's intensities by 6 h forward-Euler steps of `model`
/// from its first observation.
pub fn euler_intensities(model: &IntensityModel, tracks: &mut [TrackSeries]) {
    let euler = Integrator {
        dt_hours: 6.0,
        scheme: Scheme::Euler,
        floor_mps: None,
    };
    for t in tracks {
        let ft = ForcedTrack::new(t, model).unwrap();
        let v = integrate_deterministic(model, &ft, 0, t.points[0].v_obs, t.len() - 1, &euler).unwrap();
        for (p, x) in t.points.iter_mut().zip(v) {
            p.v_obs = x;
        }
    }
}

/// Wraps a bare design matrix as a regression system over the first
/// `p` library terms, with rows spread over `storms` storms.
pub fn system_from(design: DMatrix<f64>, response: DVector<f64>, storms: usize) -> RegressionSystem {
    let p = design.ncols();
    let n = design.nrows();
    let cols: Vec<usize> = (0..p).collect();
    RegressionSystem {
        basis: full_basis(3).subset(&cols).unwrap(),
        design,
        response,
        row_meta: (0..n)
            .map(|i| RowMeta {
                storm: i % storms,
                start: i / storms,
                horizon_steps: 1,
            })
            .collect(),
        storm_ids: (0..storms).map(|i| format!("S{i:03}")).collect(),
    }
}

/// Residual sum of squares of the least-squares fit on `cols`.
pub fn subset_rss(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> f64 {
    let sub = x.select_columns(cols);
    let beta = sub.clone().svd(true, true).solve(y, 1e-12).unwrap();
    (y - sub * beta).norm_squared()
}

/// All `k`-subsets of `0..p` in lexicographic order.
pub fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == p - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
