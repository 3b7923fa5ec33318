//! Seeded synthetic storm corpora for desk-scale testing of the pipeline.
//!
//! Environments are bounded random walks inside physically observed ranges;
//! intensities come from integrating a known model along that environment
//! and quantising to the 2.57 m/s (5 kt) bins of best-track archives.

use chrono::{DateTime, TimeDelta, Utc};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{builtin_paper_model, IntensityModel};
use crate::par;
use crate::rng::{self, StreamRng};
use crate::simulate::{integrate_deterministic, ForcedTrack, Integrator};
use crate::track::{TrackPoint, TrackSeries, CADENCE_HOURS};

/// Best-track intensity bin width (5 kt), m/s.
pub const INTENSITY_QUANTUM_MPS: f64 = 2.57;

pub const VP_RANGE: (f64, f64) = (30.0, 90.0);
pub const CHI_RANGE: (f64, f64) = (0.0, 5.0);
pub const SHEAR_RANGE: (f64, f64) = (0.0, 30.0);
pub const Z_RANGE: (f64, f64) = (10.0, 200.0);
const UT_RANGE: (f64, f64) = (1.0, 10.0);
const GAMMA_RANGE: (f64, f64) = (0.5, 2.0);
/// Per-step standard deviation of the unit-interval environment walks.
const WALK_STEP: f64 = 0.12;

#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub n_storms: usize,
    /// Maximum number of 6 h points per storm.
    pub duration_steps: usize,
    /// Round intensities to the best-track quantum.
    pub quantize: bool,
    /// Storms end once the true intensity drops below this (m/s), as
    /// best-track records stop at dissipation.
    pub dissipation_mps: Option<f64>,
    /// Initial intensity drawn uniformly from this range, m/s.
    pub v0_range: (f64, f64),
    /// Model that generates the intensities.
    pub model: IntensityModel,
}

impl SyntheticConfig {
    pub fn new(n_storms: usize, duration_steps: usize) -> Self {
        SyntheticConfig {
            n_storms,
            duration_steps,
            quantize: true,
            dissipation_mps: Some(10.0),
            v0_range: (15.0, 60.0),
            model: builtin_paper_model(),
        }
    }
}

/// Bounded random walk on [0, 1] with reflection at the ends.
fn walk(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let mut x = rng.random::<f64>();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(x);
        let step: f64 = rng.sample(StandardNormal);
        x += WALK_STEP * step;
        if x < 0.0 {
            x = -x;
        }
        if x > 1.0 {
            x = 2.0 - x;
        }
        x = x.clamp(0.0, 1.0);
    }
    out
}

fn scale(u: f64, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * u
}

pub fn quantize(v: f64) -> f64 {
    (v / INTENSITY_QUANTUM_MPS).round() * INTENSITY_QUANTUM_MPS
}

fn base_time() -> DateTime<Utc> {
    DateTime::<Utc>::from_timestamp(946_684_800, 0).expect("valid epoch") // 2000-01-01
}

fn one_storm(seed: u64, idx: usize, cfg: &SyntheticConfig) -> Result<TrackSeries> {
    let mut rng = rng::stream(seed, &[rng::DOMAIN_SYNTH, idx as u64]);
    let n = cfg.duration_steps;
    let vp = walk(&mut rng, n);
    let chi = walk(&mut rng, n);
    let shear = walk(&mut rng, n);
    let z = walk(&mut rng, n);
    let ut = walk(&mut rng, n);
    let gamma = walk(&mut rng, n);

    let mut lat = rng.random_range(8.0..25.0);
    let mut lon = rng.random_range(120.0..170.0);
    // Bearing in degrees clockwise from north; storms drift north-west and
    // slowly recurve.
    let mut bearing: f64 = rng.random_range(280.0..340.0);
    let v0 = rng.random_range(cfg.v0_range.0..cfg.v0_range.1);
    let t0 = base_time() + TimeDelta::days(idx as i64);

    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let vp_k = scale(vp[k], VP_RANGE);
        let u_t = scale(ut[k], UT_RANGE);
        let g = scale(gamma[k], GAMMA_RANGE);
        let z_k = scale(z[k], Z_RANGE);
        // Choose the mixed-layer depth that reproduces the target z.
        let h_m = z_k * vp_k / (0.01 * g.powf(-0.4) * u_t);
        points.push(TrackPoint {
            time: t0 + TimeDelta::hours(CADENCE_HOURS * k as i64),
            lat,
            lon,
            v_obs: 0.0,
            vp: vp_k,
            chi: scale(chi[k], CHI_RANGE),
            shear: scale(shear[k], SHEAR_RANGE),
            h_m: Some(h_m),
            gamma: Some(g),
            u_t: Some(u_t),
            z_override: None,
            over_land: false,
            gap_before: false,
        });
        let km = u_t * CADENCE_HOURS as f64 * 3.6;
        let b = bearing.to_radians();
        lat = (lat + km * b.cos() / 111.2).min(60.0);
        lon += km * b.sin() / (111.2 * lat.to_radians().cos());
        bearing += 2.0;
    }
    let id = format!("SYN{idx:05}");
    let mut series = TrackSeries::new(id, points)?;
    let track = ForcedTrack::new(&series, &cfg.model)?;
    let truth = integrate_deterministic(&cfg.model, &track, 0, v0, n - 1, &Integrator::FORECAST)?;
    let mut keep = n;
    if let Some(d) = cfg.dissipation_mps {
        if let Some(k) = truth.iter().position(|&v| v < d) {
            keep = (k + 1).max(2);
        }
    }
    series.points.truncate(keep);
    for (p, v) in series.points.iter_mut().zip(&truth) {
        p.v_obs = if cfg.quantize { quantize(*v) } else { *v };
    }
    Ok(series)
}

/// Generates a corpus with the given settings. Output is a pure function of
/// `(seed, cfg)`.
pub fn generate_with(seed: u64, cfg: &SyntheticConfig) -> Result<Vec<TrackSeries>> {
    if cfg.n_storms == 0 {
        return Err(Error::InvalidArgument("n_storms must be >= 1".into()));
    }
    if cfg.duration_steps < 2 {
        return Err(Error::InvalidArgument("duration_steps must be >= 2".into()));
    }
    par::map_range(cfg.n_storms, |i| one_storm(seed, i, cfg))
        .into_iter()
        .collect()
}

/// `n_storms` synthetic storms of at most `duration_steps` points each,
/// generated by the built-in model with quantised intensities.
pub fn generate_synthetic_tracks(
    seed: u64,
    n_storms: usize,
    duration_steps: usize,
) -> Result<Vec<TrackSeries>> {
    generate_with(seed, &SyntheticConfig::new(n_storms, duration_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::compute_z;

    #[test]
    fn deterministic_and_sized() {
        let a = generate_synthetic_tracks(42, 5, 30).unwrap();
        let b = generate_synthetic_tracks(42, 5, 30).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert_ne!(a, generate_synthetic_tracks(43, 5, 30).unwrap());
    }

    #[test]
    fn intensities_are_quantised() {
        for s in generate_synthetic_tracks(1, 20, 40).unwrap() {
            for p in &s.points {
                let k = p.v_obs / INTENSITY_QUANTUM_MPS;
                assert!((k - k.round()).abs() < 1e-9, "{}", p.v_obs);
            }
        }
    }

    #[test]
    fn environment_in_physical_ranges() {
        for s in generate_synthetic_tracks(2, 20, 40).unwrap() {
            assert!(s.len() >= 2);
            for p in &s.points {
                assert!((VP_RANGE.0..=VP_RANGE.1).contains(&p.vp));
                assert!((CHI_RANGE.0..=CHI_RANGE.1).contains(&p.chi));
                assert!((SHEAR_RANGE.0..=SHEAR_RANGE.1).contains(&p.shear));
                let z = compute_z(p.gamma.unwrap(), p.h_m.unwrap(), p.u_t.unwrap(), p.vp).unwrap();
                assert!(z >= Z_RANGE.0 - 1e-9 && z <= Z_RANGE.1 + 1e-9, "{z}");
            }
        }
    }

    #[test]
    fn rejects_degenerate_requests() {
        assert!(generate_synthetic_tracks(0, 0, 10).is_err());
        assert!(generate_synthetic_tracks(0, 3, 1).is_err());
    }
}
