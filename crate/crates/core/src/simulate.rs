//! Deterministic and stochastic intensity trajectories along forced tracks.
//!
//! Time inside the integrators is nondimensional (`tau = 6 h`) and the state
//! is `v' = v / 50 m/s`. Forcings are piecewise constant: each internal step
//! uses the track point nearest in time to the step's start.

use chrono::{DateTime, TimeDelta, Utc};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::features::Forcing;
use crate::model::IntensityModel;
use crate::par;
use crate::rng;
use crate::track::{TrackSeries, CADENCE_HOURS};

const TAU_HOURS: f64 = CADENCE_HOURS as f64;
/// Intensities above this are treated as numerical blow-up, m/s.
pub const BLOWUP_MPS: f64 = 1000.0;
/// Rapid intensification: at least this gain, m/s ...
pub const RI_THRESHOLD_MPS: f64 = 18.0;
/// ... within this many hours.
pub const RI_WINDOW_HOURS: i64 = 24;

/// Precomputed forcings and times of one track.
#[derive(Debug, Clone)]
pub struct ForcedTrack {
    pub forcings: Vec<Forcing>,
    /// Hours since the first point.
    pub hours: Vec<f64>,
}

impl ForcedTrack {
    pub fn new(series: &TrackSeries, model: &IntensityModel) -> Result<Self> {
        let forcings = series
            .points
            .iter()
            .map(|p| Forcing::from_point(p, &model.scales))
            .collect::<Result<Vec<_>>>()?;
        let hours = (0..series.len()).map(|i| series.hours_since_start(i)).collect();
        Ok(ForcedTrack { forcings, hours })
    }

    pub fn len(&self) -> usize {
        self.forcings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forcings.is_empty()
    }
}

/// Internal time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward Euler (Euler-Maruyama without noise).
    Euler,
    /// Classical fourth-order Runge-Kutta.
    Rk4,
}

/// Which forcing applies during the sub-step starting `offset_h` hours into
/// the interval `[i, i+1]` of length `len_h`: the nearer endpoint, ties to
/// the later point.
#[inline]
fn forcing_index(i: usize, offset_h: f64, len_h: f64) -> usize {
    if offset_h + 1e-9 >= 0.5 * len_h {
        i + 1
    } else {
        i
    }
}

#[inline]
fn rk4_step(model: &IntensityModel, f: &Forcing, x: f64, h: f64) -> f64 {
    let vs = model.scales.v;
    let k1 = model.drift_at(f, x * vs);
    let k2 = model.drift_at(f, (x + 0.5 * h * k1) * vs);
    let k3 = model.drift_at(f, (x + 0.5 * h * k2) * vs);
    let k4 = model.drift_at(f, (x + h * k3) * vs);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

fn check_finite(v_mps: f64) -> Result<()> {
    if v_mps.is_finite() && v_mps.abs() <= BLOWUP_MPS {
        Ok(())
    } else {
        Err(Error::Numerical(format!("intensity diverged ({v_mps} m/s)")))
    }
}

/// Step size, scheme and lower clamp for [`integrate_deterministic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub dt_hours: f64,
    pub scheme: Scheme,
    pub floor_mps: Option<f64>,
}

impl Integrator {
    /// Fourth-order steps of tau / 8 with intensity clamped at zero.
    pub const FORECAST: Integrator = Integrator {
        dt_hours: FORECAST_DT_HOURS,
        scheme: Scheme::Rk4,
        floor_mps: Some(0.0),
    };
}

/// Integrates the deterministic model from point `start` with intensity
/// `v0_mps` for `steps` track intervals. Returns the intensity at each of
/// the `steps + 1` track points, in m/s.
pub fn integrate_deterministic(
    model: &IntensityModel,
    track: &ForcedTrack,
    start: usize,
    v0_mps: f64,
    steps: usize,
    integ: &Integrator,
) -> Result<Vec<f64>> {
    let Integrator {
        dt_hours,
        scheme,
        floor_mps,
    } = *integ;
    if start + steps >= track.len() {
        return Err(Error::InvalidArgument(format!(
            "window {start}+{steps} exceeds track of {} points",
            track.len()
        )));
    }
    let vs = model.scales.v;
    let floor = floor_mps.map(|f| f / vs);
    let mut x = v0_mps / vs;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(v0_mps);
    for i in start..start + steps {
        let len_h = track.hours[i + 1] - track.hours[i];
        let n_sub = ((len_h / dt_hours).round() as usize).max(1);
        let sub_h = len_h / n_sub as f64;
        let h = sub_h / TAU_HOURS;
        for s in 0..n_sub {
            let f = &track.forcings[forcing_index(i, s as f64 * sub_h, len_h)];
            x = match scheme {
                Scheme::Euler => x + h * model.drift_at(f, x * vs),
                Scheme::Rk4 => rk4_step(model, f, x, h),
            };
            if let Some(fl) = floor {
                x = x.max(fl);
            }
        }
        check_finite(x * vs)?;
        out.push(x * vs);
    }
    Ok(out)
}

/// Internal step of the training forecasts: tau / 8.
pub const FORECAST_DT_HOURS: f64 = 0.75;

/// Deterministic fourth-order forecast of the intensity `steps` points after
/// `start`, initialised from the observation at `start`. Used by training,
/// calibration and skill scoring.
pub fn forecast(
    model: &IntensityModel,
    track: &ForcedTrack,
    series: &TrackSeries,
    start: usize,
    steps: usize,
) -> Result<f64> {
    let v0 = series.points[start].v_obs;
    let path = integrate_deterministic(model, track, start, v0, steps, &Integrator::FORECAST)?;
    Ok(*path.last().expect("non-empty path"))
}

/// Simulation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Internal step, hours. Must divide the 6 h cadence.
    pub dt_internal_hours: f64,
    pub stochastic: bool,
    pub seed: u64,
    pub n_members: usize,
    /// Lower clamp on intensity, m/s. `None` leaves the state unbounded.
    pub clamp_floor: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt_internal_hours: 0.75,
            stochastic: true,
            seed: 0,
            n_members: 1,
            clamp_floor: Some(0.0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let n = TAU_HOURS / self.dt_internal_hours;
        if !(self.dt_internal_hours > 0.0 && (n - n.round()).abs() < 1e-9) {
            return Err(Error::InvalidArgument(format!(
                "dt_internal {} h does not divide {TAU_HOURS} h",
                self.dt_internal_hours
            )));
        }
        if self.n_members == 0 {
            return Err(Error::InvalidArgument("n_members must be >= 1".into()));
        }
        Ok(())
    }
}

/// One simulated intensity trajectory, sampled at the track times.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensitySeries {
    pub storm_id: String,
    pub member_id: usize,
    pub times: Vec<DateTime<Utc>>,
    /// m/s
    pub v: Vec<f64>,
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
}

impl IntensitySeries {
    /// Builds a series from observed track intensities.
    pub fn from_observed(series: &TrackSeries) -> Self {
        IntensitySeries {
            storm_id: series.storm_id.clone(),
            member_id: 0,
            times: series.points.iter().map(|p| p.time).collect(),
            v: series.points.iter().map(|p| p.v_obs).collect(),
            lat: series.points.iter().map(|p| p.lat).collect(),
            lon: series.points.iter().map(|p| p.lon).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }
}

/// A member that was abandoned because the state diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberFailure {
    pub member_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub members: Vec<IntensitySeries>,
    pub failures: Vec<MemberFailure>,
}

fn simulate_member(
    model: &IntensityModel,
    track: &ForcedTrack,
    v0: f64,
    config: &SimConfig,
    stream_path: [u64; 3],
) -> Result<Vec<f64>> {
    let vs = model.scales.v;
    let floor = config.clamp_floor.map(|f| f / vs);
    let mut rng = rng::stream(config.seed, &stream_path);
    let mut x = v0 / vs;
    let mut out = Vec::with_capacity(track.len());
    out.push(v0);
    for i in 0..track.len() - 1 {
        let len_h = track.hours[i + 1] - track.hours[i];
        let n_sub = ((len_h / config.dt_internal_hours).round() as usize).max(1);
        let sub_h = len_h / n_sub as f64;
        let h = sub_h / TAU_HOURS;
        let sqrt_h = h.sqrt();
        for s in 0..n_sub {
            let f = &track.forcings[forcing_index(i, s as f64 * sub_h, len_h)];
            let mut next = x + h * model.drift_at(f, x * vs);
            if config.stochastic {
                let xi: f64 = rng.sample(StandardNormal);
                next += model.sigma_nd(x) * sqrt_h * xi;
            }
            x = match floor {
                Some(fl) => next.max(fl),
                None => next,
            };
        }
        check_finite(x * vs)?;
        out.push(x * vs);
    }
    Ok(out)
}

/// Euler-Maruyama ensemble along a track, starting from `v0` (m/s) at the
/// first point. Members run in parallel; member `m` draws from its own
/// stream keyed by `(seed, storm_id, m)`.
pub fn simulate(
    model: &IntensityModel,
    series: &TrackSeries,
    v0: f64,
    config: &SimConfig,
) -> Result<SimulationOutput> {
    config.validate()?;
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("v0 must be >= 0, got {v0}")));
    }
    let track = ForcedTrack::new(series, model)?;
    let storm_hash = rng::label_hash(&series.storm_id);
    let results = par::map_range(config.n_members, |m| {
        simulate_member(
            model,
            &track,
            v0,
            config,
            [rng::DOMAIN_SIM, storm_hash, m as u64],
        )
    });
    let times: Vec<_> = series.points.iter().map(|p| p.time).collect();
    let lat: Vec<_> = series.points.iter().map(|p| p.lat).collect();
    let lon: Vec<_> = series.points.iter().map(|p| p.lon).collect();
    let mut members = Vec::new();
    let mut failures = Vec::new();
    for (m, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => members.push(IntensitySeries {
                storm_id: series.storm_id.clone(),
                member_id: m,
                times: times.clone(),
                v,
                lat: lat.clone(),
                lon: lon.clone(),
            }),
            Err(e) => {
                log::warn!("storm {} member {m} abandoned: {e}", series.storm_id);
                failures.push(MemberFailure {
                    member_id: m,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(SimulationOutput { members, failures })
}

/// Per-time ensemble statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBands {
    pub times: Vec<DateTime<Utc>>,
    pub levels: Vec<f64>,
    /// `quantiles[l][t]` is the level-`l` quantile at time `t`.
    pub quantiles: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl QuantileBands {
    pub fn lower_2sigma(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.std).map(|(m, s)| m - 2.0 * s).collect()
    }

    pub fn upper_2sigma(&self) -> Vec<f64> {
        self.mean.iter().zip(&self.std).map(|(m, s)| m + 2.0 * s).collect()
    }

    /// Fraction of `values` lying inside the mean +/- 2 std band.
    pub fn containment_2sigma(&self, values: &[f64]) -> f64 {
        let n = values.len().min(self.mean.len());
        if n == 0 {
            return 0.0;
        }
        let inside = (0..n)
            .filter(|&t| (values[t] - self.mean[t]).abs() <= 2.0 * self.std[t])
            .count();
        inside as f64 / n as f64
    }
}

/// Linear-interpolation quantile of sorted data (the "type 7" estimator).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Empirical quantiles and mean/std across members at each time.
pub fn ensemble_quantiles(members: &[IntensitySeries], levels: &[f64]) -> Result<QuantileBands> {
    if members.len() < 2 {
        return Err(Error::InvalidArgument(
            "ensemble_quantiles needs at least 2 members".into(),
        ));
    }
    let times = members[0].times.clone();
    for m in members {
        if m.times != times || m.v.len() != times.len() {
            return Err(Error::InvalidArgument(format!(
                "member {} of storm {} is not aligned with member 0",
                m.member_id, m.storm_id
            )));
        }
    }
    let n = members.len() as f64;
    let mut quantiles = vec![Vec::with_capacity(times.len()); levels.len()];
    let mut mean = Vec::with_capacity(times.len());
    let mut std = Vec::with_capacity(times.len());
    let mut col = Vec::with_capacity(members.len());
    for t in 0..times.len() {
        col.clear();
        col.extend(members.iter().map(|m| m.v[t]));
        let mu = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
        mean.push(mu);
        std.push(var.sqrt());
        col.sort_by(f64::total_cmp);
        for (l, &q) in levels.iter().enumerate() {
            quantiles[l].push(quantile_sorted(&col, q));
        }
    }
    Ok(QuantileBands {
        times,
        levels: levels.to_vec(),
        quantiles,
        mean,
        std,
    })
}

/// A 24 h window with at least 18 m/s of intensification.
#[derive(Debug, Clone, PartialEq)]
pub struct RiWindow {
    pub start_index: usize,
    pub start_time: DateTime<Utc>,
    pub gain_mps: f64,
}

/// All 24 h windows (at the series' cadence) whose gain reaches the rapid
/// intensification threshold. The threshold is inclusive.
pub fn detect_rapid_intensification(series: &IntensitySeries) -> Vec<RiWindow> {
    let window = TimeDelta::hours(RI_WINDOW_HOURS);
    let mut out = Vec::new();
    for i in 0..series.times.len() {
        let target = series.times[i] + window;
        if let Ok(j) = series.times.binary_search(&target) {
            let gain = series.v[j] - series.v[i];
            if gain >= RI_THRESHOLD_MPS - 1e-9 {
                out.push(RiWindow {
                    start_index: i,
                    start_time: series.times[i],
                    gain_mps: gain,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{full_basis, Monomial, MonomialBasis};
    use crate::model::builtin_paper_model;
    use crate::test_support::constant_track;
    use crate::track::TrackPoint;

    fn series_of(v: &[f64]) -> IntensitySeries {
        let t0 = TrackPoint::example().time;
        IntensitySeries {
            storm_id: "S".into(),
            member_id: 0,
            times: (0..v.len()).map(|i| t0 + TimeDelta::hours(6 * i as i64)).collect(),
            v: v.to_vec(),
            lat: vec![0.0; v.len()],
            lon: vec![0.0; v.len()],
        }
    }

    #[test]
    fn zero_drift_keeps_intensity() {
        let basis = full_basis(1);
        let m = IntensityModel::new(basis, vec![0.0; 6]).unwrap();
        let track = constant_track(10, 70.0, 1.0, 5.0, 50.0);
        let cfg = SimConfig {
            stochastic: false,
            ..Default::default()
        };
        let out = simulate(&m, &track, 33.0, &cfg).unwrap();
        assert!(out.members[0].v.iter().all(|&v| v == 33.0));
    }

    #[test]
    fn stochastic_runs_are_reproducible() {
        let m = builtin_paper_model();
        let track = constant_track(30, 72.0, 1.0, 3.0, 100.0);
        let cfg = SimConfig {
            seed: 11,
            n_members: 8,
            ..Default::default()
        };
        let a = simulate(&m, &track, 20.0, &cfg).unwrap();
        let b = simulate(&m, &track, 20.0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.members[0].v, a.members[1].v);
    }

    #[test]
    fn zero_sigma_stochastic_equals_deterministic() {
        let m = builtin_paper_model().with_sigma(0.0, 0.0);
        let track = constant_track(20, 72.0, 1.0, 3.0, 100.0);
        let det = SimConfig {
            stochastic: false,
            ..Default::default()
        };
        let sto = SimConfig {
            stochastic: true,
            seed: 5,
            ..Default::default()
        };
        let a = simulate(&m, &track, 20.0, &det).unwrap();
        let b = simulate(&m, &track, 20.0, &sto).unwrap();
        assert_eq!(a.members[0].v, b.members[0].v);
    }

    #[test]
    fn euler_and_rk4_paths_agree_with_fine_steps() {
        let m = builtin_paper_model();
        let series = constant_track(12, 72.0, 1.0, 3.0, 100.0);
        let track = ForcedTrack::new(&series, &m).unwrap();
        let a = integrate_deterministic(&m, &track, 0, 30.0, 11, &Integrator::FORECAST).unwrap();
        let b = integrate_deterministic(
            &m,
            &track,
            0,
            30.0,
            11,
            &Integrator {
                dt_hours: 0.01,
                scheme: Scheme::Euler,
                floor_mps: Some(0.0),
            },
        )
        .unwrap();
        assert!((a[11] - b[11]).abs() < 0.05, "{} vs {}", a[11], b[11]);
    }

    #[test]
    fn diffusion_variance_matches_wiener_scaling() {
        // Zero drift, constant sigma' = 0.02: endpoint variance = sigma^2 n h.
        let basis = MonomialBasis::new(vec![Monomial::CONSTANT], 0).unwrap();
        let m = IntensityModel::new(basis, vec![0.0]).unwrap().with_sigma(0.0, 0.02);
        let track = constant_track(9, 70.0, 1.0, 5.0, 50.0);
        let cfg = SimConfig {
            seed: 3,
            n_members: 4000,
            clamp_floor: None,
            ..Default::default()
        };
        let out = simulate(&m, &track, 30.0, &cfg).unwrap();
        let ends: Vec<f64> = out.members.iter().map(|s| s.v[8] / 50.0).collect();
        let mu = ends.iter().sum::<f64>() / ends.len() as f64;
        let var = ends.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (ends.len() - 1) as f64;
        // 8 tau of integration
        let expect = 0.02f64.powi(2) * 8.0;
        assert!((var / expect - 1.0).abs() < 0.1, "var {var} expect {expect}");
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = SimConfig {
            dt_internal_hours: 0.7,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            n_members: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn quantile_examples() {
        let a = series_of(&[10.0, 20.0, 30.0]);
        let bands = ensemble_quantiles(&[a.clone(), a.clone()], &[0.05, 0.5, 0.95]).unwrap();
        assert!(bands.std.iter().all(|&s| s == 0.0));
        assert_eq!(bands.quantiles[0], bands.quantiles[2]);

        let members: Vec<_> = (1..=100)
            .map(|k| {
                let mut s = series_of(&[k as f64; 4]);
                s.member_id = k;
                s
            })
            .collect();
        let bands = ensemble_quantiles(&members, &[0.5]).unwrap();
        assert!(bands.quantiles[0].iter().all(|&q| (q - 50.5).abs() < 1e-12));

        let mut bad = series_of(&[1.0, 2.0]);
        bad.times[1] += TimeDelta::hours(1);
        assert!(ensemble_quantiles(&[series_of(&[1.0, 2.0]), bad], &[0.5]).is_err());
        assert!(ensemble_quantiles(&[series_of(&[1.0, 2.0])], &[0.5]).is_err());
    }

    #[test]
    fn rapid_intensification_cases() {
        let rising = series_of(&[20.0, 25.0, 30.0, 35.0, 40.0]);
        let ri = detect_rapid_intensification(&rising);
        assert_eq!(ri.len(), 1);
        assert_eq!(ri[0].start_index, 0);
        assert!(detect_rapid_intensification(&series_of(&[50.0, 45.0, 40.0, 35.0, 30.0])).is_empty());
        let exact = series_of(&[20.0, 24.0, 28.0, 33.0, 38.0]);
        assert_eq!(detect_rapid_intensification(&exact).len(), 1);
        let short = series_of(&[20.0, 40.0, 60.0]);
        assert!(detect_rapid_intensification(&short).is_empty());
    }
}
