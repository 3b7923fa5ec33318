//! Ensemble Kalman fine-tuning of model coefficients against observed
//! intensities over growing forecast horizons.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::par;
use crate::rng::{self, DOMAIN_ENKF_INIT, DOMAIN_ENKF_PERTURB, DOMAIN_ENKF_SHUFFLE};
use crate::simulate::{integrate_deterministic, ForcedTrack, Integrator, BLOWUP_MPS};
use crate::synthetic::INTENSITY_QUANTUM_MPS;
use crate::track::{TrackSeries, CADENCE_HOURS};

/// Coefficient ensemble, one member per row.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub members: DMatrix<f64>,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
}

impl EnsembleState {
    pub fn size(&self) -> usize {
        self.members.nrows()
    }

    pub fn dim(&self) -> usize {
        self.members.ncols()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.members.row_mean().transpose()
    }

    /// Per-coordinate sample standard deviation.
    pub fn spread(&self) -> DVector<f64> {
        let e = self.size() as f64;
        let m = self.mean();
        DVector::from_fn(self.dim(), |j, _| {
            let ss: f64 = self.members.column(j).iter().map(|x| (x - m[j]).powi(2)).sum();
            (ss / (e - 1.0)).sqrt()
        })
    }
}

/// Default prior spread: 10% of each coefficient's magnitude, at least 1e-3.
pub fn default_spread(coefficients: &[f64]) -> Vec<f64> {
    coefficients.iter().map(|c| (0.1 * c.abs()).max(1e-3)).collect()
}

/// Draws `ensemble_size` members from a Gaussian with the given mean and
/// per-coordinate standard deviation.
pub fn init_ensemble(
    initial: &[f64],
    spread_std: &[f64],
    ensemble_size: usize,
    seed: u64,
) -> Result<EnsembleState> {
    if ensemble_size < 2 {
        return Err(Error::InvalidArgument("ensemble size must be at least 2".into()));
    }
    if spread_std.len() != initial.len() {
        return Err(Error::InvalidArgument(format!(
            "{} spreads for {} coefficients",
            spread_std.len(),
            initial.len()
        )));
    }
    if spread_std.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(Error::InvalidArgument("prior spread must be finite and non-negative".into()));
    }
    let k = initial.len();
    let mut g = rng::stream(seed, &[DOMAIN_ENKF_INIT]);
    let mut members = DMatrix::zeros(ensemble_size, k);
    for i in 0..ensemble_size {
        for j in 0..k {
            let z: f64 = g.sample(StandardNormal);
            members[(i, j)] = initial[j] + spread_std[j] * z;
        }
    }
    Ok(EnsembleState {
        members,
        prior_mean: DVector::from_column_slice(initial),
        prior_cov: DMatrix::from_diagonal(&DVector::from_iterator(
            k,
            spread_std.iter().map(|s| s * s),
        )),
    })
}

/// A forecast window: storm index and start point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub storm: usize,
    pub start: usize,
}

/// Per-storm data shared by all members.
pub struct TrainingData<'a> {
    tracks: &'a [TrackSeries],
    forced: Vec<ForcedTrack>,
}

impl<'a> TrainingData<'a> {
    pub fn new(tracks: &'a [TrackSeries], model: &IntensityModel) -> Result<Self> {
        let forced = tracks
            .iter()
            .map(|t| ForcedTrack::new(t, model))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingData { tracks, forced })
    }

    /// All windows of `steps` intervals that stay inside a storm without
    /// crossing a gap, in storm then start order.
    pub fn windows(&self, steps: usize) -> Vec<Window> {
        let mut out = Vec::new();
        for (s, t) in self.tracks.iter().enumerate() {
            for start in 0..t.len() {
                if start + steps < t.len() && t.window_is_contiguous(start, steps) {
                    out.push(Window { storm: s, start });
                }
            }
        }
        out
    }

    pub fn observed_end(&self, w: &Window, steps: usize) -> f64 {
        self.tracks[w.storm].points[w.start + steps].v_obs
    }
}

/// Deterministic forecasts of every member over every window, `E x B`, m/s.
/// A member that diverges predicts the blow-up cap for that window.
pub fn forecast_ensemble(
    ensemble: &EnsembleState,
    template: &IntensityModel,
    data: &TrainingData<'_>,
    batch: &[Window],
    steps: usize,
) -> Result<DMatrix<f64>> {
    for w in batch {
        let t = &data.tracks[w.storm];
        if w.start + steps >= t.len() || !t.window_is_contiguous(w.start, steps) {
            return Err(Error::InvalidArgument(format!(
                "window {}+{steps} invalid in storm {}",
                w.start, t.storm_id
            )));
        }
    }
    let rows = par::map_range(ensemble.size(), |i| -> Result<Vec<f64>> {
        let coefs: Vec<f64> = ensemble.members.row(i).iter().copied().collect();
        let m = template.with_coefficients(coefs)?;
        Ok(batch
            .iter()
            .map(|w| {
                let v0 = data.tracks[w.storm].points[w.start].v_obs;
                match integrate_deterministic(&m, &data.forced[w.storm], w.start, v0, steps, &Integrator::FORECAST) {
                    Ok(p) => p[steps],
                    Err(_) => BLOWUP_MPS,
                }
            })
            .collect())
    });
    let mut y = DMatrix::zeros(ensemble.size(), batch.len());
    for (i, r) in rows.into_iter().enumerate() {
        for (b, v) in r?.into_iter().enumerate() {
            y[(i, b)] = v;
        }
    }
    Ok(y)
}

/// Perturbed-observation ensemble Kalman update. Member `i` is moved by
/// `K (y_obs + nu_i - Y_i)` with `nu_i ~ N(0, noise_std^2 I)`.
pub fn kalman_update(
    ensemble: &EnsembleState,
    predictions: &DMatrix<f64>,
    y_obs: &[f64],
    noise_std: f64,
    seed: u64,
) -> Result<EnsembleState> {
    let e = ensemble.size();
    let b = y_obs.len();
    if predictions.nrows() != e || predictions.ncols() != b {
        return Err(Error::InvalidArgument(format!(
            "predictions {}x{} do not match ensemble {e} and {b} observations",
            predictions.nrows(),
            predictions.ncols()
        )));
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidArgument("observation noise must be finite and >= 0".into()));
    }
    let scale = 1.0 / (e as f64 - 1.0);
    let beta_mean = ensemble.members.row_mean();
    let y_mean = predictions.row_mean();
    let mut ba = ensemble.members.clone();
    for mut r in ba.row_iter_mut() {
        r -= &beta_mean;
    }
    let mut ya = predictions.clone();
    for mut r in ya.row_iter_mut() {
        r -= &y_mean;
    }
    let c_by = ba.transpose() * &ya * scale;
    let mut c_yy = ya.transpose() * &ya * scale;
    for j in 0..b {
        c_yy[(j, j)] += noise_std * noise_std;
    }
    let chol = c_yy
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is singular".into()))?;
    // innovations, one column per member
    let mut d = DMatrix::zeros(b, e);
    for i in 0..e {
        let mut g = rng::stream(seed, &[DOMAIN_ENKF_PERTURB, i as u64]);
        for j in 0..b {
            let nu: f64 = if noise_std > 0.0 {
                noise_std * g.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            d[(j, i)] = y_obs[j] + nu - predictions[(i, j)];
        }
    }
    let shift = c_by * chol.solve(&d);
    Ok(EnsembleState {
        members: &ensemble.members + shift.transpose(),
        prior_mean: ensemble.prior_mean.clone(),
        prior_cov: ensemble.prior_cov.clone(),
    })
}

/// Horizons, batching and observation noise for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    /// One epoch per horizon, hours.
    pub horizons_hours: Vec<u32>,
    pub batch_size: usize,
    /// Observation noise standard deviation, m/s.
    pub obs_noise_std: f64,
    pub ensemble_size: usize,
    /// Prior standard deviation per coefficient; `None` uses
    /// [`default_spread`].
    pub spread_std: Option<Vec<f64>>,
}

impl TrainingSchedule {
    /// 6 h, then 12 h to 72 h in 6 h steps; batches of 16; 100 members;
    /// noise equal to the intensity quantum.
    pub fn standard() -> Self {
        TrainingSchedule {
            horizons_hours: (1..=12).map(|i| 6 * i).collect(),
            batch_size: 16,
            obs_noise_std: INTENSITY_QUANTUM_MPS,
            ensemble_size: 100,
            spread_std: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = CADENCE_HOURS as u32;
        if self.horizons_hours.is_empty() {
            return Err(Error::InvalidArgument("schedule has no horizons".into()));
        }
        if self.horizons_hours.iter().any(|&h| h == 0 || h % c != 0) {
            return Err(Error::InvalidArgument(format!(
                "horizons must be positive multiples of {c} h"
            )));
        }
        if self.horizons_hours.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("horizons must increase".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.ensemble_size < 2 {
            return Err(Error::InvalidArgument("ensemble size must be at least 2".into()));
        }
        if !(self.obs_noise_std >= 0.0) || !self.obs_noise_std.is_finite() {
            return Err(Error::InvalidArgument("observation noise must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Summary of one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub horizon_hours: u32,
    pub batches: usize,
    /// Root-mean-square difference between observations and the ensemble
    /// mean prediction, before each update, m/s.
    pub rms_innovation: f64,
    /// Mean coefficient standard deviation after the epoch.
    pub spread: f64,
}

impl EpochLog {
    pub const CSV_HEADER: &'static str = "horizon_h,batches,rms_innovation,spread";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{}",
            self.horizon_hours, self.batches, self.rms_innovation, self.spread
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    /// Ensemble-mean coefficients with the diffusion left at zero.
    pub model: IntensityModel,
    pub ensemble: EnsembleState,
    pub log: Vec<EpochLog>,
}

/// Runs one epoch per horizon, updating the ensemble after every batch of
/// windows. Batches are visited in a seeded random order.
pub fn train(
    tracks: &[TrackSeries],
    initial: &IntensityModel,
    schedule: &TrainingSchedule,
    seed: u64,
) -> Result<TrainingOutcome> {
    schedule.validate()?;
    if tracks.is_empty() {
        return Err(Error::InvalidArgument("no tracks to train on".into()));
    }
    let init = initial.coefficients();
    let spread = match &schedule.spread_std {
        Some(s) => s.clone(),
        None => default_spread(init),
    };
    let mut ens = init_ensemble(init, &spread, schedule.ensemble_size, seed)?;
    let data = TrainingData::new(tracks, initial)?;
    let mut log = Vec::with_capacity(schedule.horizons_hours.len());
    for (epoch, &hours) in schedule.horizons_hours.iter().enumerate() {
        let steps = (hours / CADENCE_HOURS as u32) as usize;
        let mut windows = data.windows(steps);
        if windows.is_empty() {
            return Err(Error::Validation(format!("no valid windows at horizon {hours} h")));
        }
        windows.shuffle(&mut rng::stream(seed, &[DOMAIN_ENKF_SHUFFLE, epoch as u64]));
        let mut sq = 0.0;
        let mut batches = 0;
        for (bi, batch) in windows.chunks(schedule.batch_size).enumerate() {
            let y = forecast_ensemble(&ens, initial, &data, batch, steps)?;
            let obs: Vec<f64> = batch.iter().map(|w| data.observed_end(w, steps)).collect();
            let ym = y.row_mean();
            sq += obs.iter().zip(ym.iter()).map(|(o, p)| (o - p).powi(2)).sum::<f64>();
            let s = rng::derive_seed(seed, &[epoch as u64, bi as u64]);
            ens = kalman_update(&ens, &y, &obs, schedule.obs_noise_std, s)?;
            batches += 1;
        }
        let entry = EpochLog {
            horizon_hours: hours,
            batches,
            rms_innovation: (sq / windows.len() as f64).sqrt(),
            spread: ens.spread().mean(),
        };
        log::info!("epoch {}: {}", epoch + 1, entry.csv_line());
        log.push(entry);
    }
    let mean: Vec<f64> = ens.mean().iter().copied().collect();
    let model = initial.with_coefficients(mean)?.with_sigma(0.0, 0.0);
    Ok(TrainingOutcome {
        model,
        ensemble: ens,
        log,
    })
}
