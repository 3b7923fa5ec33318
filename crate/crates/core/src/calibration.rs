//! Fitting the state-dependent noise amplitude from deterministic forecast
//! residuals.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::par;
use crate::rng::{self, DOMAIN_BOOTSTRAP};
use crate::simulate::{forecast, ForcedTrack};
use crate::track::{TrackSeries, CADENCE_HOURS};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// Observed minus predicted intensity for one window, m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub v_initial: f64,
    pub residual: f64,
}

/// Residuals of deterministic forecasts over every contiguous window of
/// `horizon_hours`, initialised from the observation at the window start.
pub fn compute_residuals(
    model: &IntensityModel,
    tracks: &[TrackSeries],
    horizon_hours: u32,
) -> Result<Vec<Residual>> {
    let c = CADENCE_HOURS as u32;
    if horizon_hours == 0 || !horizon_hours.is_multiple_of(c) {
        return Err(Error::InvalidArgument(format!(
            "horizon must be a positive multiple of {c} h"
        )));
    }
    let steps = (horizon_hours / c) as usize;
    let per = par::map_slice(tracks, |t| -> Result<Vec<Residual>> {
        let ft = ForcedTrack::new(t, model)?;
        let mut out = Vec::new();
        for s in 0..t.len() {
            if s + steps < t.len() && t.window_is_contiguous(s, steps) {
                let pred = forecast(model, &ft, t, s, steps)?;
                out.push(Residual {
                    v_initial: t.points[s].v_obs,
                    residual: t.points[s + steps].v_obs - pred,
                });
            }
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for r in per {
        all.extend(r?);
    }
    Ok(all)
}

/// Residual statistics of one equal-count intensity bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBin {
    /// Smallest intensity in the bin, m/s.
    pub v_low: f64,
    /// Smallest intensity of the next bin (largest of this one for the
    /// last bin), m/s.
    pub v_high: f64,
    /// Median intensity of the bin, m/s.
    pub v_center: f64,
    pub count: usize,
    pub mean_residual: f64,
    pub std_residual: f64,
    pub mean_se: f64,
    pub std_se: f64,
}

fn mean_std(x: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = x.clone().count() as f64;
    let m = x.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (m, 0.0);
    }
    let v = x.map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn median_sorted(x: &[f64]) -> f64 {
    let n = x.len();
    if n % 2 == 1 {
        x[n / 2]
    } else {
        0.5 * (x[n / 2 - 1] + x[n / 2])
    }
}

/// Splits residuals into `n_bins` bins of equal count (within one) by
/// initial intensity, with bootstrap standard errors of each bin's mean and
/// standard deviation.
pub fn bin_equal_count(
    samples: &[Residual],
    n_bins: usize,
    resamples: usize,
    seed: u64,
) -> Result<Vec<ResidualBin>> {
    if n_bins < 1 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    if samples.len() < n_bins {
        return Err(Error::InvalidArgument(format!(
            "{} samples for {n_bins} bins",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.v_initial.is_finite() || !s.residual.is_finite()) {
        return Err(Error::InvalidArgument("non-finite residual sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.v_initial.total_cmp(&b.v_initial));
    let mut distinct = sorted.iter().map(|s| s.v_initial).collect::<Vec<_>>();
    distinct.dedup();
    if distinct.len() < n_bins {
        return Err(Error::InvalidArgument(format!(
            "{} distinct intensities cannot form {n_bins} bins",
            distinct.len()
        )));
    }
    let n = sorted.len();
    let bounds: Vec<usize> = (0..=n_bins).map(|i| i * n / n_bins).collect();
    let bins = par::map_range(n_bins, |b| {
        let part = &sorted[bounds[b]..bounds[b + 1]];
        let vs: Vec<f64> = part.iter().map(|s| s.v_initial).collect();
        let rs: Vec<f64> = part.iter().map(|s| s.residual).collect();
        let (mean, std) = mean_std(rs.iter().copied());
        let boots: Vec<(f64, f64)> = (0..resamples)
            .map(|r| {
                let mut g = rng::stream(seed, &[DOMAIN_BOOTSTRAP, b as u64, r as u64]);
                let draw: Vec<f64> = (0..rs.len()).map(|_| rs[g.random_range(0..rs.len())]).collect();
                mean_std(draw.into_iter())
            })
            .collect();
        let (mean_se, std_se) = if resamples >= 2 {
            (
                mean_std(boots.iter().map(|b| b.0)).1,
                mean_std(boots.iter().map(|b| b.1)).1,
            )
        } else {
            (0.0, 0.0)
        };
        let v_high = if b + 1 < n_bins {
            sorted[bounds[b + 1]].v_initial
        } else {
            *vs.last().expect("non-empty bin")
        };
        ResidualBin {
            v_low: vs[0],
            v_high,
            v_center: median_sorted(&vs),
            count: part.len(),
            mean_residual: mean,
            std_residual: std,
            mean_se,
            std_se,
        }
    });
    Ok(bins)
}

/// Fitted line `sigma(v) = slope * v + intercept`, in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaFit {
    pub slope: f64,
    pub intercept_mps: f64,
    /// False when the fit fell back to equal weights.
    pub weighted: bool,
}

impl SigmaFit {
    /// Stores the line on the model in nondimensional form.
    pub fn apply(&self, model: &IntensityModel) -> IntensityModel {
        let vs = model.scales.v;
        model.clone().with_sigma(self.slope, self.intercept_mps / vs)
    }
}

/// Weighted least squares of bin standard deviation on bin center, with
/// weights `1 / std_se^2`. Falls back to equal weights when any standard
/// error is zero.
pub fn fit_sigma(bins: &[ResidualBin]) -> Result<SigmaFit> {
    if bins.len() < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    let weighted = bins.iter().all(|b| b.std_se > 0.0 && b.std_se.is_finite());
    if !weighted {
        log::warn!("zero standard error in a bin; fitting sigma without weights");
    }
    let w: Vec<f64> = bins
        .iter()
        .map(|b| if weighted { 1.0 / (b.std_se * b.std_se) } else { 1.0 })
        .collect();
    let sw: f64 = w.iter().sum();
    let mx = bins.iter().zip(&w).map(|(b, w)| w * b.v_center).sum::<f64>() / sw;
    let my = bins.iter().zip(&w).map(|(b, w)| w * b.std_residual).sum::<f64>() / sw;
    let sxx: f64 = bins.iter().zip(&w).map(|(b, w)| w * (b.v_center - mx).powi(2)).sum();
    let sxy: f64 = bins
        .iter()
        .zip(&w)
        .map(|(b, w)| w * (b.v_center - mx) * (b.std_residual - my))
        .sum();
    if sxx <= 0.0 {
        return Err(Error::Numerical("bin centers are identical".into()));
    }
    let slope = sxy / sxx;
    Ok(SigmaFit {
        slope,
        intercept_mps: my - slope * mx,
        weighted,
    })
}

/// Bin mean residual with a flag for a mean more than two standard errors
/// from zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasEntry {
    pub v_low: f64,
    pub v_high: f64,
    pub mean: f64,
    pub se: f64,
    pub significant: bool,
}

pub fn bias_report(bins: &[ResidualBin]) -> Vec<BiasEntry> {
    bins.iter()
        .map(|b| BiasEntry {
            v_low: b.v_low,
            v_high: b.v_high,
            mean: b.mean_residual,
            se: b.mean_se,
            significant: b.mean_residual.abs() > 2.0 * b.mean_se,
        })
        .collect()
}

/// Bins, bias flags and the fitted line as comma-delimited text.
pub fn report_csv(bins: &[ResidualBin], fit: &SigmaFit) -> String {
    let mut s = String::from(
        "v_low,v_high,v_center,count,mean_residual,std_residual,mean_se,std_se,biased\n",
    );
    for (b, f) in bins.iter().zip(bias_report(bins)) {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            b.v_low,
            b.v_high,
            b.v_center,
            b.count,
            b.mean_residual,
            b.std_residual,
            b.mean_se,
            b.std_se,
            f.significant
        ));
    }
    s.push_str(&format!(
        "# sigma(v) = {} * v + {} m/s (weighted: {})\n",
        fit.slope, fit.intercept_mps, fit.weighted
    ));
    s
}
