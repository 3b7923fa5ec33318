//! Hazard statistics from collections of intensity series: power
//! dissipation, lifetime maxima, return periods and local intensity
//! distributions.

use std::collections::BTreeMap;

use rand::seq::index::sample;

use crate::density::Kde1d;
use crate::error::{Error, Result};
use crate::model::IntensityModel;
use crate::par;
use crate::rng::{self, DOMAIN_SUBSAMPLE};
use crate::simulate::{forecast, quantile_sorted, ForcedTrack, IntensitySeries};
use crate::track::TrackSeries;

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const DEFAULT_RADIUS_KM: f64 = 150.0;
pub const DEFAULT_SUBSAMPLE_DRAWS: usize = 1000;

fn interval_seconds(s: &IntensitySeries, i: usize) -> f64 {
    (s.times[i + 1] - s.times[i]).as_seconds_f64()
}

/// Power dissipation index, m^3 s^-2: each interval contributes the cube
/// of its starting intensity times its length.
pub fn pdi(series: &IntensitySeries) -> f64 {
    (0..series.len().saturating_sub(1))
        .map(|i| series.v[i].powi(3) * interval_seconds(series, i))
        .sum()
}

/// Grid cell `(floor(lat / d), floor(lon / d))`.
pub fn cell_of(lat: f64, lon: f64, cell_deg: f64) -> (i64, i64) {
    ((lat / cell_deg).floor() as i64, (lon / cell_deg).floor() as i64)
}

/// Annual-mean PDI per grid cell. Each interval's contribution goes to the
/// cell of its starting position.
pub fn gridded_pdi_climatology(
    set: &[IntensitySeries],
    cell_deg: f64,
    years: f64,
) -> Result<BTreeMap<(i64, i64), f64>> {
    if !(cell_deg > 0.0) || !(years > 0.0) {
        return Err(Error::InvalidArgument("cell size and years must be positive".into()));
    }
    let parts = par::map_slice(set, |s| {
        let mut m = BTreeMap::new();
        for i in 0..s.len().saturating_sub(1) {
            *m.entry(cell_of(s.lat[i], s.lon[i], cell_deg)).or_insert(0.0) +=
                s.v[i].powi(3) * interval_seconds(s, i);
        }
        m
    });
    let mut out = BTreeMap::new();
    for m in parts {
        for (k, v) in m {
            *out.entry(k).or_insert(0.0) += v / years;
        }
    }
    Ok(out)
}

/// Lifetime maximum intensity.
pub fn lmi(series: &IntensitySeries) -> f64 {
    series.v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Histogram of lifetime maxima with 2.5-97.5% bands from repeated
/// subsampling without replacement.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiDistribution {
    pub edges: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

fn hist_density(values: &[f64], edges: &[f64]) -> Vec<f64> {
    let nb = edges.len() - 1;
    let mut c = vec![0.0; nb];
    for &v in values {
        if v < edges[0] || v > edges[nb] {
            continue;
        }
        let i = edges.partition_point(|&e| e <= v).saturating_sub(1).min(nb - 1);
        c[i] += 1.0;
    }
    let n = values.len() as f64;
    c.iter()
        .enumerate()
        .map(|(i, x)| x / (n * (edges[i + 1] - edges[i])))
        .collect()
}

pub fn lmi_distribution(
    lmis: &[f64],
    edges: &[f64],
    subsample_to: Option<usize>,
    draws: usize,
    seed: u64,
) -> Result<LmiDistribution> {
    if lmis.is_empty() {
        return Err(Error::InvalidArgument("no lifetime maxima".into()));
    }
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("bin edges must increase".into()));
    }
    let density = hist_density(lmis, edges);
    let (lower, upper) = match subsample_to {
        Some(m) if m > 0 && m <= lmis.len() && draws > 0 => {
            let hs = par::map_range(draws, |d| {
                let mut g = rng::stream(seed, &[DOMAIN_SUBSAMPLE, d as u64]);
                let pick: Vec<f64> = sample(&mut g, lmis.len(), m).iter().map(|i| lmis[i]).collect();
                hist_density(&pick, edges)
            });
            let nb = edges.len() - 1;
            let mut lo = vec![0.0; nb];
            let mut hi = vec![0.0; nb];
            for b in 0..nb {
                let mut col: Vec<f64> = hs.iter().map(|h| h[b]).collect();
                col.sort_by(f64::total_cmp);
                lo[b] = quantile_sorted(&col, 0.025);
                hi[b] = quantile_sorted(&col, 0.975);
            }
            (lo, hi)
        }
        Some(m) if m == 0 || m > lmis.len() => {
            return Err(Error::InvalidArgument(format!(
                "cannot subsample {m} of {} maxima",
                lmis.len()
            )))
        }
        _ => (density.clone(), density.clone()),
    };
    Ok(LmiDistribution {
        edges: edges.to_vec(),
        density,
        lower,
        upper,
    })
}

/// Weibull plotting-position return periods. Rows are `(intensity, years)`
/// with the strongest storm first.
pub fn return_periods(maxima: &[f64], years: f64) -> Result<Vec<(f64, f64)>> {
    if maxima.is_empty() || !(years > 0.0) {
        return Err(Error::InvalidArgument("need maxima and a positive record length".into()));
    }
    let mut v = maxima.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    let n = v.len() as f64;
    Ok(v.into_iter()
        .enumerate()
        .map(|(i, x)| {
            let p = (i as f64 + 1.0) / (n + 1.0) * (n / years);
            (x, 1.0 / p)
        })
        .collect())
}

/// Great-circle distance in km.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Site of interest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub lat: f64,
    pub lon: f64,
    pub radius_km: f64,
}

impl Site {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        haversine_km(self.lat, self.lon, lat, lon) <= self.radius_km
    }
}

/// All intensities recorded within the site radius, with a density estimate
/// when at least two distinct values are present.
#[derive(Debug, Clone)]
pub struct LandfallDistribution {
    pub samples: Vec<f64>,
    pub kde: Option<Kde1d>,
}

pub fn landfall_distribution(set: &[IntensitySeries], site: &Site) -> LandfallDistribution {
    let samples: Vec<f64> = set
        .iter()
        .flat_map(|s| {
            (0..s.len())
                .filter(|&i| site.contains(s.lat[i], s.lon[i]))
                .map(|i| s.v[i])
        })
        .collect();
    let kde = Kde1d::new(&samples, None).ok();
    LandfallDistribution { samples, kde }
}

/// Maximum intensity of each series while inside the site radius.
pub fn site_maxima(set: &[IntensitySeries], site: &Site) -> Vec<f64> {
    set.iter()
        .filter_map(|s| {
            (0..s.len())
                .filter(|&i| site.contains(s.lat[i], s.lon[i]))
                .map(|i| s.v[i])
                .reduce(f64::max)
        })
        .collect()
}

/// Hazard statistics for one site.
#[derive(Debug, Clone)]
pub struct HazardSummary {
    pub site: Site,
    /// Annual PDI accumulated inside the radius.
    pub pdi_per_year: f64,
    pub lmi_samples: Vec<f64>,
    pub landfall_samples: Vec<f64>,
    pub exceedance: Vec<(f64, f64)>,
}

impl HazardSummary {
    pub fn is_empty(&self) -> bool {
        self.landfall_samples.is_empty()
    }
}

pub fn summarize_site(set: &[IntensitySeries], site: &Site, years: f64) -> Result<HazardSummary> {
    if !(years > 0.0) {
        return Err(Error::InvalidArgument("years must be positive".into()));
    }
    let pdi_total: f64 = set
        .iter()
        .map(|s| {
            (0..s.len().saturating_sub(1))
                .filter(|&i| site.contains(s.lat[i], s.lon[i]))
                .map(|i| s.v[i].powi(3) * interval_seconds(s, i))
                .sum::<f64>()
        })
        .sum();
    let maxima = site_maxima(set, site);
    let exceedance = if maxima.is_empty() {
        Vec::new()
    } else {
        return_periods(&maxima, years)?
    };
    Ok(HazardSummary {
        site: *site,
        pdi_per_year: pdi_total / years,
        lmi_samples: set.iter().filter(|s| !s.is_empty()).map(lmi).collect(),
        landfall_samples: landfall_distribution(set, site).samples,
        exceedance,
    })
}

/// Predicted and observed intensity at the end of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastPair {
    pub storm_id: String,
    pub start: usize,
    pub predicted: f64,
    pub observed: f64,
}

fn windows(t: &TrackSeries, steps: usize) -> impl Iterator<Item = usize> + '_ {
    (0..t.len()).filter(move |&s| s + steps < t.len() && t.window_is_contiguous(s, steps))
}

/// Forecasts that hold the starting intensity.
pub fn persistence_baseline(tracks: &[TrackSeries], steps: usize) -> Vec<ForecastPair> {
    tracks
        .iter()
        .flat_map(|t| {
            windows(t, steps).map(move |s| ForecastPair {
                storm_id: t.storm_id.clone(),
                start: s,
                predicted: t.points[s].v_obs,
                observed: t.points[s + steps].v_obs,
            })
        })
        .collect()
}

/// Deterministic model forecasts over the same windows as
/// [`persistence_baseline`].
pub fn model_forecasts(
    model: &IntensityModel,
    tracks: &[TrackSeries],
    steps: usize,
) -> Result<Vec<ForecastPair>> {
    let per = par::map_slice(tracks, |t| -> Result<Vec<ForecastPair>> {
        let ft = ForcedTrack::new(t, model)?;
        windows(t, steps)
            .map(|s| {
                Ok(ForecastPair {
                    storm_id: t.storm_id.clone(),
                    start: s,
                    predicted: forecast(model, &ft, t, s, steps)?,
                    observed: t.points[s + steps].v_obs,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for p in per {
        out.extend(p?);
    }
    Ok(out)
}

pub fn rmse(pairs: &[ForecastPair]) -> f64 {
    if pairs.is_empty() {
        return f64::NAN;
    }
    let s: f64 = pairs.iter().map(|p| (p.predicted - p.observed).powi(2)).sum();
    (s / pairs.len() as f64).sqrt()
}
