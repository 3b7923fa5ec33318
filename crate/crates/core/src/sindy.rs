//! Integral-form regression system for sparse identification.
//!
//! For a window starting at point `i` with horizon `T`, the intensity change
//! `v'(t_i + T) - v'(t_i)` equals `sum_j beta_j * int phi_j dt`. Integrals
//! use left-endpoint piecewise-constant quadrature on the 6 h observations,
//! with the step expressed in tau units (one step = 1), so the fitted
//! coefficients come out directly per tau.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::features::{AlphaConvention, Forcing, Scales};
use crate::library::MonomialBasis;
use crate::linalg::{column_scales, QrReduced};
use crate::par;
use crate::track::TrackSeries;

/// Where a regression row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowMeta {
    /// Index into [`RegressionSystem::storm_ids`].
    pub storm: usize,
    /// Index of the window's first point within its storm.
    pub start: usize,
    /// Window length in 6 h steps.
    pub horizon_steps: usize,
}

/// Stacked linear system `C = D beta`.
#[derive(Debug, Clone)]
pub struct RegressionSystem {
    pub basis: MonomialBasis,
    /// One row per window, one column per basis term (tau units).
    pub design: DMatrix<f64>,
    /// Nondimensional intensity differences.
    pub response: DVector<f64>,
    pub row_meta: Vec<RowMeta>,
    pub storm_ids: Vec<String>,
}

impl RegressionSystem {
    pub fn n_rows(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.design.ncols()
    }

    /// Rows whose storm index satisfies `keep`, as a new system.
    pub fn filter_storms(&self, keep: impl Fn(usize) -> bool) -> RegressionSystem {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&r| keep(self.row_meta[r].storm))
            .collect();
        RegressionSystem {
            basis: self.basis.clone(),
            design: self.design.select_rows(&rows),
            response: self.response.select_rows(&rows),
            row_meta: rows.iter().map(|&r| self.row_meta[r]).collect(),
            storm_ids: self.storm_ids.clone(),
        }
    }

    /// Writes the system as comma-delimited text: metadata, response and
    /// one column per basis term.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        write!(w, "storm_id,start_index,horizon_h,response")?;
        for t in self.basis.terms() {
            write!(w, ",{t}")?;
        }
        writeln!(w)?;
        for (r, meta) in self.row_meta.iter().enumerate() {
            write!(
                w,
                "{},{},{},{}",
                self.storm_ids[meta.storm],
                meta.start,
                meta.horizon_steps * 6,
                self.response[r]
            )?;
            for c in 0..self.n_cols() {
                write!(w, ",{}", self.design[(r, c)])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

/// Scales and damping convention used to turn observations into states.
#[derive(Debug, Clone, Copy, Default)]
pub struct StateOptions {
    pub scales: Scales,
    pub convention: AlphaConvention,
}

fn point_features(
    series: &TrackSeries,
    basis: &MonomialBasis,
    opts: &StateOptions,
) -> Result<Vec<Vec<f64>>> {
    series
        .points
        .iter()
        .map(|p| {
            let f = Forcing::from_point(p, &opts.scales)?;
            Ok(basis.evaluate(&f.state(p.v_obs, &opts.scales, opts.convention)))
        })
        .collect()
}

/// Quadrature row `d_j = sum_{k < steps} phi_j(state at start + k)` for one
/// window, built from observed intensities.
pub fn integrate_features(
    series: &TrackSeries,
    basis: &MonomialBasis,
    start: usize,
    horizon_steps: usize,
    opts: &StateOptions,
) -> Result<Vec<f64>> {
    if horizon_steps == 0 || start + horizon_steps >= series.len() {
        return Err(Error::InvalidArgument(format!(
            "window {start}+{horizon_steps} exceeds storm {} of {} points",
            series.storm_id,
            series.len()
        )));
    }
    if !series.window_is_contiguous(start, horizon_steps) {
        return Err(Error::InvalidArgument(format!(
            "window {start}+{horizon_steps} of storm {} spans a cadence gap",
            series.storm_id
        )));
    }
    let mut row = vec![0.0; basis.len()];
    let mut buf = vec![0.0; basis.len()];
    for p in &series.points[start..start + horizon_steps] {
        let f = Forcing::from_point(p, &opts.scales)?;
        basis.evaluate_into(&f.state(p.v_obs, &opts.scales, opts.convention), &mut buf);
        for (r, b) in row.iter_mut().zip(&buf) {
            *r += b;
        }
    }
    Ok(row)
}

/// Settings for [`build_system`].
#[derive(Debug, Clone, Copy)]
pub struct SystemOptions {
    /// Longest window, in 6 h steps.
    pub max_horizon_steps: usize,
    /// Use every `stride`-th start point.
    pub stride: usize,
    pub state: StateOptions,
}

impl SystemOptions {
    pub fn new(max_horizon_steps: usize) -> Self {
        SystemOptions {
            max_horizon_steps,
            stride: 1,
            state: StateOptions::default(),
        }
    }
}

/// Assembles one row per (storm, start point, horizon in 1..=max) window
/// that lies inside a storm without crossing a cadence gap.
pub fn build_system(
    tracks: &[TrackSeries],
    basis: &MonomialBasis,
    opts: &SystemOptions,
) -> Result<RegressionSystem> {
    if tracks.is_empty() {
        return Err(Error::InvalidArgument("no tracks to build a system from".into()));
    }
    if opts.max_horizon_steps == 0 || opts.stride == 0 {
        return Err(Error::InvalidArgument(
            "max_horizon and stride must be positive".into(),
        ));
    }
    let p = basis.len();
    let vs = opts.state.scales.v;
    let per_storm = par::map_range(tracks.len(), |s| -> Result<(Vec<f64>, Vec<f64>, Vec<RowMeta>)> {
        let series = &tracks[s];
        let feats = point_features(series, basis, &opts.state)?;
        // prefix[i] = sum of features of points 0..i
        let mut prefix = vec![vec![0.0; p]; series.len() + 1];
        for (i, f) in feats.iter().enumerate() {
            for j in 0..p {
                prefix[i + 1][j] = prefix[i][j] + f[j];
            }
        }
        let mut rows = Vec::new();
        let mut resp = Vec::new();
        let mut meta = Vec::new();
        for start in (0..series.len()).step_by(opts.stride) {
            for h in 1..=opts.max_horizon_steps {
                if !series.window_is_contiguous(start, h) {
                    break;
                }
                rows.extend((0..p).map(|j| prefix[start + h][j] - prefix[start][j]));
                resp.push((series.points[start + h].v_obs - series.points[start].v_obs) / vs);
                meta.push(RowMeta {
                    storm: s,
                    start,
                    horizon_steps: h,
                });
            }
        }
        Ok((rows, resp, meta))
    });
    let mut flat = Vec::new();
    let mut response = Vec::new();
    let mut row_meta = Vec::new();
    for r in per_storm {
        let (rows, resp, meta) = r?;
        flat.extend(rows);
        response.extend(resp);
        row_meta.extend(meta);
    }
    if response.is_empty() {
        return Err(Error::Validation("no valid windows in the track set".into()));
    }
    Ok(RegressionSystem {
        basis: basis.clone(),
        design: DMatrix::from_row_slice(response.len(), p, &flat),
        response: DVector::from_vec(response),
        row_meta,
        storm_ids: tracks.iter().map(|t| t.storm_id.clone()).collect(),
    })
}

/// Ordinary least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LsFit {
    /// Full-length coefficient vector (zeros outside the support).
    pub coefficients: Vec<f64>,
    pub support: Vec<usize>,
    pub rss: f64,
    pub rank: usize,
    /// True when the restricted design was rank deficient and the
    /// minimum-norm solution was returned.
    pub rank_deficient: bool,
}

/// Least squares on the full design or on the columns in `support`, via QR
/// compression and an SVD of the triangular factor.
pub fn least_squares(system: &RegressionSystem, support: Option<&[usize]>) -> Result<LsFit> {
    let p = system.n_cols();
    let support: Vec<usize> = match support {
        Some(s) => s.to_vec(),
        None => (0..p).collect(),
    };
    if let Some(&bad) = support.iter().find(|&&j| j >= p) {
        return Err(Error::InvalidArgument(format!("support index {bad} >= {p}")));
    }
    if system.n_rows() < support.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rows for {} columns",
            system.n_rows(),
            support.len()
        )));
    }
    let sub = system.design.select_columns(&support);
    let scales = column_scales(&sub);
    let mut scaled = sub;
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let red = QrReduced::new(scaled, &system.response);
    let cols: Vec<usize> = (0..support.len()).collect();
    let (x, rss, rank) = red.solve_subset(&cols);
    if rank < support.len() {
        log::warn!(
            "rank-deficient design ({rank} < {}); returning minimum-norm solution",
            support.len()
        );
    }
    let mut coefficients = vec![0.0; p];
    for ((&j, xj), s) in support.iter().zip(&x).zip(&scales) {
        coefficients[j] = xj / s;
    }
    Ok(LsFit {
        coefficients,
        support,
        rss,
        rank,
        rank_deficient: rank < cols.len(),
    })
}
