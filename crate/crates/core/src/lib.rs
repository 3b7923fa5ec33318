//! Learning, simulating and analysing a sparse polynomial stochastic
//! differential equation for tropical-cyclone intensity.
//!
//! The pipeline has three learning stages and several analysis stages:
//!
//! 1. [`sindy`] assembles an integral-form regression from track data and
//!    [`subset`] picks a sparse set of library terms by splicing.
//! 2. [`enkf`] fine-tunes the chosen coefficients with ensemble Kalman
//!    updates over growing forecast horizons.
//! 3. [`calibration`] fits the state-dependent noise amplitude from
//!    forecast residuals.
//!
//! [`simulate`] generates synthetic intensity series, [`dynamics`] finds
//! fixed points and saddle-node folds, and [`hazard`] and [`density`] turn
//! collections of series into climatological hazard statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod calibration;
pub mod density;
pub mod dynamics;
pub mod enkf;
pub mod error;
pub mod features;
pub mod hazard;
pub mod library;
pub mod linalg;
pub mod model;
pub mod par;
pub mod rng;
pub mod simulate;
pub mod sindy;
pub mod subset;
pub mod synthetic;
pub mod track;
pub mod trajectory;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
pub use features::{AlphaConvention, Forcing, NondimState, Scales};
pub use library::{full_basis, Monomial, MonomialBasis};
pub use model::{builtin_paper_model, load_model, save_model, IntensityModel};
pub use track::{load_tracks, save_tracks, TrackPoint, TrackSeries};
