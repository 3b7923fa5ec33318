//! Ocean-coupling variables and nondimensionalization of state and forcings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::track::TrackPoint;

/// Lower bound of the ocean damping factor.
pub const ALPHA_MIN: f64 = 0.13;
/// Upper bound (no damping).
pub const ALPHA_MAX: f64 = 1.0;
pub const ALPHA_AMPLITUDE: f64 = 0.87;

/// Characteristic scales used to make every model variable order one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Intensity scale, m/s.
    pub v: f64,
    /// Potential-intensity scale, m/s.
    pub vp: f64,
    /// Entropy-deficit scale, J/(kg K).
    pub chi: f64,
    /// Shear scale, m/s.
    pub shear: f64,
}

impl Default for Scales {
    fn default() -> Self {
        Scales {
            v: 50.0,
            vp: 50.0,
            chi: 2.0,
            shear: 10.0,
        }
    }
}

impl Scales {
    pub fn validate(&self) -> Result<()> {
        let all = [self.v, self.vp, self.chi, self.shear];
        if all.iter().all(|s| s.is_finite() && *s > 0.0) {
            Ok(())
        } else {
            Err(Error::Validation(format!(
                "scales must be strictly positive, got {self:?}"
            )))
        }
    }
}

/// Which intensity enters the exponent of the damping law `1 - 0.87 exp(-z/v)`.
///
/// `Dimensional` uses v in m/s, which is the reading under which z of order
/// 100 produces a non-trivial damping factor. `Nondimensional` uses v/50 m/s,
/// which saturates alpha near 1 for the same z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaConvention {
    #[default]
    Dimensional,
    Nondimensional,
}

/// Climatological upper-ocean heat content parameter,
/// `z = 0.01 gamma^-0.4 h_m u_t / vp`.
pub fn compute_z(gamma: f64, h_m: f64, u_t: f64, vp: f64) -> Result<f64> {
    if gamma.is_nan() || h_m.is_nan() || u_t.is_nan() || vp.is_nan() {
        return Err(Error::InvalidArgument("compute_z: NaN input".into()));
    }
    if gamma <= 0.0 || h_m <= 0.0 || vp <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "compute_z needs gamma, h_m, vp > 0 (got gamma={gamma}, h_m={h_m}, vp={vp})"
        )));
    }
    if u_t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "compute_z needs u_t >= 0 (got {u_t})"
        )));
    }
    Ok(0.01 * gamma.powf(-0.4) * h_m * u_t / vp)
}

/// Ocean damping factor for dimensional intensity `v` (m/s).
pub fn compute_alpha(z: f64, v: f64) -> Result<f64> {
    if z.is_nan() || v.is_nan() {
        return Err(Error::InvalidArgument("compute_alpha: NaN input".into()));
    }
    Ok(alpha_raw(z, v))
}

/// Unchecked damping law; NaN in gives NaN out. At `v <= 0` the damping
/// floor is returned.
#[inline]
pub fn alpha_raw(z: f64, v: f64) -> f64 {
    if v <= 0.0 {
        return ALPHA_MIN;
    }
    let a = 1.0 - ALPHA_AMPLITUDE * (-z / v).exp();
    a.clamp(ALPHA_MIN, ALPHA_MAX)
}

/// Damping factor for intensity `v_mps` under the chosen convention.
#[inline]
pub fn alpha_with(z: f64, v_mps: f64, convention: AlphaConvention, scales: &Scales) -> f64 {
    match convention {
        AlphaConvention::Dimensional => alpha_raw(z, v_mps),
        AlphaConvention::Nondimensional => alpha_raw(z, v_mps / scales.v),
    }
}

/// Nondimensional model state `(v', alpha, Vp', chi', S')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondimState {
    pub v_nd: f64,
    pub alpha: f64,
    pub vp_nd: f64,
    pub chi_nd: f64,
    pub s_nd: f64,
}

impl NondimState {
    pub fn as_array(&self) -> [f64; 5] {
        [self.v_nd, self.alpha, self.vp_nd, self.chi_nd, self.s_nd]
    }

    pub fn from_array(x: [f64; 5]) -> Self {
        NondimState {
            v_nd: x[0],
            alpha: x[1],
            vp_nd: x[2],
            chi_nd: x[3],
            s_nd: x[4],
        }
    }

    /// Multiplies back by the scales: `(v, vp, chi, shear)` in physical units.
    pub fn redimensionalize(&self, scales: &Scales) -> [f64; 4] {
        [
            self.v_nd * scales.v,
            self.vp_nd * scales.vp,
            self.chi_nd * scales.chi,
            self.s_nd * scales.shear,
        ]
    }
}

/// Environmental forcing at one track point, already scaled. Intensity is
/// supplied separately because it is the evolving state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forcing {
    pub z: f64,
    pub vp_nd: f64,
    pub chi_nd: f64,
    pub s_nd: f64,
}

impl Forcing {
    /// Builds the forcing for a track point. `z_override` wins when present.
    /// Over land with a zero potential intensity z cannot be formed, so it is
    /// taken as 0 (full damping).
    pub fn from_point(point: &TrackPoint, scales: &Scales) -> Result<Self> {
        let z = match point.z_override {
            Some(z) => z,
            None => {
                let (gamma, h_m, u_t) = match (point.gamma, point.h_m, point.u_t) {
                    (Some(g), Some(h), Some(u)) => (g, h, u),
                    _ => {
                        return Err(Error::Validation(
                            "gamma, h_m and u_t are required when z_override is empty".into(),
                        ))
                    }
                };
                if point.vp == 0.0 && point.over_land {
                    0.0
                } else {
                    compute_z(gamma, h_m, u_t, point.vp)?
                }
            }
        };
        Ok(Forcing {
            z,
            vp_nd: point.vp / scales.vp,
            chi_nd: point.chi / scales.chi,
            s_nd: point.shear / scales.shear,
        })
    }

    /// Full state at dimensional intensity `v_mps`.
    #[inline]
    pub fn state(&self, v_mps: f64, scales: &Scales, convention: AlphaConvention) -> NondimState {
        NondimState {
            v_nd: v_mps / scales.v,
            alpha: alpha_with(self.z, v_mps, convention, scales),
            vp_nd: self.vp_nd,
            chi_nd: self.chi_nd,
            s_nd: self.s_nd,
        }
    }
}

/// Nondimensional state for a track point at intensity `v` (m/s), using the
/// default scales and the dimensional damping convention.
pub fn nondimensionalize(point: &TrackPoint, v: f64) -> Result<NondimState> {
    nondimensionalize_with(point, v, &Scales::default(), AlphaConvention::default())
}

pub fn nondimensionalize_with(
    point: &TrackPoint,
    v: f64,
    scales: &Scales,
    convention: AlphaConvention,
) -> Result<NondimState> {
    if v.is_nan() || v < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "intensity must be >= 0, got {v}"
        )));
    }
    let f = Forcing::from_point(point, scales)?;
    Ok(f.state(v, scales, convention))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::track::TrackPoint;
    use proptest::prelude::*;

    fn point(vp: f64, chi: f64, shear: f64) -> TrackPoint {
        TrackPoint {
            vp,
            chi,
            shear,
            z_override: Some(100.0),
            ..TrackPoint::example()
        }
    }

    #[test]
    fn z_examples() {
        assert!((compute_z(1.0, 100.0, 5.0, 50.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(compute_z(1.0, 100.0, 0.0, 50.0).unwrap(), 0.0);
        // 0.01 * 2^-0.4 * 50 * 6 / 60
        let expect = 0.01 * 0.757_858_283_255_198_9 * 5.0;
        let z = compute_z(2.0, 50.0, 6.0, 60.0).unwrap();
        assert!((z - expect).abs() < 1e-12);
        assert!((z - 0.03789).abs() < 1e-5);
    }

    #[test]
    fn z_rejects_nonpositive_inputs() {
        assert!(compute_z(0.0, 100.0, 5.0, 50.0).is_err());
        assert!(compute_z(1.0, -1.0, 5.0, 50.0).is_err());
        assert!(compute_z(1.0, 100.0, 5.0, 0.0).is_err());
        assert!(compute_z(1.0, 100.0, -5.0, 50.0).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert!((compute_alpha(0.0, 30.0).unwrap() - 0.13).abs() < 1e-15);
        assert!((compute_alpha(1e9, 30.0).unwrap() - 1.0).abs() < 1e-15);
        // 1 - 0.87 exp(-100/64.5)
        let a = compute_alpha(100.0, 64.5).unwrap();
        assert!((a - 0.815_423).abs() < 1e-5, "{a}");
        assert_eq!(compute_alpha(10.0, 0.0).unwrap(), ALPHA_MIN);
        assert_eq!(compute_alpha(10.0, -3.0).unwrap(), ALPHA_MIN);
        assert!(compute_alpha(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn nondimensional_examples() {
        let s = nondimensionalize(&point(50.0, 2.0, 10.0), 50.0).unwrap();
        assert_eq!((s.v_nd, s.vp_nd, s.chi_nd, s.s_nd), (1.0, 1.0, 1.0, 1.0));
        let s = nondimensionalize(&point(72.0, 1.0, 3.0), 50.0).unwrap();
        assert!((s.vp_nd - 1.44).abs() < 1e-15);
        assert!((s.chi_nd - 0.5).abs() < 1e-15);
        assert!(nondimensionalize(&point(72.0, 1.0, 3.0), -1.0).is_err());
    }

    #[test]
    fn land_point_without_potential_intensity_is_fully_damped() {
        let p = TrackPoint {
            vp: 0.0,
            over_land: true,
            z_override: None,
            ..TrackPoint::example()
        };
        let f = Forcing::from_point(&p, &Scales::default()).unwrap();
        assert_eq!(f.z, 0.0);
        assert_eq!(f.state(30.0, &Scales::default(), AlphaConvention::Dimensional).alpha, ALPHA_MIN);
    }

    proptest! {
        #[test]
        fn alpha_bounded(z in 0.0f64..1e4, v in 0.0f64..300.0) {
            let a = compute_alpha(z, v).unwrap();
            prop_assert!((ALPHA_MIN..=ALPHA_MAX).contains(&a));
        }

        #[test]
        fn alpha_monotone_by_finite_differences(z in 0.0f64..500.0, v in 0.5f64..150.0) {
            let h = 1e-3;
            let a = alpha_raw(z, v);
            prop_assert!(alpha_raw(z + h, v) - a >= -1e-15);
            prop_assert!(alpha_raw(z, v + h) - a <= 1e-15);
        }

        #[test]
        fn scaling_round_trip(v in 0.0f64..120.0, vp in 0.0f64..100.0, chi in 0.0f64..8.0, sh in 0.0f64..40.0) {
            let s = nondimensionalize(&point(vp, chi, sh), v).unwrap();
            let back = s.redimensionalize(&Scales::default());
            for (x, y) in back.iter().zip([v, vp, chi, sh]) {
                prop_assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }
}
