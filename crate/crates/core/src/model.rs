//! The intensity SDE: sparse drift coefficients, diffusion law and scales.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{AlphaConvention, Forcing, NondimState, Scales};
use crate::library::{Monomial, MonomialBasis};

pub const MODEL_FILE_VERSION: u32 = 1;

/// Drift coefficients (per tau, tau = 6 h) over a monomial basis, plus the
/// linear diffusion law `sigma'(v') = sigma_slope * v' + sigma_intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityModel {
    basis: MonomialBasis,
    coefficients: Vec<f64>,
    pub sigma_slope: f64,
    /// Nondimensional intercept (m/s divided by the intensity scale).
    pub sigma_intercept: f64,
    pub scales: Scales,
    pub alpha_convention: AlphaConvention,
}

impl IntensityModel {
    pub fn new(basis: MonomialBasis, coefficients: Vec<f64>) -> Result<Self> {
        let m = IntensityModel {
            basis,
            coefficients,
            sigma_slope: 0.0,
            sigma_intercept: 0.0,
            scales: Scales::default(),
            alpha_convention: AlphaConvention::default(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.len() != self.basis.len() {
            return Err(Error::Validation(format!(
                "{} coefficients for a {}-term basis",
                self.coefficients.len(),
                self.basis.len()
            )));
        }
        if let Some(c) = self.coefficients.iter().find(|c| !c.is_finite()) {
            return Err(Error::Validation(format!("non-finite coefficient {c}")));
        }
        if !(self.sigma_slope.is_finite() && self.sigma_intercept.is_finite()) {
            return Err(Error::Validation("non-finite diffusion parameters".into()));
        }
        self.scales.validate()
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Same structure and diffusion law with new coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        let mut m = self.clone();
        m.coefficients = coefficients;
        m.validate()?;
        Ok(m)
    }

    pub fn with_sigma(mut self, slope: f64, intercept_nd: f64) -> Self {
        self.sigma_slope = slope;
        self.sigma_intercept = intercept_nd;
        self
    }

    pub fn coefficient_of(&self, term: &Monomial) -> Option<f64> {
        self.basis.position(term).map(|i| self.coefficients[i])
    }

    /// Deterministic tendency dv'/dtau at a nondimensional state.
    #[inline]
    pub fn drift(&self, state: &NondimState) -> f64 {
        self.basis.dot(&self.coefficients, state)
    }

    /// Tendency at dimensional intensity `v_mps` under a forcing, per tau.
    #[inline]
    pub fn drift_at(&self, forcing: &Forcing, v_mps: f64) -> f64 {
        self.drift(&forcing.state(v_mps, &self.scales, self.alpha_convention))
    }

    /// Nondimensional diffusion amplitude, floored at zero.
    #[inline]
    pub fn sigma_nd(&self, v_nd: f64) -> f64 {
        (self.sigma_slope * v_nd + self.sigma_intercept).max(0.0)
    }

    /// Dimensional diffusion amplitude in m/s per sqrt(tau).
    pub fn sigma_mps(&self, v_mps: f64) -> f64 {
        self.sigma_nd(v_mps / self.scales.v) * self.scales.v
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            basis: self.basis.terms().iter().map(|m| m.0).collect(),
            coefficients: self.coefficients.clone(),
            sigma_slope: self.sigma_slope,
            sigma_intercept: self.sigma_intercept,
            scales: self.scales,
            alpha_convention: self.alpha_convention,
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (expected {MODEL_FILE_VERSION})",
                file.version
            )));
        }
        if file.coefficients.len() != file.basis.len() {
            return Err(Error::ModelFormat(format!(
                "{} coefficients for a {}-term basis",
                file.coefficients.len(),
                file.basis.len()
            )));
        }
        let basis = MonomialBasis::from_terms(file.basis.into_iter().map(Monomial).collect())
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        let m = IntensityModel {
            basis,
            coefficients: file.coefficients,
            sigma_slope: file.sigma_slope,
            sigma_intercept: file.sigma_intercept,
            scales: file.scales,
            alpha_convention: file.alpha_convention,
        };
        m.validate().map_err(|e| Error::ModelFormat(e.to_string()))?;
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    /// Exponent tuples ordered `[v, alpha, Vp, chi, S]`.
    basis: Vec<[u8; 5]>,
    /// Per tau.
    coefficients: Vec<f64>,
    sigma_slope: f64,
    sigma_intercept: f64,
    scales: Scales,
    #[serde(default)]
    alpha_convention: AlphaConvention,
}

pub fn save_model(model: &IntensityModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model.to_json()?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<IntensityModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    IntensityModel::from_json(&text)
}

/// Terms of the built-in 10-term model, in coefficient order.
pub const BUILTIN_TERMS: [Monomial; 10] = [
    Monomial([1, 1, 1, 0, 0]), // v' a Vp'
    Monomial([1, 0, 0, 0, 0]), // v'
    Monomial([1, 2, 0, 0, 0]), // v' a^2
    Monomial([3, 0, 0, 0, 0]), // v'^3
    Monomial([0, 1, 1, 0, 0]), // a Vp'
    Monomial([0, 1, 2, 0, 0]), // a Vp'^2
    Monomial([0, 0, 3, 0, 0]), // Vp'^3
    Monomial([0, 0, 2, 0, 1]), // Vp'^2 S'
    Monomial([0, 0, 0, 2, 0]), // chi'^2
    Monomial([0, 0, 0, 3, 0]), // chi'^3
];

/// Built-in coefficients, per tau.
pub const BUILTIN_COEFFICIENTS: [f64; 10] = [
    1.53e-1, -7.06e-2, -6.70e-2, -5.94e-2, 5.02e-2, -4.70e-2, 1.26e-2, -1.16e-2, -7.40e-3,
    1.20e-3,
];

pub const BUILTIN_SIGMA_SLOPE: f64 = 0.110;
pub const BUILTIN_SIGMA_INTERCEPT: f64 = 4.58e-3;

/// The built-in 10-term intensity model with its calibrated diffusion.
pub fn builtin_paper_model() -> IntensityModel {
    let basis = MonomialBasis::new(BUILTIN_TERMS.to_vec(), 3).expect("static basis is valid");
    IntensityModel::new(basis, BUILTIN_COEFFICIENTS.to_vec())
        .expect("static model is valid")
        .with_sigma(BUILTIN_SIGMA_SLOPE, BUILTIN_SIGMA_INTERCEPT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_model_values() {
        let m = builtin_paper_model();
        assert_eq!(m.basis().len(), 10);
        assert_eq!(m.coefficients()[0], 1.53e-1);
        assert_eq!(m.coefficient_of(&Monomial([3, 0, 0, 0, 0])), Some(-5.94e-2));
        assert_eq!(m.coefficient_of(&Monomial([0, 0, 0, 3, 0])), Some(1.20e-3));
        assert_eq!(m.sigma_slope, 0.110);
        assert_eq!(m.sigma_intercept, 4.58e-3);
        // sigma(v) = 0.110 v + 0.229 m/s
        assert!((m.sigma_mps(0.0) - 0.229).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_bitwise() {
        let m = builtin_paper_model();
        let back = IntensityModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        for (a, b) in m.coefficients().iter().zip(back.coefficients()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["coefficients"][0].as_f64(), Some(0.153));
        assert_eq!(v["basis"][0], serde_json::json!([1, 1, 1, 0, 0]));
    }

    #[test]
    fn length_mismatch_rejected() {
        let m = builtin_paper_model();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["coefficients"].as_array_mut().unwrap().pop();
        let err = IntensityModel::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("9 coefficients"), "{err}");
        assert!(m.with_coefficients(vec![0.0; 9]).is_err());
    }

    #[test]
    fn version_mismatch_rejected() {
        let m = builtin_paper_model();
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        v["version"] = serde_json::json!(99);
        assert!(IntensityModel::from_json(&v.to_string())
            .unwrap_err()
            .to_string()
            .contains("version"));
    }

    #[test]
    fn nonpositive_scales_rejected() {
        let mut m = builtin_paper_model();
        m.scales.chi = 0.0;
        assert!(m.validate().is_err());
    }
}
