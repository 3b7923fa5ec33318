//! Degree-limited monomial library over `(v', alpha, Vp', chi', S')`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::NondimState;

/// Number of model variables.
pub const N_VARS: usize = 5;
/// Display names, in exponent order.
pub const VAR_NAMES: [&str; N_VARS] = ["v'", "a", "Vp", "chi", "S"];

/// Exponent tuple `(k_v, k_alpha, k_vp, k_chi, k_shear)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Monomial(pub [u8; N_VARS]);

impl Monomial {
    pub const CONSTANT: Monomial = Monomial([0; N_VARS]);

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&k| k as u32).sum()
    }

    /// Graded-lexicographic comparison: total degree first, then the
    /// exponent of v' (larger first), then alpha, and so on.
    pub fn grlex_cmp(&self, other: &Monomial) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }

    #[inline]
    pub fn eval(&self, x: &[f64; N_VARS]) -> f64 {
        let mut acc = 1.0;
        for (k, &xi) in self.0.iter().zip(x) {
            acc *= ipow(xi, *k);
        }
        acc
    }
}

#[inline]
fn ipow(x: f64, k: u8) -> f64 {
    match k {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(k as i32),
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .zip(VAR_NAMES)
            .filter(|(k, _)| **k > 0)
            .map(|(k, name)| format!("{name}^{k}"))
            .collect();
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join(" "))
        }
    }
}

/// Ordered list of monomials. Coefficient vectors are indexed by position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    terms: Vec<Monomial>,
    max_degree: u32,
}

impl MonomialBasis {
    /// Builds a basis from explicit terms, keeping their order. Terms must be
    /// unique and of degree at most `max_degree`.
    pub fn new(terms: Vec<Monomial>, max_degree: u32) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if t.degree() > max_degree {
                return Err(Error::Validation(format!(
                    "term {t} has degree {} > {max_degree}",
                    t.degree()
                )));
            }
            if !seen.insert(*t) {
                return Err(Error::Validation(format!("duplicate term {t}")));
            }
        }
        Ok(MonomialBasis { terms, max_degree })
    }

    /// Builds a basis with `max_degree` set to the largest term degree.
    pub fn from_terms(terms: Vec<Monomial>) -> Result<Self> {
        let d = terms.iter().map(Monomial::degree).max().unwrap_or(0);
        Self::new(terms, d)
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.terms.iter().position(|t| t == m)
    }

    /// Sub-basis made of the terms at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let terms = indices
            .iter()
            .map(|&i| {
                self.terms.get(i).copied().ok_or_else(|| {
                    Error::InvalidArgument(format!("term index {i} out of range {}", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, self.max_degree)
    }

    /// Feature vector at `state`.
    pub fn evaluate(&self, state: &NondimState) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.evaluate_into(state, &mut out);
        out
    }

    /// Writes the feature vector into `out` (length must match).
    pub fn evaluate_into(&self, state: &NondimState, out: &mut [f64]) {
        let x = state.as_array();
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.eval(&x);
        }
    }

    /// `sum_j coefficients[j] * phi_j(state)`.
    #[inline]
    pub fn dot(&self, coefficients: &[f64], state: &NondimState) -> f64 {
        let x = state.as_array();
        self.terms
            .iter()
            .zip(coefficients)
            .map(|(t, c)| c * t.eval(&x))
            .sum()
    }
}

/// All monomials of total degree `<= max_degree` in graded-lexicographic order.
pub fn full_basis(max_degree: u32) -> MonomialBasis {
    let d = max_degree as u8;
    let mut terms = Vec::new();
    for k0 in 0..=d {
        for k1 in 0..=d - k0 {
            for k2 in 0..=d - k0 - k1 {
                for k3 in 0..=d - k0 - k1 - k2 {
                    for k4 in 0..=d - k0 - k1 - k2 - k3 {
                        terms.push(Monomial([k0, k1, k2, k3, k4]));
                    }
                }
            }
        }
    }
    terms.sort_by(|a, b| a.grlex_cmp(b));
    MonomialBasis {
        terms,
        max_degree,
    }
}

/// Drift `dv'/dtau` (per tau) of a coefficient vector over a basis.
pub fn drift(basis: &MonomialBasis, coefficients: &[f64], state: &NondimState) -> f64 {
    basis.dot(coefficients, state)
}
