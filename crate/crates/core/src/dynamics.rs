//! Fixed points of the deterministic drift at a frozen environment, their
//! stability, and one-parameter bifurcation scans.

use std::fmt;

use crate::error::{Error, Result};
use crate::features::{alpha_with, Forcing, NondimState, ALPHA_AMPLITUDE, ALPHA_MAX, ALPHA_MIN};
use crate::model::IntensityModel;
use crate::par;

pub const DEFAULT_GRID: usize = 2000;
pub const DEFAULT_V_MAX: f64 = 120.0;

/// Frozen environment in physical units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    pub z: f64,
    /// Potential intensity, m/s.
    pub vp: f64,
    /// Entropy deficit.
    pub chi: f64,
    /// Shear, m/s.
    pub shear: f64,
}

impl Environment {
    /// Warm, deep ocean with weak shear.
    pub const FAVORABLE: Environment = Environment {
        z: 100.0,
        vp: 72.0,
        chi: 1.0,
        shear: 3.0,
    };

    pub fn get(&self, p: Parameter) -> f64 {
        match p {
            Parameter::Z => self.z,
            Parameter::Vp => self.vp,
            Parameter::Chi => self.chi,
            Parameter::Shear => self.shear,
        }
    }

    pub fn with(mut self, p: Parameter, value: f64) -> Self {
        match p {
            Parameter::Z => self.z = value,
            Parameter::Vp => self.vp = value,
            Parameter::Chi => self.chi = value,
            Parameter::Shear => self.shear = value,
        }
        self
    }
}

/// How the damping factor is treated while varying intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    /// Damping follows the intensity through the ocean law.
    Coupled,
    /// Damping frozen at the given value.
    Fixed(f64),
}

/// Drift in tau^-1 at intensity `v` m/s. At `v = 0` the damping takes its
/// limit from above, so the floor of the damping law does not create a
/// spurious root at the origin.
pub fn drift_at(model: &IntensityModel, env: &Environment, mode: AlphaMode, v: f64) -> f64 {
    let s = &model.scales;
    let alpha = match mode {
        AlphaMode::Fixed(a) => a,
        AlphaMode::Coupled if v <= 0.0 => {
            if env.z > 0.0 {
                ALPHA_MAX
            } else {
                (1.0 - ALPHA_AMPLITUDE).max(ALPHA_MIN)
            }
        }
        AlphaMode::Coupled => alpha_with(env.z, v, model.alpha_convention, s),
    };
    let f = Forcing {
        z: env.z,
        vp_nd: env.vp / s.vp,
        chi_nd: env.chi / s.chi,
        s_nd: env.shear / s.shear,
    };
    model.drift(&NondimState {
        v_nd: v / s.v,
        alpha,
        vp_nd: f.vp_nd,
        chi_nd: f.chi_nd,
        s_nd: f.s_nd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Zero slope to working precision.
    Neutral,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// Intensity, m/s.
    pub v: f64,
    pub stability: Stability,
    /// Drift slope at the root, tau^-1 per m/s.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSet {
    pub environment: Environment,
    /// Ascending in `v`.
    pub roots: Vec<Root>,
}

impl FixedPointSet {
    pub fn stable(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.stability == Stability::Stable)
    }

    /// Largest stable root, the attracting mature intensity.
    pub fn upper_stable(&self) -> Option<f64> {
        self.stable().map(|r| r.v).last()
    }
}

/// Grid and range for root finding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    pub v_max: f64,
    pub grid: usize,
    pub alpha: AlphaMode,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            v_max: DEFAULT_V_MAX,
            grid: DEFAULT_GRID,
            alpha: AlphaMode::Coupled,
        }
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// All roots of the drift on `[0, v_max]`: sign changes on a uniform grid,
/// refined by bisection to full precision, classified by the sign of a
/// finite-difference slope.
pub fn find_fixed_points(
    model: &IntensityModel,
    env: &Environment,
    opts: &RootOptions,
) -> Result<FixedPointSet> {
    if !(opts.v_max > 0.0) || opts.grid < 2 {
        return Err(Error::InvalidArgument(
            "root search needs v_max > 0 and at least two grid points".into(),
        ));
    }
    let f = |v: f64| drift_at(model, env, opts.alpha, v);
    let n = opts.grid;
    let vs: Vec<f64> = (0..n).map(|i| opts.v_max * i as f64 / (n - 1) as f64).collect();
    let gs: Vec<f64> = vs.iter().map(|&v| f(v)).collect();
    let mut locs = Vec::new();
    for i in 0..n {
        if gs[i] == 0.0 {
            locs.push(vs[i]);
        } else if i + 1 < n && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
            locs.push(bisect(f, vs[i], vs[i + 1], gs[i]));
        }
    }
    let h = 1e-4;
    let roots = locs
        .into_iter()
        .map(|v| {
            let (lo, hi) = ((v - h).max(0.0), (v + h).min(opts.v_max.max(v + h)));
            let slope = (f(hi) - f(lo)) / (hi - lo);
            let stability = if slope < 0.0 {
                Stability::Stable
            } else if slope > 0.0 {
                Stability::Unstable
            } else {
                Stability::Neutral
            };
            Root { v, stability, slope }
        })
        .collect();
    Ok(FixedPointSet {
        environment: *env,
        roots,
    })
}

/// True when the drift never increases along a uniform grid on
/// `[0, v_max]`.
pub fn monotone_drift_check(model: &IntensityModel, env: &Environment, opts: &RootOptions) -> bool {
    let n = opts.grid.max(2);
    let mut prev = f64::INFINITY;
    for i in 0..n {
        let g = drift_at(model, env, opts.alpha, opts.v_max * i as f64 / (n - 1) as f64);
        if g > prev + 1e-12 * prev.abs().max(1.0) {
            return false;
        }
        prev = g;
    }
    true
}

/// The environmental input being varied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    Z,
    Vp,
    Chi,
    Shear,
}

impl Parameter {
    pub fn name(&self) -> &'static str {
        match self {
            Parameter::Z => "z",
            Parameter::Vp => "vp",
            Parameter::Chi => "chi",
            Parameter::Shear => "shear",
        }
    }
}

impl std::str::FromStr for Parameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(Parameter::Z),
            "vp" => Ok(Parameter::Vp),
            "chi" => Ok(Parameter::Chi),
            "s" | "shear" => Ok(Parameter::Shear),
            other => Err(Error::InvalidArgument(format!(
                "unknown parameter '{other}' (expected z, vp, chi or shear)"
            ))),
        }
    }
}

/// A saddle-node: a stable and an unstable root meet and vanish (or
/// appear) as the parameter crosses `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fold {
    pub value: f64,
    /// True when the pair exists below `value` and vanishes above it.
    pub annihilation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationScan {
    pub parameter: Parameter,
    pub values: Vec<f64>,
    pub sets: Vec<FixedPointSet>,
    pub folds: Vec<Fold>,
}

impl BifurcationScan {
    /// `parameter,value,root_v,stability` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},root_v,stability\n", self.parameter.name());
        for (x, set) in self.values.iter().zip(&self.sets) {
            for r in &set.roots {
                s.push_str(&format!("{x},{},{}\n", r.v, r.stability));
            }
        }
        s
    }

    /// Upper stable root at each scanned value, where one exists.
    pub fn upper_stable_branch(&self) -> Vec<(f64, f64)> {
        self.values
            .iter()
            .zip(&self.sets)
            .filter_map(|(x, s)| s.upper_stable().map(|v| (*x, v)))
            .collect()
    }
}

/// Sweeps one environmental input over `[lo, hi]` in `n_steps` values and
/// reports root sets and saddle-node folds. A fold is a change of two in
/// the root count between neighbouring values; a change of one is a root
/// crossing the search boundary. Fold positions are refined by bisection
/// on the parameter to 1e-3 of the range.
pub fn bifurcation_scan(
    model: &IntensityModel,
    env: &Environment,
    parameter: Parameter,
    range: (f64, f64),
    n_steps: usize,
    opts: &RootOptions,
) -> Result<BifurcationScan> {
    let (lo, hi) = range;
    if n_steps < 2 || !(hi > lo) {
        return Err(Error::InvalidArgument(
            "scan needs at least two steps over a non-empty range".into(),
        ));
    }
    let values: Vec<f64> = (0..n_steps)
        .map(|i| lo + (hi - lo) * i as f64 / (n_steps - 1) as f64)
        .collect();
    let sets = par::map_slice(&values, |&x| find_fixed_points(model, &env.with(parameter, x), opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let count = |x: f64| -> Result<usize> {
        Ok(find_fixed_points(model, &env.with(parameter, x), opts)?.roots.len())
    };
    let tol = 1e-3 * (hi - lo);
    let mut folds = Vec::new();
    for i in 0..n_steps - 1 {
        let (na, nb) = (sets[i].roots.len(), sets[i + 1].roots.len());
        if na.abs_diff(nb) != 2 {
            continue;
        }
        let (mut a, mut b) = (values[i], values[i + 1]);
        while b - a > tol {
            let m = 0.5 * (a + b);
            if count(m)? == na {
                a = m;
            } else {
                b = m;
            }
        }
        folds.push(Fold {
            value: 0.5 * (a + b),
            annihilation: na > nb,
        });
    }
    Ok(BifurcationScan {
        parameter,
        values,
        sets,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Monomial, MonomialBasis};
    use crate::model::builtin_paper_model;

    fn cubic() -> IntensityModel {
        // dv'/dtau = v' - v'^3
        let b = MonomialBasis::new(vec![Monomial([1, 0, 0, 0, 0]), Monomial([3, 0, 0, 0, 0])], 3).unwrap();
        IntensityModel::new(b, vec![1.0, -1.0]).unwrap()
    }

    #[test]
    fn cubic_roots() {
        let set = find_fixed_points(&cubic(), &Environment::FAVORABLE, &RootOptions::default()).unwrap();
        assert_eq!(set.roots.len(), 2);
        assert_eq!(set.roots[0].v, 0.0);
        assert_eq!(set.roots[0].stability, Stability::Unstable);
        assert!((set.roots[1].v - 50.0).abs() < 1e-9);
        assert_eq!(set.roots[1].stability, Stability::Stable);
    }

    #[test]
    fn hostile_environment_has_no_roots() {
        let b = MonomialBasis::new(vec![Monomial::CONSTANT, Monomial([1, 0, 0, 0, 0])], 1).unwrap();
        let m = IntensityModel::new(b, vec![-0.1, -1.0]).unwrap();
        let set = find_fixed_points(&m, &Environment::FAVORABLE, &RootOptions::default()).unwrap();
        assert!(set.roots.is_empty());
        assert!(monotone_drift_check(&m, &Environment::FAVORABLE, &RootOptions::default()));
    }

    #[test]
    fn roots_are_accurate() {
        let m = builtin_paper_model();
        for s in [0.0, 10.0, 17.0] {
            let env = Environment::FAVORABLE.with(Parameter::Shear, s);
            let set = find_fixed_points(&m, &env, &RootOptions::default()).unwrap();
            for r in &set.roots {
                assert!(drift_at(&m, &env, AlphaMode::Coupled, r.v).abs() < 1e-8);
            }
            if set.roots.len() >= 3 {
                assert!(!monotone_drift_check(&m, &env, &RootOptions::default()));
            }
        }
    }

    #[test]
    fn fixed_alpha_mode_is_polynomial() {
        let m = builtin_paper_model();
        let opts = RootOptions {
            alpha: AlphaMode::Fixed(1.0),
            ..Default::default()
        };
        let a = drift_at(&m, &Environment::FAVORABLE, opts.alpha, 25.0);
        let b = drift_at(&m, &Environment::FAVORABLE.with(Parameter::Z, 5.0), opts.alpha, 25.0);
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_names_parse() {
        assert_eq!("S".parse::<Parameter>().unwrap(), Parameter::Shear);
        assert_eq!("vp".parse::<Parameter>().unwrap(), Parameter::Vp);
        assert!("q".parse::<Parameter>().is_err());
    }
}
