//! Gaussian kernel density estimates and distances between distributions.

use crate::error::{Error, Result};
use crate::par;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Kernel support cut-off in bandwidths; exp(-32) is below f64 resolution
/// relative to the kernel peak.
const KERNEL_CUTOFF: f64 = 8.0;
/// Densities are floored here before taking logarithms.
pub const DENSITY_FLOOR: f64 = 1e-12;

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Scott's rule bandwidth for `n` samples in `d` dimensions.
pub fn scott_bandwidth(sd: f64, n: usize, d: u32) -> f64 {
    sd * (n as f64).powf(-1.0 / (d as f64 + 4.0))
}

/// One-dimensional Gaussian KDE.
#[derive(Debug, Clone, PartialEq)]
pub struct Kde1d {
    /// Sorted ascending.
    samples: Vec<f64>,
    pub bandwidth: f64,
}

impl Kde1d {
    /// Scott's rule bandwidth unless one is given.
    pub fn new(samples: &[f64], bandwidth: Option<f64>) -> Result<Self> {
        if samples.len() < 2 || samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "density estimate needs at least two finite samples".into(),
            ));
        }
        let bw = match bandwidth {
            Some(b) if b > 0.0 && b.is_finite() => b,
            Some(b) => return Err(Error::InvalidArgument(format!("bad bandwidth {b}"))),
            None => {
                let (_, sd) = mean_sd(samples);
                if sd <= 0.0 {
                    return Err(Error::InvalidArgument(
                        "degenerate sample: all values equal".into(),
                    ));
                }
                scott_bandwidth(sd, samples.len(), 1)
            }
        };
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Kde1d {
            samples: sorted,
            bandwidth: bw,
        })
    }

    /// The samples in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.samples.partition_point(|&xi| xi < x - KERNEL_CUTOFF * h);
        let hi = self.samples.partition_point(|&xi| xi <= x + KERNEL_CUTOFF * h);
        let s: f64 = self.samples[lo..hi]
            .iter()
            .map(|&xi| {
                let u = (x - xi) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        s * INV_SQRT_2PI / (h * self.samples.len() as f64)
    }

    pub fn evaluate(&self, grid: &Grid) -> Vec<f64> {
        par::map_range(grid.n, |i| self.density(grid.at(i)))
    }
}

/// Uniform evaluation grid including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) || n < 2 {
            return Err(Error::InvalidArgument("grid needs hi > lo and n >= 2".into()));
        }
        Ok(Grid { lo, hi, n })
    }

    /// Covers every sample set with a margin of five bandwidths.
    pub fn covering(kdes: &[&Kde1d], n: usize) -> Result<Self> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in kdes {
            for &x in k.samples() {
                lo = lo.min(x - 5.0 * k.bandwidth);
                hi = hi.max(x + 5.0 * k.bandwidth);
            }
        }
        Grid::new(lo, hi, n)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn at(&self, i: usize) -> f64 {
        self.lo + self.step() * i as f64
    }
}

/// Trapezoid rule on a uniform grid.
pub fn integrate(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    dx * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[values.len() - 1]))
}

/// Which total-variation formula to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TvConvention {
    /// Half the L1 distance between densities.
    #[default]
    HalfL1,
    /// Half the largest gap between cumulative distributions.
    HalfSupCdf,
}

/// Distance between two density vectors on the same grid.
pub fn tv_from_densities(p: &[f64], q: &[f64], dx: f64, conv: TvConvention) -> f64 {
    match conv {
        TvConvention::HalfL1 => {
            let d: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a - b).abs()).collect();
            0.5 * integrate(&d, dx)
        }
        TvConvention::HalfSupCdf => {
            let (mut cp, mut cq, mut best) = (0.0, 0.0, 0.0f64);
            for i in 1..p.len() {
                cp += 0.5 * dx * (p[i - 1] + p[i]);
                cq += 0.5 * dx * (q[i - 1] + q[i]);
                best = best.max((cp - cq).abs());
            }
            0.5 * best
        }
    }
}

/// Total variation between KDEs of two sample sets. With no grid, one of
/// 4001 points covering both sets is used.
pub fn tv_distance(
    a: &[f64],
    b: &[f64],
    grid: Option<Grid>,
    conv: TvConvention,
) -> Result<f64> {
    let ka = Kde1d::new(a, None)?;
    let kb = Kde1d::new(b, None)?;
    let g = match grid {
        Some(g) => g,
        None => Grid::covering(&[&ka, &kb], 4001)?,
    };
    let p = ka.evaluate(&g);
    let q = kb.evaluate(&g);
    Ok(tv_from_densities(&p, &q, g.step(), conv).clamp(0.0, 1.0))
}

/// Total variation between the 2-d KDE of `(x, y)` pairs and its
/// reflection across `x = y`, on an `n x n` square grid. Zero for a
/// distribution symmetric in its two coordinates.
pub fn reflection_tv(pairs: &[(f64, f64)], n: usize) -> Result<f64> {
    if pairs.len() < 2 || n < 2 {
        return Err(Error::InvalidArgument("need at least two pairs and n >= 2".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (_, sx) = mean_sd(&xs);
    let (_, sy) = mean_sd(&ys);
    if !(sx > 0.0 && sy > 0.0) {
        return Err(Error::InvalidArgument("degenerate sample: zero spread".into()));
    }
    let hx = scott_bandwidth(sx, pairs.len(), 2);
    let hy = scott_bandwidth(sy, pairs.len(), 2);
    let lo = xs.iter().chain(&ys).copied().fold(f64::INFINITY, f64::min) - 5.0 * hx.max(hy);
    let hi = xs.iter().chain(&ys).copied().fold(f64::NEG_INFINITY, f64::max) + 5.0 * hx.max(hy);
    let g = Grid::new(lo, hi, n)?;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * hx * hy * pairs.len() as f64);
    let rows = par::map_range(n, |i| {
        let x = g.at(i);
        let kx: Vec<f64> = xs.iter().map(|&xi| (-0.5 * ((x - xi) / hx).powi(2)).exp()).collect();
        (0..n)
            .map(|j| {
                let y = g.at(j);
                kx.iter()
                    .zip(&ys)
                    .map(|(k, &yi)| k * (-0.5 * ((y - yi) / hy).powi(2)).exp())
                    .sum::<f64>()
                    * norm
            })
            .collect::<Vec<f64>>()
    });
    let dx = g.step();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += (rows[i][j] - rows[j][i]).abs();
        }
    }
    Ok((0.5 * s * dx * dx).clamp(0.0, 1.0))
}

/// Normalized histogram with bins `[origin + k w, origin + (k+1) w)`
/// covering the samples. Returns the left edge of the first bin and the
/// probabilities.
pub fn histogram(samples: &[f64], bin_width: f64, origin: f64) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() || !(bin_width > 0.0) {
        return Err(Error::InvalidArgument("histogram needs samples and a positive width".into()));
    }
    let idx: Vec<i64> = samples
        .iter()
        .map(|x| ((x - origin) / bin_width).floor() as i64)
        .collect();
    let lo = *idx.iter().min().expect("non-empty");
    let hi = *idx.iter().max().expect("non-empty");
    let mut p = vec![0.0; (hi - lo + 1) as usize];
    for i in idx {
        p[(i - lo) as usize] += 1.0;
    }
    let n = samples.len() as f64;
    p.iter_mut().for_each(|x| *x /= n);
    Ok((origin + lo as f64 * bin_width, p))
}

fn check_normalized(p: &[f64]) -> Result<()> {
    let s: f64 = p.iter().sum();
    if p.iter().any(|x| *x < 0.0 || !x.is_finite()) || (s - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "histogram is not normalized (sum {s})"
        )));
    }
    Ok(())
}

/// Shannon entropy in bits.
pub fn entropy(p: &[f64]) -> Result<f64> {
    check_normalized(p)?;
    Ok(p.iter().filter(|&&x| x > 0.0).map(|x| -x * x.log2()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KlOutcome {
    pub bits: f64,
    /// True when some `q` was raised to [`DENSITY_FLOOR`].
    pub floored: bool,
}

/// `sum p log2(p / q)` over bins with `p > 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<KlOutcome> {
    check_normalized(p)?;
    if p.len() != q.len() {
        return Err(Error::InvalidArgument("histograms differ in length".into()));
    }
    let mut floored = false;
    let mut bits = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            let qf = if qi < DENSITY_FLOOR {
                floored = true;
                DENSITY_FLOOR
            } else {
                qi
            };
            bits += pi * (pi / qf).log2();
        }
    }
    if floored {
        log::warn!("density floor applied in divergence");
    }
    Ok(KlOutcome { bits, floored })
}

/// Divergence of an observed sample histogram from a synthetic density,
/// both binned at `bin_width`. The synthetic bin mass is the density at the
/// bin center times the width.
pub fn kl_samples_vs_kde(observed: &[f64], synthetic: &Kde1d, bin_width: f64) -> Result<KlOutcome> {
    let (lo, p) = histogram(observed, bin_width, 0.0)?;
    let q: Vec<f64> = (0..p.len())
        .map(|i| synthetic.density(lo + (i as f64 + 0.5) * bin_width) * bin_width)
        .collect();
    kl_divergence(&p, &q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_and_kl_closed_forms() {
        assert!((entropy(&[0.25; 4]).unwrap() - 2.0).abs() < 1e-15);
        let kl = kl_divergence(&[0.5, 0.5], &[0.25, 0.75]).unwrap();
        let expect = 0.5 * 2f64.log2() + 0.5 * (2.0f64 / 3.0).log2();
        assert!((kl.bits - expect).abs() < 1e-15);
        assert!((kl.bits - 0.2075).abs() < 1e-4);
        let back = kl_divergence(&[0.25, 0.75], &[0.5, 0.5]).unwrap();
        assert!((back.bits - kl.bits).abs() > 1e-3);
        assert_eq!(kl_divergence(&[0.3, 0.7], &[0.3, 0.7]).unwrap().bits, 0.0);
        assert!(entropy(&[0.3, 0.3]).is_err());
        assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap().floored);
    }

    #[test]
    fn kde_integrates_to_one() {
        let s: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let k = Kde1d::new(&s, None).unwrap();
        let g = Grid::covering(&[&k], 4001).unwrap();
        assert!((integrate(&k.evaluate(&g), g.step()) - 1.0).abs() < 1e-3);
        assert!(Kde1d::new(&[1.0, 1.0, 1.0], None).is_err());
        assert!(Kde1d::new(&[1.0], None).is_err());
    }

    #[test]
    fn tv_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert!(tv_distance(&a, &a, None, TvConvention::HalfL1).unwrap() < 1e-12);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        assert!(tv_distance(&a, &b, None, TvConvention::HalfL1).unwrap() > 0.999);
        let ab = tv_distance(&a, &b, None, TvConvention::HalfSupCdf).unwrap();
        assert!((ab - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tv_of_exact_gaussians() {
        let g = Grid::new(-10.0, 12.0, 20001).unwrap();
        let phi = |x: f64| INV_SQRT_2PI * (-0.5 * x * x).exp();
        let p: Vec<f64> = (0..g.n).map(|i| phi(g.at(i))).collect();
        let q: Vec<f64> = (0..g.n).map(|i| phi(g.at(i) - 2.0)).collect();
        let tv = tv_from_densities(&p, &q, g.step(), TvConvention::HalfL1);
        assert!((tv - 0.682689).abs() < 1e-5);
    }

    #[test]
    fn symmetric_pairs_have_small_reflection_tv() {
        let mut pairs = Vec::new();
        for i in 0..30 {
            for j in 0..30 {
                pairs.push((i as f64, j as f64));
            }
        }
        assert!(reflection_tv(&pairs, 80).unwrap() < 1e-9);
        let skew: Vec<(f64, f64)> = (0..200).map(|i| (i as f64 * 0.1, i as f64 * 0.1 + 5.0)).collect();
        assert!(reflection_tv(&skew, 80).unwrap() > 0.5);
    }
}
