//! Best-subset selection by splicing, and cross-validated support paths.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{column_scales, min_norm_lstsq, QrReduced};
use crate::par;
use crate::rng::{self, DOMAIN_FOLDS, DOMAIN_SPLICE};
use crate::sindy::RegressionSystem;

/// Tuning for [`splice_select`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpliceOptions {
    /// Random initial supports tried in addition to the screened start.
    pub restarts: usize,
    /// Run exhaustive single-swap passes after splicing converges.
    pub polish: bool,
    /// Relative loss decrease required to accept an exchange.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpliceOptions {
    fn default() -> Self {
        SpliceOptions {
            restarts: 500,
            polish: true,
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// A fitted support.
#[derive(Debug, Clone, PartialEq)]
pub struct SpliceResult {
    /// Sorted column indices.
    pub support: Vec<usize>,
    /// Full-length coefficients in original column units.
    pub coefficients: Vec<f64>,
    /// Residual sum of squares divided by the number of rows.
    pub loss: f64,
}

/// The standardized, QR-compressed problem shared by all candidate supports.
struct Reduced {
    red: QrReduced,
    scales: Vec<f64>,
    p: usize,
}

impl Reduced {
    fn new(system: &RegressionSystem) -> Self {
        let scales = column_scales(&system.design);
        let mut d = system.design.clone();
        for (j, s) in scales.iter().enumerate() {
            d.column_mut(j).scale_mut(1.0 / s);
        }
        let p = d.ncols();
        Reduced {
            red: QrReduced::new(d, &system.response),
            scales,
            p,
        }
    }

    fn fit(&self, support: &[usize]) -> (Vec<f64>, DVector<f64>, f64) {
        let a = self.red.r.select_columns(support);
        let (x, _) = min_norm_lstsq(&a, &self.red.y);
        let resid = &self.red.y - &a * &x;
        let rss = resid.norm_squared() + self.red.floor;
        (x.iter().copied().collect(), resid, rss)
    }

    fn rss(&self, support: &[usize]) -> f64 {
        self.fit(support).2
    }

    fn col(&self, j: usize) -> nalgebra::DVectorView<'_, f64> {
        self.red.r.column(j)
    }

    /// Splicing from `init` until no exchange improves.
    fn splice(&self, init: Vec<usize>, opts: &SpliceOptions) -> (Vec<usize>, f64) {
        let k = init.len();
        let mut active = init;
        let (mut beta, mut resid, mut loss) = self.fit(&active);
        for _ in 0..opts.max_iter {
            let in_active = membership(self.p, &active);
            // backward sacrifice: beta_j^2 |col_j|^2
            let mut back: Vec<(f64, usize)> = active
                .iter()
                .zip(&beta)
                .map(|(&j, b)| (b * b * self.col(j).norm_squared(), j))
                .collect();
            back.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            // forward sacrifice: (col_j' r)^2 / |col_j|^2
            let mut fwd: Vec<(f64, usize)> = (0..self.p)
                .filter(|&j| !in_active[j])
                .map(|j| {
                    let c = self.col(j);
                    let nn = c.norm_squared();
                    let g = if nn > 0.0 { c.dot(&resid).powi(2) / nn } else { 0.0 };
                    (g, j)
                })
                .collect();
            fwd.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let smax = k.min(fwd.len());
            let mut accepted = None;
            for s in (1..=smax).rev() {
                let drop: Vec<usize> = back[..s].iter().map(|x| x.1).collect();
                let mut cand: Vec<usize> =
                    active.iter().copied().filter(|j| !drop.contains(j)).collect();
                cand.extend(fwd[..s].iter().map(|x| x.1));
                cand.sort_unstable();
                let fit = self.fit(&cand);
                if fit.2 < loss * (1.0 - opts.tol) {
                    accepted = Some((cand, fit));
                    break;
                }
            }
            match accepted {
                Some((cand, (b, r, l))) => {
                    active = cand;
                    beta = b;
                    resid = r;
                    loss = l;
                }
                None => break,
            }
        }
        (active, loss)
    }

    /// Best single swap by projecting out all-but-one active columns.
    fn best_swap(&self, active: &[usize], loss: f64) -> Option<(Vec<usize>, f64)> {
        let in_active = membership(self.p, active);
        let mut best: Option<(f64, usize, usize)> = None;
        for (pos, &i) in active.iter().enumerate() {
            let rest: Vec<usize> = active
                .iter()
                .enumerate()
                .filter(|&(q, _)| q != pos)
                .map(|(_, &j)| j)
                .collect();
            let q = orthonormal_basis(&self.red.r.select_columns(&rest));
            let y = &self.red.y;
            let r_rest = y - &q * (q.transpose() * y);
            let rss_rest = r_rest.norm_squared() + self.red.floor;
            let proj = q.transpose() * &self.red.r;
            for j in 0..self.p {
                if in_active[j] {
                    continue;
                }
                let u = self.col(j) - &q * proj.column(j);
                let nn = u.norm_squared();
                if nn <= 1e-14 * self.col(j).norm_squared().max(1e-300) {
                    continue;
                }
                let cand = rss_rest - u.dot(&r_rest).powi(2) / nn;
                if best.is_none_or(|b| cand < b.0) {
                    best = Some((cand, i, j));
                }
            }
        }
        let (cand, i, j) = best?;
        if cand < loss * (1.0 - 1e-8) {
            let mut next: Vec<usize> = active.iter().map(|&a| if a == i { j } else { a }).collect();
            next.sort_unstable();
            let l = self.rss(&next);
            (l < loss).then_some((next, l))
        } else {
            None
        }
    }

    fn search(&self, init: Vec<usize>, opts: &SpliceOptions) -> (Vec<usize>, f64) {
        let (mut active, mut loss) = self.splice(init, opts);
        if opts.polish {
            for _ in 0..opts.max_iter {
                match self.best_swap(&active, loss) {
                    Some((next, l)) => {
                        let (a, l2) = self.splice(next, opts);
                        active = a;
                        loss = l2.min(l);
                    }
                    None => break,
                }
            }
        }
        (active, loss)
    }

    /// Top-k columns by absolute correlation with the response.
    fn screened(&self, k: usize) -> Vec<usize> {
        let mut score: Vec<(f64, usize)> = (0..self.p)
            .map(|j| (self.col(j).dot(&self.red.y).abs(), j))
            .collect();
        score.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut s: Vec<usize> = score[..k].iter().map(|x| x.1).collect();
        s.sort_unstable();
        s
    }

    fn select(
        &self,
        k: usize,
        seed: u64,
        warm: Option<&[usize]>,
        opts: &SpliceOptions,
    ) -> (Vec<usize>, f64) {
        let mut starts = vec![self.screened(k)];
        if let Some(w) = warm {
            starts.push(self.extend_greedy(w, k));
        }
        for r in 0..opts.restarts {
            let mut g = rng::stream(seed, &[DOMAIN_SPLICE, k as u64, r as u64]);
            let mut s = sample(&mut g, self.p, k).into_vec();
            s.sort_unstable();
            starts.push(s);
        }
        let results = par::map_slice(&starts, |s| self.search(s.clone(), opts));
        results
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)))
            .expect("at least one start")
    }

    /// Grows or trims `base` to size `k` by forward steps of largest gain.
    fn extend_greedy(&self, base: &[usize], k: usize) -> Vec<usize> {
        let mut s: Vec<usize> = base.iter().copied().take(k).collect();
        while s.len() < k {
            let (_, resid, _) = self.fit(&s);
            let member = membership(self.p, &s);
            let j = (0..self.p)
                .filter(|&j| !member[j])
                .max_by(|&a, &b| {
                    let ga = gain(self.col(a), &resid);
                    let gb = gain(self.col(b), &resid);
                    ga.total_cmp(&gb).then(b.cmp(&a))
                })
                .expect("free column");
            s.push(j);
        }
        s.sort_unstable();
        s
    }

    fn result(&self, support: Vec<usize>, n_rows: usize) -> SpliceResult {
        let (x, _, rss) = self.fit(&support);
        let mut coefficients = vec![0.0; self.p];
        for (&j, xj) in support.iter().zip(&x) {
            coefficients[j] = xj / self.scales[j];
        }
        SpliceResult {
            support,
            coefficients,
            loss: rss / n_rows as f64,
        }
    }
}

fn gain(c: nalgebra::DVectorView<'_, f64>, r: &DVector<f64>) -> f64 {
    let nn = c.norm_squared();
    if nn > 0.0 {
        c.dot(r).powi(2) / nn
    } else {
        0.0
    }
}

fn membership(p: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; p];
    for &j in set {
        m[j] = true;
    }
    m
}

fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    a.clone().qr().q()
}

fn check_k(system: &RegressionSystem, k: usize) -> Result<()> {
    let p = system.n_cols();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!(
            "support size {k} outside 1..={p}"
        )));
    }
    if system.n_rows() < k {
        return Err(Error::InvalidArgument(format!(
            "{} rows cannot support {k} terms",
            system.n_rows()
        )));
    }
    Ok(())
}

/// Finds a support of exactly `k` columns minimizing the residual sum of
/// squares, then refits by least squares on that support.
pub fn splice_select(
    system: &RegressionSystem,
    k: usize,
    seed: u64,
    opts: &SpliceOptions,
) -> Result<SpliceResult> {
    check_k(system, k)?;
    let red = Reduced::new(system);
    let (support, _) = red.select(k, seed, None, opts);
    Ok(red.result(support, system.n_rows()))
}

/// Supports for `k = 1..=k_max`, each warm-started from the previous one so
/// the training loss never increases with `k`.
pub fn splice_path(
    system: &RegressionSystem,
    k_max: usize,
    seed: u64,
    opts: &SpliceOptions,
) -> Result<Vec<SpliceResult>> {
    check_k(system, k_max)?;
    let red = Reduced::new(system);
    let mut out: Vec<SpliceResult> = Vec::with_capacity(k_max);
    let mut prev: Option<(Vec<usize>, f64)> = None;
    for k in 1..=k_max {
        let (mut s, mut l) = red.select(k, seed, prev.as_ref().map(|p| p.0.as_slice()), opts);
        if let Some((ps, pl)) = &prev {
            if l > *pl {
                // nested sets: the previous support plus any column is feasible
                s = red.extend_greedy(ps, k);
                l = red.rss(&s).min(*pl);
            }
        }
        out.push(red.result(s.clone(), system.n_rows()));
        prev = Some((s, l));
    }
    Ok(out)
}

/// One support size on a cross-validated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEntry {
    pub k: usize,
    pub support: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub train_loss: f64,
    pub cv_mean: f64,
    pub cv_se: f64,
    pub fold_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPath {
    pub entries: Vec<PathEntry>,
}

impl SparsityPath {
    /// Smallest `k` whose mean CV loss is within one standard error of the
    /// best mean.
    pub fn one_se_k(&self) -> Option<usize> {
        let best = self
            .entries
            .iter()
            .min_by(|a, b| a.cv_mean.total_cmp(&b.cv_mean))?;
        let thresh = best.cv_mean + best.cv_se;
        self.entries
            .iter()
            .filter(|e| e.cv_mean <= thresh)
            .map(|e| e.k)
            .min()
    }

    pub fn entry(&self, k: usize) -> Option<&PathEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// `k,train_loss,cv_mean,cv_se` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,train_loss,cv_mean,cv_se\n");
        for e in &self.entries {
            s.push_str(&format!("{},{},{},{}\n", e.k, e.train_loss, e.cv_mean, e.cv_se));
        }
        s
    }
}

/// Assigns each storm to a fold. Depends only on the set of storm ids and
/// the seed.
pub fn fold_assignment(storm_ids: &[String], folds: usize, seed: u64) -> Result<Vec<usize>> {
    let mut sorted: Vec<&String> = storm_ids.iter().collect();
    sorted.sort();
    sorted.dedup();
    if folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".into()));
    }
    if sorted.len() < folds {
        return Err(Error::InvalidArgument(format!(
            "{} storms cannot fill {folds} folds",
            sorted.len()
        )));
    }
    let mut g = rng::stream(seed, &[DOMAIN_FOLDS]);
    sorted.shuffle(&mut g);
    Ok(storm_ids
        .iter()
        .map(|id| sorted.iter().position(|s| *s == id).expect("present") % folds)
        .collect())
}

/// Cross-validated sparsity path over `k_values`. Folds never split a storm.
pub fn cv_path(
    system: &RegressionSystem,
    k_values: &[usize],
    folds: usize,
    seed: u64,
    opts: &SpliceOptions,
) -> Result<SparsityPath> {
    let k_max = *k_values
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidArgument("no support sizes given".into()))?;
    check_k(system, k_max)?;
    let present: Vec<String> = {
        let mut used = vec![false; system.storm_ids.len()];
        for m in &system.row_meta {
            used[m.storm] = true;
        }
        system
            .storm_ids
            .iter()
            .zip(used)
            .filter(|(_, u)| *u)
            .map(|(s, _)| s.clone())
            .collect()
    };
    let assign = fold_assignment(&present, folds, seed)?;
    let mut fold_of = vec![usize::MAX; system.storm_ids.len()];
    for (id, f) in present.iter().zip(&assign) {
        let idx = system.storm_ids.iter().position(|s| s == id).expect("present");
        fold_of[idx] = *f;
    }
    let full = splice_path(system, k_max, seed, opts)?;
    let per_fold = par::map_range(folds, |f| -> Result<Vec<f64>> {
        let train = system.filter_storms(|s| fold_of[s] != f);
        let test = system.filter_storms(|s| fold_of[s] == f);
        let path = splice_path(&train, k_max, seed, opts)?;
        Ok(k_values
            .iter()
            .map(|&k| {
                let b = DVector::from_column_slice(&path[k - 1].coefficients);
                (&test.response - &test.design * b).norm_squared() / test.n_rows() as f64
            })
            .collect())
    });
    let per_fold: Vec<Vec<f64>> = per_fold.into_iter().collect::<Result<_>>()?;
    let entries = k_values
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let fl: Vec<f64> = per_fold.iter().map(|v| v[i]).collect();
            let n = fl.len() as f64;
            let mean = fl.iter().sum::<f64>() / n;
            let var = fl.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let r = &full[k - 1];
            PathEntry {
                k,
                support: r.support.clone(),
                coefficients: r.coefficients.clone(),
                train_loss: r.loss,
                cv_mean: mean,
                cv_se: (var / n).sqrt(),
                fold_losses: fl,
            }
        })
        .collect();
    Ok(SparsityPath { entries })
}
