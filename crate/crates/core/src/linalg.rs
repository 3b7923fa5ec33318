//! Least-squares kernels built on orthogonal factorizations.

use nalgebra::{DMatrix, DVector};

/// A tall least-squares problem `min |C - D b|` compressed by a thin QR
/// factorization: `|C - D b|^2 = |y - R b|^2 + floor`.
#[derive(Debug, Clone)]
pub struct QrReduced {
    /// Upper-triangular factor, `min(n, p) x p`.
    pub r: DMatrix<f64>,
    /// Leading `min(n, p)` entries of `Q^T C`.
    pub y: DVector<f64>,
    /// Part of `|C|^2` orthogonal to the column space of `D`.
    pub floor: f64,
    pub n_rows: usize,
}

impl QrReduced {
    pub fn new(design: DMatrix<f64>, response: &DVector<f64>) -> Self {
        let n_rows = design.nrows();
        let k = n_rows.min(design.ncols());
        let total = response.norm_squared();
        let qr = design.qr();
        let mut qtc = response.clone();
        qr.q_tr_mul(&mut qtc);
        let y = qtc.rows(0, k).into_owned();
        let floor = (total - y.norm_squared()).max(0.0);
        QrReduced {
            r: qr.r(),
            y,
            floor,
            n_rows,
        }
    }

    /// Least squares on the columns `cols` of the reduced system. Returns
    /// the coefficients (aligned with `cols`), the full residual sum of
    /// squares and the numerical rank.
    pub fn solve_subset(&self, cols: &[usize]) -> (Vec<f64>, f64, usize) {
        let a = self.r.select_columns(cols);
        let (x, rank) = min_norm_lstsq(&a, &self.y);
        let resid = (&self.y - &a * &x).norm_squared();
        (x.iter().copied().collect(), resid + self.floor, rank)
    }
}

/// Minimum-norm least-squares solution via the SVD. Singular values below
/// `max(m, n) * eps * s_max` are treated as zero.
pub fn min_norm_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let ncols = a.ncols();
    if ncols == 0 || a.nrows() == 0 {
        return (DVector::zeros(ncols), 0);
    }
    let svd = a.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let tol = (a.nrows().max(ncols) as f64) * f64::EPSILON * s_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut x = DVector::zeros(ncols);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            let coef = u.column(i).dot(b) / s;
            x += v_t.row(i).transpose() * coef;
        }
    }
    (x, rank)
}

/// Column Euclidean norms, with zero norms replaced by 1.
pub fn column_scales(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect()
}
