mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use common::raw_corpus;
use cyclone_sde::calibration::{bias_report, bin_equal_count, compute_residuals, Residual};
use cyclone_sde::{builtin_paper_model, TrackSeries};

#[test]
fn bootstrap_standard_error_matches_analytic_value() {
    let mut g = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<Residual> = (0..4000)
        .map(|i| Residual {
            v_initial: 20.0 + i as f64 * 1e-3,
            residual: 3.0 * g.sample::<f64, _>(StandardNormal),
        })
        .collect();
    let bins = bin_equal_count(&samples, 1, 1000, 2).unwrap();
    let b = &bins[0];
    let analytic = b.std_residual / (b.count as f64).sqrt();
    assert!((b.mean_se / analytic - 1.0).abs() < 0.2, "{} vs {analytic}", b.mean_se);
}

#[test]
fn endpoint_noise_is_recovered_as_residual_spread() {
    // Two-point storms whose start is exact and whose end carries N(0, 2^2)
    // observation noise: the 6 h residual is exactly that noise.
    let model = builtin_paper_model();
    let mut g = ChaCha8Rng::seed_from_u64(3);
    let mut pairs = Vec::new();
    for t in raw_corpus(5, 60, 30) {
        for i in 0..t.len() - 1 {
            let mut pts = t.points[i..i + 2].to_vec();
            pts[1].v_obs = (pts[1].v_obs + 2.0 * g.sample::<f64, _>(StandardNormal)).max(0.0);
            pairs.push(TrackSeries::new(format!("{}-{i}", t.storm_id), pts).unwrap());
        }
    }
    let res = compute_residuals(&model, &pairs, 6).unwrap();
    assert!(res.len() >= 1000);
    let n = res.len() as f64;
    let mean = res.iter().map(|r| r.residual).sum::<f64>() / n;
    let sd = (res.iter().map(|r| (r.residual - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd / 2.0 - 1.0).abs() < 0.1, "residual sd {sd}");
}

#[test]
fn only_the_shifted_bin_is_flagged() {
    // Symmetric +/- pairs give every bin a mean of exactly zero before the
    // lowest bin is shifted by 1 m/s.
    let mut g = ChaCha8Rng::seed_from_u64(4);
    let mut samples = Vec::new();
    for i in 0..3000 {
        let v = 10.0 + 60.0 * i as f64 / 3000.0;
        let e: f64 = g.sample(StandardNormal);
        let shift = if v < 20.0 { 1.0 } else { 0.0 };
        samples.push(Residual { v_initial: v, residual: e + shift });
        samples.push(Residual { v_initial: v, residual: -e + shift });
    }
    let bins = bin_equal_count(&samples, 6, 500, 5).unwrap();
    let flags: Vec<bool> = bias_report(&bins).iter().map(|b| b.significant).collect();
    assert_eq!(flags, vec![true, false, false, false, false, false]);
}

#[test]
fn unbiased_residuals_are_rarely_flagged() {
    let seeds = 2000;
    let mut flagged = 0;
    let mut total = 0;
    for seed in 0..seeds {
        let mut g = ChaCha8Rng::seed_from_u64(seed);
        let samples: Vec<Residual> = (0..1800)
            .map(|_| {
                let v = g.random_range(10.0..70.0);
                Residual {
                    v_initial: v,
                    residual: (0.1 * v) * g.sample::<f64, _>(StandardNormal),
                }
            })
            .collect();
        let bins = bin_equal_count(&samples, 6, 200, seed).unwrap();
        for b in bias_report(&bins) {
            total += 1;
            flagged += b.significant as usize;
        }
    }
    let unflagged = 1.0 - flagged as f64 / total as f64;
    assert!(unflagged >= 0.95, "{unflagged}");
}
