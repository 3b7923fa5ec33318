mod common;

use chrono::{DateTime, TimeDelta, Utc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cyclone_sde::density::{entropy, kl_divergence, tv_from_densities, TvConvention};
use cyclone_sde::hazard::{gridded_pdi_climatology, lmi, lmi_distribution, pdi};
use cyclone_sde::simulate::{simulate, IntensitySeries, SimConfig};
use cyclone_sde::synthetic::generate_synthetic_tracks;
use cyclone_sde::{builtin_paper_model, load_tracks, save_tracks};

fn series(v: Vec<f64>, lat: f64, lon: f64) -> IntensitySeries {
    let t0 = DateTime::<Utc>::from_timestamp(946_684_800, 0).unwrap();
    let n = v.len();
    IntensitySeries {
        storm_id: "H".into(),
        member_id: 0,
        times: (0..n).map(|i| t0 + TimeDelta::hours(6 * i as i64)).collect(),
        v,
        lat: (0..n).map(|i| lat + 0.3 * i as f64).collect(),
        lon: (0..n).map(|i| lon - 0.5 * i as f64).collect(),
    }
}

fn normalized(x: &[f64]) -> Vec<f64> {
    let s: f64 = x.iter().sum();
    x.iter().map(|a| a / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn pdi_is_cubically_homogeneous(v in prop::collection::vec(0.0f64..90.0, 2..30), c in 0.1f64..4.0) {
        let a = pdi(&series(v.clone(), 15.0, 140.0));
        let b = pdi(&series(v.iter().map(|x| c * x).collect(), 15.0, 140.0));
        prop_assert!((b - c.powi(3) * a).abs() <= 1e-9 * (1.0 + b.abs()));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn gridded_pdi_shifts_with_the_storm(v in prop::collection::vec(5.0f64..80.0, 2..20), lat in 5.0f64..30.0, lon in 100.0f64..170.0, shift in -3i64..4) {
        let cell = 6.0;
        let a = gridded_pdi_climatology(&[series(v.clone(), lat, lon)], cell, 2.0).unwrap();
        let b = gridded_pdi_climatology(&[series(v, lat, lon + shift as f64 * cell)], cell, 2.0).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for ((i, j), x) in &a {
            let y = b.get(&(*i, j + shift)).copied().unwrap_or(f64::NAN);
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn divergences_are_well_behaved(p in prop::collection::vec(0.01f64..1.0, 2..12), q_seed in any::<u64>()) {
        let mut g = ChaCha8Rng::seed_from_u64(q_seed);
        let q: Vec<f64> = p.iter().map(|_| g.random_range(0.01..1.0)).collect();
        let (p, q) = (normalized(&p), normalized(&q));
        let kl = kl_divergence(&p, &q).unwrap();
        prop_assert!(kl.bits >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().bits.abs() < 1e-12);
        let h = entropy(&p).unwrap();
        prop_assert!(h >= -1e-12 && h <= (p.len() as f64).log2() + 1e-12);
        let tv_pq = tv_from_densities(&p, &q, 1.0, TvConvention::HalfL1);
        let tv_qp = tv_from_densities(&q, &p, 1.0, TvConvention::HalfL1);
        prop_assert!((tv_pq - tv_qp).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&tv_pq));
    }
}

#[test]
fn lmi_histogram_converges_to_its_density() {
    // Lifetime maxima uniform on [20, 80] m/s.
    let mut g = ChaCha8Rng::seed_from_u64(6);
    let lmis: Vec<f64> = (0..10_000).map(|_| g.random_range(20.0..80.0)).collect();
    let edges: Vec<f64> = (0..=60).map(|i| 20.0 + i as f64).collect();
    let d = lmi_distribution(&lmis, &edges, None, 0, 0).unwrap();
    let mut cdf = 0.0;
    let mut ks: f64 = 0.0;
    for (i, p) in d.density.iter().enumerate() {
        cdf += p * (edges[i + 1] - edges[i]);
        ks = ks.max((cdf - (edges[i + 1] - 20.0) / 60.0).abs());
    }
    assert!(ks < 0.05, "KS {ks}");
}

#[test]
fn simulated_climatology_matches_its_generating_observations() {
    let model = builtin_paper_model();
    let tracks = generate_synthetic_tracks(21, 40, 40).unwrap();
    let observed: Vec<IntensitySeries> = tracks.iter().map(IntensitySeries::from_observed).collect();
    let members = 20;
    let mut simulated = Vec::new();
    for t in &tracks {
        let cfg = SimConfig { n_members: members, seed: 1, ..SimConfig::default() };
        simulated.extend(simulate(&model, t, t.points[0].v_obs, &cfg).unwrap().members);
    }
    let total = |m: &std::collections::BTreeMap<(i64, i64), f64>| m.values().sum::<f64>();
    let obs = total(&gridded_pdi_climatology(&observed, 6.0, 1.0).unwrap());
    let sim = total(&gridded_pdi_climatology(&simulated, 6.0, members as f64).unwrap());
    let ratio = sim / obs;
    assert!((0.8..=1.25).contains(&ratio), "domain PDI ratio {ratio}");
    let lmi_obs: f64 = observed.iter().map(lmi).sum::<f64>() / observed.len() as f64;
    let lmi_sim: f64 = simulated.iter().map(lmi).sum::<f64>() / simulated.len() as f64;
    assert!((lmi_sim / lmi_obs - 1.0).abs() < 0.2, "{lmi_sim} vs {lmi_obs}");
}

#[test]
fn synthetic_track_file_round_trips() {
    let tracks = generate_synthetic_tracks(10, 10, 25).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tracks.csv");
    save_tracks(&tracks, &path).unwrap();
    assert_eq!(load_tracks(&path).unwrap(), tracks);
}
