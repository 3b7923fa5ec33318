mod common;

use chrono::{DateTime, TimeDelta, Utc};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use common::constant_track;
use cyclone_sde::dynamics::{find_fixed_points, Environment, RootOptions};
use cyclone_sde::par;
use cyclone_sde::simulate::{ensemble_quantiles, forecast, simulate, ForcedTrack, IntensitySeries, SimConfig};
use cyclone_sde::synthetic::generate_synthetic_tracks;
use cyclone_sde::builtin_paper_model;

fn favorable(n: usize) -> cyclone_sde::TrackSeries {
    let e = Environment::FAVORABLE;
    constant_track("FAV", n, e.vp, e.chi, e.shear, e.z)
}

fn stable_root() -> f64 {
    find_fixed_points(&builtin_paper_model(), &Environment::FAVORABLE, &RootOptions::default())
        .unwrap()
        .upper_stable()
        .unwrap()
}

#[test]
fn steady_favorable_environment_converges_to_the_fixed_point() {
    let cfg = SimConfig {
        stochastic: false,
        ..SimConfig::default()
    };
    let v = simulate(&builtin_paper_model(), &favorable(61), 20.0, &cfg).unwrap().members.remove(0).v;
    let root = stable_root();
    assert!(v.windows(2).all(|w| w[1] >= w[0] && w[1] <= root));
    // about 0.13 m/s short after 10 days
    assert!(root - v[40] < 0.2, "{} at 10 d vs {root}", v[40]);
    assert!(root - v[60] < 0.1, "{} at 15 d vs {root}", v[60]);
}

#[test]
fn three_day_forecast_approaches_the_fixed_point_from_below() {
    let m = builtin_paper_model();
    let t = favorable(13);
    let ft = ForcedTrack::new(&t, &m).unwrap();
    let mut points = t.clone();
    points.points[0].v_obs = 30.0;
    let v = forecast(&m, &ft, &points, 0, 12).unwrap();
    assert!(v > 30.0 && v < stable_root(), "{v}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn members_do_not_depend_on_worker_count(seed in any::<u64>(), workers in 2usize..6) {
        let m = builtin_paper_model();
        let t = &generate_synthetic_tracks(seed % 97, 1, 20).unwrap()[0];
        let cfg = SimConfig { seed, n_members: 9, ..SimConfig::default() };
        let a = par::with_workers(1, || simulate(&m, t, 25.0, &cfg).unwrap());
        let b = par::with_workers(workers, || simulate(&m, t, 25.0, &cfg).unwrap());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn independent_gaussian_member_stays_inside_two_sigma_band_about_95_percent() {
    let t0 = DateTime::<Utc>::from_timestamp(946_684_800, 0).unwrap();
    let n = 6000;
    let mut g = ChaCha8Rng::seed_from_u64(2);
    let mut member = |id: usize| IntensitySeries {
        storm_id: "G".into(),
        member_id: id,
        times: (0..n).map(|i| t0 + TimeDelta::hours(6 * i as i64)).collect(),
        v: (0..n).map(|_| 40.0 + 5.0 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut g)).collect(),
        lat: vec![15.0; n],
        lon: vec![140.0; n],
    };
    let members: Vec<IntensitySeries> = (0..300).map(&mut member).collect();
    let probe = member(300);
    let bands = ensemble_quantiles(&members, &[0.5]).unwrap();
    let c = bands.containment_2sigma(&probe.v);
    assert!((c - 0.9545).abs() < 0.01, "{c}");
}
