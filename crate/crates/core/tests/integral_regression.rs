mod common;

use common::{euler_intensities, raw_corpus};
use cyclone_sde::sindy::{build_system, least_squares, SystemOptions};
use cyclone_sde::synthetic::generate_synthetic_tracks;
use cyclone_sde::{builtin_paper_model, full_basis, IntensityModel, Monomial, MonomialBasis};

#[test]
fn noiseless_linear_relaxation_is_recovered_exactly() {
    // dv'/dtau = 0.1 - 0.05 v'
    let terms = vec![Monomial([0; 5]), Monomial([1, 0, 0, 0, 0])];
    let model = IntensityModel::new(MonomialBasis::new(terms.clone(), 1).unwrap(), vec![0.1, -0.05]).unwrap();
    let mut tracks = raw_corpus(3, 8, 25);
    euler_intensities(&model, &mut tracks);
    let basis = full_basis(1);
    assert_eq!(basis.len(), 6);
    let sys = build_system(&tracks, &basis, &SystemOptions::new(10)).unwrap();
    let fit = least_squares(&sys, None).unwrap();
    for (j, t) in basis.terms().iter().enumerate() {
        let want = match terms.iter().position(|x| x == t) {
            Some(0) => 0.1,
            Some(_) => -0.05,
            None => 0.0,
        };
        assert!((fit.coefficients[j] - want).abs() < 1e-6, "{t}: {}", fit.coefficients[j]);
    }
}

fn coefficient_error(fit: &[f64], support: &[usize], truth: &[f64]) -> f64 {
    support
        .iter()
        .zip(truth)
        .map(|(&j, t)| (fit[j] - t).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// True-support coefficient error, 48 h windows against single 6 h steps.
#[test]
fn integral_windows_beat_single_step_differences_under_quantisation() {
    let truth = builtin_paper_model();
    let basis = full_basis(3);
    let support: Vec<usize> = truth.basis().terms().iter().map(|t| basis.position(t).unwrap()).collect();
    let seeds = 120u64;
    let mut wins = 0;
    let (mut sum_int, mut sum_fd) = (0.0, 0.0);
    for seed in 0..seeds {
        let tracks = generate_synthetic_tracks(seed, 12, 30).unwrap();
        let err = |h: usize| {
            let sys = build_system(&tracks, &basis, &SystemOptions::new(h)).unwrap();
            let mut sorted = support.clone();
            sorted.sort_unstable();
            let fit = least_squares(&sys, Some(&sorted)).unwrap();
            coefficient_error(&fit.coefficients, &support, truth.coefficients())
        };
        let (e_int, e_fd) = (err(8), err(1));
        sum_int += e_int;
        sum_fd += e_fd;
        if e_int < e_fd {
            wins += 1;
        }
    }
    let n = seeds as f64;
    println!(
        "mean coefficient error: integral {:.4}, single step {:.4}; integral better in {wins}/{seeds}",
        sum_int / n,
        sum_fd / n
    );
    assert!(sum_int < sum_fd);
    assert!(wins as f64 >= 0.75 * n, "{wins}/{seeds}");
}
