use std::sync::Arc;

use qfames::experiment::{illustrative_problem, run_trial, DataMode};
use qfames::scalar::{CMat, C};
use qfames::{exact_signal, run_qfames, sample_times, QfamesConfig, SpectralModel};

fn config(n: usize, t: f64, sigma: f64) -> QfamesConfig {
    QfamesConfig {
        n,
        t,
        sigma,
        i_tilde: 2,
        tau: 0.3,
        q: 0.005,
        alpha: 5.0,
    }
}

#[test]
fn exact_illustrative_matches_oracle() {
    let p = illustrative_problem().unwrap();
    let truth = p.truth(10.0, 0.05, 1e-9).unwrap();
    assert_eq!(truth.multiplicities(), vec![2, 1]);
    let cfg = config(3000, 100.0, 6.0);
    let est = run_trial(&p.model, &cfg, DataMode::Exact, 4).unwrap();
    let m: Vec<usize> = est.clusters.iter().map(|c| c.multiplicity).collect();
    assert_eq!(m, vec![2, 1]);
    for (a, b) in est.centers().iter().zip(truth.centers()) {
        assert!((a - b).abs() <= cfg.q / cfg.t);
    }
}

#[test]
fn shot_data_recover_illustrative_clusters() {
    let p = illustrative_problem().unwrap();
    let cfg = config(2000, 80.0, 4.0);
    let est = run_trial(&p.model, &cfg, DataMode::Shots(1), 9).unwrap();
    let m: Vec<usize> = est.clusters.iter().map(|c| c.multiplicity).collect();
    assert_eq!(m, vec![2, 1]);
    assert!(est.centers()[0].abs() < 2e-3);
    assert!((est.centers()[1] - 0.1).abs() < 2e-3);
}

#[test]
fn single_precision_pipeline() {
    let s = 1.0f32 / 3f32.sqrt();
    let signs = [[1.0f32, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]];
    let phi = CMat::<f32>::from_fn(3, 3, |i, j| C::new(s * signs[i][j], 0.0));
    let model = SpectralModel::from_overlaps(&[0.0f32, 0.0, 0.1], &phi, &phi).unwrap();
    let times = Arc::new(sample_times(80.0f32, 4.0, 2000, 2).unwrap());
    let tensor = exact_signal(&model, times).unwrap();
    let est = run_qfames(&tensor, &config(2000, 80.0, 4.0)).unwrap();
    let m: Vec<usize> = est.clusters.iter().map(|c| c.multiplicity).collect();
    assert_eq!(m, vec![2, 1]);
    assert!(est.centers()[0].abs() < 1e-3);
}
