use std::sync::Arc;

use proptest::prelude::*;
use qfames::acquisition::signal::SignalMode;
use qfames::dods::{search_and_block, wasserstein1, Landscape};
use qfames::models::pauli::PauliString;
use qfames::oracle::{error_metric, nogo_construct};
use qfames::scalar::{CMat, C};
use qfames::{exact_signal, sample_times, shot_sample, SpectralModel};

fn cmat(rows: usize, cols: usize, vals: &[(f64, f64)]) -> CMat<f64> {
    let mut m = CMat::from_fn(rows, cols, |i, j| {
        let (a, b) = vals[(i * cols + j) % vals.len()];
        C::new(a + 0.1 * i as f64, b - 0.07 * j as f64)
    });
    for i in 0..rows {
        let n = m.row(i).norm();
        m.row_mut(i).unscale_mut(n);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn times_respect_truncation_and_seed(width in 0.5f64..200.0, sigma in 0.2f64..6.0, n in 1usize..400, seed in any::<u64>()) {
        let a = sample_times(width, sigma, n, seed).unwrap();
        let b = sample_times(width, sigma, n, seed).unwrap();
        prop_assert_eq!(&a.times, &b.times);
        prop_assert!(a.times.iter().all(|t| t.abs() <= sigma * width));
    }

    #[test]
    fn single_shots_are_unit_signs(seed in any::<u64>(), n in 1usize..60) {
        let phi = cmat(2, 3, &[(0.3, 0.1), (-0.2, 0.5), (0.7, 0.0)]);
        let model = SpectralModel::from_overlaps(&[0.0, 0.4, -1.1], &phi, &phi).unwrap();
        let times = Arc::new(sample_times(5.0, 2.0, n, seed).unwrap());
        let exact = exact_signal(&model, times).unwrap();
        prop_assert!(exact.data.iter().all(|z| z.norm() <= 1.0 + 1e-12));
        let shots = shot_sample(&exact, 1, seed).unwrap();
        let sampled = matches!(shots.mode, SignalMode::Shot { .. });
        prop_assert!(sampled);
        prop_assert!(shots.data.iter().all(|z| z.re.abs() == 1.0 && z.im.abs() == 1.0));
    }

    #[test]
    fn search_candidates_are_separated(values in prop::collection::vec(0.0f64..10.0, 20..400), i_tilde in 1usize..8, alpha in 0.5f64..20.0) {
        let t = 10.0;
        let land = Landscape { theta0: -1.0, step: 0.01, values, cache: None };
        let found = search_and_block(&land, i_tilde, alpha, t);
        prop_assert!(found.thetas.len() <= i_tilde);
        let radius = alpha / t;
        for (i, a) in found.thetas.iter().enumerate() {
            for b in &found.thetas[i + 1..] {
                prop_assert!((a - b).abs() >= radius - 1e-12);
            }
        }
        for w in found.indices.windows(2) {
            prop_assert!(land.values[w[0]] >= land.values[w[1]]);
        }
    }

    #[test]
    fn distances_are_metrics(xs in prop::collection::vec(-3.0f64..3.0, 1..8), shift in -0.5f64..0.5) {
        let ys: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let e = error_metric(&xs, &ys);
        prop_assert!(!e.mismatch);
        prop_assert!((e.value - shift.abs()).abs() < 1e-12);
        let mut rev = xs.clone();
        rev.reverse();
        prop_assert_eq!(error_metric(&rev, &ys).value, e.value);
        let a: Vec<(f64, usize)> = xs.iter().map(|&x| (x, 1)).collect();
        let b: Vec<(f64, usize)> = ys.iter().map(|&y| (y, 1)).collect();
        let w = wasserstein1(&a, &b);
        prop_assert!((w.value - shift.abs()).abs() < 1e-12);
        prop_assert_eq!(wasserstein1(&b, &a).value, w.value);
        prop_assert_eq!(wasserstein1(&a, &a).value, 0.0);
    }

    #[test]
    fn nogo_reproduces_signal(c in -1.0f64..1.0, d in -1.0f64..1.0, lam in -2.0f64..2.0) {
        // Third dominant column is a combination of the first two.
        let base = cmat(3, 5, &[(0.4, 0.2), (-0.3, 0.1), (0.2, -0.5), (0.6, 0.3), (-0.1, 0.2)]);
        let mut phi = base.clone();
        for i in 0..3 {
            phi[(i, 2)] = phi[(i, 0)] * C::new(c, 0.0) + phi[(i, 1)] * C::new(0.0, d);
        }
        for i in 0..3 {
            let n = phi.row(i).norm();
            phi.row_mut(i).unscale_mut(n);
        }
        let psi = cmat(3, 5, &[(0.1, 0.4), (0.3, -0.2), (-0.6, 0.1)]);
        let eig = [lam, lam, lam, lam + 0.7, lam - 0.9];
        let g = nogo_construct(&phi, &psi, &[0, 1, 2]).unwrap();
        prop_assert!(g.k < 3);
        let alt = g.alternative_eigenvalues(&eig, lam, 2.9);
        let m1 = SpectralModel::from_overlaps(&eig, &phi, &psi).unwrap();
        let m2 = SpectralModel::from_overlaps(&alt, &g.phi, &g.psi).unwrap();
        for k in 0..25 {
            let t = -30.0 + 2.5 * k as f64;
            for l in 0..3 {
                for r in 0..3 {
                    prop_assert!((m1.eval(l, r, t) - m2.eval(l, r, t)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_strings_square_to_identity(s in "[IXYZ]{1,6}", seed in any::<u64>()) {
        let p = PauliString::parse(&s).unwrap();
        let dim = 1usize << p.n_qubits();
        let v: Vec<C<f64>> = (0..dim)
            .map(|i| C::new(((seed >> (i % 60)) & 7) as f64 - 3.5, i as f64 * 0.3))
            .collect();
        let w = p.apply(&p.apply(&v));
        for (a, b) in v.iter().zip(&w) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}
