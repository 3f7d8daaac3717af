//! Property tests for the algebraic and statistical invariants.

use kstap::covariance::{lr_kron, scm, LrKronOptions, SampleCovariance};
use kstap::eval::{contrast_ratio, roc_auc, sinr_loss};
use kstap::io::config::{config_to_json, parse_config};
use kstap::io::DataCube;
use kstap::linalg::{
    eig_hermitian, eig_truncate, hermitian_part, is_hermitian, kron, numerical_rank, rearrange, rearrange_inv,
    unvec_spacetime, vec_spacetime, ComplexMatrix, ComplexVector,
};
use kstap::sim::{stream_rng, ScenarioConfig};
use kstap::stap::{FilterKind, StapFilter};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn cn(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn mat(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| cn(rng))
}

fn vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| cn(rng))
}

fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    hermitian_part(&mat(rng, n, n))
}

fn psd(rng: &mut ChaCha8Rng, p: usize, q: usize, n: usize) -> SampleCovariance {
    let xs: Vec<_> = (0..n).map(|_| vector(rng, p * q)).collect();
    scm(&xs, p, q).unwrap()
}

fn projector(rng: &mut ChaCha8Rng, n: usize, r: usize) -> ComplexMatrix {
    let u = mat(rng, n, r).qr().q();
    ComplexMatrix::identity(n, n) - &u * u.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_acts_as_two_sided_product(p in 1usize..5, q in 1usize..5, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let (a, b, x) = (mat(&mut rng, p, p), mat(&mut rng, q, q), mat(&mut rng, p, q));
        let lhs = kron(&a, &b) * vec_spacetime(&x);
        let rhs = vec_spacetime(&(&a * &x * b.transpose()));
        prop_assert!((lhs - rhs).norm() < 1e-12 * (1.0 + x.norm()));
        prop_assert_eq!(unvec_spacetime(&vec_spacetime(&x), p, q).unwrap(), x);
    }

    #[test]
    fn rearrangement_is_an_exact_permutation(p in 1usize..6, q in 1usize..6, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let m = mat(&mut rng, p * q, p * q);
        let r = rearrange(&m, p, q).unwrap();
        prop_assert_eq!(r.shape(), (p * p, q * q));
        prop_assert_eq!(&rearrange_inv(&r, p, q).unwrap(), &m);
        let mut a: Vec<f64> = m.iter().map(|z| z.norm_sqr()).collect();
        let mut b: Vec<f64> = r.iter().map(|z| z.norm_sqr()).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rearranged_kron_is_outer_product_of_vecs(p in 1usize..5, q in 1usize..5, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let (a, b) = (mat(&mut rng, p, p), mat(&mut rng, q, q));
        let r = rearrange(&kron(&a, &b), p, q).unwrap();
        let outer = vec_spacetime(&a) * vec_spacetime(&b).transpose();
        prop_assert!((r - outer).norm() < 1e-14 * (1.0 + a.norm() * b.norm()));
    }

    #[test]
    fn eig_truncate_error_matches_discarded_spectrum(n in 1usize..7, r_frac in 0.0f64..1.0, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let m = hermitian(&mut rng, n);
        let r = 1 + ((n - 1) as f64 * r_frac) as usize;
        let t = eig_truncate(&m, r).unwrap();
        prop_assert!(is_hermitian(&t, 1e-12));
        prop_assert!(numerical_rank(&t, 1e-10) <= r);
        let e = eig_hermitian(&t).unwrap();
        prop_assert!(e.min_value() >= -1e-12);
        // Best PSD rank-r fit keeps the r largest eigenvalues clamped at zero.
        let vals = eig_hermitian(&m).unwrap().values;
        let expected: f64 = vals
            .iter()
            .enumerate()
            .map(|(i, &v)| if i < r && v > 0.0 { 0.0 } else { v * v })
            .sum();
        prop_assert!(((m - t).norm_squared() - expected).abs() < 1e-10 * (1.0 + expected));
    }

    #[test]
    fn lr_kron_invariants(p in 1usize..5, q in 1usize..5, n in 1usize..30, ra_frac in 0.0f64..1.0, rb_frac in 0.0f64..1.0, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let s = psd(&mut rng, p, q, n);
        let ra = 1 + ((p - 1) as f64 * ra_frac) as usize;
        let rb = 1 + ((q - 1) as f64 * rb_frac) as usize;
        let m = lr_kron(&s, ra, rb, &LrKronOptions::default()).unwrap();
        let scale = s.s.norm_squared();
        for w in m.objective_trace.windows(2) {
            prop_assert!(w[1] - w[0] <= 1e-12 * scale, "trace rose: {:?}", w);
        }
        prop_assert!(m.objective_trace.iter().all(|v| *v <= scale * (1.0 + 1e-12)));
        prop_assert!(is_hermitian(&m.a, 1e-12) && is_hermitian(&m.b, 1e-12));
        prop_assert!(numerical_rank(&m.a, 1e-10) <= ra && numerical_rank(&m.b, 1e-10) <= rb);
        prop_assert!((m.a.norm() - 1.0).abs() < 1e-12);
        let cov_min = eig_hermitian(&m.covariance()).unwrap().min_value();
        prop_assert!(cov_min >= -1e-10 * scale.sqrt());
    }

    #[test]
    fn sinr_loss_bounded_and_scale_free(p in 1usize..4, q in 2usize..5, r in 1usize..3, c in 0.01f64..100.0, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let g = mat(&mut rng, p * q, p * q);
        let sigma = &g * g.adjoint() + ComplexMatrix::identity(p * q, p * q).scale(0.1);
        let filter = StapFilter::from_subspace(&mat(&mut rng, p * q, r.min(p * q - 1)), p, q).unwrap();
        let d = vector(&mut rng, p * q);
        let base = sinr_loss(&filter, &d, &sigma).unwrap().rho;
        prop_assert!((0.0..=1.0 + 1e-6).contains(&base));
        let scaled = sinr_loss(&filter, &d.scale(c), &sigma).unwrap().rho;
        prop_assert!((scaled - base).abs() < 1e-9);
    }

    #[test]
    fn factored_projectors_are_idempotent(p in 1usize..4, q in 1usize..5, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let fa = projector(&mut rng, p, (p - 1).min(1));
        let fb = projector(&mut rng, q, (q - 1).min(2));
        let f = StapFilter::factored(FilterKind::KronFull, fa, fb).unwrap();
        let x = vector(&mut rng, p * q);
        let once = f.apply(&x).unwrap();
        let twice = f.apply(&once).unwrap();
        prop_assert!((&twice - &once).norm() < 1e-12 * (1.0 + x.norm()));
        prop_assert!(once.norm() <= x.norm() * (1.0 + 1e-12));
        prop_assert!(((f.to_dense() * &x) - once).norm() < 1e-12 * (1.0 + x.norm()));
    }

    #[test]
    fn auc_is_a_probability_and_antisymmetric(h1 in prop::collection::vec(-10.0f64..10.0, 1..40), h0 in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let a = roc_auc(&h1, &h0).unwrap();
        let b = roc_auc(&h0, &h1).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a + b - 1.0).abs() < 1e-12);
        // Strictly increasing maps leave the ranks and hence the AUC unchanged.
        let t = |v: &[f64]| v.iter().map(|x| x.exp()).collect::<Vec<_>>();
        prop_assert!((roc_auc(&t(&h1), &t(&h0)).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn contrast_is_scale_invariant(stats in prop::collection::vec(0.1f64..10.0, 4..30), c in 0.01f64..100.0) {
        let bins = vec![0, 1];
        let base = contrast_ratio(&stats, &bins, 2).unwrap();
        let scaled: Vec<f64> = stats.iter().map(|s| s * c).collect();
        prop_assert!((contrast_ratio(&scaled, &bins, 2).unwrap() - base).abs() < 1e-10 * base);
    }

    #[test]
    fn cube_round_trip_is_bit_exact(p in 1usize..4, q in 1usize..6, n in 0usize..8, seed: u64) {
        let mut rng = stream_rng(seed, 0);
        let snaps: Vec<_> = (0..n).map(|_| vector(&mut rng, p * q)).collect();
        let cube = DataCube::new(p, q, snaps).unwrap();
        let bytes = cube.to_bytes().unwrap();
        prop_assert_eq!(bytes.len(), 24 + 16 * n * p * q);
        let back = DataCube::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back.to_bytes().unwrap(), &bytes);
        prop_assert!(DataCube::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn config_json_round_trips(p in 1usize..5, q in 2usize..40, noise in 0.0f64..10.0, cnr in -10.0f64..60.0, seed: u64) {
        let mut cfg = ScenarioConfig::new(p, q);
        cfg.noise_var = noise;
        cfg.cnr_db = cnr;
        cfg.seed = seed;
        prop_assume!(cfg.validate().is_ok());
        let back = parse_config(&config_to_json(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
