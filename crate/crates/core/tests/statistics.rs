//! Seeded Monte Carlo checks of the simulator, estimators and experiment drivers.

use kstap::covariance::{lr_kron, scm, spatial_naive, LrKronOptions};
use kstap::eval::{
    contrast_ratio, mean_stderr, multipass_change, run_sweep, theory_rho_lr, ChangeMethod, Method, Metric,
    MultipassOptions, SteeringMode, SweepSpec,
};
use kstap::linalg::ComplexMatrix;
use kstap::par::Execution;
use kstap::sim::{
    make_ground_truth, make_training_set, simulate_multipass_pair, stream_rng, ScenarioConfig, TargetSpec,
    TextureLaw,
};
use num_complex::Complex64;

fn rel_err(est: &ComplexMatrix, truth: &ComplexMatrix) -> f64 {
    (est - truth).norm() / truth.norm()
}

#[test]
fn sirv_sample_covariance_converges_to_model() {
    let mut cfg = ScenarioConfig::new(3, 8);
    cfg.r_b_true = 3;
    cfg.seed = 21;
    let gt = make_ground_truth(&cfg).unwrap();
    let xs = make_training_set(&gt, &cfg, 100_000, &mut stream_rng(cfg.seed, 0));
    let s = scm(&xs, cfg.p, cfg.q).unwrap();
    let err = rel_err(&s.s, &gt.covariance());
    assert!(err < 0.03, "relative Frobenius error {err}");
}

#[test]
fn lr_kron_recovers_full_rank_temporal_factor() {
    let mut cfg = ScenarioConfig::new(3, 8);
    cfg.r_b_true = 8;
    cfg.noise_var = 0.0;
    cfg.seed = 22;
    let gt = make_ground_truth(&cfg).unwrap();
    let xs = make_training_set(&gt, &cfg, 10_000, &mut stream_rng(cfg.seed, 0));
    let s = scm(&xs, cfg.p, cfg.q).unwrap();
    let model = lr_kron(&s, 1, cfg.q, &LrKronOptions::default()).unwrap();
    // Compare the products, which do not depend on how scale is split between factors.
    let err = rel_err(&model.covariance(), &gt.clutter_cov());
    assert!(err < 0.05, "relative Frobenius error {err}");
}

#[test]
fn pulse_averaged_spatial_power_matches_model() {
    // Constant texture and a flat full-rank temporal spectrum keep the sampling
    // error of ψ near 1% at this n; a random texture alone would add about 2%.
    let mut cfg = ScenarioConfig::new(3, 16);
    cfg.r_b_true = 16;
    cfg.temporal_decades = 0.0;
    cfg.noise_var = 0.0;
    cfg.texture = TextureLaw::Constant;
    cfg.seed = 23;
    let gt = make_ground_truth(&cfg).unwrap();
    let xs = make_training_set(&gt, &cfg, 1_000, &mut stream_rng(cfg.seed, 0));
    let (psi, h) = spatial_naive(&scm(&xs, cfg.p, cfg.q).unwrap()).unwrap();
    let expected = gt.spatial_eigs[0] * gt.b.trace().re / cfg.q as f64;
    assert!((psi / expected - 1.0).abs() < 0.02, "ψ {psi} vs {expected}");
    assert!(h.dotc(&gt.h).norm() > 0.999);
}

#[test]
fn lr_kron_converges_on_full_size_scenario() {
    let mut cfg = ScenarioConfig::new(3, 150);
    cfg.seed = 24;
    let gt = make_ground_truth(&cfg).unwrap();
    let xs = make_training_set(&gt, &cfg, 300, &mut stream_rng(cfg.seed, 0));
    let s = scm(&xs, cfg.p, cfg.q).unwrap();
    let model = lr_kron(&s, 1, 20, &LrKronOptions::default()).unwrap();
    assert!(model.converged, "{} iterations", model.iterations);
    let scale = s.s.norm_squared();
    assert!(model.objective_trace.windows(2).all(|w| w[1] - w[0] <= 1e-12 * scale));
}

fn lr_cfg(r: usize, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(3, 16);
    cfg.r_b_true = r;
    cfg.r_b = r;
    cfg.lr_rank = r;
    cfg.cnr_db = 40.0;
    cfg.seed = seed;
    cfg
}

fn lr_rho(cfg: &ScenarioConfig, axis: Vec<usize>, trials: usize) -> kstap::eval::SweepResult {
    let mut spec = SweepSpec::new(axis, vec![Method::LowRank], trials);
    spec.metrics = vec![Metric::Rho];
    spec.steering = SteeringMode::ClutterFree;
    run_sweep(cfg, &spec, Execution::Parallel).unwrap()
}

#[test]
fn lr_stap_small_noise_loss_is_one_minus_r_over_n() {
    let cfg = lr_cfg(5, 25);
    let res = lr_rho(&cfg, vec![50], 500);
    let mc = res.get(Method::LowRank, 50, Metric::Rho).unwrap().mean;
    assert!((mc - 0.9).abs() < 0.02, "mean ρ {mc}");
}

/// `(n, Monte Carlo mean, standard error, formula)` for LR-STAP at `n = k·r`.
fn lr_vs_theory(n_multiples: &[usize], trials: usize) -> Vec<(usize, f64, f64, f64)> {
    let r = 8;
    let cfg = lr_cfg(r, 26);
    let axis: Vec<usize> = n_multiples.iter().map(|k| k * r).collect();
    let res = lr_rho(&cfg, axis.clone(), trials);
    let gt = make_ground_truth(&cfg).unwrap();
    let eigs = gt.clutter_eigenvalues();
    axis.into_iter()
        .map(|n| {
            let pt = res.get(Method::LowRank, n, Metric::Rho).unwrap();
            let th = theory_rho_lr(n, r, &eigs, gt.e_tau2, gt.noise_var).unwrap();
            (n, pt.mean, pt.stderr, th)
        })
        .collect()
}

#[test]
fn lr_stap_loss_approaches_theory_as_n_grows() {
    let rows = lr_vs_theory(&[2, 4, 8, 16, 32], 1000);
    let gaps: Vec<f64> = rows.iter().map(|(_, mc, _, th)| (mc - th).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "gaps do not shrink: {rows:?}");
    let (n, mc, se, th) = rows[rows.len() - 1];
    assert!((mc - th).abs() <= 2.0 * se, "n={n}: {mc} ± {se} vs {th}");
}

/// The formula is a large-sample approximation. Under the heavy-tailed
/// texture the Monte Carlo mean sits below it by about 0.017, 0.013 and 0.005
/// at n = 2r, 4r and 8r, several standard errors at this trial count.
#[test]
#[ignore = "asymptotic formula is biased beyond two standard errors for n up to 8r"]
fn lr_stap_loss_within_two_standard_errors_from_2r() {
    for (n, mc, se, th) in lr_vs_theory(&[2, 4, 8], 1000) {
        assert!((mc - th).abs() <= 2.0 * se, "n={n}: {mc} ± {se} vs {th}");
    }
}

#[test]
fn auc_increases_with_target_amplitude() {
    let mut aucs = Vec::new();
    for snr in [0.0, 5.0, 10.0] {
        let mut cfg = ScenarioConfig::new(3, 16);
        cfg.r_b_true = 8;
        cfg.n_test = 100;
        cfg.target_snr_db = snr;
        cfg.seed = 27;
        let mut spec = SweepSpec::new(vec![32], vec![Method::Optimal], 100);
        spec.metrics = vec![Metric::Auc];
        let res = run_sweep(&cfg, &spec, Execution::Parallel).unwrap();
        let pt = res.get(Method::Optimal, 32, Metric::Auc).unwrap();
        aucs.push((pt.mean, pt.stderr));
    }
    for w in aucs.windows(2) {
        let ((lo, se_lo), (hi, se_hi)) = (w[0], w[1]);
        assert!(hi + 2.0 * (se_lo + se_hi) >= lo, "{aucs:?}");
    }
    assert!(aucs[2].0 > 0.9, "AUC at 10 dB under the optimal filter: {aucs:?}");
}

fn multipass_case(seed: u64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut cfg = ScenarioConfig::new(3, 16);
    cfg.r_b_true = 4;
    cfg.r_b = 4;
    cfg.seed = seed;
    let gt = make_ground_truth(&cfg).unwrap();
    let bins = 400;
    let mut rng = stream_rng(seed, 0);
    let (reference, mut mission) = simulate_multipass_pair(&gt, &cfg, 0.95, bins, &mut rng).unwrap();
    let dopplers = cfg.moving_dopplers();
    let target_bins = vec![37, 150, 311];
    for (k, &b) in target_bins.iter().enumerate() {
        let f = dopplers[(5 * k + 3) % dopplers.len()];
        let t = TargetSpec::new(Complex64::new(10.0, 0.0), f, &cfg.geometry());
        mission[b] += t.return_vector();
    }
    let opts = |method| MultipassOptions {
        method,
        p: cfg.p,
        q: cfg.q,
        r_b: cfg.r_b,
        lr_rank: 2 * cfg.r_b,
        dopplers: dopplers.clone(),
    };
    let run = |m| multipass_change(&reference, &mission, &opts(m), Execution::Parallel).unwrap();
    (run(ChangeMethod::KronStap), run(ChangeMethod::Incoherent), target_bins)
}

#[test]
fn mission_only_target_ranks_in_top_percent() {
    let (kron, _, target_bins) = multipass_case(28);
    let mut order: Vec<usize> = (0..kron.len()).collect();
    order.sort_by(|a, b| kron[*b].total_cmp(&kron[*a]));
    let top: Vec<usize> = order[..kron.len() / 100].to_vec();
    for b in &target_bins {
        assert!(top.contains(b), "bin {b} not in the top 1%: {top:?}");
    }
}

#[test]
fn kron_change_contrast_beats_incoherent() {
    let (mut kron, mut incoherent) = (Vec::new(), Vec::new());
    for seed in 30..40 {
        let (k, i, bins) = multipass_case(seed);
        kron.push(contrast_ratio(&k, &bins, bins.len()).unwrap());
        incoherent.push(contrast_ratio(&i, &bins, bins.len()).unwrap());
    }
    let diffs: Vec<f64> = kron.iter().zip(&incoherent).map(|(k, i)| k - i).collect();
    let (mean, _) = mean_stderr(&diffs);
    assert!(mean > 0.0, "kron {kron:?} vs incoherent {incoherent:?}");
    assert!(diffs.iter().all(|d| *d >= 0.0), "kron {kron:?} vs incoherent {incoherent:?}");
}
