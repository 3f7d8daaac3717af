//! Monte Carlo sweeps over the training sample count.
//!
//! Every `(trial, n)` cell draws its training clutter, its training-set
//! corruption and its test data from separate RNG streams. Sweeps that differ
//! only in `corruption_frac` therefore see identical clutter and test sets, so
//! their per-trial metrics can be compared pairwise.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::{lr_kron, scm, spatial_naive, temporal_update, KronCovModel, LrKronOptions, SampleCovariance};
use crate::error::{Error, Result};
use crate::eval::metrics::{mean_stderr, ms_residual, roc_auc, sinr, sinr_loss, sinr_max};
use crate::linalg::{complement_projector, eig_hermitian, ComplexMatrix, ComplexVector};
use crate::par::{self, Execution};
use crate::sim::{
    db_to_linear, inject_targets, make_ground_truth, make_test_set, make_training_set, stream_rng, GroundTruthCov,
    ScenarioConfig, TargetSpec,
};
use crate::stap::{
    detect_stat, kron_classical_filter, kron_full_filter, kron_spatial_filter, lr_stap_filter, optimal_filter,
    steering, FilterKind, StapFilter, SteeringVector,
};

/// Clutter-cancellation method compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    /// Inverse of the true covariance.
    Optimal,
    /// LR-STAP with `lr_rank` components.
    LowRank,
    /// LR-Kron estimate, spatial and temporal projectors.
    Kron,
    /// LR-Kron estimate, spatial projector only.
    KronSpatial,
    /// Pulse-averaged rank-one spatial estimate, spatial projector only.
    KronSpatialNaive,
    /// LR-Kron estimate, joint space-time projector.
    KronClassical,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Optimal,
        Method::LowRank,
        Method::Kron,
        Method::KronSpatial,
        Method::KronSpatialNaive,
        Method::KronClassical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Optimal => "opt",
            Method::LowRank => "lr",
            Method::Kron => "kron",
            Method::KronSpatial => "kron-spatial",
            Method::KronSpatialNaive => "kron-spatial-naive",
            Method::KronClassical => "kron-classical",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::InvalidArgument(format!("unknown method `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    /// SINR loss against the true covariance.
    Rho,
    /// Mean squared residual on clutter-only test data.
    Msr,
    /// Area under the ROC curve for a target at the configured SNR.
    Auc,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rho, Metric::Msr, Metric::Auc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rho => "rho",
            Metric::Msr => "msr",
            Metric::Auc => "auc",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}` (expected rho, msr or auc)")))
    }
}

/// Steering vector used for the SINR loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteeringMode {
    /// `a(f) ⊗ b(f)` at the trial's target Doppler.
    #[default]
    Grid,
    /// As `Grid`, with the spatial factor projected off the true calibration
    /// vector so the target lies outside the clutter spatial subspace.
    ClutterFree,
}

/// What to run: sample counts, methods, metrics and trial count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Vec<usize>,
    pub methods: Vec<Method>,
    pub metrics: Vec<Metric>,
    pub trials: usize,
    pub steering: SteeringMode,
}

impl SweepSpec {
    pub fn new(axis: Vec<usize>, methods: Vec<Method>, trials: usize) -> Self {
        Self {
            axis,
            methods,
            metrics: Metric::ALL.to_vec(),
            trials,
            steering: SteeringMode::Grid,
        }
    }
}

/// Summary of one `(method, n, metric)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub method: Method,
    pub axis_value: usize,
    pub metric: Metric,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Per-trial values in trial order.
    #[serde(skip)]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis_name: String,
    pub axis: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn get(&self, method: Method, n: usize, metric: Metric) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|pt| pt.method == method && pt.axis_value == n && pt.metric == metric)
    }
}

const PURPOSE_TRAIN: u64 = 0;
const PURPOSE_CORRUPT: u64 = 1;
const PURPOSE_TEST: u64 = 2;

/// Stream id for one sweep cell and purpose; disjoint from the ground-truth stream.
pub fn cell_stream(trial: usize, axis_index: usize, purpose: u64) -> u64 {
    ((trial as u64) << 24) | ((axis_index as u64) << 4) | purpose
}

/// Builds the filter for `method` from training data.
pub fn build_filter(
    method: Method,
    s: &SampleCovariance,
    cfg: &ScenarioConfig,
    gt: &GroundTruthCov,
    kron_model: &mut Option<KronCovModel>,
) -> Result<StapFilter> {
    let mut model = || -> Result<KronCovModel> {
        if kron_model.is_none() {
            *kron_model = Some(lr_kron(s, cfg.r_a, cfg.r_b, &LrKronOptions::default())?);
        }
        Ok(kron_model.clone().expect("just filled"))
    };
    match method {
        Method::Optimal => optimal_filter(&gt.covariance(), cfg.p, cfg.q),
        Method::LowRank => lr_stap_filter(s, cfg.lr_rank),
        Method::Kron => kron_full_filter(&model()?),
        Method::KronSpatial => kron_spatial_filter(&model()?),
        Method::KronClassical => kron_classical_filter(&model()?),
        Method::KronSpatialNaive => {
            let (_, h) = spatial_naive(s)?;
            let fa = complement_projector(&ComplexMatrix::from_columns(&[h]));
            StapFilter::factored(FilterKind::KronSpatial, fa, ComplexMatrix::identity(cfg.q, cfg.q))
        }
    }
}

/// Steering vector at Doppler `f` under `mode`.
pub fn sweep_steering(cfg: &ScenarioConfig, gt: &GroundTruthCov, f: f64, mode: SteeringMode) -> Result<SteeringVector> {
    let d = steering(f, &cfg.geometry());
    match mode {
        SteeringMode::Grid => Ok(d),
        SteeringMode::ClutterFree => {
            let spatial = &d.spatial - &gt.h * gt.h.dotc(&d.spatial);
            SteeringVector::from_parts(spatial, d.temporal, f)
        }
    }
}

fn run_cell(
    cfg: &ScenarioConfig,
    gt: &GroundTruthCov,
    spec: &SweepSpec,
    optimal: &Option<StapFilter>,
    trial: usize,
    axis_index: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = spec.axis[axis_index];
    let (p, q) = (cfg.p, cfg.q);
    let mut train_rng = stream_rng(cfg.seed, cell_stream(trial, axis_index, PURPOSE_TRAIN));
    let clean = make_training_set(gt, cfg, n, &mut train_rng);
    let mut corrupt_rng = stream_rng(cfg.seed, cell_stream(trial, axis_index, PURPOSE_CORRUPT));
    let (train, _) = inject_targets(clean, cfg, &mut corrupt_rng);
    let s = scm(&train, p, q)?;

    let mut test_rng = stream_rng(cfg.seed, cell_stream(trial, axis_index, PURPOSE_TEST));
    let amplitude = (if cfg.noise_var > 0.0 { cfg.noise_var } else { 1.0 } * db_to_linear(cfg.target_snr_db)).sqrt();
    let target = crate::sim::random_target(cfg, amplitude, &mut test_rng);
    let d = sweep_steering(cfg, gt, target.doppler, spec.steering)?.full();
    let want = |m: Metric| spec.metrics.contains(&m);
    let (h0, h1) = if want(Metric::Msr) || want(Metric::Auc) {
        let h0 = make_test_set(gt, cfg, None, cfg.n_test, &mut test_rng);
        let h1 = if want(Metric::Auc) {
            make_test_set(gt, cfg, Some(&target), cfg.n_test, &mut test_rng)
        } else {
            Vec::new()
        };
        (h0, h1)
    } else {
        (Vec::new(), Vec::new())
    };
    let sigma = gt.covariance();

    let mut kron_model = None;
    let mut out = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let filter = match (method, optimal) {
            (Method::Optimal, Some(f)) => f.clone(),
            _ => build_filter(method, &s, cfg, gt, &mut kron_model)?,
        };
        let mut row = Vec::with_capacity(spec.metrics.len());
        for &metric in &spec.metrics {
            row.push(match metric {
                Metric::Rho => sinr_loss(&filter, &d, &sigma)?.rho,
                Metric::Msr => ms_residual(&filter, &h0)?,
                Metric::Auc => detection_auc(&filter, &target, &h0, &h1)?,
            });
        }
        out.push(row);
    }
    Ok(out)
}

/// AUC of the detection statistic at the target's Doppler bin.
pub fn detection_auc(filter: &StapFilter, target: &TargetSpec, h0: &[ComplexVector], h1: &[ComplexVector]) -> Result<f64> {
    let bin = [target.doppler];
    let score = |xs: &[ComplexVector]| -> Result<Vec<f64>> {
        xs.iter().map(|x| Ok(detect_stat(x, filter, &bin)?[0])).collect()
    };
    roc_auc(&score(h1)?, &score(h0)?)
}

/// Runs every `(trial, n)` cell and summarizes each metric per method and `n`.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if spec.axis.is_empty() || spec.axis.contains(&0) {
        return Err(Error::InvalidArgument("sweep axis must list positive sample counts".into()));
    }
    if spec.methods.is_empty() || spec.metrics.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one method and one metric".into()));
    }
    if cfg.n_test == 0 && spec.metrics.iter().any(|m| *m != Metric::Rho) {
        return Err(Error::InvalidArgument("n_test must be positive for msr and auc".into()));
    }
    let gt = make_ground_truth(cfg)?;
    let optimal = if spec.methods.contains(&Method::Optimal) {
        Some(optimal_filter(&gt.covariance(), cfg.p, cfg.q)?)
    } else {
        None
    };
    let cells = spec.axis.len() * spec.trials;
    let results = par::map_indexed(exec, cells, |c| {
        let (axis_index, trial) = (c / spec.trials, c % spec.trials);
        run_cell(cfg, &gt, spec, &optimal, trial, axis_index)
    });
    let results: Vec<Vec<Vec<f64>>> = results.into_iter().collect::<Result<_>>()?;

    let mut points = Vec::new();
    for (ai, &n) in spec.axis.iter().enumerate() {
        for (mi, &method) in spec.methods.iter().enumerate() {
            for (ki, &metric) in spec.metrics.iter().enumerate() {
                let values: Vec<f64> = (0..spec.trials).map(|t| results[ai * spec.trials + t][mi][ki]).collect();
                let (mean, stderr) = mean_stderr(&values);
                points.push(SweepPoint {
                    method,
                    axis_value: n,
                    metric,
                    mean,
                    stderr,
                    trials: spec.trials,
                    values,
                });
            }
        }
    }
    Ok(SweepResult {
        axis_name: "n".into(),
        axis: spec.axis.clone(),
        trials: spec.trials,
        seed: cfg.seed,
        points,
    })
}

/// Conditional SINR loss of the temporal Kronecker stage with the spatial
/// estimate fixed at `h̃`.
///
/// After the spatial projector, a target `d_A ⊗ d_B` sees the scalar-weighted
/// channel sum `z = (d̃ᴴ ⊗ I) x` with covariance
/// `E[τ²](d̃ᴴ A d̃) B + σ² I` (`d̃` the unit residual of `d_A` off `h̃`). The
/// temporal projector comes from `B̂ = EIG_{r_b}(R_B(h̃h̃ᴴ))` on the training
/// data, and the loss is evaluated in that `q`-dimensional problem.
pub fn temporal_stage_loss(
    gt: &GroundTruthCov,
    s: &SampleCovariance,
    h_tilde: &ComplexVector,
    d_a: &ComplexVector,
    d_b: &ComplexVector,
    r_b: usize,
) -> Result<f64> {
    let h = h_tilde.normalize();
    let b_hat = temporal_update(s, &(&h * h.adjoint()), r_b)?;
    let u = eig_hermitian(&b_hat)?.leading_vectors(r_b);
    let f_b = complement_projector(&u);

    let resid = d_a - &h * h.dotc(d_a);
    let d_tilde = resid.normalize();
    let clutter_gain = d_tilde.dotc(&(&gt.a * &d_tilde)).re;
    let q = gt.q;
    let sigma_z = gt.b.scale(gt.e_tau2 * clutter_gain) + ComplexMatrix::identity(q, q).scale(gt.noise_var);
    let w = &f_b * d_b;
    if w.norm() == 0.0 {
        return Ok(0.0);
    }
    let out = sinr(&w, d_b, Complex64::new(1.0, 0.0), &sigma_z)?;
    Ok(out / sinr_max(d_b, &sigma_z)?)
}
