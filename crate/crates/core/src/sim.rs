//! Synthetic SIRV clutter: Kronecker-structured speckle scaled by a random
//! texture, white sensor noise, antenna calibration errors, moving-target
//! returns and training-set corruption.
//!
//! Every generator draws from a ChaCha stream keyed by `(seed, stream id)`, so
//! trials running on different threads stay reproducible.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{kron, kron_vec, vec_spacetime, ComplexMatrix, ComplexVector};
use crate::stap::{steering, SteeringGeometry};

/// Stream id reserved for the ground-truth covariance of a scenario.
pub const GROUND_TRUTH_STREAM: u64 = u64::MAX;

/// Deterministic RNG for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Distribution of the texture power `τ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum TextureLaw {
    /// `τ² ~ χ²(dof) / dof`, so `E[τ²] = 1`.
    ChiSquare { dof: f64 },
    /// `τ² ≡ 1` (Gaussian clutter).
    Constant,
}

impl Default for TextureLaw {
    fn default() -> Self {
        TextureLaw::ChiSquare { dof: 4.0 }
    }
}

impl TextureLaw {
    pub fn mean(&self) -> f64 {
        1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TextureLaw::ChiSquare { dof } => {
                let chi = ChiSquared::new(*dof).expect("validated degrees of freedom");
                chi.sample(rng) / dof
            }
            TextureLaw::Constant => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            TextureLaw::ChiSquare { dof } if !(dof.is_finite() && *dof > 0.0) => Err(Error::Config(
                format!("texture dof must be positive, got {dof}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Distribution of target amplitudes `|α|`, expressed against the noise
/// variance (or against unit power when the scenario is noise-free).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum AmplitudeLaw {
    /// `|α|² = σ² · 10^(db/10)`.
    SnrDb { db: f64 },
    /// SNR drawn uniformly in dB between `low` and `high`.
    UniformSnrDb { low: f64, high: f64 },
    /// Fixed `|α|`.
    Fixed { amplitude: f64 },
}

impl Default for AmplitudeLaw {
    fn default() -> Self {
        AmplitudeLaw::SnrDb { db: 15.0 }
    }
}

impl AmplitudeLaw {
    pub fn sample<R: Rng + ?Sized>(&self, noise_var: f64, rng: &mut R) -> f64 {
        let reference = if noise_var > 0.0 { noise_var } else { 1.0 };
        match self {
            AmplitudeLaw::SnrDb { db } => (reference * db_to_linear(*db)).sqrt(),
            AmplitudeLaw::UniformSnrDb { low, high } => {
                let db = if high > low { rng.random_range(*low..*high) } else { *low };
                (reference * db_to_linear(db)).sqrt()
            }
            AmplitudeLaw::Fixed { amplitude } => *amplitude,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AmplitudeLaw::UniformSnrDb { low, high } if low > high => Err(Error::Config(format!(
                "target SNR range [{low}, {high}] is empty"
            ))),
            AmplitudeLaw::Fixed { amplitude } if !(*amplitude >= 0.0) => Err(Error::Config(
                format!("target amplitude must be non-negative, got {amplitude}"),
            )),
            _ => Ok(()),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Full generative description of a synthetic experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub p: usize,
    pub q: usize,
    /// Rank of the true temporal clutter factor.
    pub r_b_true: usize,
    /// Eigenvalues of the true spatial factor, descending.
    pub spatial_eigs: Vec<f64>,
    pub noise_var: f64,
    /// Clutter-to-noise ratio `E[τ²] tr(Σ_c) / (pq σ²)` in dB.
    pub cnr_db: f64,
    pub texture: TextureLaw,
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of training snapshots that receive a moving-target return.
    pub corruption_frac: f64,
    /// Amplitude law of targets injected into training data.
    pub target_amp_law: AmplitudeLaw,
    /// SNR of the test target used for detection experiments.
    pub target_snr_db: f64,
    pub doppler_grid: Vec<f64>,
    pub phase_coeffs: Vec<f64>,
    /// Decades spanned by the nonzero eigenvalues of the true temporal factor.
    pub temporal_decades: f64,
    /// Spatial rank used by the Kronecker estimators.
    pub r_a: usize,
    /// Temporal rank used by the Kronecker estimators.
    pub r_b: usize,
    /// Number of principal components removed by LR-STAP.
    pub lr_rank: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Scenario with every optional field at its default.
    pub fn new(p: usize, q: usize) -> Self {
        let r_b_true = q.min(20);
        Self {
            p,
            q,
            r_b_true,
            spatial_eigs: vec![1.0],
            noise_var: 1.0,
            cnr_db: 30.0,
            texture: TextureLaw::default(),
            n_train: 100,
            n_test: 200,
            corruption_frac: 0.0,
            target_amp_law: AmplitudeLaw::default(),
            target_snr_db: 15.0,
            doppler_grid: default_doppler_grid(q),
            phase_coeffs: (0..p).map(|i| i as f64).collect(),
            temporal_decades: 2.0,
            r_a: 1,
            r_b: r_b_true,
            lr_rank: r_b_true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.p == 0 || self.q == 0 {
            return fail(format!("p and q must be positive (p={}, q={})", self.p, self.q));
        }
        if self.r_b_true == 0 || self.r_b_true > self.q {
            return fail(format!("r_b_true={} must lie in 1..=q={}", self.r_b_true, self.q));
        }
        if self.spatial_eigs.is_empty() || self.spatial_eigs.len() > self.p {
            return fail(format!(
                "spatial_eigs must have between 1 and p={} entries, got {}",
                self.p,
                self.spatial_eigs.len()
            ));
        }
        if self.spatial_eigs.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return fail("spatial_eigs must be finite and non-negative".into());
        }
        if self.spatial_eigs[0] <= 0.0 || self.spatial_eigs.windows(2).any(|w| w[1] > w[0]) {
            return fail("spatial_eigs must be descending with a positive leading value".into());
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return fail(format!("noise_var must be non-negative, got {}", self.noise_var));
        }
        if !self.cnr_db.is_finite() || !self.target_snr_db.is_finite() {
            return fail("cnr_db and target_snr_db must be finite".into());
        }
        if !(0.0..=1.0).contains(&self.corruption_frac) {
            return fail(format!("corruption_frac={} must lie in [0, 1]", self.corruption_frac));
        }
        if self.n_train == 0 {
            return fail("n_train must be at least 1".into());
        }
        if self.doppler_grid.is_empty() || self.doppler_grid.iter().any(|f| !f.is_finite()) {
            return fail("doppler_grid must be a non-empty list of finite values".into());
        }
        if self.phase_coeffs.len() != self.p {
            return fail(format!(
                "phase_coeffs has {} entries, expected p={}",
                self.phase_coeffs.len(),
                self.p
            ));
        }
        if !(self.temporal_decades.is_finite() && self.temporal_decades >= 0.0) {
            return fail("temporal_decades must be non-negative".into());
        }
        if self.r_a == 0 || self.r_a > self.p {
            return fail(format!("r_a={} must lie in 1..=p={}", self.r_a, self.p));
        }
        if self.r_b == 0 || self.r_b > self.q {
            return fail(format!("r_b={} must lie in 1..=q={}", self.r_b, self.q));
        }
        if self.lr_rank == 0 || self.lr_rank >= self.p * self.q {
            return fail(format!("lr_rank={} must lie in 1..pq={}", self.lr_rank, self.p * self.q));
        }
        self.texture.validate()?;
        self.target_amp_law.validate()
    }

    pub fn geometry(&self) -> SteeringGeometry {
        SteeringGeometry {
            phase_coeffs: self.phase_coeffs.clone(),
            pulses: self.q,
        }
    }

    /// Doppler grid without the zero-Doppler bin, which lies in the clutter
    /// spatial subspace of an ideal array.
    pub fn moving_dopplers(&self) -> Vec<f64> {
        let moving: Vec<f64> = self.doppler_grid.iter().copied().filter(|f| *f != 0.0).collect();
        if moving.is_empty() {
            self.doppler_grid.clone()
        } else {
            moving
        }
    }
}

/// `f_k = k / q` for `k = 0..q`.
pub fn default_doppler_grid(q: usize) -> Vec<f64> {
    (0..q).map(|k| k as f64 / q as f64).collect()
}

/// True clutter-plus-noise covariance `Σ = E[τ²] A ⊗ B + σ² I` and its factors.
#[derive(Debug, Clone)]
pub struct GroundTruthCov {
    pub p: usize,
    pub q: usize,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    /// Calibration vector, the leading eigenvector of `A`.
    pub h: ComplexVector,
    pub spatial_eigs: Vec<f64>,
    /// Orthonormal eigenvectors of `A` for the entries of `spatial_eigs`.
    pub spatial_vectors: ComplexMatrix,
    /// Nonzero eigenvalues of `B`, descending.
    pub temporal_eigs: Vec<f64>,
    pub temporal_vectors: ComplexMatrix,
    pub e_tau2: f64,
    pub noise_var: f64,
}

impl GroundTruthCov {
    pub fn clutter_cov(&self) -> ComplexMatrix {
        kron(&self.a, &self.b)
    }

    pub fn covariance(&self) -> ComplexMatrix {
        let n = self.p * self.q;
        self.clutter_cov().scale(self.e_tau2)
            + ComplexMatrix::identity(n, n).scale(self.noise_var)
    }

    /// Eigenvalues of `Σ_c` in decreasing order (products of factor eigenvalues).
    pub fn clutter_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .spatial_eigs
            .iter()
            .flat_map(|a| self.temporal_eigs.iter().map(move |b| a * b))
            .collect();
        v.sort_by(|x, y| y.total_cmp(x));
        v
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng, 1.0))
}

/// Orthonormal `n × k` basis whose first column is `first` (if given), completed
/// by Gram-Schmidt on Gaussian draws.
fn orthonormal_basis<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    first: Option<&ComplexVector>,
) -> ComplexMatrix {
    let mut cols: Vec<ComplexVector> = Vec::with_capacity(k);
    if let Some(f) = first {
        cols.push(f.normalize());
    }
    while cols.len() < k {
        let mut v = ComplexVector::from_fn(n, |_, _| complex_normal(rng, 1.0));
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v.unscale(norm));
        }
    }
    ComplexMatrix::from_columns(&cols)
}

/// Random calibration vector `h_i = g_i e^{jφ_i}`, normalized.
pub fn calibration_vector<R: Rng + ?Sized>(rng: &mut R, p: usize) -> ComplexVector {
    ComplexVector::from_fn(p, |_, _| {
        let gain = rng.random_range(0.8..1.2);
        let phase = rng.random_range(-PI / 4.0..PI / 4.0);
        Complex64::from_polar(gain, phase)
    })
    .normalize()
}

fn weighted_gram(vectors: &ComplexMatrix, eigs: &[f64]) -> ComplexMatrix {
    let mut scaled = vectors.clone();
    for (k, v) in eigs.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*v);
    }
    crate::linalg::hermitian_part(&(scaled * vectors.adjoint()))
}

/// Draws the true covariance for a scenario from its ground-truth stream.
pub fn make_ground_truth(cfg: &ScenarioConfig) -> Result<GroundTruthCov> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, GROUND_TRUTH_STREAM);
    let (p, q) = (cfg.p, cfg.q);

    let h = calibration_vector(&mut rng, p);
    let spatial_vectors = orthonormal_basis(&mut rng, p, cfg.spatial_eigs.len(), Some(&h));
    let a = weighted_gram(&spatial_vectors, &cfg.spatial_eigs);

    let r = cfg.r_b_true;
    let temporal_vectors = orthonormal_basis(&mut rng, q, r, None);
    let mut raw: Vec<f64> = (0..r)
        .map(|_| 10f64.powf(-cfg.temporal_decades * rng.random::<f64>()))
        .collect();
    raw.sort_by(|x, y| y.total_cmp(x));
    let e_tau2 = cfg.texture.mean();
    let trace_a: f64 = cfg.spatial_eigs.iter().sum();
    // Target E[τ²] tr(A) tr(B) = CNR · pq · σ², or pq when noise-free.
    let clutter_power = if cfg.noise_var > 0.0 {
        db_to_linear(cfg.cnr_db) * (p * q) as f64 * cfg.noise_var
    } else {
        (p * q) as f64
    };
    let trace_b = clutter_power / (e_tau2 * trace_a);
    let total: f64 = raw.iter().sum();
    let temporal_eigs: Vec<f64> = raw.iter().map(|v| v / total * trace_b).collect();
    let b = weighted_gram(&temporal_vectors, &temporal_eigs);

    Ok(GroundTruthCov {
        p,
        q,
        a,
        b,
        h,
        spatial_eigs: cfg.spatial_eigs.clone(),
        spatial_vectors,
        temporal_eigs,
        temporal_vectors,
        e_tau2,
        noise_var: cfg.noise_var,
    })
}

/// Zero-mean speckle `c` with covariance `A ⊗ B`, drawn through the eigen-factors.
pub fn sample_speckle<R: Rng + ?Sized>(gt: &GroundTruthCov, rng: &mut R) -> ComplexVector {
    let w = gaussian_matrix(rng, gt.spatial_eigs.len(), gt.temporal_eigs.len());
    speckle_from_white(gt, &w)
}

fn speckle_from_white(gt: &GroundTruthCov, w: &ComplexMatrix) -> ComplexVector {
    let mut la = gt.spatial_vectors.clone();
    for (k, v) in gt.spatial_eigs.iter().enumerate() {
        la.column_mut(k).scale_mut(v.sqrt());
    }
    let mut lb = gt.temporal_vectors.clone();
    for (k, v) in gt.temporal_eigs.iter().enumerate() {
        lb.column_mut(k).scale_mut(v.sqrt());
    }
    vec_spacetime(&(la * w * lb.transpose()))
}

fn add_noise<R: Rng + ?Sized>(x: &mut ComplexVector, noise_var: f64, rng: &mut R) {
    if noise_var > 0.0 {
        for z in x.iter_mut() {
            *z += complex_normal(rng, noise_var);
        }
    }
}

/// One clutter-plus-noise snapshot `x = τ c + n`.
pub fn sample_clutter<R: Rng + ?Sized>(
    gt: &GroundTruthCov,
    texture: &TextureLaw,
    rng: &mut R,
) -> ComplexVector {
    let tau = texture.sample(rng).sqrt();
    let mut x = sample_speckle(gt, rng).scale(tau);
    add_noise(&mut x, gt.noise_var, rng);
    x
}

/// A constant-Doppler moving target.
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub alpha: Complex64,
    pub doppler: f64,
    pub spatial: ComplexVector,
    pub temporal: ComplexVector,
}

impl TargetSpec {
    pub fn new(alpha: Complex64, doppler: f64, geometry: &SteeringGeometry) -> Self {
        let d = steering(doppler, geometry);
        Self {
            alpha,
            doppler,
            spatial: d.spatial,
            temporal: d.temporal,
        }
    }

    /// `α a(f) ⊗ b(f)`; its norm equals `|α|`.
    pub fn return_vector(&self) -> ComplexVector {
        kron_vec(&self.spatial, &self.temporal) * self.alpha
    }
}

/// Target with uniform random phase and Doppler drawn from the moving bins.
pub fn random_target<R: Rng + ?Sized>(cfg: &ScenarioConfig, amplitude: f64, rng: &mut R) -> TargetSpec {
    let dopplers = cfg.moving_dopplers();
    let f = dopplers[rng.random_range(0..dopplers.len())];
    let phase = rng.random_range(0.0..2.0 * PI);
    TargetSpec::new(Complex64::from_polar(amplitude, phase), f, &cfg.geometry())
}

/// Adds target returns to `⌊corruption_frac · n⌋` uniformly chosen snapshots.
/// Returns the modified snapshots and a mask of corrupted indices.
pub fn inject_targets<R: Rng + ?Sized>(
    mut samples: Vec<ComplexVector>,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> (Vec<ComplexVector>, Vec<bool>) {
    let n = samples.len();
    let mut mask = vec![false; n];
    let w = ((cfg.corruption_frac * n as f64).floor() as usize).min(n);
    if w == 0 {
        return (samples, mask);
    }
    for idx in index::sample(rng, n, w).into_vec() {
        let amp = cfg.target_amp_law.sample(cfg.noise_var, rng);
        let target = random_target(cfg, amp, rng);
        samples[idx] += target.return_vector();
        mask[idx] = true;
    }
    (samples, mask)
}

/// Clean training set of `n` snapshots.
pub fn make_training_set<R: Rng + ?Sized>(
    gt: &GroundTruthCov,
    cfg: &ScenarioConfig,
    n: usize,
    rng: &mut R,
) -> Vec<ComplexVector> {
    (0..n).map(|_| sample_clutter(gt, &cfg.texture, rng)).collect()
}

/// `n` clutter-plus-noise test snapshots, each carrying `target`'s return when given.
pub fn make_test_set<R: Rng + ?Sized>(
    gt: &GroundTruthCov,
    cfg: &ScenarioConfig,
    target: Option<&TargetSpec>,
    n: usize,
    rng: &mut R,
) -> Vec<ComplexVector> {
    let z = target.map(TargetSpec::return_vector);
    (0..n)
        .map(|_| {
            let mut x = sample_clutter(gt, &cfg.texture, rng);
            if let Some(z) = &z {
                x += z;
            }
            x
        })
        .collect()
}

/// Two registered passes over the same scene.
///
/// Both passes share the texture and temporal factor; the mission pass has its
/// own calibration vector and speckle correlated with the reference speckle by
/// `coherence`, which makes the stacked spatial factor rank two.
pub fn simulate_multipass_pair<R: Rng + ?Sized>(
    gt: &GroundTruthCov,
    cfg: &ScenarioConfig,
    coherence: f64,
    bins: usize,
    rng: &mut R,
) -> Result<(Vec<ComplexVector>, Vec<ComplexVector>)> {
    if !(0.0..=1.0).contains(&coherence) {
        return Err(Error::InvalidArgument(format!("coherence {coherence} outside [0, 1]")));
    }
    let h2 = calibration_vector(rng, gt.p);
    let r = gt.temporal_eigs.len();
    let mut lb = gt.temporal_vectors.clone();
    for (k, v) in gt.temporal_eigs.iter().enumerate() {
        lb.column_mut(k).scale_mut(v.sqrt());
    }
    let scale = gt.spatial_eigs[0].sqrt();
    let fresh = (1.0 - coherence * coherence).sqrt();
    let mut reference = Vec::with_capacity(bins);
    let mut mission = Vec::with_capacity(bins);
    for _ in 0..bins {
        let tau = cfg.texture.sample(rng).sqrt();
        let w1 = gaussian_matrix(rng, 1, r);
        let w2 = w1.scale(coherence) + gaussian_matrix(rng, 1, r).scale(fresh);
        let c1 = &lb * w1.transpose();
        let c2 = &lb * w2.transpose();
        let mut x1 = kron_vec(&gt.h, &c1.column(0).into_owned()).scale(tau * scale);
        let mut x2 = kron_vec(&h2, &c2.column(0).into_owned()).scale(tau * scale);
        add_noise(&mut x1, gt.noise_var, rng);
        add_noise(&mut x2, gt.noise_var, rng);
        reference.push(x1);
        mission.push(x2);
    }
    Ok((reference, mission))
}
