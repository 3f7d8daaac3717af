//! Covariance estimators: sample covariance, the closed-form nearest Kronecker
//! product, the low-rank alternating estimator (LR-Kron) and the naive rank-one
//! spatial estimator.
//!
//! All estimators fix the Kronecker gauge by normalizing the spatial factor to
//! unit Frobenius norm, so the overall scale lives in the temporal factor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, eig_truncate, ensure_psd, hermitian_part, kron, rearrange, svd_first_component,
    truncate_from_eig, unvec_spacetime, ComplexMatrix, ComplexVector, ZERO,
};

/// Default relative objective decrease below which LR-Kron stops.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap for LR-Kron.
pub const DEFAULT_MAX_ITER: usize = 200;

/// Sample covariance `S = (1/n) Σ x xᴴ` of space-time snapshots.
#[derive(Debug, Clone)]
pub struct SampleCovariance {
    pub s: ComplexMatrix,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl SampleCovariance {
    /// Wraps an existing Hermitian matrix, e.g. a known covariance.
    pub fn from_matrix(s: ComplexMatrix, n: usize, p: usize, q: usize) -> Result<Self> {
        if s.shape() != (p * q, p * q) {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, expected {}x{}",
                s.nrows(),
                s.ncols(),
                p * q,
                p * q
            )));
        }
        crate::linalg::ensure_finite(&s)?;
        Ok(Self { s, n, p, q })
    }

    pub fn dim(&self) -> usize {
        self.p * self.q
    }

    /// Returns a copy with the matrix scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            s: self.s.scale(c),
            ..self.clone()
        }
    }
}

/// Sample covariance of `pq`-length snapshots.
pub fn scm(samples: &[ComplexVector], p: usize, q: usize) -> Result<SampleCovariance> {
    if samples.is_empty() {
        return Err(Error::Empty("sample list"));
    }
    let dim = p * q;
    if let Some(bad) = samples.iter().find(|x| x.len() != dim) {
        return Err(Error::Dimension(format!(
            "sample of length {} where {dim} expected",
            bad.len()
        )));
    }
    let n = samples.len();
    let data = ComplexMatrix::from_fn(dim, n, |i, m| samples[m][i]);
    let mut s = ComplexMatrix::zeros(dim, dim);
    s.gemm(Complex64::new(1.0 / n as f64, 0.0), &data, &data.adjoint(), ZERO);
    Ok(SampleCovariance {
        s: hermitian_part(&s),
        n,
        p,
        q,
    })
}

/// Estimated Kronecker covariance `A ⊗ B` with `A` spatial (`p × p`) and `B`
/// temporal (`q × q`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KronCovModel {
    #[serde(with = "crate::io::serde_matrix")]
    pub a: ComplexMatrix,
    #[serde(with = "crate::io::serde_matrix")]
    pub b: ComplexMatrix,
    pub rank_a: usize,
    pub rank_b: usize,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KronCovModel {
    /// Model built directly from known factors (no estimation history).
    pub fn from_factors(a: ComplexMatrix, b: ComplexMatrix, rank_a: usize, rank_b: usize) -> Result<Self> {
        if !a.is_square() || !b.is_square() {
            return Err(Error::Dimension("Kronecker factors must be square".into()));
        }
        if rank_a == 0 || rank_a > a.nrows() || rank_b == 0 || rank_b > b.nrows() {
            return Err(Error::InvalidArgument(format!(
                "ranks ({rank_a}, {rank_b}) outside factor dimensions ({}, {})",
                a.nrows(),
                b.nrows()
            )));
        }
        Ok(Self {
            a,
            b,
            rank_a,
            rank_b,
            objective_trace: Vec::new(),
            iterations: 0,
            converged: true,
        })
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.b.nrows()
    }

    pub fn covariance(&self) -> ComplexMatrix {
        kron(&self.a, &self.b)
    }

    /// Orthonormal basis of the leading `rank_a` eigenvectors of `A`.
    pub fn spatial_subspace(&self) -> Result<ComplexMatrix> {
        Ok(eig_hermitian(&self.a)?.leading_vectors(self.rank_a))
    }

    /// Orthonormal basis of the leading `rank_b` eigenvectors of `B`.
    pub fn temporal_subspace(&self) -> Result<ComplexMatrix> {
        Ok(eig_hermitian(&self.b)?.leading_vectors(self.rank_b))
    }

    /// `‖S − A ⊗ B‖²_F`.
    pub fn objective(&self, s: &SampleCovariance) -> f64 {
        kron_objective(&s.s, &self.a, &self.b)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

/// `‖S − A ⊗ B‖²_F` evaluated entrywise.
pub fn kron_objective(s: &ComplexMatrix, a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let p = a.nrows();
    let q = b.nrows();
    let mut acc = 0.0;
    for j in 0..p {
        for i in 0..p {
            let aij = a[(i, j)];
            for l in 0..q {
                for k in 0..q {
                    acc += (s[(i * q + k, j * q + l)] - aij * b[(k, l)]).norm_sqr();
                }
            }
        }
    }
    acc
}

/// `R_B = Σ_{ij} conj(a_ij) S(i,j) / ‖A‖²`: the unconstrained least-squares
/// temporal factor for a fixed spatial factor.
fn temporal_target(s: &ComplexMatrix, a: &ComplexMatrix, q: usize) -> ComplexMatrix {
    let p = a.nrows();
    let mut r = ComplexMatrix::zeros(q, q);
    for j in 0..p {
        for i in 0..p {
            let w = a[(i, j)].conj();
            if w == ZERO {
                continue;
            }
            r.zip_apply(&s.view((i * q, j * q), (q, q)), |o, v| *o += w * v);
        }
    }
    hermitian_part(&r.unscale(a.norm_squared()))
}

/// `R_A[i,j] = Σ_{kl} conj(b_kl) S(i,j)[k,l] / ‖B‖²`: the unconstrained
/// least-squares spatial factor for a fixed temporal factor.
fn spatial_target(s: &ComplexMatrix, b: &ComplexMatrix, p: usize) -> ComplexMatrix {
    let q = b.nrows();
    let mut r = ComplexMatrix::zeros(p, p);
    for j in 0..p {
        for i in 0..p {
            let blk = s.view((i * q, j * q), (q, q));
            r[(i, j)] = b.iter().zip(blk.iter()).map(|(bv, sv)| bv.conj() * sv).sum();
        }
    }
    hermitian_part(&r.unscale(b.norm_squared()))
}

/// Rescales `(A, B)` so that `‖A‖_F = 1` without changing `A ⊗ B`.
fn fix_gauge(a: &mut ComplexMatrix, b: &mut ComplexMatrix) {
    let na = a.norm();
    if na > 0.0 {
        a.unscale_mut(na);
        b.scale_mut(na);
    }
}

fn degenerate_model(p: usize, q: usize, rank_a: usize, rank_b: usize) -> KronCovModel {
    KronCovModel {
        a: ComplexMatrix::identity(p, p).unscale((p as f64).sqrt()),
        b: ComplexMatrix::zeros(q, q),
        rank_a,
        rank_b,
        objective_trace: vec![0.0],
        iterations: 0,
        converged: true,
    }
}

/// Unconstrained nearest Kronecker product of `S` from the leading singular
/// component of its rearrangement.
///
/// The singular pair is defined up to a unit complex scalar; it is rotated so
/// `trace(A)` is real and non-negative, then both factors are symmetrized and
/// their eigenvalues clamped at zero.
pub fn kron_ls(s: &SampleCovariance) -> Result<KronCovModel> {
    let (p, q) = (s.p, s.q);
    if s.s.norm() == 0.0 {
        return Ok(degenerate_model(p, q, p, q));
    }
    let top = svd_first_component(&rearrange(&s.s, p, q)?)?;
    let mut a = unvec_spacetime(&top.u, p, p)?;
    let conj_v = top.v.map(|z| z.conj());
    let mut b = unvec_spacetime(&conj_v, q, q)?.scale(top.sigma);

    let tr = a.trace();
    if tr.norm() > 0.0 {
        let phase = tr / tr.norm();
        a *= phase.conj();
        b *= phase;
    }
    a = truncate_from_eig(&eig_hermitian(&a)?, p);
    b = truncate_from_eig(&eig_hermitian(&b)?, q);
    fix_gauge(&mut a, &mut b);
    let objective = kron_objective(&s.s, &a, &b);
    Ok(KronCovModel {
        a,
        b,
        rank_a: p,
        rank_b: q,
        objective_trace: vec![objective],
        iterations: 0,
        converged: true,
    })
}

/// Options for [`lr_kron`].
#[derive(Debug, Clone)]
pub struct LrKronOptions {
    /// Initial `(A, B)`; both must be Hermitian PSD. Defaults to the rank-truncated
    /// [`kron_ls`] factors.
    pub init: Option<(ComplexMatrix, ComplexMatrix)>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LrKronOptions {
    fn default() -> Self {
        Self {
            init: None,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Low-rank Kronecker covariance estimation by alternating minimization of
/// `‖S − A ⊗ B‖²_F` subject to `rank(A) ≤ rank_a`, `rank(B) ≤ rank_b`.
///
/// Each sweep updates `B ← EIG_{r_b}(R_B)` then `A ← EIG_{r_a}(R_A)`, each step
/// being the exact constrained minimizer given the other factor, so the
/// objective trace is non-increasing.
pub fn lr_kron(
    s: &SampleCovariance,
    rank_a: usize,
    rank_b: usize,
    opts: &LrKronOptions,
) -> Result<KronCovModel> {
    let (p, q) = (s.p, s.q);
    if rank_a == 0 || rank_a > p || rank_b == 0 || rank_b > q {
        return Err(Error::InvalidArgument(format!(
            "rank bounds ({rank_a}, {rank_b}) outside 1..={p}, 1..={q}"
        )));
    }
    let (mut a, mut b) = match &opts.init {
        Some((a0, b0)) => {
            if a0.shape() != (p, p) || b0.shape() != (q, q) {
                return Err(Error::Dimension("initial factors do not match p, q".into()));
            }
            ensure_psd(a0, 1e-10, "initial A")?;
            ensure_psd(b0, 1e-10, "initial B")?;
            (hermitian_part(a0), hermitian_part(b0))
        }
        None => {
            if s.s.norm() == 0.0 {
                return Ok(degenerate_model(p, q, rank_a, rank_b));
            }
            let ls = kron_ls(s)?;
            (eig_truncate(&ls.a, rank_a)?, eig_truncate(&ls.b, rank_b)?)
        }
    };
    if a.norm() == 0.0 {
        return Err(Error::InvalidArgument("initial A must be nonzero".into()));
    }
    fix_gauge(&mut a, &mut b);

    let mut trace = vec![kron_objective(&s.s, &a, &b)];
    let mut converged = trace[0] == 0.0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iter {
        iterations += 1;
        b = eig_truncate(&temporal_target(&s.s, &a, q), rank_b)?;
        if b.norm() == 0.0 {
            // S has no energy along A: the best B is zero and A is irrelevant.
            trace.push(kron_objective(&s.s, &a, &b));
            converged = true;
            break;
        }
        let a_new = eig_truncate(&spatial_target(&s.s, &b, p), rank_a)?;
        if a_new.norm() > 0.0 {
            a = a_new;
            fix_gauge(&mut a, &mut b);
        }
        let obj = kron_objective(&s.s, &a, &b);
        let prev = *trace.last().expect("trace is never empty");
        trace.push(obj);
        converged = obj == 0.0 || prev - obj <= opts.tol * prev;
    }
    Ok(KronCovModel {
        a,
        b,
        rank_a,
        rank_b,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Temporal factor update for a fixed spatial factor: `EIG_{r_b}(R_B(A))`.
pub fn temporal_update(s: &SampleCovariance, a: &ComplexMatrix, rank_b: usize) -> Result<ComplexMatrix> {
    if a.shape() != (s.p, s.p) {
        return Err(Error::Dimension("spatial factor does not match p".into()));
    }
    if a.norm() == 0.0 {
        return Err(Error::InvalidArgument("spatial factor must be nonzero".into()));
    }
    eig_truncate(&temporal_target(&s.s, a, s.q), rank_b)
}

/// Spatial covariance averaged over pulses: `(1/q) Σ_k S[iq+k, jq+k]`.
pub fn pulse_averaged_spatial(s: &SampleCovariance) -> ComplexMatrix {
    let (p, q) = (s.p, s.q);
    let m = ComplexMatrix::from_fn(p, p, |i, j| {
        (0..q).map(|k| s.s[(i * q + k, j * q + k)]).sum::<Complex64>()
    });
    hermitian_part(&m.unscale(q as f64))
}

/// Naive rank-one spatial estimate `ψ h hᴴ = EIG₁` of the pulse-averaged
/// spatial covariance. Returns `(ψ, h)` with `‖h‖ = 1`.
pub fn spatial_naive(s: &SampleCovariance) -> Result<(f64, ComplexVector)> {
    let eig = eig_hermitian(&pulse_averaged_spatial(s))?;
    Ok((eig.values[0].max(0.0), eig.vectors.column(0).into_owned()))
}

/// Stacks two registered `p × q` passes into a `2p × q` snapshot.
pub fn multipass_stack(x1: &ComplexMatrix, x2: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::Dimension(format!(
            "pulse counts differ: {} vs {}",
            x1.ncols(),
            x2.ncols()
        )));
    }
    let (p1, p2) = (x1.nrows(), x2.nrows());
    Ok(ComplexMatrix::from_fn(p1 + p2, x1.ncols(), |i, j| {
        if i < p1 {
            x1[(i, j)]
        } else {
            x2[(i - p1, j)]
        }
    }))
}

/// [`multipass_stack`] on vectorized snapshots. With channel-major ordering the
/// stacked vector is the concatenation of the two inputs.
pub fn multipass_stack_vec(x1: &ComplexVector, x2: &ComplexVector) -> Result<ComplexVector> {
    if x1.len() != x2.len() {
        return Err(Error::Dimension(format!(
            "pass lengths differ: {} vs {}",
            x1.len(),
            x2.len()
        )));
    }
    Ok(ComplexVector::from_iterator(
        x1.len() * 2,
        x1.iter().chain(x2.iter()).copied(),
    ))
}
