//! Dense complex linear algebra used throughout the crate.
//!
//! Space-time data follow one vectorization convention everywhere: a `p × q`
//! snapshot `X` (channels by pulses) maps to the length-`pq` vector with
//! `x[i * q + j] = X[i, j]` (channel-major, pulse-minor). Under this ordering a
//! separable return `a ⊗ b` has covariance `(a aᴴ) ⊗ (b bᴴ)` with the spatial
//! factor on the left.
//!
//! Decompositions are delegated to `nalgebra`; this module adds the ordering,
//! symmetrization and truncation conventions the estimators rely on.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Builds a matrix from row-major entries, rejecting NaN and infinities.
pub fn matrix_from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = ComplexMatrix::from_row_slice(rows, cols, entries);
    ensure_finite(&m)?;
    Ok(m)
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(values[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            let mut blk = out.view_mut((i * br, j * bc), (br, bc));
            blk.zip_apply(b, |o, v| *o = s * v);
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let q = b.len();
    ComplexVector::from_fn(a.len() * q, |k, _| a[k / q] * b[k % q])
}

/// Channel-major, pulse-minor vectorization of a `p × q` snapshot.
pub fn vec_spacetime(x: &ComplexMatrix) -> ComplexVector {
    let (p, q) = x.shape();
    ComplexVector::from_fn(p * q, |k, _| x[(k / q, k % q)])
}

/// Inverse of [`vec_spacetime`].
pub fn unvec_spacetime(x: &ComplexVector, p: usize, q: usize) -> Result<ComplexMatrix> {
    if x.len() != p * q {
        return Err(Error::Dimension(format!(
            "vector of length {} cannot be reshaped to {p}x{q}",
            x.len()
        )));
    }
    Ok(ComplexMatrix::from_fn(p, q, |i, j| x[i * q + j]))
}

/// The `pq × pq` permutation with `K · vec(N) = vec(Nᵀ)` for every `p × q` matrix `N`.
pub fn perm_kpq(p: usize, q: usize) -> ComplexMatrix {
    let mut k = ComplexMatrix::zeros(p * q, p * q);
    for i in 0..p {
        for j in 0..q {
            k[(j * p + i, i * q + j)] = ONE;
        }
    }
    k
}

/// Reorders a `pq × pq` space-time matrix into pulse-major, channel-minor
/// ordering, i.e. `K M Kᵀ` with `K = perm_kpq(p, q)`, by index permutation.
/// If `M ≈ A ⊗ B` the result is `≈ B ⊗ A`.
pub fn permute_spacetime(m: &ComplexMatrix, p: usize, q: usize) -> Result<ComplexMatrix> {
    check_square_dim(m, p * q, "permute_spacetime")?;
    Ok(ComplexMatrix::from_fn(p * q, p * q, |r, c| {
        let (j, i) = (r / p, r % p);
        let (l, k) = (c / p, c % p);
        m[(i * q + j, k * q + l)]
    }))
}

/// `q × q` block `(i, j)` of a `pq × pq` matrix.
pub fn block(m: &ComplexMatrix, i: usize, j: usize, q: usize) -> ComplexMatrix {
    m.view((i * q, j * q), (q, q)).into_owned()
}

/// Rearrangement mapping `pq × pq` matrices to `p² × q²` matrices.
///
/// Row `i * p + j` holds the vectorized block `M(i, j)` so that
/// `rearrange(A ⊗ B) = vec(A) vec(B)ᵀ`.
pub fn rearrange(m: &ComplexMatrix, p: usize, q: usize) -> Result<ComplexMatrix> {
    check_square_dim(m, p * q, "rearrange")?;
    Ok(ComplexMatrix::from_fn(p * p, q * q, |r, c| {
        let (i, j) = (r / p, r % p);
        let (k, l) = (c / q, c % q);
        m[(i * q + k, j * q + l)]
    }))
}

/// Inverse of [`rearrange`].
pub fn rearrange_inv(r: &ComplexMatrix, p: usize, q: usize) -> Result<ComplexMatrix> {
    if r.shape() != (p * p, q * q) {
        return Err(Error::Dimension(format!(
            "rearrange_inv expects {}x{}, got {}x{}",
            p * p,
            q * q,
            r.nrows(),
            r.ncols()
        )));
    }
    Ok(ComplexMatrix::from_fn(p * q, p * q, |row, col| {
        let (i, k) = (row / q, row % q);
        let (j, l) = (col / q, col % q);
        r[(i * p + j, k * q + l)]
    }))
}

fn check_square_dim(m: &ComplexMatrix, n: usize, what: &str) -> Result<()> {
    if m.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "{what} expects {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// `(M + Mᴴ) / 2`.
pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in decreasing order.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// First `r` eigenvectors as an `n × r` matrix.
    pub fn leading_vectors(&self, r: usize) -> ComplexMatrix {
        self.vectors.columns(0, r).into_owned()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        weighted_outer(&self.vectors, &self.values)
    }

    pub fn min_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// `Σ_k w_k v_k v_kᴴ` over the first `weights.len()` columns of `vectors`.
fn weighted_outer(vectors: &ComplexMatrix, weights: &[f64]) -> ComplexMatrix {
    let n = vectors.nrows();
    let r = weights.len();
    let u = vectors.columns(0, r);
    let mut scaled = u.into_owned();
    for (k, w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(*w);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    out.gemm(ONE, &scaled, &u.adjoint(), ZERO);
    out
}

/// Eigendecomposition of the Hermitian part of `m`, values sorted descending.
///
/// Ties keep the order produced by the underlying solver.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEig> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eig_hermitian expects a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    ensure_finite(m)?;
    let n = m.nrows();
    let h = hermitian_part(m);
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("Hermitian eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Best rank-`r` positive semidefinite approximation `Σ_{k≤r} σ_k u_k u_kᴴ`.
///
/// Negative eigenvalues (roundoff on PSD inputs) are clamped to zero.
pub fn eig_truncate(m: &ComplexMatrix, r: usize) -> Result<ComplexMatrix> {
    if r == 0 || r > m.nrows() {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {r} outside 1..={}",
            m.nrows()
        )));
    }
    let eig = eig_hermitian(m)?;
    Ok(truncate_from_eig(&eig, r))
}

pub(crate) fn truncate_from_eig(eig: &HermitianEig, r: usize) -> ComplexMatrix {
    let w: Vec<f64> = eig.values[..r].iter().map(|v| v.max(0.0)).collect();
    hermitian_part(&weighted_outer(&eig.vectors, &w))
}

/// Leading singular triple of a matrix.
#[derive(Debug, Clone)]
pub struct SingularComponent {
    pub sigma: f64,
    pub u: ComplexVector,
    pub v: ComplexVector,
}

/// First singular component: `σ₁ u₁ v₁ᴴ` is the best rank-one approximation of `m`.
pub fn svd_first_component(m: &ComplexMatrix) -> Result<SingularComponent> {
    ensure_finite(m)?;
    let (rows, cols) = m.shape();
    if m.iter().all(|z| *z == ZERO) {
        let mut u = ComplexVector::zeros(rows);
        let mut v = ComplexVector::zeros(cols);
        u[0] = ONE;
        v[0] = ONE;
        return Ok(SingularComponent { sigma: 0.0, u, v });
    }
    // Decompose the tall orientation; the singular pairs nalgebra returns for
    // wide complex inputs do not always match up.
    let wide = rows < cols;
    let target = if wide { m.adjoint() } else { m.clone() };
    let svd = SVD::try_new(target, true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let k = svd.singular_values.imax();
    let left = svd.u.as_ref().expect("u requested").column(k).into_owned();
    let right = svd.v_t.as_ref().expect("v requested").row(k).adjoint();
    let (u, v) = if wide { (right, left) } else { (left, right) };
    Ok(SingularComponent {
        sigma: svd.singular_values[k],
        u,
        v,
    })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = SVD::new_unordered(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `rel_tol · σ₁`.
pub fn numerical_rank(m: &ComplexMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > rel_tol * top).count(),
        _ => 0,
    }
}

/// `I − U Uᴴ` for a matrix `U` with orthonormal columns.
pub fn complement_projector(u: &ComplexMatrix) -> ComplexMatrix {
    let n = u.nrows();
    let mut out = ComplexMatrix::identity(n, n);
    out.gemm(-ONE, u, &u.adjoint(), ONE);
    out
}

/// True when `‖M − Mᴴ‖_F ≤ tol · max(‖M‖_F, 1)`.
pub fn is_hermitian(m: &ComplexMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

/// Checks Hermitian PSD-ness with a relative tolerance on the smallest eigenvalue.
pub fn ensure_psd(m: &ComplexMatrix, tol: f64, what: &str) -> Result<()> {
    if !is_hermitian(m, tol.max(1e-8)) {
        return Err(Error::NotPsd(format!("{what} is not Hermitian")));
    }
    let eig = eig_hermitian(m)?;
    if eig.min_value() < -tol * m.norm() {
        return Err(Error::NotPsd(format!(
            "{what} has eigenvalue {:.3e}",
            eig.min_value()
        )));
    }
    Ok(())
}
