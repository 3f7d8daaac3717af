//! Clutter-cancellation filters, steering vectors and the max-over-steering
//! detection statistic.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::{KronCovModel, SampleCovariance};
use crate::error::{Error, Result};
use crate::linalg::{
    complement_projector, eig_hermitian, kron, kron_vec, unvec_spacetime, vec_spacetime,
    ComplexMatrix, ComplexVector, ONE, ZERO,
};
use crate::par::{self, Execution};

/// Largest condition number accepted by [`optimal_filter`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterKind {
    /// Inverse covariance.
    Optimal,
    /// `I − U Uᴴ` with `U` the leading eigenvectors of the sample covariance.
    LowRank,
    /// `I − U_A U_Aᴴ ⊗ U_B U_Bᴴ`.
    KronClassical,
    /// `(I − U_A U_Aᴴ) ⊗ I`.
    KronSpatial,
    /// `(I − U_A U_Aᴴ) ⊗ (I − U_B U_Bᴴ)`.
    KronFull,
    /// Pass-through.
    Identity,
}

impl FilterKind {
    pub fn is_projector(self) -> bool {
        !matches!(self, FilterKind::Optimal)
    }
}

#[derive(Debug, Clone)]
pub enum Representation {
    Dense(ComplexMatrix),
    /// `F_A ⊗ F_B`, applied through the reshape identity and never densified.
    Factored {
        spatial: ComplexMatrix,
        temporal: ComplexMatrix,
    },
}

/// A `pq × pq` clutter-cancellation operator.
#[derive(Debug, Clone)]
pub struct StapFilter {
    pub kind: FilterKind,
    pub repr: Representation,
    pub p: usize,
    pub q: usize,
}

fn is_exact_identity(m: &ComplexMatrix) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(k, z)| {
            let (i, j) = (k % m.nrows(), k / m.nrows());
            *z == if i == j { ONE } else { ZERO }
        })
}

impl StapFilter {
    pub fn identity(p: usize, q: usize) -> Self {
        Self {
            kind: FilterKind::Identity,
            repr: Representation::Factored {
                spatial: ComplexMatrix::identity(p, p),
                temporal: ComplexMatrix::identity(q, q),
            },
            p,
            q,
        }
    }

    /// Projector onto the orthogonal complement of the columns of `u`
    /// (orthonormal), as a dense low-rank STAP filter.
    pub fn from_subspace(u: &ComplexMatrix, p: usize, q: usize) -> Result<Self> {
        if u.nrows() != p * q {
            return Err(Error::Dimension(format!(
                "subspace basis has {} rows, expected {}",
                u.nrows(),
                p * q
            )));
        }
        Ok(Self {
            kind: FilterKind::LowRank,
            repr: Representation::Dense(complement_projector(u)),
            p,
            q,
        })
    }

    /// Factor-pair filter `F_A ⊗ F_B`.
    pub fn factored(kind: FilterKind, spatial: ComplexMatrix, temporal: ComplexMatrix) -> Result<Self> {
        if !spatial.is_square() || !temporal.is_square() {
            return Err(Error::Dimension("filter factors must be square".into()));
        }
        let (p, q) = (spatial.nrows(), temporal.nrows());
        Ok(Self {
            kind,
            repr: Representation::Factored { spatial, temporal },
            p,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.p * self.q
    }

    /// Dense `pq × pq` matrix of the operator.
    pub fn to_dense(&self) -> ComplexMatrix {
        match &self.repr {
            Representation::Dense(f) => f.clone(),
            Representation::Factored { spatial, temporal } => kron(spatial, temporal),
        }
    }

    /// `F x`. Factor pairs use `vec(F_A X F_Bᵀ)`.
    pub fn apply(&self, x: &ComplexVector) -> Result<ComplexVector> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "snapshot of length {} for a {}-dimensional filter",
                x.len(),
                self.dim()
            )));
        }
        Ok(match &self.repr {
            Representation::Dense(f) => f * x,
            Representation::Factored { spatial, temporal } => {
                let snap = unvec_spacetime(x, self.p, self.q)?;
                let mut y = spatial * snap;
                if !is_exact_identity(temporal) {
                    y *= temporal.transpose();
                }
                vec_spacetime(&y)
            }
        })
    }

    /// Applies the filter to every snapshot.
    pub fn apply_batch(&self, xs: &[ComplexVector], exec: Execution) -> Result<Vec<ComplexVector>> {
        par::map_indexed(exec, xs.len(), |m| self.apply(&xs[m]))
            .into_iter()
            .collect()
    }
}

/// Optimal filter `Σ⁻¹`.
pub fn optimal_filter(sigma: &ComplexMatrix, p: usize, q: usize) -> Result<StapFilter> {
    if sigma.shape() != (p * q, p * q) {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, expected {n}x{n}",
            sigma.nrows(),
            sigma.ncols(),
            n = p * q
        )));
    }
    let eig = eig_hermitian(sigma)?;
    let (top, bottom) = (eig.values[0], eig.min_value());
    if bottom <= 0.0 || top / bottom > MAX_CONDITION {
        let cond = if bottom <= 0.0 { f64::INFINITY } else { top / bottom };
        return Err(Error::Singular(cond));
    }
    let n = p * q;
    let mut scaled = eig.vectors.clone();
    for (k, v) in eig.values.iter().enumerate() {
        scaled.column_mut(k).unscale_mut(*v);
    }
    let mut inv = ComplexMatrix::zeros(n, n);
    inv.gemm(ONE, &scaled, &eig.vectors.adjoint(), ZERO);
    Ok(StapFilter {
        kind: FilterKind::Optimal,
        repr: Representation::Dense(crate::linalg::hermitian_part(&inv)),
        p,
        q,
    })
}

/// Low-rank STAP: projects out the leading `r` principal components of `S`.
pub fn lr_stap_filter(s: &SampleCovariance, r: usize) -> Result<StapFilter> {
    let n = s.dim();
    if r == 0 || r >= n {
        return Err(Error::InvalidArgument(format!(
            "LR-STAP rank {r} outside 1..{n}"
        )));
    }
    let u = eig_hermitian(&s.s)?.leading_vectors(r);
    StapFilter::from_subspace(&u, s.p, s.q)
}

/// Kronecker analogue of the low-rank projector, removing only the joint
/// space-time clutter subspace.
pub fn kron_classical_filter(model: &KronCovModel) -> Result<StapFilter> {
    let ua = model.spatial_subspace()?;
    let ub = model.temporal_subspace()?;
    let pa = &ua * ua.adjoint();
    let pb = &ub * ub.adjoint();
    let n = model.p() * model.q();
    let f = ComplexMatrix::identity(n, n) - kron(&pa, &pb);
    Ok(StapFilter {
        kind: FilterKind::KronClassical,
        repr: Representation::Dense(f),
        p: model.p(),
        q: model.q(),
    })
}

/// Spatial-only Kronecker filter `(I − U_A U_Aᴴ) ⊗ I`.
pub fn kron_spatial_filter(model: &KronCovModel) -> Result<StapFilter> {
    let fa = complement_projector(&model.spatial_subspace()?);
    StapFilter::factored(FilterKind::KronSpatial, fa, ComplexMatrix::identity(model.q(), model.q()))
}

/// Spatio-temporal Kronecker filter `(I − U_A U_Aᴴ) ⊗ (I − U_B U_Bᴴ)`.
pub fn kron_full_filter(model: &KronCovModel) -> Result<StapFilter> {
    let fa = complement_projector(&model.spatial_subspace()?);
    let fb = complement_projector(&model.temporal_subspace()?);
    StapFilter::factored(FilterKind::KronFull, fa, fb)
}

/// Array geometry for steering vectors: the spatial phase of antenna `i` at
/// Doppler `f` is `2π c_i f`, and the temporal signature over `pulses` pulses is
/// a complex exponential at `f` cycles per pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringGeometry {
    pub phase_coeffs: Vec<f64>,
    pub pulses: usize,
}

impl SteeringGeometry {
    /// Uniform geometry with `c_i = i` (zero-based).
    pub fn uniform(p: usize, q: usize) -> Self {
        Self {
            phase_coeffs: (0..p).map(|i| i as f64).collect(),
            pulses: q,
        }
    }

    pub fn channels(&self) -> usize {
        self.phase_coeffs.len()
    }
}

/// Unit-norm separable steering vector `d = a(f) ⊗ b(f)`.
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub spatial: ComplexVector,
    pub temporal: ComplexVector,
    pub doppler: f64,
}

impl SteeringVector {
    /// Builds a steering vector from arbitrary factors, normalizing each.
    pub fn from_parts(spatial: ComplexVector, temporal: ComplexVector, doppler: f64) -> Result<Self> {
        let (na, nb) = (spatial.norm(), temporal.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::InvalidArgument("steering factors must be nonzero".into()));
        }
        Ok(Self {
            spatial: spatial.unscale(na),
            temporal: temporal.unscale(nb),
            doppler,
        })
    }

    pub fn full(&self) -> ComplexVector {
        kron_vec(&self.spatial, &self.temporal)
    }
}

/// Unit-norm temporal signature `b(f)_k = e^{j2πfk} / √q`.
pub fn temporal_steering(f: f64, q: usize) -> ComplexVector {
    let s = 1.0 / (q as f64).sqrt();
    ComplexVector::from_fn(q, |k, _| Complex64::from_polar(s, 2.0 * PI * f * k as f64))
}

/// Steering vector at normalized Doppler `f`.
pub fn steering(f: f64, geometry: &SteeringGeometry) -> SteeringVector {
    let p = geometry.channels();
    let s = 1.0 / (p as f64).sqrt();
    let spatial = ComplexVector::from_iterator(
        p,
        geometry
            .phase_coeffs
            .iter()
            .map(|c| Complex64::from_polar(s, 2.0 * PI * c * f)),
    );
    SteeringVector {
        spatial,
        temporal: temporal_steering(f, geometry.pulses),
        doppler: f,
    }
}

/// Per-Doppler `max_{‖h‖=1} |(h ⊗ b(f))ᴴ z|` for an already filtered snapshot `z`.
///
/// The maximum is attained at `h ∝ G` with `G_k = (e_k ⊗ b(f))ᴴ z`, giving `‖G‖`.
pub fn max_steering_response(z: &ComplexVector, p: usize, q: usize, dopplers: &[f64]) -> Result<Vec<f64>> {
    if dopplers.is_empty() {
        return Err(Error::Empty("Doppler grid"));
    }
    let snap = unvec_spacetime(z, p, q)?;
    Ok(dopplers
        .iter()
        .map(|&f| {
            let b = temporal_steering(f, q).map(|c| c.conj());
            (&snap * b).norm()
        })
        .collect())
}

/// Detection statistic per Doppler bin: filter `x` with `F`, then maximize the
/// response over unit spatial steering vectors.
pub fn detect_stat(x: &ComplexVector, filter: &StapFilter, dopplers: &[f64]) -> Result<Vec<f64>> {
    let z = filter.apply(x)?;
    max_steering_response(&z, filter.p, filter.q, dopplers)
}
