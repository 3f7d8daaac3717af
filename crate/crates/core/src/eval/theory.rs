//! Large-sample SINR loss predictions for low-rank and Kronecker STAP.

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    Ok(n as f64)
}

/// Expected SINR loss of LR-STAP with `r` components and `n` training samples:
/// `1 − (1/n) Σ_{i≤r} ((E[τ²]λ_i + σ²) / (E[τ²]λ_i))²`, with `λ_i` the clutter
/// eigenvalues in decreasing order.
pub fn theory_rho_lr(n: usize, r: usize, eigenvalues: &[f64], e_tau2: f64, noise_var: f64) -> Result<f64> {
    let n = check_n(n)?;
    if r > eigenvalues.len() {
        return Err(Error::InvalidArgument(format!(
            "rank {r} exceeds the {} eigenvalues supplied",
            eigenvalues.len()
        )));
    }
    let mut sum = 0.0;
    for &lambda in &eigenvalues[..r] {
        let c = e_tau2 * lambda;
        if !(c > 0.0) {
            return Err(Error::InvalidArgument("zero clutter eigenvalue among the first r".into()));
        }
        sum += ((c + noise_var) / c).powi(2);
    }
    Ok(1.0 - sum / n)
}

/// Lower bound on the expected SINR loss of the spatial Kronecker stage with
/// the pulse-averaged rank-one estimator: `1 − (1/n)((E[τ²]ψ + σ²/q)/(E[τ²]ψ))²`
/// where `ψ = s_A⁽¹⁾ tr(B) / q`.
pub fn theory_rho_kron_spatial(n: usize, psi: f64, e_tau2: f64, noise_var: f64, q: usize) -> Result<f64> {
    let n = check_n(n)?;
    let c = e_tau2 * psi;
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("ψ must be positive".into()));
    }
    if q == 0 {
        return Err(Error::InvalidArgument("q must be positive".into()));
    }
    Ok(1.0 - ((c + noise_var / q as f64) / c).powi(2) / n)
}

/// Spatial mismatch seen by the temporal stage once `h̃` has been projected out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mismatch {
    /// `κ = d̃ᴴ A d̃ / h̃ᴴ A h̃` with `d̃` the unit-norm residual of `d_A` off `h̃`.
    pub kappa: f64,
    /// `h̃ᴴ A h̃`.
    pub h_power: f64,
}

/// Computes `κ` by its quadratic-form definition.
pub fn mismatch_kappa(a: &ComplexMatrix, h_tilde: &ComplexVector, d_a: &ComplexVector) -> Result<Mismatch> {
    let p = a.nrows();
    if a.shape() != (p, p) || h_tilde.len() != p || d_a.len() != p {
        return Err(Error::Dimension("A, h̃ and d_A must share dimension p".into()));
    }
    let hn = h_tilde.norm();
    if hn == 0.0 {
        return Err(Error::InvalidArgument("h̃ must be nonzero".into()));
    }
    let h = h_tilde.unscale(hn);
    let h_power = h.dotc(&(a * &h)).re;
    if !(h_power > 0.0) {
        return Err(Error::InvalidArgument("h̃ᴴ A h̃ must be positive".into()));
    }
    let resid = d_a - &h * h.dotc(d_a);
    let rn = resid.norm();
    if rn <= 1e-14 * d_a.norm() {
        return Err(Error::InvalidArgument("d_A lies along h̃; nothing survives the spatial stage".into()));
    }
    let d = resid.unscale(rn);
    Ok(Mismatch {
        kappa: d.dotc(&(a * &d)).re / h_power,
        h_power,
    })
}

/// Expected conditional SINR loss of the temporal Kronecker stage given a fixed
/// spatial estimate `h̃`:
/// `1 − (κ/n) Σ_{i≤r_b} (E s_i + σ²/η)(E s_i + σ²/(κη)) / (E s_i)²`
/// with `η = h̃ᴴ A h̃` and `s_i` the temporal eigenvalues.
#[allow(clippy::too_many_arguments)]
pub fn theory_rho_kron_temporal(
    n: usize,
    r_b: usize,
    s_b: &[f64],
    e_tau2: f64,
    noise_var: f64,
    a: &ComplexMatrix,
    h_tilde: &ComplexVector,
    d_a: &ComplexVector,
) -> Result<f64> {
    let n = check_n(n)?;
    if r_b > s_b.len() {
        return Err(Error::InvalidArgument(format!(
            "r_b={r_b} exceeds the {} temporal eigenvalues supplied",
            s_b.len()
        )));
    }
    let Mismatch { kappa, h_power: eta } = mismatch_kappa(a, h_tilde, d_a)?;
    let mut sum = 0.0;
    for &s in &s_b[..r_b] {
        let c = e_tau2 * s;
        if !(c > 0.0) {
            return Err(Error::InvalidArgument("zero temporal eigenvalue among the first r_b".into()));
        }
        // κ multiplied through the second factor keeps κ → 0 finite.
        sum += (c + noise_var / eta) * (kappa * c + noise_var / eta) / (c * c);
    }
    Ok(1.0 - sum / n)
}
