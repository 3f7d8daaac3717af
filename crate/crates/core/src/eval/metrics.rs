//! Filter quality and detection metrics.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::stap::StapFilter;

/// Output SINR of a filter relative to the best achievable SINR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub sinr_out: f64,
    pub sinr_max: f64,
    pub rho: f64,
}

fn check_square(sigma: &ComplexMatrix, n: usize) -> Result<()> {
    if sigma.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "covariance is {}x{}, expected {n}x{n}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    Ok(())
}

/// `|α|² |wᴴd|² / (wᴴ Σ w)`.
pub fn sinr(w: &ComplexVector, d: &ComplexVector, alpha: num_complex::Complex64, sigma: &ComplexMatrix) -> Result<f64> {
    if w.len() != d.len() {
        return Err(Error::Dimension(format!("filter length {} vs steering length {}", w.len(), d.len())));
    }
    check_square(sigma, w.len())?;
    let denom = w.dotc(&(sigma * w)).re;
    if !(denom > 0.0) {
        return Err(Error::Numerical(format!("interference power wᴴΣw = {denom:e} is not positive")));
    }
    Ok(alpha.norm_sqr() * w.dotc(d).norm_sqr() / denom)
}

/// `dᴴ Σ⁻¹ d`, the SINR of the optimal weight `Σ⁻¹ d` for a unit-power target.
pub fn sinr_max(d: &ComplexVector, sigma: &ComplexMatrix) -> Result<f64> {
    check_square(sigma, d.len())?;
    let chol = Cholesky::new(crate::linalg::hermitian_part(sigma))
        .ok_or_else(|| Error::NotPsd("covariance is not positive definite".into()))?;
    Ok(d.dotc(&chol.solve(d)).re)
}

/// SINR loss of `F̂` for steering vector `d` against the true covariance `Σ`,
/// using the weight `ŵ = F̂ d`. A filter that annihilates `d` has `ρ = 0`.
pub fn sinr_loss(filter: &StapFilter, d: &ComplexVector, sigma: &ComplexMatrix) -> Result<SinrReport> {
    let w = filter.apply(d)?;
    let sinr_max = sinr_max(d, sigma)?;
    let sinr_out = if w.norm() == 0.0 {
        0.0
    } else {
        sinr(&w, d, num_complex::Complex64::new(1.0, 0.0), sigma)?
    };
    Ok(SinrReport {
        sinr_out,
        sinr_max,
        rho: sinr_out / sinr_max,
    })
}

/// Mean squared norm of the filtered test snapshots.
pub fn ms_residual(filter: &StapFilter, test: &[ComplexVector]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let mut acc = 0.0;
    for x in test {
        acc += filter.apply(x)?.norm_squared();
    }
    Ok(acc / test.len() as f64)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the probability that
/// a random H1 score exceeds a random H0 score, ties counting one half.
pub fn roc_auc(scores_h1: &[f64], scores_h0: &[f64]) -> Result<f64> {
    if scores_h1.is_empty() || scores_h0.is_empty() {
        return Err(Error::Empty("score list"));
    }
    if scores_h1.iter().chain(scores_h0).any(|s| s.is_nan()) {
        return Err(Error::NonFinite);
    }
    let mut all: Vec<(f64, bool)> = scores_h1
        .iter()
        .map(|s| (*s, true))
        .chain(scores_h0.iter().map(|s| (*s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Midranks over tied groups.
    let mut rank_sum_h1 = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_h1 += midrank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let (n1, n0) = (scores_h1.len() as f64, scores_h0.len() as f64);
    Ok((rank_sum_h1 - n1 * (n1 + 1.0) / 2.0) / (n1 * n0))
}

fn rms(values: impl Iterator<Item = f64>) -> (f64, usize) {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    ((sum / count.max(1) as f64).sqrt(), count)
}

/// RMS of the `k` largest statistics among `target_bins` divided by the RMS
/// over all other bins.
pub fn contrast_ratio(statistics: &[f64], target_bins: &[usize], k: usize) -> Result<f64> {
    if k == 0 || k > target_bins.len() {
        return Err(Error::InvalidArgument(format!(
            "k={k} must lie in 1..={}",
            target_bins.len()
        )));
    }
    let mut is_target = vec![false; statistics.len()];
    for &t in target_bins {
        let slot = is_target
            .get_mut(t)
            .ok_or_else(|| Error::InvalidArgument(format!("target bin {t} out of range")))?;
        *slot = true;
    }
    let mut top: Vec<f64> = target_bins.iter().map(|&t| statistics[t]).collect();
    top.sort_by(|a, b| b.total_cmp(a));
    let (num, _) = rms(top.into_iter().take(k));
    let (den, count) = rms(
        statistics
            .iter()
            .zip(&is_target)
            .filter(|(_, t)| !**t)
            .map(|(s, _)| *s),
    );
    if count == 0 {
        return Err(Error::Empty("background bins"));
    }
    if den == 0.0 {
        return Err(Error::Numerical("background RMS is zero".into()));
    }
    Ok(num / den)
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
