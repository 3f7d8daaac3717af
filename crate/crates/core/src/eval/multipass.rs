//! Two-pass change detection.
//!
//! Each range bin of the reference and mission passes is reduced to one
//! magnitude (the largest steering response over the Doppler grid); the change
//! statistic is the absolute difference of the two magnitudes. The adaptive
//! methods first stack both passes into `2p` virtual channels and cancel
//! clutter in the stacked space, so that returns common to both passes are
//! removed before the magnitudes are formed.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::covariance::{lr_kron, multipass_stack_vec, scm, LrKronOptions};
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;
use crate::par::Execution;
use crate::stap::{kron_full_filter, lr_stap_filter, max_steering_response, StapFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeMethod {
    /// Magnitude differencing after median gain calibration, no clutter filtering.
    Incoherent,
    /// LR-STAP on the stacked passes.
    LrStap,
    /// LR-Kron filter on the stacked passes with a rank-two spatial factor.
    KronStap,
}

impl ChangeMethod {
    pub fn name(self) -> &'static str {
        match self {
            ChangeMethod::Incoherent => "incoherent",
            ChangeMethod::LrStap => "lr_stap",
            ChangeMethod::KronStap => "kron_stap",
        }
    }
}

impl fmt::Display for ChangeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChangeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "incoherent" => Ok(ChangeMethod::Incoherent),
            "lr_stap" => Ok(ChangeMethod::LrStap),
            "kron_stap" => Ok(ChangeMethod::KronStap),
            _ => Err(Error::InvalidArgument(format!(
                "unknown change-detection method `{s}` (expected incoherent, lr_stap or kron_stap)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipassOptions {
    pub method: ChangeMethod,
    pub p: usize,
    pub q: usize,
    /// Temporal rank for `kron_stap`.
    pub r_b: usize,
    /// Number of components removed by `lr_stap`.
    pub lr_rank: usize,
    pub dopplers: Vec<f64>,
}

/// Spatial rank of the stacked-pass clutter model.
pub const STACKED_SPATIAL_RANK: usize = 2;

fn bin_magnitudes(z: &ComplexVector, p: usize, q: usize, dopplers: &[f64]) -> Result<f64> {
    Ok(max_steering_response(z, p, q, dopplers)?
        .into_iter()
        .fold(0.0, f64::max))
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        (v[m - 1] + v[m]) / 2.0
    } else {
        v[m]
    }
}

/// Per-bin change statistics between a reference and a mission pass.
pub fn multipass_change(
    reference: &[ComplexVector],
    mission: &[ComplexVector],
    opts: &MultipassOptions,
    exec: Execution,
) -> Result<Vec<f64>> {
    let (p, q) = (opts.p, opts.q);
    let dim = p * q;
    if reference.is_empty() {
        return Err(Error::Empty("reference pass"));
    }
    if reference.len() != mission.len() {
        return Err(Error::Dimension(format!(
            "passes have {} and {} bins",
            reference.len(),
            mission.len()
        )));
    }
    if let Some(x) = reference.iter().chain(mission).find(|x| x.len() != dim) {
        return Err(Error::Dimension(format!("snapshot of length {} for p·q = {dim}", x.len())));
    }
    if opts.dopplers.is_empty() {
        return Err(Error::Empty("Doppler grid"));
    }

    if opts.method == ChangeMethod::Incoherent {
        let mags = |xs: &[ComplexVector]| -> Result<Vec<f64>> {
            xs.iter().map(|x| bin_magnitudes(x, p, q, &opts.dopplers)).collect()
        };
        let (mr, mm) = (mags(reference)?, mags(mission)?);
        let med = median(&mm);
        let gain = if med > 0.0 { median(&mr) / med } else { 1.0 };
        return Ok(mr.iter().zip(&mm).map(|(r, m)| (gain * m - r).abs()).collect());
    }

    let stacked: Vec<ComplexVector> = reference
        .iter()
        .zip(mission)
        .map(|(r, m)| multipass_stack_vec(r, m))
        .collect::<Result<_>>()?;
    let s = scm(&stacked, 2 * p, q)?;
    let filter: StapFilter = match opts.method {
        ChangeMethod::KronStap => {
            let model = lr_kron(&s, STACKED_SPATIAL_RANK, opts.r_b, &LrKronOptions::default())?;
            kron_full_filter(&model)?
        }
        ChangeMethod::LrStap => lr_stap_filter(&s, opts.lr_rank)?,
        ChangeMethod::Incoherent => unreachable!("handled above"),
    };
    let filtered = filter.apply_batch(&stacked, exec)?;
    filtered
        .iter()
        .map(|z| {
            let r = z.rows(0, dim).into_owned();
            let m = z.rows(dim, dim).into_owned();
            Ok((bin_magnitudes(&m, p, q, &opts.dopplers)? - bin_magnitudes(&r, p, q, &opts.dopplers)?).abs())
        })
        .collect()
}
