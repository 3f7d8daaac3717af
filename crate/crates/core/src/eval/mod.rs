//! Metrics, theoretical loss curves and Monte Carlo drivers.

pub mod metrics;
pub mod multipass;
pub mod sweep;
pub mod theory;

pub use metrics::{contrast_ratio, mean_stderr, ms_residual, roc_auc, sinr, sinr_loss, sinr_max, SinrReport};
pub use multipass::{multipass_change, ChangeMethod, MultipassOptions};
pub use sweep::{run_sweep, Method, Metric, SteeringMode, SweepPoint, SweepResult, SweepSpec};
pub use theory::{mismatch_kappa, theory_rho_kron_spatial, theory_rho_kron_temporal, theory_rho_lr, Mismatch};
