//! Z-transform and Fourier diagnostics of correlation series, and decay fits.

pub mod fit;
pub mod ztransform;

pub use fit::{fit_decay, FitResult, ModelKind};
pub use ztransform::{
    capped_log10, circle_grid, default_omegas, dft_profile, fourier_point, pole_report, z_closed,
    z_numeric, FourierProfile, Pole, PoleReport, ZGrid, LOG10_CAP, POLE_TOL,
};
