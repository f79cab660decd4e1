use num_complex::Complex64;
use thiserror::Error;

use crate::transfer::TransferMatrix;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    /// The transfer matrix is still returned; its classification is not meaningful.
    #[error("gate is not dual-unitary (dual residual {residual:.3e})")]
    NotDualUnitary {
        residual: f64,
        matrix: Box<TransferMatrix>,
    },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("self-check failed: {detail} (max residual {residual:.3e})")]
    SelfCheck { residual: f64, detail: String },

    #[error("unsupported channel: {0}")]
    UnsupportedChannel(String),

    #[error("eigenvalue splitting vanishes; the detuned closed form is degenerate here")]
    DegenerateSplitting,

    #[error("z = {z} lies within {distance:.3e} of the pole at {pole}")]
    PoleProximity {
        z: Complex64,
        pole: Complex64,
        distance: f64,
    },

    #[error("not convergent: {0}")]
    NonConvergent(String),

    #[error("ring with L = {0} is outside the supported range 1..=7")]
    RingTooLarge(usize),

    #[error("site {site} out of range for a ring of {qubits} qubits")]
    SiteOutOfRange { site: usize, qubits: usize },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Validation errors are caller mistakes; everything else is numerical.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Constraint(_)
                | Error::InvalidInput(_)
                | Error::RingTooLarge(_)
                | Error::SiteOutOfRange { .. }
                | Error::UnsupportedChannel(_)
                | Error::DimensionMismatch(_)
        )
    }
}
