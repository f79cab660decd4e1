//! Dual-unitary two-qubit circuits whose light-cone transfer matrices sit at
//! exceptional points.
//!
//! The crate builds gates from the standard dual-unitary parameterization,
//! reduces them to 4x4 Pauli transfer matrices, solves the two exceptional
//! point families (2x2 and 3x3 Jordan blocks) together with their detuned
//! variants, and checks every closed form against exact brute-force evolution
//! of a brickwork ring.
//!
//! Conventions used throughout:
//! - qubit 0 (site 1) is the left Kronecker factor and the most significant
//!   bit of a basis index;
//! - Pauli basis order is (1, x, y, z);
//! - `ry(a) = exp(i a Y)`, `rz(a) = exp(i a Z)`.

pub mod circuit;
pub mod error;
pub mod families;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod spectral;
pub mod transfer;

pub use num_complex::Complex64;

pub use circuit::{
    brickwork_unitary, floquet_corr, kicked_xxz_period, spatiotemporal_corr, CorrelationSeries,
    Evolution, FloquetFamily, FloquetSpec, LayeredCircuit, RingSpec, SeriesSource, SiteProbe,
};
pub use error::{Error, Result};
pub use families::{
    analytic_corr, detuned_corr, ep2::Ep2Config, ep2::Ep2Derived, ep3::Ep3Config, ep3::Ep3Derived,
    Family, FamilyDerived,
};
pub use gates::{assemble, build_v, dual_reshuffle, is_dual_unitary, Gate2Q, GateParams};
pub use linalg::{CMat, PauliIndex, Site};
pub use spectral::{
    dft_profile, fit_decay, pole_report, z_closed, z_numeric, FitResult, FourierProfile, ModelKind,
    PoleReport, ZGrid,
};
pub use transfer::{
    classify, jordan_structure, lightcone_corr, transfer_minus, transfer_plus, Direction,
    ErgodicityClass, JordanReport, TransferMatrix,
};
