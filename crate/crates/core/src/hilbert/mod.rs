//! Dense complex linear algebra on the two-photon polarization/path space.
//!
//! Each photon carries a polarization qubit (H, V) and a path qubit (u, d),
//! giving a 16-dimensional space. Basis index convention, fixed here and
//! nowhere else: `b = 8·pol₁ + 4·path₁ + 2·pol₂ + path₂`, with H, u ↦ 0 and
//! V, d ↦ 1.

mod eigen;
mod measurement;
mod observable;
mod operator;
mod state;

pub use eigen::{eigenvalues, max_eigenvalue, HERMITIAN_TOLERANCE};
pub use measurement::{sample_joint_measurement, JointMeasurement, OutcomeRecord};
pub use observable::{Axis, LocalObservable, ObservableWord, Slot};
pub use operator::{word_matrix, Operator};
pub use state::{
    apply, build_cluster_state, expectation, perfect_correlations, verify_stabilizers, StabilizerCheck,
    StabilizerReport, StateVector, IMAGINARY_TOLERANCE, NORM_TOLERANCE,
};

/// Dimension of the two-photon space.
pub const DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HilbertError {
    #[error("malformed observable word: {0}")]
    MalformedWord(String),
    #[error("malformed measurement request: {0}")]
    MalformedRequest(String),
    #[error("cannot parse observable {0:?}")]
    Parse(String),
    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("expectation value has imaginary part {0:e}")]
    ComplexExpectation(f64),
    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
}
