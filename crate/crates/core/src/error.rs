use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),
    #[error("matrix has a negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),
    #[error("state is not normalized (<v,v> = {0})")]
    NotNormalized(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("matrix is singular")]
    Singular,

    #[error("four-momentum is off shell (|p^2 - m^2| = {0:e})")]
    OffShell(f64),
    #[error("two-spinor is not normalized (xi^dagger xi = {0})")]
    NotNormalizedSpinor(f64),
    #[error("axis is not a unit vector (|n| = {0})")]
    NonUnitAxis(f64),

    #[error("singular kinematics: {channel} photon denominator vanishes ({value:e})")]
    SingularKinematics { channel: &'static str, value: f64 },
    #[error("total four-momentum not conserved (max deviation {0:e})")]
    MomentumNotConserved(f64),

    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },
    #[error("momentum transfer is zero")]
    ZeroMomentumTransfer,
    #[error("separation vector is zero")]
    ZeroSeparation,
    #[error("finite-difference step {step} too large for |r| = {r}")]
    StepTooLarge { step: f64, r: f64 },

    #[error("initial state is not at rest")]
    NotAtRest,
    #[error("initial state does not have definite spin labels")]
    IndefiniteInitialSpin,
    #[error("state vector is zero")]
    ZeroState,
    #[error("spin basis is not orthogonal (relative Gram deviation {0:e})")]
    NonOrthogonalSpinBasis(f64),
}
