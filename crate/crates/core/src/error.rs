use crate::C64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("evaluation at a pole of R (z = {0})")]
    PoleHit(C64),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    MaxRefinement { tol: f64, estimate: f64 },

    #[error("integrand is not finite at z = {0}")]
    NonFinite(C64),

    #[error("branch of q is ambiguous near z = {0}")]
    BranchAmbiguity(C64),

    #[error("sheet anchor {anchor} is not a waypoint of the path")]
    SheetUnreachable { anchor: C64 },

    #[error("z = {0} is a singular point (zero or pole of R)")]
    SingularPoint(C64),

    #[error("validity violated at z = {z}: |eps| = {eps:e} exceeds {threshold:e}")]
    ValidityViolation { z: C64, eps: f64, threshold: f64 },

    #[error("path passes within {distance:e} of singular point {point} (clearance {clearance:e})")]
    ClearanceViolation { point: C64, distance: f64, clearance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator word contains an unresolved phase ({0})")]
    UnresolvedPhase(String),

    #[error("operator word mixes S and S^T factors")]
    MixedHandedness,

    #[error("line tracing stalled at z = {0}")]
    TraceStall(C64),

    #[error("dominance is ambiguous at probe z = {0}")]
    AmbiguousDominance(C64),

    #[error("i/o failure: {0}")]
    Io(String),

    #[error("ODE step control underflow at z = {0}")]
    StiffnessFailure(C64),

    #[error("path needs {digits} significant digits, above the configured limit")]
    IllConditioned { digits: u32 },

    #[error("F-matrix does not have the limiting {form} form (residual {residual:e})")]
    WrongForm { form: &'static str, residual: f64 },

    #[error("unsupported symmetry action: {0}")]
    UnsupportedAction(String),

    #[error("transformed path violates clearance: {0}")]
    PathClash(String),

    #[error("homotopy is ambiguous: {0}")]
    HomotopyAmbiguous(String),

    #[error("domains require different Stokes forms: {0}")]
    HandednessMismatch(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("gamma function pole at z = {0}")]
    PoleOfGamma(C64),

    #[error("argument i*delta^2 = {0} lies on the branch seam; pass an explicit sheet")]
    BranchSeam(C64),

    #[error("expression error: {0}")]
    Expr(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
