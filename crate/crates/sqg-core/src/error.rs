use thiserror::Error;

/// Unified error type. The CLI maps each class to a distinct exit code:
/// config/validation -> 2, numerical failures -> 3, I/O and format errors -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("config validation: field `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("CFL violation at t = {t}: dt * max|u| * k_max = {product} > {limit} (max|u| = {max_u})")]
    CflViolation {
        t: f64,
        product: f64,
        limit: f64,
        max_u: f64,
    },

    #[error("blow-up detected at t = {t}: ||theta||_inf = {linf} exceeds {threshold}")]
    BlowUp { t: f64, linf: f64, threshold: f64 },

    #[error("non-finite value in {context} at t = {t}")]
    NonFinite { context: String, t: f64 },

    #[error(
        "inner stationary iteration diverged: residual grew from {initial:.3e} to {last:.3e} \
         over {iters} iterations (growth ratio {ratio:.3})"
    )]
    InnerDiverged {
        initial: f64,
        last: f64,
        iters: usize,
        ratio: f64,
    },

    #[error(
        "outer iteration is not contracting: ratio y_{{i+1}}/y_i >= 1 for {consecutive} \
         consecutive iterates (last ratios {ratios:?})"
    )]
    NonContraction {
        consecutive: usize,
        ratios: Vec<f64>,
    },

    #[error(
        "time-integral tail not converged: ||beta(T)||_2 + ||Phi(T)||_2 = {achieved:.3e} > \
         tail_tol = {tail_tol:.3e} at the cap T = {t_cap}"
    )]
    TailNotConverged {
        achieved: f64,
        tail_tol: f64,
        t_cap: f64,
    },

    #[error("empty annulus: no lattice mode with |k| in [{rho0}, {rho1}]; nearest shells are |k| = {below} and |k| = {above}")]
    EmptyAnnulus {
        rho0: f64,
        rho1: f64,
        below: f64,
        above: f64,
    },

    #[error("assumption (A) violated: force has a nonzero coefficient at |k| = {at} < rho0 = {rho0}")]
    AssumptionViolated { at: f64, rho0: f64 },

    #[error("snapshot: bad magic at offset 0 (expected \"SQGF\")")]
    SnapshotMagic,

    #[error("snapshot: unsupported version {found} (expected {expected})")]
    SnapshotVersion { found: u32, expected: u32 },

    #[error("snapshot: truncated or oversized payload: expected {expected} bytes, found {found}")]
    SnapshotLength { expected: usize, found: usize },

    #[error("snapshot: invalid header field {field}: {reason}")]
    SnapshotHeader { field: String, reason: String },

    #[error("snapshot: non-finite entry at index {index}")]
    SnapshotNonFinite { index: usize },

    #[error("snapshot: spectral payload is not conjugate-symmetric (defect {defect:.3e})")]
    SnapshotNotHermitian { defect: f64 },

    #[error("fit: {0}")]
    Fit(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn validation(field: &str, constraint: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            constraint: constraint.into(),
        }
    }

    /// Exit code class used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigParse(_) | Error::Validation { .. } => 2,
            Error::CflViolation { .. }
            | Error::BlowUp { .. }
            | Error::NonFinite { .. }
            | Error::InnerDiverged { .. }
            | Error::NonContraction { .. }
            | Error::TailNotConverged { .. }
            | Error::EmptyAnnulus { .. }
            | Error::AssumptionViolated { .. }
            | Error::Fit(_)
            | Error::Shape(_) => 3,
            Error::SnapshotMagic
            | Error::SnapshotVersion { .. }
            | Error::SnapshotLength { .. }
            | Error::SnapshotHeader { .. }
            | Error::SnapshotNonFinite { .. }
            | Error::SnapshotNotHermitian { .. }
            | Error::Io(_) => 4,
            Error::Other(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
