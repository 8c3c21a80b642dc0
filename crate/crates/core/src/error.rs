use thiserror::Error;

/// Errors raised by the correlator library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot partition empty set")]
    EmptyPartition,

    #[error("Cartesian only: axis `{0}` is a ladder component")]
    LadderAxis(char),

    #[error("parse error at token {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("{n_sites} sites exceeds the dense limit of {max} sites")]
    TooLarge { n_sites: usize, max: usize },

    #[error("density matrix trace is {0}, expected 1")]
    NonUnitTrace(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid correlator vector: {0}")]
    InvalidCorrelators(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("correlated part needs at least two cells, got {0}")]
    SubsetTooSmall(usize),

    #[error("empty subset")]
    EmptySubset,

    #[error("site {site} is outside a system of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("sites must be distinct, got {0} twice")]
    SameSite(usize),

    #[error("missing part for subset {0:#b}")]
    MissingPart(u32),

    #[error("split must be a nonempty proper subset of the sites")]
    TrivialSplit,

    #[error("Hamiltonian violates pairwise sector structure")]
    SectorViolation,

    #[error("need at least 3 trajectory points, got {0}")]
    TooFewPoints(usize),

    #[error("step too large: dt*|M|_inf = {0} > 1")]
    StepTooLarge(f64),

    #[error("z = {z_re}{z_im:+}i is within {distance:e} of the pole at {pole_re}{pole_im:+}i")]
    NearPole {
        z_re: f64,
        z_im: f64,
        pole_re: f64,
        pole_im: f64,
        distance: f64,
    },

    #[error("series divergent at this z: |V G0| = {0}")]
    Divergent(f64),

    #[error("singular matrix")]
    Singular,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of a numerical method on otherwise valid input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::StepTooLarge(_) | Error::NearPole { .. } | Error::Divergent(_) | Error::Singular
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
