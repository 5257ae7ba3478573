use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size for {what}: got {got}, need at least {min}")]
    InvalidSize {
        what: &'static str,
        got: usize,
        min: usize,
    },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("unstable chain: transverse mode {mode} has omega^2 = {omega_sq:e} (rad/s)^2 <= 0")]
    Unstable { mode: usize, omega_sq: f64 },

    #[error("beatnote detuning mu = {mu:e} rad/s is resonant with transverse mode {mode} at {omega:e} rad/s")]
    Resonance { mode: usize, mu: f64, omega: f64 },

    #[error("equilibrium solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("power-law fit failed: {0}")]
    Fit(String),

    #[error("coupling matrix has an all-zero diagonal; build it with ion_couplings to get the physical J_ii")]
    DegeneratePotential,

    #[error("Bogoliubov instability: B + nu_{mode} = {value:e} <= 0")]
    BogoliubovInstability { mode: usize, value: f64 },

    #[error("unsupported sector: {0}")]
    UnsupportedSector(String),

    #[error("{what} too large: {got} exceeds the cap of {cap}{hint}")]
    TooLarge {
        what: &'static str,
        got: usize,
        cap: usize,
        hint: &'static str,
    },

    #[error("state not representable in this basis: {0}")]
    Basis(String),

    #[error("post-selection kept no shots (accepted fraction {accepted_fraction})")]
    EmptySelection { accepted_fraction: f64 },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
