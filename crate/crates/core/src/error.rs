use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),
    #[error("invalid defect parameters: {0}")]
    Defect(String),
    #[error("mixing undefined at degeneracy")]
    MixingDegenerate,
    #[error("defect coincides with site {0}")]
    CoincidentSite(usize),
    #[error("site count {n} exceeds cap {cap}")]
    SiteCap { n: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("eigensolver did not converge (best residual {residual:.3e})")]
    NoConvergence { residual: f64 },
    #[error("state is not normalized (norm {0:.12})")]
    Unnormalized(f64),
    #[error("time {t} outside [0, {tau2}]")]
    TimeRange { t: f64, tau2: f64 },
    #[error("step size underflow at t = {t} ms")]
    StepUnderflow { t: f64 },
    #[error("invalid protocol: {0}")]
    Protocol(String),
    #[error("invalid growth parameters: {0}")]
    Growth(String),
    #[error("negative concentration of {species} at z = {z} nm (reduce dt)")]
    NegativeConcentration { species: &'static str, z: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
