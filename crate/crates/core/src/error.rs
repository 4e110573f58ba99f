use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("vertex {vertex} has degree {degree}, loop configurations need degree 0 or 2")]
    DegreeViolation { vertex: usize, degree: usize },
    #[error("patch too small: combinatorial ball of radius {radius} reaches the patch boundary")]
    PatchTooSmall { radius: usize },
    #[error("boundary mismatch: configuration disagrees with the boundary condition off the domain")]
    BoundaryMismatch,
    #[error("inconsistent blocking: loop {component} is only partially covered")]
    InconsistentBlocking { component: usize },
    #[error("enumeration guard: {faces} flippable faces exceed the limit of {limit}; use the Metropolis sampler")]
    EnumerationGuard { faces: usize, limit: usize },
    #[error("one-arm estimate too weak: p({0}) >= threshold")]
    OneArmTooWeak(f64),
    #[error("insufficient one-arm probability: greedy split exhausted the cut set after {arcs} arcs")]
    InsufficientOneArm { arcs: usize },
    #[error("cycle is not simple at vertex {0}")]
    NonSimpleCycle(usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("malformed rotation system: {0}")]
    MalformedRotation(String),
    #[error("blocking probabilities out of range: need n >= 1 and 0 < x <= 1, got n={n}, x={x}")]
    BlockingProbability { n: f64, x: f64 },
    #[error("domain is not simply connected or not edge-connected")]
    BadDomain,
    #[error("resample window lacks a margin: complement of the window splits into {parts} parts")]
    WindowMargin { parts: usize },
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
