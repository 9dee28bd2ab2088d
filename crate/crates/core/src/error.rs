use thiserror::Error;

/// Errors raised by the cone-tip machinery.
///
/// Every message starts with a stable kebab-case code so that callers (and
/// the CLI) can match on it without parsing prose.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("critical-contrast-excluded: kappa = -1 is excluded (the interface itself becomes singular)")]
    CriticalContrastExcluded,

    #[error("invalid-geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid-material: {0}")]
    InvalidMaterial(String),

    #[error("invalid-mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid-argument: {0}")]
    InvalidArgument(String),

    #[error("out-of-range: latitude {latitude} outside [{min}, {max}]")]
    OutOfRange { latitude: f64, min: f64, max: f64 },

    #[error("dimension-mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mass-matrix-numerically-singular: condition estimate {condition:e} exceeds 1e12")]
    MassMatrixSingular { condition: f64 },

    #[error("eigensolver-failure: {0}")]
    EigenSolver(String),

    #[error("residual-certification-failed: pair {index} has residual {residual:e}")]
    ResidualCertification { index: usize, residual: f64 },

    #[error("not-applicable-dissipative: the check requires an undamped (real) pencil")]
    NotApplicableDissipative,

    #[error("jordan-threshold-ambiguous: smallest Gram singular value {smallest:e} within a factor 10 of threshold {threshold:e}")]
    JordanThresholdAmbiguous { smallest: f64, threshold: f64 },

    #[error("near-quarter-degenerate: eigenvalue {value} sits at the double root -1/4 (eta ~ 0)")]
    NearQuarterDegenerate { value: f64 },

    #[error("empty-spectrum: no eigenvalue strictly right of the energy line")]
    EmptySpectrum,

    #[error("chain-level: level {level} requested but the chain has length {available}")]
    ChainLevel { level: usize, available: usize },

    #[error("odd-dimension-internal-error: singular space has odd dimension {0}")]
    OddDimension(usize),

    #[error("flux-limit-nonexistent: log coefficient of degree {degree} has magnitude {magnitude:e}")]
    FluxLimitNonexistent { degree: usize, magnitude: f64 },

    #[error("provenance-mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("flux-degenerate: {0}")]
    FluxDegenerate(String),

    #[error("signature-mismatch: flux form has {positive} positive and {negative} negative directions")]
    SignatureMismatch { positive: usize, negative: usize },

    #[error("series-domain: |z| = {z} exceeds 0.99")]
    SeriesDomain { z: f64 },

    #[error("series-nonconvergent: no convergence after {terms} terms")]
    SeriesNonconvergent { terms: usize },

    #[error("aleph-domain: alpha = {alpha} outside the series-convergent range [{min}, {max}]")]
    AlephDomain { alpha: f64, min: f64, max: f64 },

    #[error("no-transition: has_blackhole is constant ({value}) over the scanned contrast range")]
    NoTransition { value: bool },

    #[error("trajectory-lost: best overlap {overlap} < 0.9 at delta = {delta:e}")]
    TrajectoryLost { delta: f64, overlap: f64 },

    #[error("perturbation-degenerate: bilinear sigma-norm {value:e} too small (Jordan-adjacent eigenvalue)")]
    PerturbationDegenerate { value: f64 },

    #[error("degenerate-fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
