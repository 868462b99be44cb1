use alloc::string::String;
use core::fmt;

/// Errors from geometric and statistical operations.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Grid construction violated an invariant (zero dim, non-positive
    /// spacing, singular affine, spacing/affine mismatch).
    InvalidGrid(String),
    /// Volume data inconsistent with its grid (length mismatch, non-finite
    /// values, label id missing from the dictionary).
    InvalidVolume(String),
    /// Landmark farther than the snap tolerance from any foreground voxel.
    LandmarkOutsideSegmentation { distance_mm: f64 },
    /// Label id not present in the label dictionary.
    UnknownLabel(u32),
    /// Normalizing denominator is empty (e.g. WM volume zero).
    UndefinedNormalization(String),
    /// Two volumes expected on the same grid differ in geometry.
    GridMismatch,
    /// Statistical input too small or degenerate for the requested test.
    InsufficientData(String),
    /// Input series constant after rank transform (correlation undefined).
    ConstantInput(String),
    /// Covariate perfectly collinear with a variable in partial correlation.
    CollinearCovariate,
    /// Intensity range degenerate (constant volume cannot be normalized).
    DegenerateIntensityRange,
    /// Phantom parameters exceed the requested grid.
    PhantomOutOfBounds(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            CoreError::InvalidVolume(msg) => write!(f, "invalid volume: {msg}"),
            CoreError::LandmarkOutsideSegmentation { distance_mm } => {
                write!(f, "landmark outside segmentation (nearest foreground {distance_mm:.3} mm away)")
            }
            CoreError::UnknownLabel(id) => write!(f, "unknown label id {id}"),
            CoreError::UndefinedNormalization(msg) => write!(f, "undefined normalization: {msg}"),
            CoreError::GridMismatch => write!(f, "volumes are not on the same grid"),
            CoreError::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            CoreError::ConstantInput(msg) => write!(f, "constant input: {msg}"),
            CoreError::CollinearCovariate => {
                write!(f, "covariate perfectly collinear with a correlated variable")
            }
            CoreError::DegenerateIntensityRange => write!(f, "degenerate intensity range"),
            CoreError::PhantomOutOfBounds(msg) => write!(f, "phantom parameters out of bounds: {msg}"),
        }
    }
}

impl core::error::Error for CoreError {}

pub type Result<T> = core::result::Result<T, CoreError>;
