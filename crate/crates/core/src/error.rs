//! Error type shared by all core modules.

use alloc::string::String;
use core::fmt;

/// Errors surfaced by the numerical core.
///
/// The variants mirror the failure classes of the pipeline: bad inputs
/// (`Geometry`, `Params`, `Domain`, `Contract`), resource and truncation
/// limits, solver failures, and the two diagnostic conditions that map to
/// dedicated process exit codes downstream (`SmallDenominator`, `NoMatch`).
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Invalid box geometry (non-positive edge, dimension < 2).
    Geometry(String),
    /// Invalid or inconsistent asymptotic parameters.
    Params(String),
    /// Input outside an operation's domain (point outside the box,
    /// |gamma| outside the configured rho shell, ...).
    Domain(String),
    /// A caller-visible contract was violated (non-symmetric matrix,
    /// incompatible truncations, ...).
    Contract(String),
    /// Requested truncation too small for the data it must contain.
    Truncation(String),
    /// Matrix size cap exceeded; carries the size that would be needed.
    Resource { required: usize, cap: usize },
    /// Iterative eigensolver failed to converge.
    Convergence { iterations: usize },
    /// Band labeling collision beyond the expected multiplicity.
    Labeling(String),
    /// Labeled spectrum does not cover a band required by a path sum.
    Coverage { band: usize, available: usize },
    /// A path denominator fell below its guard floor
    /// (diagnostic for the gap conditions behind the expansion).
    SmallDenominator {
        j: i64,
        beta: alloc::vec::Vec<i64>,
        denominator: f64,
        floor: f64,
    },
    /// No oracle eigenvalue passed the selection criteria at this truncation.
    NoMatch { j: i64, beta: alloc::vec::Vec<i64> },
    /// Monte Carlo run accepted no samples in the target set.
    InsufficientSamples,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::Geometry(msg) => write!(f, "geometry error: {msg}"),
            CoreError::Params(msg) => write!(f, "parameter error: {msg}"),
            CoreError::Domain(msg) => write!(f, "domain error: {msg}"),
            CoreError::Contract(msg) => write!(f, "contract error: {msg}"),
            CoreError::Truncation(msg) => write!(f, "truncation error: {msg}"),
            CoreError::Resource { required, cap } => write!(
                f,
                "resource error: problem needs matrix size {required}, cap is {cap}"
            ),
            CoreError::Convergence { iterations } => {
                write!(f, "eigensolver did not converge after {iterations} iterations")
            }
            CoreError::Labeling(msg) => write!(f, "labeling error: {msg}"),
            CoreError::Coverage { band, available } => write!(
                f,
                "coverage error: band {band} requested, labeled spectrum covers {available}"
            ),
            CoreError::SmallDenominator {
                j,
                beta,
                denominator,
                floor,
            } => write!(
                f,
                "small denominator at (j={j}, beta={beta:?}): |d|={denominator:e} <= floor {floor:e}"
            ),
            CoreError::NoMatch { j, beta } => write!(
                f,
                "no oracle eigenvalue matches (j={j}, beta={beta:?}) at this truncation"
            ),
            CoreError::InsufficientSamples => {
                write!(f, "no accepted samples in the target set")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
