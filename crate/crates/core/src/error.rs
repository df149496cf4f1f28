use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("delay at position {index} is zero; fiber delays must be positive")]
    ZeroDelay { index: usize },

    #[error("value {x} is outside the representable range 0..={total}")]
    Range { x: u64, total: u64 },

    #[error("bit vector has length {bits} but the delay sequence has length {delays}")]
    LengthMismatch { bits: usize, delays: usize },

    #[error("arithmetic overflow while {0}")]
    Overflow(&'static str),

    #[error("sum of delays {total} exceeds the scan limit {limit}")]
    ScanLimit { total: u64, limit: u64 },

    #[error("delay sequence {0} is not in class A")]
    NotInClassA(String),

    #[error("delay sequence {0} is not in class B")]
    NotInClassB(String),

    #[error("delay sequence {0} is not nondecreasing")]
    NotNondecreasing(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("partition {0} has first part 1 and is not in N(M,k)")]
    PartitionNotInN(String),

    #[error("partition {0} cannot be normalized: every part equals 1")]
    Unnormalizable(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("inconsistent index: {0}")]
    InconsistentIndex(String),

    #[error("search space {space} with M={m} exceeds the cap M<={cap} (about {estimate} sequences)")]
    SpaceTooLarge {
        space: char,
        m: usize,
        cap: usize,
        estimate: u128,
    },

    #[error("malformed arrivals: {0}")]
    MalformedArrivals(String),

    #[error("table {table} differs from its golden file in {} cell(s): {}", diffs.len(), diffs.join("; "))]
    GoldenMismatch { table: String, diffs: Vec<String> },
}

impl Error {
    /// Overflow and cap refusals share one exit class in the CLI.
    pub fn is_capacity(&self) -> bool {
        matches!(
            self,
            Error::Overflow(_) | Error::ScanLimit { .. } | Error::SpaceTooLarge { .. }
        )
    }
}
