use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Sizes of model, policy, kernel or grid do not line up.
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    /// A probability row does not sum to one.
    RowSum { state: usize, action: Option<usize>, deviation: f64 },
    /// A probability entry is negative, above one, or not finite.
    BadProbability { state: usize, action: Option<usize>, target: usize, value: f64 },
    /// A cost is NaN or infinite.
    NonFiniteCost { state: usize, action: usize },
    /// The model has no states or no actions.
    EmptyModel,
    /// A kernel row puts mass outside the union support of its state.
    SupportViolation { state: usize, target: usize },
    /// State or action index out of range.
    OutOfRange { what: &'static str, index: usize, len: usize },
    /// An enumeration would exceed its size guard.
    GuardExceeded { what: &'static str, count: u128, limit: u128 },
    /// A class-wise linear system was singular.
    SingularSystem { states: Vec<usize> },
    /// A numerical routine (simplex, bisection) broke down.
    NumericalBreakdown(String),
    /// An LP that should be solvable came back infeasible or unbounded.
    LpStatus { context: String, status: &'static str },
    /// Successive resolutions broke the monotone ordering of the values.
    Monotonicity { resolution: usize, state: usize, violation: f64 },
    /// Levels of a value vector cannot be separated at the given tolerance.
    AmbiguousPartition { spread: f64, level_tol: f64 },
    /// A state has no action whose kernel stays inside its level.
    LevelEscape { state: usize },
    /// Invalid scalar parameter.
    InvalidParameter(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, found {found}")
            }
            Error::RowSum { state, action, deviation } => match action {
                Some(u) => write!(
                    f,
                    "row (state {state}, action {u}) sums to 1{deviation:+e}"
                ),
                None => write!(f, "row of state {state} sums to 1{deviation:+e}"),
            },
            Error::BadProbability { state, action, target, value } => match action {
                Some(u) => write!(
                    f,
                    "probability p({target}|{state},{u}) = {value} is not in [0,1]"
                ),
                None => write!(f, "probability q({target}|{state}) = {value} is not in [0,1]"),
            },
            Error::NonFiniteCost { state, action } => {
                write!(f, "cost c({state},{action}) is not finite")
            }
            Error::EmptyModel => write!(f, "model needs at least one state and one action"),
            Error::SupportViolation { state, target } => write!(
                f,
                "kernel row of state {state} puts mass on {target}, outside the union support"
            ),
            Error::OutOfRange { what, index, len } => {
                write!(f, "{what} index {index} out of range (len {len})")
            }
            Error::GuardExceeded { what, count, limit } => {
                write!(f, "{what}: {count} items exceeds the guard of {limit}")
            }
            Error::SingularSystem { states } => {
                write!(f, "singular linear system for class {states:?}")
            }
            Error::NumericalBreakdown(msg) => write!(f, "numerical breakdown: {msg}"),
            Error::LpStatus { context, status } => write!(f, "{context}: LP is {status}"),
            Error::Monotonicity { resolution, state, violation } => write!(
                f,
                "values not monotone at resolution {resolution}, state {state} (by {violation:e})"
            ),
            Error::AmbiguousPartition { spread, level_tol } => write!(
                f,
                "level spread {spread:e} exceeds level tolerance {level_tol:e}; grouping is ambiguous"
            ),
            Error::LevelEscape { state } => write!(
                f,
                "state {state} cannot stay in its level under any action"
            ),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for Error {}
