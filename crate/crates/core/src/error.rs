use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("duplicate symbol `{0}` in signature")]
    DuplicateSymbol(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("element {element} out of range for universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("tuple of length {got} given for `{relation}` of arity {expected}")]
    TupleArity {
        relation: String,
        expected: usize,
        got: usize,
    },
    #[error("expected {expected} relation tuple-sets, got {got}")]
    RelationCount { expected: usize, got: usize },
    #[error("expected {expected} constant interpretations, got {got}")]
    ConstantCount { expected: usize, got: usize },
    #[error("constant `{0}` is interpreted outside the induced set")]
    ConstantOutside(String),
    #[error("structures have different signatures")]
    SignatureMismatch,

    #[error("parse error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {expected} but was applied to {got} arguments")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("`~` is only available in signatures with a binary `adj` relation")]
    NoAdjacency,
    #[error("variable `{0}` shadows a constant")]
    ShadowsConstant(String),

    #[error("density is undefined on the empty structure")]
    EmptyStructure,
    #[error("free variable `{0}` is not assigned")]
    Unassigned(String),
    #[error("assignment has {got} values but the formula has {expected} free variables")]
    AssignmentLength { expected: usize, got: usize },
    #[error("exact enumeration needs {required} evaluations, above the budget of {budget}; use sampling")]
    BudgetExceeded { required: String, budget: u64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("density of conjunction {{{}}} is missing", .0.join(", "))]
    MissingConjunction(Vec<String>),
    #[error("formula must have at least one free variable")]
    NoFreeVariables,

    #[error("formula is not syntactically local within the requested radius (its local radius: {})", .radius.map_or("unbounded".to_string(), |r| r.to_string()))]
    NotLocal { radius: Option<usize> },
    #[error("expected a formula with {expected} free variables, got {got}")]
    FreeVariableCount { expected: String, got: usize },
    #[error("maximum degree {degree} exceeds the cap of {cap}")]
    DegreeTooLarge { degree: usize, cap: usize },
    #[error("radius mismatch: {0} vs {1}")]
    RadiusMismatch(usize, usize),

    #[error("trace of length {len} is shorter than the window {window}")]
    TraceTooShort { len: usize, window: usize },
    #[error("window must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("sequence is empty")]
    EmptySequence,

    #[error("De Bruijn order must lie in 1..=20, got {0}")]
    DebruijnOrder(usize),
    #[error("invalid piecewise map `{map}`: {reason}")]
    InvalidMap { map: String, reason: String },
    #[error("point has {found} neighbours, above the declared degree bound {bound}")]
    DegreeBoundExceeded { found: usize, bound: usize },
    #[error("coordinate arithmetic overflowed")]
    CoordinateOverflow,
    #[error("cleaning threshold must lie strictly between 0 and 1")]
    BadThreshold,
    #[error("cleaning removed every ball type")]
    EverythingRemoved,

    #[error("{0}")]
    Format(String),
}
