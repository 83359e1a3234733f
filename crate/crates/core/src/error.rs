use crate::expr::ExprError;

/// Errors from model building, on-shell reduction, and verification.
#[derive(Debug, Clone, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("on-shell reduction needs `{atom}`, which exceeds the closure order {limit}")]
    ClosureExceeded { atom: String, limit: u32 },
    #[error("coefficient `{name}`: {msg}")]
    BadCoefficient { name: String, msg: String },
    #[error("antiderivative pin `{name}` is not an antiderivative of its coefficient")]
    BadPin { name: String },
    #[error("potential level `{dep}`: {msg}")]
    BadLevel { dep: char, msg: String },
    #[error("conserved vector uses `{name}`, which is not a declared variable of the system")]
    UndeclaredVariable { name: String },
    #[error("density must be derivative-free to support a further potential, found `{atom}`")]
    NotDerivativeFree { atom: String },
    #[error("no case with id `{id}` in the registry")]
    UnknownCase { id: String },
    #[error("transform scales must be nonzero")]
    SingularTransform,
    #[error("function symbol `{name}` does not stay a symbol of its arguments under this transform")]
    UnsupportedTransform { name: String },
    #[error("`{name}` has no numeric binding")]
    Unbound { name: String },
    #[error("numeric evaluation of {what} hit a pole")]
    Pole { what: String },
    #[error("simulation became unstable at t = {t}")]
    Unstable { t: f64 },
    #[error("grid run rejected: {msg}")]
    BadRun { msg: String },
}
