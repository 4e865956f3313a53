use crate::syntax::{Name, ParseError, SourceSpan};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("{span}: object `{name}` not found")]
    UnboundVariable { name: Name, span: SourceSpan },
    #[error("{span}: attempt to apply non-function")]
    NotAClosure { span: SourceSpan },
    #[error("{span}: {message}")]
    TypeError { message: String, span: SourceSpan },
    #[error("{span}: {given} arguments passed to a function of {expected} parameters")]
    ArityError { expected: usize, given: usize, span: SourceSpan },
    #[error("{span}: argument `{param}` is missing, with no default")]
    MissingDefault { param: Name, span: SourceSpan },
    #[error("{span}: promise already under evaluation: recursive default argument reference or earlier problems?")]
    PromiseCycle { span: SourceSpan },
    #[error("{span}: cannot parse evaluated string: {error}")]
    ParseErrorInEval { error: ParseError, span: SourceSpan },
    #[error("step limit of {limit} exceeded")]
    StepLimitExceeded { limit: u64 },
    #[error("internal invariant violated: {message}")]
    Internal { message: String },
}

impl RuntimeError {
    /// Stable uppercase token used on the CLI and in traces.
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::UnboundVariable { .. } => "UNBOUND_VARIABLE",
            RuntimeError::NotAClosure { .. } => "NOT_A_CLOSURE",
            RuntimeError::TypeError { .. } => "TYPE_ERROR",
            RuntimeError::ArityError { .. } => "ARITY_ERROR",
            RuntimeError::MissingDefault { .. } => "MISSING_DEFAULT",
            RuntimeError::PromiseCycle { .. } => "PROMISE_CYCLE",
            RuntimeError::ParseErrorInEval { .. } => "PARSE_ERROR_IN_EVAL",
            RuntimeError::StepLimitExceeded { .. } => "STEP_LIMIT_EXCEEDED",
            RuntimeError::Internal { .. } => "INTERNAL_ERROR",
        }
    }

    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            RuntimeError::UnboundVariable { span, .. }
            | RuntimeError::NotAClosure { span }
            | RuntimeError::TypeError { span, .. }
            | RuntimeError::ArityError { span, .. }
            | RuntimeError::MissingDefault { span, .. }
            | RuntimeError::PromiseCycle { span }
            | RuntimeError::ParseErrorInEval { span, .. } => Some(*span),
            RuntimeError::StepLimitExceeded { .. } | RuntimeError::Internal { .. } => None,
        }
    }

    pub(crate) fn internal(message: impl Into<String>) -> RuntimeError {
        RuntimeError::Internal { message: message.into() }
    }
}
