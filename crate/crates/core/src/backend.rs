//! Failure classification shared by the HTTP-backed gateways.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("server error {status}: {body}")]
    Server { status: u16, body: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("request rejected {status}: {body}")]
    Rejected { status: u16, body: String },
    #[error("unexpected request: {0}")]
    Unexpected(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        match self {
            Self::Transport(_) => true,
            Self::Server { status, .. } => *status >= 500 || *status == 429,
            _ => false,
        }
    }
}

pub(crate) fn classify_status(status: u16, body: String) -> BackendError {
    match status {
        401 | 403 => BackendError::Auth(body),
        429 | 500..=599 => BackendError::Server { status, body },
        _ => BackendError::Rejected { status, body },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_classes() {
        assert!(matches!(classify_status(401, String::new()), BackendError::Auth(_)));
        assert!(classify_status(503, String::new()).is_retryable());
        assert!(classify_status(429, String::new()).is_retryable());
        assert!(!classify_status(400, String::new()).is_retryable());
        assert!(BackendError::Transport("reset".into()).is_retryable());
    }
}
