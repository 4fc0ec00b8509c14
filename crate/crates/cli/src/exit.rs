//! Process exit codes.

/// Stable exit codes.
///
/// | code | meaning |
/// |---|---|
/// | 0 | success, gate passed, session converged |
/// | 2 | gate failed, or some corpus variants could not be scored |
/// | 3 | session exhausted its iterations or is waiting for answers |
/// | 4 | session failed |
/// | 5 | configuration, input or backend error |
/// | 64 | command line usage error |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    GateFailed = 2,
    Incomplete = 3,
    SessionFailed = 4,
    Error = 5,
    Usage = 64,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}
