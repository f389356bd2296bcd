use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ehsense::Error),

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 0 ok, 2 configuration, 3 non-convergence, 4 causality violation, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        use ehsense::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidParams(_) | E::InvalidSchedule(_) | E::Domain(_) | E::HorizonTooLarge { .. } => 2,
                E::InvalidPolicy(_) => 2,
                E::NoConvergence { .. } => 3,
                E::CausalityViolation { .. } => 4,
                _ => 1,
            },
            CliError::Failed(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}
