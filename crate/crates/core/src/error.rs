use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate priorities: weights must have a positive sum")]
    DegeneratePriorities,
    #[error("no available mode")]
    NoAvailableMode,
    #[error("no habit mass: trip window is empty")]
    NoHabitMass,
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("unrecognized survey schema: missing columns {0:?}")]
    SurveySchema(Vec<String>),
    #[error("no retained responses for mode `{0}`")]
    EmptyGroup(crate::model::Mode),
    #[error("empty population")]
    EmptyPopulation,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid intervention: {0}")]
    Intervention(String),
    #[error("invalid scenario at `{path}`: {message}")]
    Scenario { path: String, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by invalid user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownName { .. }
                | Error::SurveySchema(_)
                | Error::Config(_)
                | Error::Intervention(_)
                | Error::Scenario { .. }
                | Error::EmptyPopulation
        )
    }
}
