use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("invalid document: {0}")]
    InvalidDocument(String),

    #[error("span [{start}, {end}] is out of bounds for a document of {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },

    #[error("token index {index} is out of range for a document of {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown event type `{0}`")]
    UnknownEventType(String),

    #[error("role `{role}` is not licensed for event type `{event_type}`")]
    UnlicensedRole { event_type: String, role: String },

    #[error("no wh-word configured for role `{0}` and no default")]
    MissingWhWord(String),

    #[error("dangling reference: {0}")]
    DanglingReference(String),

    #[error("argument `{role}` is absent from event `{event_id}` of document `{doc_id}`")]
    AbsentArgument {
        doc_id: String,
        event_id: String,
        role: String,
    },

    #[error("argument {index} is not intra-sentential (distance {distance})")]
    NotIntraSentential { index: usize, distance: isize },

    #[error("argument {0} overlaps the event trigger")]
    TriggerOverlap(usize),

    #[error("argument index {index} out of range for an event with {count} arguments")]
    NoSuchArgument { index: usize, count: usize },

    #[error("sentence boundary {boundary} out of range (document has {sentences} sentences)")]
    BoundaryOutOfRange { boundary: usize, sentences: usize },

    #[error("no coreference chain covers argument {0}")]
    NoCoveringChain(usize),

    #[error("no inter-sentential mention in the chains covering argument {0}")]
    NoInterSententialMention(usize),

    #[error("missing resource: {0}")]
    MissingResource(String),

    #[error("alpha must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("cannot sample few-shot exemplars from an empty pool")]
    EmptyShotPool,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("transport failure: {0}")]
    Transport(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_line(self, line: usize) -> Self {
        Error::AtLine {
            line,
            source: Box::new(self),
        }
    }

    /// I/O and transport failures, as opposed to validation failures.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Transport(_) => true,
            Error::AtLine { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
