use std::path::PathBuf;

use crate::image::Label;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file does not match its declared on-disk format (PNM header,
    /// model file, dataset table).
    #[error("format error{}: {detail}", fmt_path(.path))]
    Format {
        path: Option<PathBuf>,
        detail: String,
    },

    /// A mask pixel holds a value other than 0 or 255.
    #[error("mask value {value} at ({x}, {y}) is neither 0 nor 255")]
    MaskValue { x: usize, y: usize, value: u8 },

    /// A caller violated an operation precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A sampling request asks for more distinct pixels than exist.
    #[error(
        "capacity exceeded for {label:?} samples: requested {requested}, available {available}"
    )]
    Capacity {
        label: Label,
        requested: usize,
        available: usize,
    },

    /// One of the two classes never occurs in any mask.
    #[error("label {0:?} is absent from every mask")]
    MissingLabel(Label),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: Option<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Format {
            path,
            detail: detail.into(),
        }
    }

    pub fn invalid(detail: impl Into<String>) -> Self {
        Error::InvalidInput(detail.into())
    }
}

fn fmt_path(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!(" in {}", p.display()),
        None => String::new(),
    }
}
