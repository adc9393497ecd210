use std::fmt;
use std::path::Path;

use ged_core::Error;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub const INPUT: u8 = 2;
    pub const CONFIG: u8 = 3;
    pub const MISMATCH: u8 = 4;

    pub fn input(msg: impl Into<String>) -> Self {
        CliError { code: Self::INPUT, msg: msg.into() }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError { code: Self::CONFIG, msg: msg.into() }
    }

    pub fn mismatch(msg: impl Into<String>) -> Self {
        CliError { code: Self::MISMATCH, msg: msg.into() }
    }

    /// Classifies a library error; `Shape` and `Checkpoint` count as mismatches.
    pub fn from_core(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } | Error::Validation(_) | Error::Format { .. } | Error::Io(_) => Self::INPUT,
            Error::Config(_) | Error::Lookup { .. } => Self::CONFIG,
            Error::Shape(_) | Error::Checkpoint(_) => Self::MISMATCH,
            Error::Numeric(_) => 1,
        };
        CliError { code, msg: e.to_string() }
    }

    /// Same as [`CliError::from_core`] with `path:line:` in front of parse errors.
    pub fn in_file(path: &Path, e: Error) -> Self {
        match e {
            Error::Parse { line, msg } => Self::input(format!("{}:{line}: {msg}", path.display())),
            Error::Validation(msg) => match split_line(&msg) {
                Some((line, rest)) => Self::input(format!("{}:{line}: {rest}", path.display())),
                None => Self::input(format!("{}: {msg}", path.display())),
            },
            other => {
                let mut err = Self::from_core(other);
                err.msg = format!("{}: {}", path.display(), err.msg);
                err
            }
        }
    }
}

/// `(N, rest)` for messages of the form `line N: rest` or `sentence at line N: rest`.
fn split_line(msg: &str) -> Option<(usize, &str)> {
    let tail = msg.strip_prefix("line ").or_else(|| msg.strip_prefix("sentence at line "))?;
    let (num, rest) = tail.split_once(": ")?;
    Some((num.parse().ok()?, rest))
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.msg)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::from_core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
