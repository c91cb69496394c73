//! The `.ess` text format.
//!
//! ```text
//! graph "Week 3" {
//!   meta { id: "3f9a01bc"; revision: 2; }
//!   node n1 alpha "Requirements" at (120, 240) area solution
//!   node n2 activity "Write stories" at (320, 240)
//!   note t1 "Sprint goal" at (0, 0)
//!   rel r1 n2 -> n1 "refines"
//!   card n1 { desc "What the team builds" item "Agreed with PO" link "https://example.org/" }
//!   bind n1 kernel.alpha.Requirements
//! }
//! ```
//!
//! [`print`] emits the canonical form: statements sorted by kind then id, two
//! space indent, no comments, trailing newline. `parse(print(g))` equals `g`
//! and `print(parse(t))` is a fixpoint.

mod parser;
mod printer;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use crate::syntax::ParseError;
pub use parser::parse;
pub use printer::print;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{}:{error}", path.display())]
    Parse { path: PathBuf, error: ParseError },
    #[error("{}: {error}", path.display())]
    Io {
        path: PathBuf,
        error: std::io::Error,
    },
}

/// Parses and canonicalizes a file. With `write_in_place` the file is
/// replaced atomically (temp file + rename) and only if its bytes change.
/// Returns the canonical text.
pub fn format_file(path: &Path, write_in_place: bool) -> Result<String, FormatError> {
    let io_err = |error| FormatError::Io {
        path: path.to_owned(),
        error,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let graph = parse(&text).map_err(|error| FormatError::Parse {
        path: path.to_owned(),
        error,
    })?;
    let canonical = print(&graph);
    if write_in_place && canonical != text {
        write_atomic(path, canonical.as_bytes()).map_err(io_err)?;
    }
    Ok(canonical)
}

/// Writes `bytes` to a temp file next to `path`, syncs it, then renames it
/// over `path`. Readers see either the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new()
        .prefix(".ess-")
        .suffix(".tmp")
        .tempfile_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
