//! Shared line reader for the versioned text formats.

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_source(path: &Path) -> Result<(String, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok((text, path.display().to_string()))
}

/// Iterates over meaningful lines (comments stripped, blanks skipped) with
/// their 1-based line numbers, after checking the header line.
pub(crate) struct Lines<'a> {
    origin: String,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str, origin: &str, header: &str) -> Result<Self> {
        let mut inner = text.lines().enumerate();
        match inner.next() {
            Some((_, first)) if first.trim() == header => {}
            Some((_, first)) => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: 1,
                    msg: format!("expected header `{header}`, found `{}`", first.trim()),
                })
            }
            None => {
                return Err(Error::Parse {
                    path: origin.to_string(),
                    line: 1,
                    msg: "empty file".into(),
                })
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            inner,
        })
    }

    pub fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if !line.is_empty() {
                return Some((i + 1, line));
            }
        }
        None
    }

    pub fn error(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: self.origin.clone(),
            line,
            msg: msg.into(),
        }
    }
}
