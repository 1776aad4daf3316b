use std::io::Read;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

/// Exactly one text source.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct TextInput {
    /// Inline text.
    #[arg(long, allow_hyphen_values = true)]
    pub text: Option<String>,
    /// Read text from standard input.
    #[arg(long)]
    pub stdin: bool,
    /// Read text from a file.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

impl TextInput {
    pub fn read(&self) -> Result<String> {
        if let Some(t) = &self.text {
            return Ok(t.clone());
        }
        if let Some(path) = &self.file {
            return std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()));
        }
        read_stdin()
    }
}

pub fn read_stdin() -> Result<String> {
    let mut buf = Vec::new();
    std::io::stdin()
        .lock()
        .read_to_end(&mut buf)
        .context("reading standard input")?;
    String::from_utf8(buf).context("standard input is not valid UTF-8")
}
