pub mod augment;
pub mod dfscore;
pub mod metrics;
pub mod mi;
pub mod phantom;
pub mod saliency;

use std::path::PathBuf;

use anyhow::{bail, Result};
use dfocus_core::tables::CategoryTable;

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// False under `--no-timestamp`.
    pub timestamp: bool,
    pub top_k: usize,
}

impl Globals {
    /// The output path, for subcommands that cannot write to stdout.
    pub fn required_out(&self, what: &str) -> Result<&PathBuf> {
        match &self.out {
            Some(path) => Ok(path),
            None => bail!("{what} needs --out"),
        }
    }
}

/// User-supplied category table, or the bundled default.
pub fn load_categories(path: Option<&PathBuf>) -> Result<CategoryTable> {
    Ok(match path {
        Some(path) => CategoryTable::load(path)?,
        None => CategoryTable::default_table(),
    })
}
