//! Loading Tracy-Widom tables from disk.
//!
//! A table directory holds `tw1.txt` and/or `tw2.txt` in the two-column
//! `t cdf` format. Without a directory the tables compiled into
//! `emitter-core` are used.

use std::fs;
use std::path::{Path, PathBuf};

use emitter_core::{TwOrder, TwTable, TwTables};

use crate::error::{CliError, Result};

/// Environment variable naming a directory that overrides the embedded tables.
pub const TW_DIR_ENV: &str = "EMITTER_TW_DIR";

pub fn table_file_name(order: TwOrder) -> &'static str {
    match order {
        TwOrder::One => "tw1.txt",
        TwOrder::Two => "tw2.txt",
    }
}

pub fn read_table(path: &Path, order: TwOrder) -> Result<TwTable> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    TwTable::parse(&text, order).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Reads whichever order files exist in `dir`. Orders without a file stay
/// unloaded and fail with a configuration error when used.
pub fn load_dir(dir: &Path) -> Result<TwTables> {
    if !dir.is_dir() {
        return Err(CliError::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "table directory not found"),
        ));
    }
    let mut tables = TwTables::empty();
    for order in [TwOrder::One, TwOrder::Two] {
        let path = dir.join(table_file_name(order));
        if path.exists() {
            tables.insert(read_table(&path, order)?);
        }
    }
    Ok(tables)
}

/// Resolution order: explicit directory, then `EMITTER_TW_DIR`, then the
/// embedded tables.
pub fn resolve(explicit: Option<&Path>) -> Result<TwTables> {
    let from_env = std::env::var_os(TW_DIR_ENV).map(PathBuf::from);
    match explicit.map(Path::to_path_buf).or(from_env) {
        Some(dir) => load_dir(&dir),
        None => Ok(TwTables::embedded()),
    }
}
