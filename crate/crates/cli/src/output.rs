//! CSV series, JSON metadata and binary snapshots.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use mhd_regularity::{snapshot, ScalarField};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

fn write_failure(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("cannot write {}: {e}", path.display()))
}

/// Writes `series` as CSV with a header row. Columns follow the field
/// order of `T`; floats are printed in shortest round-trip form.
pub fn emit_plot_data<T: Serialize>(series: &[T], path: &Path) -> Result<(), CliError> {
    if series.is_empty() {
        return Err(CliError::validation(format!(
            "refusing to write an empty series to {}",
            path.display()
        )));
    }
    let file = File::create(path).map_err(|e| write_failure(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in series {
        w.serialize(row).map_err(|e| write_failure(path, e))?;
    }
    w.flush().map_err(|e| write_failure(path, e))
}

/// Reads back a series written by [`emit_plot_data`].
pub fn read_plot_data<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::validation(format!("malformed CSV {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| write_failure(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| write_failure(path, e))?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| write_failure(path, e))
}

pub fn save_fields(path: &Path, fields: &[&ScalarField]) -> Result<(), CliError> {
    snapshot::save(path, fields).map_err(|e| write_failure(path, e))
}

pub fn load_fields(path: &Path) -> Result<Vec<ScalarField>, CliError> {
    snapshot::load(path).map_err(|e| {
        let msg = format!("cannot load snapshot {}: {e}", path.display());
        match e {
            mhd_regularity::Error::NonFinite { .. } => CliError::numerical(msg),
            _ => CliError::validation(msg),
        }
    })
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::validation(format!("cannot create output directory {}: {e}", dir.display())))
}
