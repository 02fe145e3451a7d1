//! CSV tables. Column order is part of the interface.

use std::fs;
use std::path::Path;

use crate::CliError;

pub const EQUILIBRIUM_HEADER: [&str; 5] = ["miner_id", "alpha_star", "u_min_star", "x_hat", "cost"];
pub const TRACE_HEADER: [&str; 4] = ["sweep", "miner_id", "alpha", "u_min"];
pub const SWEEP_HEADER: [&str; 6] = ["axis_value", "mode", "sum_u_min", "sum_alpha_x", "sweeps_to_converge", "status"];
pub const HISTOGRAM_HEADER: [&str; 6] = ["mode", "miner_id", "distribution", "bin_lo", "bin_hi", "count"];
pub const VIOLATIONS_HEADER: [&str; 10] = [
    "mode",
    "miner_id",
    "distribution",
    "n_samples",
    "n_violations",
    "violation_rate",
    "epsilon",
    "pass",
    "u_min",
    "mean_utility",
];

/// Renders a table as UTF-8 CSV with LF line endings.
pub fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV of UTF-8 fields")
}

/// Writes through a temporary sibling and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    write_atomic(path, &render(header, rows))
}
