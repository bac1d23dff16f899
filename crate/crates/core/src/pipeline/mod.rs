//! Data path: CSV ingest, empirical law, per-row sanitization, measurement
//! and export.

mod export;
mod sanitize;
mod table;

pub use export::{export_csv, export_json, fmt_sig, import_json, write_csv, CsvRecord};
pub use sanitize::{measure, sanitize, RunMetrics, SanitizationRun};
pub use table::{empirical_joint, ingest_csv, read_csv, Schema, Table};
