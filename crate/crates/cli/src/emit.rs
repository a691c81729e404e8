//! CSV and JSON rendering shared by the subcommands.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Token written for values that do not exist at a point.
pub const MISSING: &str = "NA";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        MISSING.to_string()
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_else(|| MISSING.to_string())
}

pub fn opt_bool(x: Option<bool>) -> String {
    match x {
        Some(b) => b.to_string(),
        None => MISSING.to_string(),
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV fields are UTF-8")
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}
