//! Prediction tables as `sample_id,src,dst,delay` CSV.

use std::path::Path;

use anyhow::{bail, Context, Result};
use flowtwin_core::metrics::PredictionTable;

use crate::format_sig9;

pub const HEADER: [&str; 4] = ["sample_id", "src", "dst", "delay"];

pub fn write_predictions(path: &Path, table: &PredictionTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(HEADER)?;
    for (&(id, src, dst), &delay) in table {
        w.write_record([id.to_string(), src.to_string(), dst.to_string(), format_sig9(delay)])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Parses a table; errors name the offending row.
pub fn read_predictions(path: &Path) -> Result<PredictionTable> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header = r.headers().with_context(|| format!("reading header of {}", path.display()))?;
    if header.iter().ne(HEADER) {
        bail!("{}: header must be {}", path.display(), HEADER.join(","));
    }
    let mut table = PredictionTable::new();
    for (i, rec) in r.records().enumerate() {
        let row = i + 1;
        let rec = rec.with_context(|| format!("{}: row {row}", path.display()))?;
        if rec.len() != 4 {
            bail!("{}: row {row} has {} fields", path.display(), rec.len());
        }
        let field = |k: usize| rec[k].trim();
        let id: u64 = field(0).parse().with_context(|| format!("{}: row {row} sample_id", path.display()))?;
        let src: usize = field(1).parse().with_context(|| format!("{}: row {row} src", path.display()))?;
        let dst: usize = field(2).parse().with_context(|| format!("{}: row {row} dst", path.display()))?;
        let delay: f64 = field(3).parse().with_context(|| format!("{}: row {row} delay", path.display()))?;
        if table.insert((id, src, dst), delay).is_some() {
            bail!("{}: row {row} repeats key ({id},{src},{dst})", path.display());
        }
    }
    Ok(table)
}
