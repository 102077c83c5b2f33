//! File formats, scoring and the `flowtwin` command line on top of
//! `flowtwin-core`.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod predictions;
pub mod selfcheck;
pub mod topo_io;

use serde::Serializer;

/// Serializes a float rounded to 9 significant digits.
pub(crate) fn sig9<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(flowtwin_core::math::round9(*x))
}

/// 9 significant digits, shortest decimal form.
pub fn format_sig9(x: f64) -> String {
    format!("{}", flowtwin_core::math::round9(x))
}
