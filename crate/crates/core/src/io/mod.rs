//! File formats: summary-level study CSV, row-level micro CSV and report
//! writers.

mod micro;
mod reports;
mod summary;

pub use micro::{parse_micro_csv, parse_micro_csv_with, read_micro_str, write_micro_csv, micro_csv_string};
pub use reports::{
    fusion_csv, phase_csv, sim_report_csv, table1_csv, write_text, FusionRow,
};
pub use summary::{bundled_summary, parse_summary_csv, parse_summary_str, SummaryRecord, BUNDLED_SUMMARY_CSV};

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}
