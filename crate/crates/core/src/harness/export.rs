//! Experiment output files: `summary.json`, `histogram.csv`, `trials.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ExperimentSummary;
use crate::error::{BcpError, Result};
use crate::fmt::{fmt_f64, to_json_17};

pub fn histogram_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from("bin_left,bin_right,count_one_minus_alpha,count_one_minus_loo\n");
    for b in &summary.histogram {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(b.bin_left),
            fmt_f64(b.bin_right),
            b.count_one_minus_alpha,
            b.count_one_minus_loo
        );
    }
    out
}

pub fn trials_csv(summary: &ExperimentSummary) -> String {
    let mut out = String::from(
        "trial,alpha_tilde,covered,set_size,cap,degenerate,alpha_loo,miss_over_alpha,alpha_tilde_bisect,test_index,trusted\n",
    );
    for t in &summary.trials {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            t.trial,
            fmt_f64(t.alpha_tilde),
            t.covered,
            t.set_size,
            t.cap,
            t.degenerate,
            fmt_f64(t.alpha_loo),
            fmt_f64(t.miss_over_alpha),
            t.alpha_tilde_bisect.map(fmt_f64).unwrap_or_default(),
            t.test_index.map(|i| i.to_string()).unwrap_or_default(),
            t.trusted.map(|b| b.to_string()).unwrap_or_default(),
        );
    }
    out
}

/// Writes the three output files into `dir`, creating it if needed.
pub fn write_outputs(dir: impl AsRef<Path>, summary: &ExperimentSummary) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| BcpError::io(dir, e))?;
    let json = to_json_17(summary).map_err(|e| BcpError::Config(e.to_string()))?;
    for (name, body) in [
        ("summary.json", json + "\n"),
        ("histogram.csv", histogram_csv(summary)),
        ("trials.csv", trials_csv(summary)),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| BcpError::io(&path, e))?;
    }
    Ok(())
}
