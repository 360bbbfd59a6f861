use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::sweep::{SummaryRow, SweepRecord, SweepResult};
use crate::error::{Error, Result};

pub const RECORDS_FILE: &str = "records.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot_summary.py";

/// Renders mean CE against the axis value, one curve per scheme.
const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot mean computation efficiency from summary.csv.

usage: python3 plot_summary.py [summary.csv] [out.png]
"""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "summary.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "summary.png"

curves = defaultdict(list)
axis = None
with open(src, newline="") as f:
    for row in csv.DictReader(f):
        axis = row["axis"]
        if row["mean_eta_bits_per_joule"] == "":
            continue
        x = float(row["value"])
        if axis == "bits":
            x /= 1e6
        curves[row["scheme"]].append((x, float(row["mean_eta_bits_per_joule"]) / 1e6))

for scheme, points in curves.items():
    points.sort()
    plt.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=scheme)

plt.xlabel("minimum computed bits (Mbit)" if axis == "bits" else "energy budget (J)")
plt.ylabel("computation efficiency (Mbit/J)")
plt.grid(True, alpha=0.3)
plt.legend()
plt.tight_layout()
plt.savefig(dst, dpi=150)
print(f"wrote {dst}")
"#;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Write rows with a header line, even when `rows` is empty.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err(path))
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    read_csv(path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path)
}

/// Write `records.csv`, `summary.csv` and the plot script into `dir`, creating it
/// if needed. Returns the written paths.
pub fn emit_results(result: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    if result.records.is_empty() {
        return Err(Error::Domain("no sweep records to write".into()));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let records = dir.join(RECORDS_FILE);
    write_csv(&records, &result.records)?;
    let summary = dir.join(SUMMARY_FILE);
    write_csv(&summary, &result.summary)?;
    let plot = dir.join(PLOT_FILE);
    fs::write(&plot, PLOT_SCRIPT).map_err(io_err(&plot))?;
    Ok(vec![records, summary, plot])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::SweepAxis;
    use crate::optimizer::Scheme;

    fn sample() -> SweepRecord {
        SweepRecord {
            scheme: Scheme::FullOffloading,
            axis: SweepAxis::MinBits,
            value: 2e5,
            trial: 3,
            seed: u64::MAX - 5,
            feasible: true,
            eta_bits_per_joule: 1.234_567_890_123_456_7e8,
            bits_u1: 200_000.000_000_1,
            bits_u2: 1.0 / 3.0,
            energy_u1: 1e-3,
            energy_u2: 2.5e-3,
            outer_iters: 4,
            inner_iters: 17,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn one_record_gives_header_and_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &[sample()]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[0],
            "scheme,axis,value,trial,seed,feasible,eta_bits_per_joule,bits_u1,bits_u2,\
             energy_u1_J,energy_u2_J,outer_iters,inner_iters,wall_ms"
        );
        assert!(lines[1].starts_with("full-offloading,bits,"));
    }

    #[test]
    fn records_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let mut other = sample();
        other.feasible = false;
        other.eta_bits_per_joule = 0.0;
        other.scheme = Scheme::Proposed;
        let recs = vec![sample(), other];
        write_csv(&path, &recs).unwrap();
        assert_eq!(read_records(&path).unwrap(), recs);
    }

    #[test]
    fn empty_result_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let res = SweepResult {
            records: vec![],
            summary: vec![],
        };
        assert!(emit_results(&res, dir.path()).is_err());
    }

    #[test]
    fn unwritable_path_reports_it() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let res = SweepResult {
            records: vec![sample()],
            summary: vec![],
        };
        let err = emit_results(&res, &blocker.join("sub")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}
