//! CSV and plot-data emission.
//!
//! CSV: header `strategy,repeat,seed,iteration,avg_loss,distance_sq,decrement,chosen_index`,
//! one row per record, floats in `{:.16e}` (17 significant digits), `\n` line
//! endings. Records are written in the order given.
//!
//! Plot data: one whitespace-separated file per strategy named
//! `<strategy>.dat`, with a `# iteration mean stderr` header and one line per
//! logged iteration. `mean` and `stderr` aggregate `avg_loss` over repeats;
//! `stderr` is the sample standard deviation over `√n`, and `0` when `n = 1`.
//! Zero losses are written as-is, so log-scale plots must skip them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{HarnessError, Result};
use crate::experiment::RunRecord;

pub const CSV_HEADER: &str =
    "strategy,repeat,seed,iteration,avg_loss,distance_sq,decrement,chosen_index";

pub fn write_csv<W: Write>(mut out: W, records: &[RunRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{:.16e},{:.16e},{:.16e},{}",
            r.strategy,
            r.repeat,
            r.seed,
            r.iteration,
            r.avg_loss,
            r.distance_sq,
            r.decrement,
            r.chosen_index
        )?;
    }
    out.flush()
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(HarnessError::usage("no records to write"));
    }
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_csv(BufWriter::new(file), records).map_err(|e| HarnessError::io(path, e))
}

/// Aggregated curve of one strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub strategy: String,
    /// `(iteration, mean, stderr)`, sorted by iteration.
    pub points: Vec<(usize, f64, f64)>,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Groups records by strategy (first-appearance order) and iteration.
pub fn aggregate(records: &[RunRecord]) -> Vec<Curve> {
    let mut strategies: Vec<&str> = Vec::new();
    for r in records {
        if !strategies.contains(&r.strategy.as_str()) {
            strategies.push(&r.strategy);
        }
    }
    strategies
        .into_iter()
        .map(|s| {
            let mut rows: Vec<(usize, f64)> = records
                .iter()
                .filter(|r| r.strategy == s)
                .map(|r| (r.iteration, r.avg_loss))
                .collect();
            rows.sort_by_key(|&(it, _)| it);
            let points = rows
                .chunk_by(|a, b| a.0 == b.0)
                .map(|group| {
                    let values: Vec<f64> = group.iter().map(|&(_, v)| v).collect();
                    let (mean, se) = mean_stderr(&values);
                    (group[0].0, mean, se)
                })
                .collect();
            Curve {
                strategy: s.to_string(),
                points,
            }
        })
        .collect()
}

pub fn write_curve<W: Write>(mut out: W, curve: &Curve) -> std::io::Result<()> {
    writeln!(out, "# iteration mean stderr")?;
    for &(it, mean, se) in &curve.points {
        writeln!(out, "{it} {mean:.16e} {se:.16e}")?;
    }
    out.flush()
}

/// Writes one `<strategy>.dat` per strategy into `dir` and returns the paths.
pub fn emit_plot_data(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(HarnessError::usage("no records to write"));
    }
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths = Vec::new();
    for curve in aggregate(records) {
        let path = dir.join(format!("{}.dat", curve.strategy));
        let file = File::create(&path).map_err(|e| HarnessError::io(&path, e))?;
        write_curve(BufWriter::new(file), &curve).map_err(|e| HarnessError::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(strategy: &str, repeat: usize, iteration: usize, loss: f64) -> RunRecord {
        RunRecord {
            strategy: strategy.into(),
            repeat,
            seed: 42 + repeat as u64,
            iteration,
            avg_loss: loss,
            distance_sq: 2.0 * loss,
            decrement: 0.0,
            chosen_index: iteration - 1,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rec("md", 0, 1, 0.5)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            format!(
                "{CSV_HEADER}\nmd,0,42,1,5.0000000000000000e-1,1.0000000000000000e0,0.0000000000000000e0,0\n"
            )
        );
    }

    #[test]
    fn mean_and_stderr() {
        let recs = vec![
            rec("a", 0, 1, 1.0),
            rec("a", 1, 1, 3.0),
            rec("b", 0, 1, 0.0),
            rec("a", 0, 2, 2.0),
            rec("a", 1, 2, 2.0),
        ];
        let curves = aggregate(&recs);
        assert_eq!(curves.len(), 2);
        assert_eq!(curves[0].strategy, "a");
        assert_eq!(curves[0].points, vec![(1, 2.0, 1.0), (2, 2.0, 0.0)]);
        assert_eq!(curves[1].points, vec![(1, 0.0, 0.0)]);
    }

    #[test]
    fn empty_records_are_rejected() {
        let dir = std::env::temp_dir();
        assert_eq!(
            emit_csv(&[], &dir.join("x.csv")).unwrap_err().exit_code(),
            2
        );
    }
}
