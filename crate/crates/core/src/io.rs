//! Comma-separated input and output.
//!
//! Inputs may start with `#` comment lines and one optional header row; a
//! first row holding any non-numeric field is taken as the header. Outputs
//! start with `# key: value` metadata lines followed by a header row.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{PspError, Result};
use crate::types::{ClassLabel, ScoreMatrix};

/// Header names that carry target labels; score readers drop them.
const LABEL_COLUMNS: [&str; 4] = ["label", "labels", "y", "truth"];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    /// 1-based source line of each row.
    pub lines: Vec<u64>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PspError {
    PspError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn parse_err(path: &Path, line: u64, message: String) -> PspError {
    PspError::Parse {
        path: path.display().to_string(),
        line,
        message,
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let mut table = Table {
        header: None,
        rows: Vec::new(),
        lines: Vec::new(),
    };
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse().ok()).collect();
        if table.header.is_none() && table.rows.is_empty() && parsed.iter().any(Option::is_none) {
            table.header = Some(record.iter().map(str::to_owned).collect());
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(parse_err(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(expected);
        for (field, value) in record.iter().zip(parsed) {
            match value {
                Some(v) => row.push(v),
                None => return Err(parse_err(path, line, format!("not a number: {field:?}"))),
            }
        }
        table.rows.push(row);
        table.lines.push(line);
    }
    Ok(table)
}

/// Reads an `n × K` score matrix, dropping any label column named in the
/// header so target labels are never read.
pub fn read_scores(path: &Path) -> Result<ScoreMatrix> {
    let table = read_table(path)?;
    let keep: Vec<usize> = match &table.header {
        Some(h) => (0..h.len())
            .filter(|&c| !LABEL_COLUMNS.contains(&h[c].to_ascii_lowercase().as_str()))
            .collect(),
        None => (0..table.rows.first().map_or(0, Vec::len)).collect(),
    };
    if keep.is_empty() && !table.rows.is_empty() {
        return Err(PspError::EmptyScores);
    }
    let mut data = Vec::with_capacity(table.rows.len() * keep.len());
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        for &c in &keep {
            if !row[c].is_finite() {
                return Err(parse_err(path, line, format!("non-finite score {}", row[c])));
            }
            data.push(row[c]);
        }
    }
    if table.rows.is_empty() {
        return Ok(ScoreMatrix::empty(keep.len().max(1)));
    }
    ScoreMatrix::new(keep.len(), data)
}

/// Reads labels in `1..=k` from the first column, or from a `label` column
/// when the header has one.
pub fn read_labels(path: &Path, k: usize) -> Result<Vec<ClassLabel>> {
    let table = read_table(path)?;
    let col = table
        .header
        .as_ref()
        .and_then(|h| h.iter().position(|c| LABEL_COLUMNS.contains(&c.to_ascii_lowercase().as_str())))
        .unwrap_or(0);
    table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|(row, &line)| {
            let v = row[col];
            if v.fract() != 0.0 || v < 1.0 || v > k as f64 {
                return Err(parse_err(path, line, format!("label {v} is outside 1..={k}")));
            }
            Ok(ClassLabel::from_index(v as usize - 1))
        })
        .collect()
}

/// Writes metadata lines, a header and rows.
pub fn write_csv<I>(path: &Path, meta: &[(String, String)], header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    for (key, value) in meta {
        writeln!(out, "# {key}: {value}").map_err(|e| io_err(path, e))?;
    }
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn write_scores(path: &Path, meta: &[(String, String)], scores: &ScoreMatrix) -> Result<()> {
    let names: Vec<String> = (1..=scores.num_classes()).map(|k| format!("class_{k}")).collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let rows = scores.rows().map(|r| r.iter().map(|v| v.to_string()).collect());
    write_csv(path, meta, &header, rows)
}

pub fn write_labels(path: &Path, meta: &[(String, String)], labels: &[ClassLabel]) -> Result<()> {
    let rows = labels.iter().map(|l| vec![l.value().to_string()]);
    write_csv(path, meta, &["label"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn temp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn header_is_detected_and_skipped() {
        let (_d, p) = temp("# note\nclass_1,class_2\n0.2,0.8\n0.6,0.4\n");
        let m = read_scores(&p).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.row(1), &[0.6, 0.4]);
        let (_d, p) = temp("0.2,0.8\n0.6,0.4\n");
        assert_eq!(read_scores(&p).unwrap(), m);
    }

    #[test]
    fn label_columns_are_dropped() {
        let (_d, p) = temp("a,label,b\n0.2,9,0.8\n");
        assert_eq!(read_scores(&p).unwrap().row(0), &[0.2, 0.8]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let (_d, p) = temp("0.1,0.9\n0.5\n");
        match read_scores(&p).unwrap_err() {
            PspError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("{e}"),
        }
        let (_d, p) = temp("0.1,0.9\n0.5,x\n");
        match read_scores(&p).unwrap_err() {
            PspError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("not a number"));
            }
            e => panic!("{e}"),
        }
        let (_d, p) = temp("label\n1\n3\n");
        match read_labels(&p, 2).unwrap_err() {
            PspError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn scores_round_trip() {
        let m = ScoreMatrix::from_rows(&[[0.1, 0.2, 0.7], [1.0 / 3.0, 1e-17, 0.5]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_scores(&p, &[("seed".into(), "1".into())], &m).unwrap();
        assert_eq!(read_scores(&p).unwrap(), m);
        let l = vec![ClassLabel::from_index(2), ClassLabel::from_index(0)];
        write_labels(&p, &[], &l).unwrap();
        assert_eq!(read_labels(&p, 3).unwrap(), l);
    }
}
