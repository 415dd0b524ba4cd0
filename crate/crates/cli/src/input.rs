//! CSV readers for `eptr release`.
//!
//! * bayes: `label, x_1, …, x_p` with integer labels from 0
//! * linreg: `y, x_1, …, x_p`
//! * kernel: `y, x`
//!
//! A first row whose leading field is not a number is taken as a header.

use std::path::Path;

use eptr_core::bayes::LabeledDataset;
use eptr_core::linreg::RegressionDataset;

fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if line == 0 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("line {}, column {}: not a finite number: {f:?}", line + 1, col + 1))
            })
            .collect::<Result<Vec<f64>, String>>()?;
        if let Some(first) = rows.first().map(|r: &Vec<f64>| r.len()) {
            if row.len() != first {
                return Err(format!("line {}: expected {first} fields, found {}", line + 1, row.len()));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(format!("{}: no data rows", path.display()));
    }
    if rows[0].len() < 2 {
        return Err("each row needs a target column and at least one feature".into());
    }
    Ok(rows)
}

pub fn read_labeled(path: &Path, classes: Option<usize>) -> Result<LabeledDataset, String> {
    let rows = read_rows(path)?;
    let mut labels = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let l = r[0];
        if l < 0.0 || l.fract() != 0.0 {
            return Err(format!("row {}: label {l} is not a non-negative integer", i + 1));
        }
        labels.push(l as usize);
    }
    let seen = labels.iter().max().map_or(0, |m| m + 1);
    let classes = classes.unwrap_or(seen);
    if seen > classes {
        return Err(format!("label {} is outside 0..{classes}", seen - 1));
    }
    let features = rows.into_iter().map(|r| r[1..].to_vec()).collect();
    LabeledDataset::new(features, labels, classes).map_err(|e| e.to_string())
}

pub fn read_regression(path: &Path, scalar: bool) -> Result<RegressionDataset, String> {
    let rows = read_rows(path)?;
    if scalar && rows[0].len() != 2 {
        return Err(format!("kernel input needs exactly two columns (y, x), found {}", rows[0].len()));
    }
    let y = rows.iter().map(|r| r[0]).collect();
    let x = rows.into_iter().map(|r| r[1..].to_vec()).collect();
    RegressionDataset::new(x, y).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_is_skipped() {
        let f = file("y,x1,x2\n1.0,0.5,0.25\n-1,0,1\n");
        let d = read_regression(f.path(), false).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.y(), &[1.0, -1.0]);
        assert_eq!(d.x()[0], vec![0.5, 0.25]);
    }

    #[test]
    fn labels_and_classes() {
        let f = file("0,1,2\n2,3,4\n");
        let d = read_labeled(f.path(), None).unwrap();
        assert_eq!(d.classes(), 3);
        assert!(read_labeled(f.path(), Some(2)).is_err());
        assert!(read_labeled(file("0.5,1\n").path(), None).is_err());
    }

    #[test]
    fn malformed_rows_are_rejected() {
        assert!(read_regression(file("1,2\n3\n").path(), false).is_err());
        assert!(read_regression(file("1,abc\n").path(), false).is_err());
        assert!(read_regression(file("1,nan\n").path(), false).is_err());
        assert!(read_regression(file("").path(), false).is_err());
        assert!(read_regression(file("1,2,3\n").path(), true).is_err());
    }
}
