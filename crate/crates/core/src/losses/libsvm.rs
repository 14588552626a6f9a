use std::path::Path;

use nalgebra::DVector;

use super::LossError;

/// A binary classification dataset read from libsvm text format.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Labels in `{-1, +1}`.
    pub labels: Vec<f64>,
    /// Sparse rows as `(zero_based_index, value)` pairs.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Largest 1-based feature index in the file; dense rows have this length.
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dense_row(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        for &(j, x) in &self.rows[i] {
            v[j] = x;
        }
        v
    }

    /// Number of distinct feature indices that occur in the file.
    pub fn distinct_features(&self) -> usize {
        let mut seen = vec![false; self.dim];
        for row in &self.rows {
            for &(j, _) in row {
                seen[j] = true;
            }
        }
        seen.into_iter().filter(|&s| s).count()
    }
}

pub fn parse_libsvm(path: impl AsRef<Path>) -> Result<Dataset, LossError> {
    parse_libsvm_str(&std::fs::read_to_string(path)?)
}

/// Parses `<label> <idx>:<val> ...` lines with 1-based indices. Blank lines
/// are skipped. Labels `0` and `-1` map to `-1`, `1` and `+1` to `+1`.
pub fn parse_libsvm_str(text: &str) -> Result<Dataset, LossError> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    let mut dim = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| LossError::Parse {
            line: line_no,
            message,
        };
        let mut tokens = line.split_whitespace();
        let Some(label) = tokens.next() else { continue };
        let label: f64 = label
            .parse()
            .map_err(|_| err(format!("bad label {label:?}")))?;
        let label = if label == 1.0 {
            1.0
        } else if label == -1.0 || label == 0.0 {
            -1.0
        } else {
            return Err(err(format!("label {label} is not binary")));
        };
        let mut row = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad index {idx:?}")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based".into()));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad value {val:?}")))?;
            dim = dim.max(idx);
            row.push((idx - 1, val));
        }
        labels.push(label);
        rows.push(row);
    }
    if labels.is_empty() {
        return Err(LossError::EmptyDataset);
    }
    Ok(Dataset { labels, rows, dim })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let ds = parse_libsvm_str("+1 3:0.5 7:1\n").unwrap();
        assert_eq!(ds.labels, vec![1.0]);
        assert_eq!(ds.dim, 7);
        let row = ds.dense_row(0);
        assert_eq!(row.len(), 7);
        assert_eq!(row[2], 0.5);
        assert_eq!(row[6], 1.0);
        assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn label_only_line_is_all_zero() {
        let ds = parse_libsvm_str("-1\n+1 2:3\n").unwrap();
        assert_eq!(ds.labels, vec![-1.0, 1.0]);
        assert_eq!(ds.dense_row(0), DVector::zeros(2));
        assert_eq!(ds.distinct_features(), 1);
    }

    #[test]
    fn zero_one_labels_are_mapped() {
        let ds = parse_libsvm_str("0 1:1\n1 1:2\n").unwrap();
        assert_eq!(ds.labels, vec![-1.0, 1.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("+1 1:1\n-1 2-3\n", 2),
            ("+1 0:1\n", 1),
            ("+1 1:1\n\nabc 1:1\n", 3),
            ("+2 1:1\n", 1),
            ("+1 x:1\n", 1),
            ("+1 1:y\n", 1),
        ] {
            match parse_libsvm_str(text) {
                Err(LossError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_libsvm_str(""), Err(LossError::EmptyDataset)));
        assert!(matches!(parse_libsvm_str("\n  \n"), Err(LossError::EmptyDataset)));
    }

    #[test]
    fn reads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.svm");
        std::fs::write(&path, "+1 1:1 4:1\n-1 2:1\n").unwrap();
        let ds = parse_libsvm(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim, 4);
        assert!(matches!(
            parse_libsvm(dir.path().join("missing")),
            Err(LossError::Io(_))
        ));
    }
}
