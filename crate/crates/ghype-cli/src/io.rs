//! File formats: TSV edge lists and JSON matrix files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{input_err, CliError};

/// A parsed edge list: weighted index pairs plus the vertex labels in
/// first-appearance order.
pub struct EdgeList {
    pub edges: Vec<(usize, usize, u64)>,
    pub labels: Vec<String>,
}

/// Parses TSV lines `src<TAB>dst<TAB>multiplicity` (multiplicity optional,
/// defaulting to 1, but column counts must be consistent). Lines starting
/// with `#` and blank lines are skipped. Labels are arbitrary strings,
/// indexed in first-appearance order.
pub fn parse_edge_list(text: &str) -> Result<EdgeList, CliError> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&i) = index.get(label) {
            return i;
        }
        let i = labels.len();
        labels.push(label.to_string());
        index.insert(label.to_string(), i);
        i
    };
    let mut edges = Vec::new();
    let mut expected_columns: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        let lineno = lineno + 1;
        if fields.len() < 2 || fields.len() > 3 {
            return Err(input_err(format!(
                "line {lineno}: expected `src<TAB>dst[<TAB>multiplicity]`, found {} column(s)",
                fields.len()
            )));
        }
        match expected_columns {
            None => expected_columns = Some(fields.len()),
            Some(cols) if cols != fields.len() => {
                return Err(input_err(format!(
                    "line {lineno}: inconsistent column count ({} vs {cols} on earlier lines)",
                    fields.len()
                )));
            }
            Some(_) => {}
        }
        let multiplicity = match fields.get(2) {
            None => 1,
            Some(text) => text.parse::<u64>().ok().filter(|&w| w > 0).ok_or_else(|| {
                input_err(format!(
                    "line {lineno}: multiplicity `{text}` is not a positive integer"
                ))
            })?,
        };
        let src = intern(fields[0], &mut labels);
        let dst = intern(fields[1], &mut labels);
        edges.push((src, dst, multiplicity));
    }
    Ok(EdgeList { edges, labels })
}

pub fn read_edge_list(path: &Path) -> Result<EdgeList, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| match e {
        CliError::Input(msg) => input_err(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// JSON container for square matrices: adjacency, Ξ, Ω, expectations, and
/// p-values all travel in this shape.
#[derive(Debug, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub directed: bool,
    pub labels: Vec<String>,
    pub data: Vec<f64>,
}

impl MatrixFile {
    pub fn new(n: usize, directed: bool, labels: Vec<String>, data: Vec<f64>) -> Self {
        Self {
            n,
            directed,
            labels,
            data,
        }
    }

    pub fn from_counts(n: usize, directed: bool, labels: Vec<String>, counts: &[u64]) -> Self {
        Self::new(
            n,
            directed,
            labels,
            counts.iter().map(|&c| c as f64).collect(),
        )
    }

    /// Entries as non-negative integers, rejecting fractional values.
    pub fn integer_data(&self, context: &str) -> Result<Vec<u64>, CliError> {
        self.data
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v <= 2f64.powi(53) {
                    Ok(v as u64)
                } else {
                    Err(input_err(format!(
                        "{context}: entry {v} is not a representable non-negative integer"
                    )))
                }
            })
            .collect()
    }
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    let mut matrix: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| input_err(format!("{}: invalid matrix JSON: {e}", path.display())))?;
    if matrix.data.len() != matrix.n * matrix.n {
        return Err(input_err(format!(
            "{}: data length {} does not match n² = {}",
            path.display(),
            matrix.data.len(),
            matrix.n * matrix.n
        )));
    }
    if matrix.labels.is_empty() {
        matrix.labels = (0..matrix.n).map(|i| i.to_string()).collect();
    }
    if matrix.labels.len() != matrix.n {
        return Err(input_err(format!(
            "{}: {} labels for n = {}",
            path.display(),
            matrix.labels.len(),
            matrix.n
        )));
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_labels_in_first_appearance_order() {
        let parsed = parse_edge_list("b\ta\n# comment\na\tc\n").unwrap();
        assert_eq!(parsed.labels, vec!["b", "a", "c"]);
        assert_eq!(parsed.edges, vec![(0, 1, 1), (1, 2, 1)]);
    }

    #[test]
    fn multiplicity_column_is_optional_but_consistent() {
        let parsed = parse_edge_list("u\tv\t3\nv\tw\t1\n").unwrap();
        assert_eq!(parsed.edges, vec![(0, 1, 3), (1, 2, 1)]);
        assert!(parse_edge_list("u\tv\t3\nv\tw\n").is_err());
        assert!(parse_edge_list("u\tv\t0\n").is_err());
        assert!(parse_edge_list("u\n").is_err());
    }

    #[test]
    fn empty_input_is_an_empty_graph() {
        let parsed = parse_edge_list("# nothing\n\n").unwrap();
        assert!(parsed.edges.is_empty());
        assert!(parsed.labels.is_empty());
    }

    #[test]
    fn integer_data_rejects_fractions() {
        let m = MatrixFile::new(1, true, vec!["x".into()], vec![2.5]);
        assert!(m.integer_data("xi").is_err());
        let m = MatrixFile::new(1, true, vec!["x".into()], vec![4.0]);
        assert_eq!(m.integer_data("xi").unwrap(), vec![4]);
    }
}
