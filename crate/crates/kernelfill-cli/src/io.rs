//! File formats: headerless matrix CSV with `NA` rows/columns for missing
//! samples plus a JSON sidecar of sample ids, FASTA sequences and two-column
//! TSV class labels.
//!
//! Floats are written with 12 significant digits; that precision is the
//! round-trip contract for every matrix this tool emits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kernelfill::bioeval::{Alphabet, Sequence};
use kernelfill::completion::IncompleteKernel;
use kernelfill::matcore::SymMatrix;

use crate::error::{CliError, CliResult};
use crate::logging;

/// Significant digits for every float this tool writes.
pub const SIG_DIGITS: usize = 12;

pub fn format_float(v: f64) -> String {
    format!("{:.*e}", SIG_DIGITS - 1, v)
}

/// Rounds to the 12-significant-digit wire precision, so in-memory report
/// values match what lands in files.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        v
    } else {
        format_float(v).parse().expect("formatted float re-parses")
    }
}

/// Sidecar JSON naming the samples of a matrix CSV and which of them are
/// missing. Lives next to the CSV as `<file>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixSidecar {
    pub schema: u32,
    pub ids: Vec<String>,
    pub missing: Vec<String>,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn default_ids(dim: usize) -> Vec<String> {
    (0..dim).map(|i| i.to_string()).collect()
}

/// A parsed matrix CSV: sample ids, missing positions, and the observed
/// block over the remaining samples (symmetrized on ingest).
#[derive(Debug, Clone)]
pub struct MatrixFile {
    pub dim: usize,
    pub ids: Vec<String>,
    pub missing: Vec<usize>,
    pub observed: SymMatrix,
}

impl MatrixFile {
    pub fn observed_indices(&self) -> Vec<usize> {
        let mut gone = vec![false; self.dim];
        for &i in &self.missing {
            gone[i] = true;
        }
        (0..self.dim).filter(|&i| !gone[i]).collect()
    }

    /// The full matrix, available only when nothing is missing.
    pub fn full(&self) -> CliResult<&SymMatrix> {
        if self.missing.is_empty() {
            Ok(&self.observed)
        } else {
            Err(CliError::Validation(format!(
                "matrix has {} missing samples but a complete matrix is required",
                self.missing.len()
            )))
        }
    }

    /// Masks additional samples (by id) on top of the NA pattern and builds
    /// the completion input.
    pub fn to_incomplete(&self, extra_missing_ids: &[String]) -> CliResult<IncompleteKernel> {
        let mut missing = self.missing.clone();
        for id in extra_missing_ids {
            let idx = self
                .ids
                .iter()
                .position(|known| known == id)
                .ok_or_else(|| CliError::Validation(format!("unknown sample id {id:?}")))?;
            if !missing.contains(&idx) {
                missing.push(idx);
            }
        }
        missing.sort_unstable();
        let kept_before = self.observed_indices();
        let keep: Vec<usize> = kept_before
            .iter()
            .enumerate()
            .filter(|(_, orig)| !missing.contains(orig))
            .map(|(block_pos, _)| block_pos)
            .collect();
        if keep.is_empty() {
            return Err(CliError::Validation(
                "all samples would be missing".to_string(),
            ));
        }
        let observed = SymMatrix::from_fn(keep.len(), |i, j| self.observed.get(keep[i], keep[j]));
        IncompleteKernel::new(self.dim, observed, missing).map_err(CliError::from)
    }
}

/// Reads a matrix CSV plus optional sidecar. Missing samples must be `NA`
/// across their entire row and column; the sidecar's missing list, when
/// present, must agree with the NA pattern.
pub fn read_matrix(path: &Path) -> CliResult<MatrixFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let mut cells: Vec<Vec<Option<f64>>> = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col_no, token) in line.split(',').enumerate() {
            let token = token.trim();
            if token == "NA" {
                row.push(None);
            } else {
                let value: f64 = token.parse().map_err(|_| {
                    CliError::Validation(format!(
                        "{}: line {}, column {}: cannot parse {token:?}",
                        path.display(),
                        line_no + 1,
                        col_no + 1
                    ))
                })?;
                row.push(Some(value));
            }
        }
        cells.push(row);
    }
    let dim = cells.len();
    if dim == 0 {
        return Err(CliError::Validation(format!(
            "{}: empty matrix",
            path.display()
        )));
    }
    if cells.iter().any(|r| r.len() != dim) {
        return Err(CliError::Validation(format!(
            "{}: matrix is not square",
            path.display()
        )));
    }

    let missing: Vec<usize> = (0..dim).filter(|&i| cells[i][i].is_none()).collect();
    for i in 0..dim {
        for j in 0..dim {
            let expected_na = missing.contains(&i) || missing.contains(&j);
            if cells[i][j].is_none() != expected_na {
                return Err(CliError::Validation(format!(
                    "{}: cell ({}, {}) breaks the missing row/column pattern",
                    path.display(),
                    i + 1,
                    j + 1
                )));
            }
        }
    }

    let side = sidecar_path(path);
    let ids = if side.exists() {
        let text = fs::read_to_string(&side)
            .map_err(|e| CliError::io(&format!("reading {}", side.display()), e))?;
        let sidecar: MatrixSidecar = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("{}: invalid sidecar JSON: {e}", side.display()))
        })?;
        if sidecar.ids.len() != dim {
            return Err(CliError::Validation(format!(
                "{}: sidecar lists {} ids for a {}x{} matrix",
                side.display(),
                sidecar.ids.len(),
                dim,
                dim
            )));
        }
        let mut sidecar_missing: Vec<usize> = Vec::new();
        for id in &sidecar.missing {
            let idx = sidecar
                .ids
                .iter()
                .position(|known| known == id)
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "{}: missing id {id:?} not among the sample ids",
                        side.display()
                    ))
                })?;
            sidecar_missing.push(idx);
        }
        sidecar_missing.sort_unstable();
        if sidecar_missing != missing {
            return Err(CliError::Validation(format!(
                "{}: sidecar missing list disagrees with the NA pattern",
                side.display()
            )));
        }
        sidecar.ids
    } else {
        default_ids(dim)
    };

    let kept: Vec<usize> = (0..dim).filter(|i| !missing.contains(i)).collect();
    let rows: Vec<Vec<f64>> = kept
        .iter()
        .map(|&i| kept.iter().map(|&j| cells[i][j].unwrap()).collect())
        .collect();
    let (observed, asymmetry) = SymMatrix::symmetrized(&rows).map_err(CliError::from)?;
    if asymmetry > 1e-8 {
        logging::warn(&format!(
            "{}: asymmetry up to {asymmetry:.3e} symmetrized away",
            path.display()
        ));
    }
    Ok(MatrixFile {
        dim,
        ids,
        missing,
        observed,
    })
}

/// Writes a matrix CSV (12 significant digits) with `NA` rows/columns at
/// `missing`, plus the id sidecar.
pub fn write_matrix(
    path: &Path,
    full: &SymMatrix,
    ids: &[String],
    missing: &[usize],
) -> CliResult<()> {
    let dim = full.dim();
    assert_eq!(ids.len(), dim);
    let mut out = String::new();
    for i in 0..dim {
        for j in 0..dim {
            if j > 0 {
                out.push(',');
            }
            if missing.contains(&i) || missing.contains(&j) {
                out.push_str("NA");
            } else {
                out.push_str(&format_float(full.get(i, j)));
            }
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
    let sidecar = MatrixSidecar {
        schema: 1,
        ids: ids.to_vec(),
        missing: missing.iter().map(|&i| ids[i].clone()).collect(),
    };
    let side = sidecar_path(path);
    fs::write(
        &side,
        serde_json::to_string_pretty(&sidecar).expect("serializable") + "\n",
    )
    .map_err(|e| CliError::io(&format!("writing {}", side.display()), e))?;
    Ok(())
}

/// Reads FASTA records; the record id is the first whitespace-delimited token
/// after `>`.
pub fn read_fasta(path: &Path, alphabet: Alphabet) -> CliResult<Vec<Sequence>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let mut sequences = Vec::new();
    let mut current: Option<(String, String)> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            if let Some((id, symbols)) = current.take() {
                sequences.push(Sequence::new(id, symbols, alphabet, None).map_err(CliError::from)?);
            }
            let id = header
                .split_whitespace()
                .next()
                .unwrap_or_default()
                .to_string();
            if id.is_empty() {
                return Err(CliError::Validation(format!(
                    "{}: FASTA record without an id",
                    path.display()
                )));
            }
            current = Some((id, String::new()));
        } else {
            match current.as_mut() {
                Some((_, symbols)) => symbols.push_str(&line.to_uppercase()),
                None => {
                    return Err(CliError::Validation(format!(
                        "{}: sequence data before the first header",
                        path.display()
                    )))
                }
            }
        }
    }
    if let Some((id, symbols)) = current.take() {
        sequences.push(Sequence::new(id, symbols, alphabet, None).map_err(CliError::from)?);
    }
    if sequences.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no FASTA records",
            path.display()
        )));
    }
    Ok(sequences)
}

pub fn write_fasta(path: &Path, sequences: &[Sequence]) -> CliResult<()> {
    let mut out = String::new();
    for seq in sequences {
        out.push('>');
        out.push_str(&seq.id);
        out.push('\n');
        for chunk in seq.symbols.as_bytes().chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ASCII alphabet"));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

/// Two-column TSV: sample id, integer class label.
pub fn read_labels(path: &Path) -> CliResult<Vec<(String, usize)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let mut labels = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let id = parts.next().unwrap_or_default();
        let label = parts
            .next()
            .and_then(|t| t.trim().parse::<usize>().ok())
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "{}: line {}: expected \"id<TAB>label\"",
                    path.display(),
                    line_no + 1
                ))
            })?;
        labels.push((id.to_string(), label));
    }
    if labels.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no labels",
            path.display()
        )));
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[(String, usize)]) -> CliResult<()> {
    let mut out = String::new();
    for (id, label) in labels {
        out.push_str(id);
        out.push('\t');
        out.push_str(&label.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}
