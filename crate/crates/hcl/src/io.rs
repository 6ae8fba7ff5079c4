//! CSV ingestion, atomic file writes and checksums.
//!
//! A manifest is a `key = value` file:
//!
//! ```text
//! view1 = features.csv
//! view2 = second_view.csv   # optional
//! labels = labels.csv
//! header = false
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use hcl_core::data::Dataset;
use hcl_core::Matrix;
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

/// Reads a numeric CSV; `binary` additionally requires every value to be 0 or 1.
fn read_matrix(path: &Path, header: bool, binary: bool) -> AppResult<Matrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::Ingest(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| AppError::Ingest(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(r + 1, |p| p.line() as usize);
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, s)| {
                let v: f64 = s.parse().map_err(|_| {
                    AppError::Ingest(format!("{} line {line}, column {}: `{s}` is not a number", path.display(), c + 1))
                })?;
                if !v.is_finite() {
                    return Err(AppError::Ingest(format!(
                        "{} line {line}, column {}: non-finite value `{s}`",
                        path.display(),
                        c + 1
                    )));
                }
                if binary && v != 0.0 && v != 1.0 {
                    return Err(AppError::Ingest(format!(
                        "{} line {line}, column {}: label `{s}` is not 0 or 1",
                        path.display(),
                        c + 1
                    )));
                }
                Ok(v)
            })
            .collect::<AppResult<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(AppError::Ingest(format!(
                    "{} line {line}: {} columns, expected {}",
                    path.display(),
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(AppError::Ingest(format!("{}: no data rows", path.display())));
    }
    Ok(Matrix::from_rows(&rows)?)
}

/// One dataset from one or two feature files and a 0/1 labels file.
pub fn load_csv(views: &[PathBuf], labels: &Path, header: bool) -> AppResult<Dataset> {
    if views.is_empty() || views.len() > 2 {
        return Err(AppError::Ingest(format!("expected one or two view files, got {}", views.len())));
    }
    let y = read_matrix(labels, header, true)?;
    let mut xs = Vec::with_capacity(views.len());
    for p in views {
        let x = read_matrix(p, header, false)?;
        if x.rows() != y.rows() {
            return Err(AppError::Ingest(format!(
                "{} has {} data rows but {} has {}",
                p.display(),
                x.rows(),
                labels.display(),
                y.rows()
            )));
        }
        xs.push(x);
    }
    let name = labels.file_stem().map_or("csv".into(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset::new(name, xs, y)?)
}

pub fn load_manifest(path: &Path) -> AppResult<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let (mut v1, mut v2, mut labels, mut header) = (None, None, None, false);
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            AppError::Ingest(format!("{} line {}: expected `key = value`", path.display(), no + 1))
        })?;
        let v = v.trim();
        match k.trim() {
            "view1" => v1 = Some(base.join(v)),
            "view2" => v2 = Some(base.join(v)),
            "labels" => labels = Some(base.join(v)),
            "header" => {
                header = match v {
                    "true" => true,
                    "false" => false,
                    _ => {
                        return Err(AppError::Ingest(format!(
                            "{} line {}: `header` must be true or false",
                            path.display(),
                            no + 1
                        )))
                    }
                }
            }
            other => {
                return Err(AppError::Ingest(format!("{} line {}: unknown key `{other}`", path.display(), no + 1)))
            }
        }
    }
    let missing = |k: &str| AppError::Ingest(format!("{}: `{k}` is required", path.display()));
    let mut views = vec![v1.ok_or_else(|| missing("view1"))?];
    views.extend(v2);
    load_csv(&views, &labels.ok_or_else(|| missing("labels"))?, header)
}

/// Rows as CSV with '.' decimals and shortest round-trip formatting.
pub fn matrix_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in m.iter_rows() {
        let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> AppResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
    }
    let name = path.file_name().map_or("out".into(), |n| n.to_string_lossy().into_owned());
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| AppError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| AppError::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let x = Matrix::from_rows(&[[0.5, -1.25], [3.0, 1e-7], [0.1, 2.0]]).unwrap();
        let y = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        write_atomic(&dir.path().join("x.csv"), matrix_csv(&x).as_bytes()).unwrap();
        write_atomic(&dir.path().join("y.csv"), matrix_csv(&y).as_bytes()).unwrap();
        let m = dir.path().join("m.txt");
        std::fs::write(&m, "view1 = x.csv\nlabels = y.csv\n").unwrap();
        let ds = load_manifest(&m).unwrap();
        assert_eq!(ds.view(0), &x);
        assert_eq!(ds.labels(), &y);
    }

    #[test]
    fn non_binary_label_names_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.csv"), "1,2\n3,4\n").unwrap();
        std::fs::write(dir.path().join("y.csv"), "0,1\n1,2\n").unwrap();
        let e = load_csv(&[dir.path().join("x.csv")], &dir.path().join("y.csv"), false).unwrap_err().to_string();
        assert!(e.contains("line 2") && e.contains("column 2") && e.contains("`2`"), "{e}");
    }

    #[test]
    fn row_count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x.csv"), "1,2\n3,4\n5,6\n").unwrap();
        std::fs::write(dir.path().join("y.csv"), "0\n1\n").unwrap();
        let e = load_csv(&[dir.path().join("x.csv")], &dir.path().join("y.csv"), false).unwrap_err().to_string();
        assert!(e.contains("3 data rows") && e.contains("has 2"), "{e}");
    }
}
