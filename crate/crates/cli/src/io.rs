//! Plain-text inputs: headerless CSV matrices, one value per line vectors,
//! and `row,col,value` triples for sparse parts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use lpcoreset::linalg::DenseMatrix;
use lpcoreset::{Error, Result};

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn parse(field: &str, path: &Path, line: u64) -> Result<f64> {
    field.parse::<f64>().map_err(|_| {
        Error::InvalidInput(format!("{}:{line}: cannot parse {field:?} as a number", path.display()))
    })
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| parse(f, path, line))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::InvalidInput(format!(
                    "{}:{line}: expected {} columns, found {}",
                    path.display(),
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no rows", path.display())));
    }
    DenseMatrix::from_rows(&rows)
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path)?;
    if m.ncols() != 1 {
        return Err(Error::InvalidInput(format!(
            "{}: expected one value per line, found {} columns",
            path.display(),
            m.ncols()
        )));
    }
    Ok(m.data().to_vec())
}

/// Per-row `(column, value)` lists for `n` rows.
pub fn read_sparse(path: &Path, n: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let mut rows = vec![Vec::new(); n];
    for rec in reader(path)?.records() {
        let rec = rec.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::InvalidInput(format!(
                "{}:{line}: expected row,col,value",
                path.display()
            )));
        }
        let index = |f: &str| {
            f.parse::<usize>().map_err(|_| {
                Error::InvalidInput(format!("{}:{line}: bad index {f:?}", path.display()))
            })
        };
        let (i, c, v) = (index(&rec[0])?, index(&rec[1])?, parse(&rec[2], path, line)?);
        if i >= n {
            return Err(Error::InvalidInput(format!(
                "{}:{line}: row {i} out of range for {n} rows",
                path.display()
            )));
        }
        rows[i].push((c, v));
    }
    Ok(rows)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        Error::Io(format!("{}: {e}", path.display()))
    })?))
}

/// One value per line, after a `# config:` header.
pub fn write_solution(mut out: impl Write, config: &serde_json::Value, x: &[f64]) -> Result<()> {
    writeln!(out, "# config: {config}")?;
    for v in x {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}
