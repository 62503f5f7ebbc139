//! Matrix Market reader and writer for dense real matrices.
//!
//! Reads `array` and `coordinate` files with `real`, `double` or `integer`
//! fields and `general`, `symmetric` or `skew-symmetric` storage. Writes
//! `array real general`.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::fmt17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Storage {
    General,
    Symmetric,
    SkewSymmetric,
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix(&text).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

type ParseResult<T> = std::result::Result<T, (usize, String)>;

pub(crate) fn parse_matrix(text: &str) -> ParseResult<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, banner) = lines.next().ok_or((1, "empty file".to_string()))?;
    let (layout, storage) = parse_banner(banner).map_err(|m| (1, m))?;

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or((1, "missing size line".to_string()))?;
    let dims = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| (size_line, format!("bad size line: {e}")))?;

    match layout {
        Layout::Array => {
            let [rows, cols] = dims[..] else {
                return Err((size_line, "array size line needs 2 integers".into()));
            };
            read_array(body, rows, cols, storage, size_line)
        }
        Layout::Coordinate => {
            let [rows, cols, nnz] = dims[..] else {
                return Err((size_line, "coordinate size line needs 3 integers".into()));
            };
            read_coordinate(body, rows, cols, nnz, storage, size_line)
        }
    }
}

fn parse_banner(banner: &str) -> std::result::Result<(Layout, Storage), String> {
    let tokens: Vec<String> = banner.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(format!("not a Matrix Market matrix header: {banner:?}"));
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(format!("unsupported format {other:?}")),
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(format!("unsupported field {other:?} (only real matrices)")),
    }
    let storage = match tokens[4].as_str() {
        "general" => Storage::General,
        "symmetric" => Storage::Symmetric,
        "skew-symmetric" => Storage::SkewSymmetric,
        other => return Err(format!("unsupported symmetry {other:?}")),
    };
    Ok((layout, storage))
}

fn parse_value(line: usize, token: &str) -> ParseResult<f64> {
    token
        .parse::<f64>()
        .map_err(|e| (line, format!("bad value {token:?}: {e}")))
}

fn read_array<'a>(
    body: impl Iterator<Item = (usize, &'a str)>,
    rows: usize,
    cols: usize,
    storage: Storage,
    size_line: usize,
) -> ParseResult<DMatrix<f64>> {
    if storage != Storage::General && rows != cols {
        return Err((size_line, "symmetric storage requires a square matrix".into()));
    }
    // Column-major; symmetric storage lists the lower triangle only.
    let mut slots = Vec::new();
    for j in 0..cols {
        let start = match storage {
            Storage::General => 0,
            Storage::Symmetric => j,
            Storage::SkewSymmetric => j + 1,
        };
        for i in start..rows {
            slots.push((i, j));
        }
    }
    let mut m = DMatrix::zeros(rows, cols);
    let mut filled = 0;
    let mut last_line = size_line;
    for (line, text) in body {
        last_line = line;
        for token in text.split_whitespace() {
            let &(i, j) = slots
                .get(filled)
                .ok_or((line, "too many entries".to_string()))?;
            let v = parse_value(line, token)?;
            place(&mut m, i, j, v, storage);
            filled += 1;
        }
    }
    if filled != slots.len() {
        return Err((
            last_line,
            format!("expected {} entries, found {filled}", slots.len()),
        ));
    }
    Ok(m)
}

fn read_coordinate<'a>(
    body: impl Iterator<Item = (usize, &'a str)>,
    rows: usize,
    cols: usize,
    nnz: usize,
    storage: Storage,
    size_line: usize,
) -> ParseResult<DMatrix<f64>> {
    if storage != Storage::General && rows != cols {
        return Err((size_line, "symmetric storage requires a square matrix".into()));
    }
    let mut m = DMatrix::zeros(rows, cols);
    let mut count = 0;
    let mut last_line = size_line;
    for (line, text) in body {
        last_line = line;
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let [ti, tj, tv] = tokens[..] else {
            return Err((line, "coordinate entry needs row, column and value".into()));
        };
        let index = |t: &str, bound: usize| -> ParseResult<usize> {
            match t.parse::<usize>() {
                Ok(x) if (1..=bound).contains(&x) => Ok(x - 1),
                _ => Err((line, format!("index {t:?} out of range 1..={bound}"))),
            }
        };
        let i = index(ti, rows)?;
        let j = index(tj, cols)?;
        let v = parse_value(line, tv)?;
        if storage == Storage::General {
            m[(i, j)] += v;
        } else {
            place(&mut m, i, j, v, storage);
        }
        count += 1;
    }
    if count != nnz {
        return Err((last_line, format!("expected {nnz} entries, found {count}")));
    }
    Ok(m)
}

fn place(m: &mut DMatrix<f64>, i: usize, j: usize, v: f64, storage: Storage) {
    m[(i, j)] = v;
    match storage {
        Storage::General => {}
        Storage::Symmetric => m[(j, i)] = v,
        Storage::SkewSymmetric => m[(j, i)] = -v,
    }
}

pub fn format_array(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(32 * m.len() + 64);
    out.push_str("%%MatrixMarket matrix array real general\n");
    out.push_str(&format!("{} {}\n", m.nrows(), m.ncols()));
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push_str(&fmt17(m[(i, j)]));
            out.push('\n');
        }
    }
    out
}

/// Writes `m` as a Matrix Market array file via a temporary file and rename.
pub fn write_array(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    write_atomic(path.as_ref(), format_array(m).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
