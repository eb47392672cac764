//! Matrix Market reading and writing.
//!
//! Supports the `array` and `coordinate` formats with the `real` field and
//! `general` or `symmetric` storage. Symmetric storage is expanded on read;
//! duplicate coordinate entries are summed. Writing always uses dense
//! `array real general` with enough digits to round-trip f64 exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Largest accepted dimension; anything bigger is rejected at parse time.
pub const MAX_DIM: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

fn parse_dim(path: &Path, line_no: usize, tok: &str, what: &str) -> Result<usize> {
    let v: usize = tok
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("invalid {what} '{tok}'")))?;
    if v == 0 {
        return Err(parse_err(path, line_no, format!("{what} must be positive")));
    }
    if v > MAX_DIM {
        return Err(parse_err(
            path,
            line_no,
            format!("{what} {v} exceeds the maximum {MAX_DIM}"),
        ));
    }
    Ok(v)
}

fn parse_value(path: &Path, line_no: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line_no, format!("invalid number '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line_no, format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

/// Reads a dense matrix from a Matrix Market file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    read_matrix_market_str(&text, path)
}

fn read_matrix_market_str(text: &str, path: &Path) -> Result<Matrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (header_no, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(
            path,
            header_no,
            "header must be '%%MatrixMarket matrix <format> <field> <symmetry>'",
        ));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(parse_err(
            path,
            header_no,
            format!("unsupported object '{}', only 'matrix'", fields[1]),
        ));
    }
    let layout = match fields[2].to_ascii_lowercase().as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => {
            return Err(parse_err(
                path,
                header_no,
                format!("unsupported format '{other}', expected array or coordinate"),
            ))
        }
    };
    if !fields[3].eq_ignore_ascii_case("real") {
        return Err(parse_err(
            path,
            header_no,
            format!("unsupported field '{}', only 'real'", fields[3]),
        ));
    }
    let symmetry = match fields[4].to_ascii_lowercase().as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => {
            return Err(parse_err(
                path,
                header_no,
                format!("unsupported symmetry '{other}', expected general or symmetric"),
            ))
        }
    };

    let mut data = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (size_no, size_line) = data
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing size line"))?;
    let size_toks: Vec<&str> = size_line.split_whitespace().collect();
    let expected_size_toks = match layout {
        Layout::Array => 2,
        Layout::Coordinate => 3,
    };
    if size_toks.len() != expected_size_toks {
        return Err(parse_err(
            path,
            size_no,
            format!(
                "size line needs {expected_size_toks} fields, got {}",
                size_toks.len()
            ),
        ));
    }
    let rows = parse_dim(path, size_no, size_toks[0], "row count")?;
    let cols = parse_dim(path, size_no, size_toks[1], "column count")?;
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(parse_err(
            path,
            size_no,
            format!("symmetric matrix must be square, got {rows}x{cols}"),
        ));
    }

    let mut m = Matrix::zeros(rows, cols);
    match layout {
        Layout::Array => {
            // Column-major dense entries; symmetric files store only the
            // lower triangle of each column.
            let mut slots: Vec<(usize, usize)> = Vec::new();
            for j in 0..cols {
                let start = if symmetry == Symmetry::Symmetric { j } else { 0 };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut filled = 0usize;
            let mut last_no = size_no;
            for (line_no, line) in data {
                last_no = line_no;
                for tok in line.split_whitespace() {
                    if filled == slots.len() {
                        return Err(parse_err(path, line_no, "more entries than the size line announced"));
                    }
                    let v = parse_value(path, line_no, tok)?;
                    let (i, j) = slots[filled];
                    m.set(i, j, v);
                    if symmetry == Symmetry::Symmetric && i != j {
                        m.set(j, i, v);
                    }
                    filled += 1;
                }
            }
            if filled < slots.len() {
                return Err(parse_err(
                    path,
                    last_no,
                    format!("expected {} entries, got {filled}", slots.len()),
                ));
            }
        }
        Layout::Coordinate => {
            let nnz: usize = size_toks[2].parse().map_err(|_| {
                parse_err(path, size_no, format!("invalid entry count '{}'", size_toks[2]))
            })?;
            let mut seen = 0usize;
            let mut last_no = size_no;
            for (line_no, line) in data {
                last_no = line_no;
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("coordinate entry needs 3 fields, got {}", toks.len()),
                    ));
                }
                if seen == nnz {
                    return Err(parse_err(path, line_no, "more entries than the size line announced"));
                }
                let i: usize = toks[0]
                    .parse()
                    .map_err(|_| parse_err(path, line_no, format!("invalid row index '{}'", toks[0])))?;
                let j: usize = toks[1]
                    .parse()
                    .map_err(|_| parse_err(path, line_no, format!("invalid column index '{}'", toks[1])))?;
                if i < 1 || i > rows || j < 1 || j > cols {
                    return Err(parse_err(
                        path,
                        line_no,
                        format!("index ({i},{j}) outside {rows}x{cols}"),
                    ));
                }
                let v = parse_value(path, line_no, toks[2])?;
                // Duplicates accumulate.
                let (i, j) = (i - 1, j - 1);
                m.set(i, j, m.get(i, j) + v);
                if symmetry == Symmetry::Symmetric && i != j {
                    m.set(j, i, m.get(j, i) + v);
                }
                seen += 1;
            }
            if seen < nnz {
                return Err(parse_err(
                    path,
                    last_no,
                    format!("expected {nnz} entries, got {seen}"),
                ));
            }
        }
    }
    Ok(m)
}

/// Reads a vector stored as an n-by-1 Matrix Market matrix.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vector> {
    let path = path.as_ref();
    let m = read_matrix_market(path)?;
    if m.cols() != 1 {
        return Err(parse_err(
            path,
            1,
            format!("vector file must have 1 column, got {}", m.cols()),
        ));
    }
    Ok(m.column(0))
}

fn matrix_to_mm_string(m: &Matrix) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            let _ = writeln!(out, "{:.16e}", m.get(i, j));
        }
    }
    out
}

/// Writes a dense matrix in array format with full f64 precision.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, matrix_to_mm_string(m))?;
    Ok(())
}

/// Writes a vector as an n-by-1 array-format matrix.
pub fn write_vector(path: impl AsRef<Path>, v: &Vector) -> Result<()> {
    let m = Matrix::from_columns(std::slice::from_ref(v))?;
    write_matrix_market(path, &m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_str(text: &str) -> Result<Matrix> {
        read_matrix_market_str(text, Path::new("test.mtx"))
    }

    #[test]
    fn reads_array_identity() {
        let m = from_str("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n").unwrap();
        assert_eq!(m, Matrix::identity(2));
    }

    #[test]
    fn array_entries_are_column_major() {
        let m = from_str("%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n").unwrap();
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 1), 4.0);
    }

    #[test]
    fn coordinate_duplicates_sum() {
        let m = from_str(
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.5\n1 1 0.5\n",
        )
        .unwrap();
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn symmetric_storage_expands() {
        let m = from_str(
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2.0\n2 1 3.0\n",
        )
        .unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);

        let a = from_str("%%MatrixMarket matrix array real symmetric\n2 2\n1\n5\n2\n").unwrap();
        assert_eq!(a.get(0, 1), 5.0);
        assert_eq!(a.get(1, 0), 5.0);
        assert_eq!(a.get(1, 1), 2.0);
    }

    #[test]
    fn rejects_bad_inputs_with_line_numbers() {
        let bad_header = from_str("%%NotMatrixMarket x y z w\n1 1\n1\n").unwrap_err();
        assert!(matches!(bad_header, Error::Parse { line: 1, .. }));

        let complex = from_str("%%MatrixMarket matrix array complex general\n1 1\n1 0\n");
        assert!(matches!(complex.unwrap_err(), Error::Parse { line: 1, .. }));

        let too_big = from_str("%%MatrixMarket matrix array real general\n10001 1\n").unwrap_err();
        assert!(matches!(too_big, Error::Parse { line: 2, .. }));

        let bad_number =
            from_str("%%MatrixMarket matrix array real general\n1 1\nnope\n").unwrap_err();
        assert!(matches!(bad_number, Error::Parse { line: 3, .. }));

        let short = from_str("%%MatrixMarket matrix array real general\n2 1\n1\n").unwrap_err();
        assert!(matches!(short, Error::Parse { .. }));

        let oob = from_str("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n")
            .unwrap_err();
        assert!(matches!(oob, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let m = from_str(
            "%%MatrixMarket matrix array real general\n% a comment\n\n1 2\n0.25\n\n% mid\n-4\n",
        )
        .unwrap();
        assert_eq!(m.get(0, 0), 0.25);
        assert_eq!(m.get(0, 1), -4.0);
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mtx");
        let m = Matrix::new(
            2,
            3,
            vec![1.0 / 3.0, -2.5e-13, 6.02214076e23, f64::MIN_POSITIVE, -0.1, 7.0],
        )
        .unwrap();
        write_matrix_market(&path, &m).unwrap();
        let back = read_matrix_market(&path).unwrap();
        assert_eq!(m, back);

        let vpath = dir.path().join("v.mtx");
        let v = Vector::new(vec![0.1 + 0.2, -1.0]).unwrap();
        write_vector(&vpath, &v).unwrap();
        assert_eq!(read_vector(&vpath).unwrap(), v);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_matrix_market("/nonexistent/file.mtx").unwrap_err(),
            Error::Io(_)
        ));
    }
}
