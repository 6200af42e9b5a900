//! Matrix Market reading and writing (`coordinate real` matrices and `array real` vectors).

use std::fmt::Write as _;
use std::path::Path;

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Parse a `coordinate real general|symmetric` matrix.
pub fn parse_matrix(text: &str) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix coordinate ...' header"));
    }
    if h[3] != "real" && h[3] != "integer" {
        return Err(parse_err(1, format!("unsupported field {}", h[3])));
    }
    let symmetric = match h[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(1, format!("unsupported symmetry {other}"))),
    };
    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "expected 'rows cols nnz'"));
                }
                let p = |s: &str| s.parse::<usize>().map_err(|e| parse_err(lineno, e.to_string()));
                let dims = (p(fields[0])?, p(fields[1])?, p(fields[2])?);
                triplets.reserve(if symmetric { 2 * dims.2 } else { dims.2 });
                size = Some(dims);
            }
            Some((nr, nc, _)) => {
                if fields.len() != 3 {
                    return Err(parse_err(lineno, "expected 'row col value'"));
                }
                let i: usize = fields[0].parse().map_err(|_| parse_err(lineno, "bad row index"))?;
                let j: usize = fields[1].parse().map_err(|_| parse_err(lineno, "bad column index"))?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(parse_err(lineno, format!("index ({i}, {j}) out of range")));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (nr, nc, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    let stored = if symmetric { triplets.iter().filter(|t| t.0 >= t.1).count() } else { triplets.len() };
    if stored != nnz {
        return Err(parse_err(0, format!("expected {nnz} entries, found {stored}")));
    }
    CsrMatrix::from_triplets(nr, nc, &triplets)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

pub fn format_matrix(a: &CsrMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    s
}

pub fn write_matrix(path: impl AsRef<Path>, a: &CsrMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(a))?;
    Ok(())
}

/// Read a dense vector stored as `array real` with one column.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h = header.to_ascii_lowercase();
    if !h.starts_with("%%matrixmarket matrix array") {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix array real general' header"));
    }
    let mut n: Option<usize> = None;
    let mut out = Vec::new();
    for (idx, line) in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        if n.is_none() {
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 2 || f[1] != "1" {
                return Err(parse_err(idx + 1, "expected 'n 1'"));
            }
            n = Some(f[0].parse().map_err(|_| parse_err(idx + 1, "bad length"))?);
            continue;
        }
        out.push(t.parse::<f64>().map_err(|_| parse_err(idx + 1, "bad value"))?);
    }
    match n {
        Some(n) if n == out.len() => Ok(out),
        Some(n) => Err(parse_err(0, format!("expected {n} values, found {}", out.len()))),
        None => Err(parse_err(1, "missing size line")),
    }
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&std::fs::read_to_string(path)?)
}

pub fn format_vector(v: &[f64]) -> String {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} 1", v.len());
    for x in v {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::csr::laplacian_2d;

    #[test]
    fn matrix_round_trip() {
        let a = laplacian_2d(4);
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
    }

    #[test]
    fn symmetric_storage_is_expanded() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 3\n1 1 2\n2 1 -1\n2 2 2\n";
        let a = parse_matrix(text).unwrap();
        assert_eq!(a.get(0, 1), -1.0);
        assert_eq!(a.get(1, 0), -1.0);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(parse_matrix(text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn vector_round_trip() {
        let v = vec![1.5, -2.0, 1e-20];
        assert_eq!(parse_vector(&format_vector(&v)).unwrap(), v);
    }
}
