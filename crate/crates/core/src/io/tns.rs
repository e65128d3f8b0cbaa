use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{FactorMatrix, Shape, SparseTensor};

/// Reads a FROSTT-style `.tns` file.
///
/// Each line holds `N` 1-based coordinates followed by a value. Lines
/// starting with `#` are comments, except that `# dims: I J K` fixes the
/// extents (otherwise the per-mode maximum coordinate is used). Duplicate
/// coordinates are summed.
pub fn parse_tns(path: impl AsRef<Path>) -> Result<SparseTensor> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_tns_str(&text).map_err(|(line, msg)| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    })
}

/// [`parse_tns`] on in-memory text. Errors carry a 1-based line number.
pub fn parse_tns_str(text: &str) -> std::result::Result<SparseTensor, (usize, String)> {
    let mut dims: Option<(usize, Vec<usize>)> = None;
    let mut order: Option<usize> = None;
    let mut coords: Vec<usize> = Vec::new();
    let mut values = Vec::new();
    let mut maxima: Vec<usize> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(d) = comment.trim().strip_prefix("dims:") {
                let parsed = d
                    .split_whitespace()
                    .map(|tok| match tok.parse::<usize>() {
                        Ok(v) if v > 0 => Ok(v),
                        _ => Err((lineno, format!("bad extent {tok:?} in dims header"))),
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                if parsed.is_empty() {
                    return Err((lineno, "empty dims header".into()));
                }
                dims = Some((lineno, parsed));
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 {
            return Err((lineno, format!("expected coordinates and a value, got {line:?}")));
        }
        let n = toks.len() - 1;
        match order {
            None => {
                order = Some(n);
                maxima = vec![0; n];
            }
            Some(o) if o != n => {
                return Err((lineno, format!("expected {o} coordinates, found {n}")));
            }
            _ => {}
        }
        for (m, tok) in toks[..n].iter().enumerate() {
            let c: i64 = tok
                .parse()
                .map_err(|_| (lineno, format!("non-numeric coordinate {tok:?}")))?;
            if c < 1 {
                return Err((lineno, format!("coordinate {c} is not 1-based")));
            }
            let c = (c - 1) as usize;
            maxima[m] = maxima[m].max(c + 1);
            coords.push(c);
        }
        let v: f64 = toks[n]
            .parse()
            .map_err(|_| (lineno, format!("non-numeric value {:?}", toks[n])))?;
        values.push(v);
    }

    let extents = match (dims, order) {
        (Some((hl, d)), Some(o)) => {
            if d.len() != o {
                return Err((hl, format!("dims header has {} extents, entries have {o}", d.len())));
            }
            if let Some(m) = (0..o).find(|&m| maxima[m] > d[m]) {
                return Err((hl, format!("mode {m} has coordinate {} beyond extent {}", maxima[m], d[m])));
            }
            d
        }
        (Some((_, d)), None) => d,
        (None, Some(_)) => maxima,
        (None, None) => return Err((0, "no entries and no dims header".into())),
    };
    let shape = Shape::new(extents).map_err(|e| (0, e.to_string()))?;
    let n = shape.order();
    let entries = coords.chunks_exact(n.max(1)).zip(values);
    SparseTensor::from_entries(shape, entries).map_err(|e| (0, e.to_string()))
}

/// Writes `t` with a `# dims:` header, 1-based coordinates and
/// round-trip exact values, in key order.
pub fn write_tns(t: &SparseTensor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, tns_string(t))?;
    Ok(())
}

pub fn tns_string(t: &SparseTensor) -> String {
    let mut out = String::with_capacity(t.nnz() * 24);
    let dims: Vec<String> = t.shape().dims().iter().map(|d| d.to_string()).collect();
    writeln!(out, "# dims: {}", dims.join(" ")).unwrap();
    for e in 0..t.nnz() {
        for n in 0..t.order() {
            write!(out, "{} ", t.coords(n)[e] + 1).unwrap();
        }
        writeln!(out, "{}", t.values()[e]).unwrap();
    }
    out
}

/// Writes factor matrices as text: a `# factors:` header, then per mode a
/// `# mode` line followed by one whitespace-separated row per line.
pub fn write_factors(factors: &[FactorMatrix], path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    let rank = factors.first().map_or(0, |f| f.rank());
    writeln!(out, "# factors: {} rank {rank}", factors.len()).unwrap();
    for (n, f) in factors.iter().enumerate() {
        writeln!(out, "# mode {n} rows {}", f.rows()).unwrap();
        for i in 0..f.rows() {
            let row: Vec<String> = f.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(" ")).unwrap();
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_factors(path: impl AsRef<Path>) -> Result<Vec<FactorMatrix>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut factors = Vec::new();
    let mut current: Option<(usize, usize, Vec<f64>)> = None;
    let mut rank = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["#", "factors:", _, "rank", r] => {
                rank = r.parse().map_err(|_| err(lineno, format!("bad rank {r:?}")))?;
            }
            ["#", "mode", _, "rows", r] => {
                if let Some((rows, _, data)) = current.take() {
                    factors.push(FactorMatrix::from_vec(rows, rank, data)?);
                }
                let rows = r.parse().map_err(|_| err(lineno, format!("bad row count {r:?}")))?;
                current = Some((rows, lineno, Vec::new()));
            }
            [first, ..] if first.starts_with('#') => {}
            _ => {
                let Some((_, _, data)) = current.as_mut() else {
                    return Err(err(lineno, "values before a mode header".into()));
                };
                if toks.len() != rank {
                    return Err(err(lineno, format!("expected {rank} values, found {}", toks.len())));
                }
                for tok in toks {
                    data.push(tok.parse().map_err(|_| err(lineno, format!("non-numeric value {tok:?}")))?);
                }
            }
        }
    }
    if let Some((rows, _, data)) = current {
        factors.push(FactorMatrix::from_vec(rows, rank, data)?);
    }
    Ok(factors)
}
