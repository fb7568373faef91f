//! Plain-text tensor and Kruskal tensor formats.
//!
//! Tensors: a header `tns N I1 .. IN nnz`, then `nnz` lines `i1 .. iN value`
//! with 1-based indices. Dense tensors list every entry. Kruskal tensors: a
//! header `ktensor N R I1 .. IN`, then every factor entry on its own line,
//! factors in mode order, each column-major. Blank lines and lines starting
//! with `#` are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{CpError, Result};
use crate::kruskal::KruskalTensor;
use crate::tensor::{DenseTensor, Matrix, Shape, SparseTensor, Tensor};

/// Content lines with their 1-based line numbers.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self { inner: r.lines(), line: 0 }
    }

    fn next_content(&mut self) -> Result<Option<(usize, String)>> {
        for l in self.inner.by_ref() {
            self.line += 1;
            let l = l?;
            let t = l.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok(Some((self.line, t.to_string())));
            }
        }
        Ok(None)
    }

    fn expect(&mut self, what: &str) -> Result<(usize, String)> {
        self.next_content()?.ok_or_else(|| CpError::Parse {
            line: self.line + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse<T: FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| CpError::Parse { line, msg: format!("invalid {what} '{tok}'") })
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = parse(tok, line, "value")?;
    if !v.is_finite() {
        return Err(CpError::Parse { line, msg: format!("non-finite value '{tok}'") });
    }
    Ok(v)
}

fn parse_dims(toks: &[&str], line: usize) -> Result<Shape> {
    let dims = toks.iter().map(|t| parse::<usize>(t, line, "dimension")).collect::<Result<Vec<_>>>()?;
    Shape::new(dims).map_err(|e| CpError::Parse { line, msg: e.to_string() })
}

/// Reads a tensor. A file listing every position exactly once is returned
/// as dense storage, anything else as sparse.
pub fn read_tensor<R: BufRead>(r: R) -> Result<Tensor> {
    let mut lines = Lines::new(r);
    let (hline, header) = lines.expect("header")?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&"tns") || toks.len() < 3 {
        return Err(CpError::Parse { line: hline, msg: "expected header 'tns N I1 .. IN nnz'".into() });
    }
    let order: usize = parse(toks[1], hline, "order")?;
    if toks.len() != order + 3 {
        return Err(CpError::Parse {
            line: hline,
            msg: format!("header declares order {order} but lists {} fields", toks.len() - 2),
        });
    }
    let shape = parse_dims(&toks[2..2 + order], hline)?;
    let nnz: usize = parse(toks[2 + order], hline, "entry count")?;

    let mut entries = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let (line, text) = lines.expect("entry")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != order + 1 {
            return Err(CpError::Parse { line, msg: format!("expected {} fields, found {}", order + 1, toks.len()) });
        }
        let mut idx = Vec::with_capacity(order);
        for (tok, &dim) in toks[..order].iter().zip(shape.dims()) {
            let i: usize = parse(tok, line, "index")?;
            if i == 0 || i > dim {
                return Err(CpError::Parse { line, msg: format!("index {i} outside 1..={dim}") });
            }
            idx.push(i - 1);
        }
        entries.push((line, idx, parse_value(toks[order], line)?));
    }
    if let Some((line, text)) = lines.next_content()? {
        return Err(CpError::Parse { line, msg: format!("unexpected trailing content '{text}'") });
    }

    if nnz == shape.len() {
        let mut values = vec![0.0; nnz];
        let mut seen = vec![false; nnz];
        let complete = entries.iter().all(|(_, idx, v)| {
            let k = shape.offset_unchecked(idx);
            values[k] = *v;
            !std::mem::replace(&mut seen[k], true)
        });
        if complete {
            return Ok(Tensor::Dense(DenseTensor::new(shape, values)?));
        }
    }
    Ok(Tensor::Sparse(SparseTensor::from_entries(shape, entries.into_iter().map(|(_, i, v)| (i, v)))?))
}

/// Writes a tensor; floats use the shortest representation that round-trips.
pub fn write_tensor<W: Write>(mut w: W, t: &Tensor) -> Result<()> {
    let shape = t.shape();
    let dims: Vec<String> = shape.dims().iter().map(|d| d.to_string()).collect();
    let write_entry = |w: &mut W, idx: &[usize], v: f64| -> std::io::Result<()> {
        for i in idx {
            write!(w, "{} ", i + 1)?;
        }
        writeln!(w, "{v:?}")
    };
    match t {
        Tensor::Dense(d) => {
            writeln!(w, "tns {} {} {}", shape.order(), dims.join(" "), shape.len())?;
            let mut idx = vec![0; shape.order()];
            for (k, &v) in d.values().iter().enumerate() {
                shape.unravel(k, &mut idx);
                write_entry(&mut w, &idx, v)?;
            }
        }
        Tensor::Sparse(s) => {
            writeln!(w, "tns {} {} {}", shape.order(), dims.join(" "), s.nnz())?;
            for (idx, v) in s.iter() {
                write_entry(&mut w, idx, v)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_ktensor<R: BufRead>(r: R) -> Result<KruskalTensor> {
    let mut lines = Lines::new(r);
    let (hline, header) = lines.expect("header")?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.first() != Some(&"ktensor") || toks.len() < 4 {
        return Err(CpError::Parse { line: hline, msg: "expected header 'ktensor N R I1 .. IN'".into() });
    }
    let order: usize = parse(toks[1], hline, "order")?;
    let rank: usize = parse(toks[2], hline, "rank")?;
    if toks.len() != order + 3 {
        return Err(CpError::Parse {
            line: hline,
            msg: format!("header declares order {order} but lists {} dimensions", toks.len() - 3),
        });
    }
    if rank == 0 {
        return Err(CpError::Parse { line: hline, msg: "rank must be at least 1".into() });
    }
    let shape = parse_dims(&toks[3..], hline)?;

    let mut factors = Vec::with_capacity(order);
    for &d in shape.dims() {
        let mut values = Vec::with_capacity(d * rank);
        for _ in 0..d * rank {
            let (line, text) = lines.expect("factor entry")?;
            values.push(parse_value(&text, line)?);
        }
        factors.push(Matrix::new(d, rank, values)?);
    }
    if let Some((line, text)) = lines.next_content()? {
        return Err(CpError::Parse { line, msg: format!("unexpected trailing content '{text}'") });
    }
    KruskalTensor::new(factors)
}

pub fn write_ktensor<W: Write>(mut w: W, k: &KruskalTensor) -> Result<()> {
    let dims: Vec<String> = k.shape().dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "ktensor {} {} {}", k.order(), k.rank(), dims.join(" "))?;
    for f in k.factors() {
        for v in f.as_slice() {
            writeln!(w, "{v:?}")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    read_tensor(BufReader::new(File::open(path)?))
}

pub fn save_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), t)
}

pub fn load_ktensor(path: impl AsRef<Path>) -> Result<KruskalTensor> {
    read_ktensor(BufReader::new(File::open(path)?))
}

pub fn save_ktensor(path: impl AsRef<Path>, k: &KruskalTensor) -> Result<()> {
    write_ktensor(BufWriter::new(File::create(path)?), k)
}
