use super::{DenseTensor, Shape};
use crate::error::{CpError, Result};

/// Coordinate-list tensor. Entries are kept sorted lexicographically by
/// coordinates (first coordinate most significant), duplicate-free and
/// nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTensor {
    shape: Shape,
    /// 0-based coordinates, `order` consecutive values per entry.
    coords: Vec<usize>,
    values: Vec<f64>,
}

impl SparseTensor {
    /// Builds a canonical sparse tensor from 0-based `(coords, value)` pairs.
    /// Duplicate coordinates are summed and zeros dropped afterwards.
    pub fn from_entries<I>(shape: Shape, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let order = shape.order();
        let mut items: Vec<(Vec<usize>, f64)> = Vec::new();
        for (k, (idx, v)) in entries.into_iter().enumerate() {
            if idx.len() != order || idx.iter().zip(shape.dims()).any(|(&i, &d)| i >= d) {
                return Err(CpError::IndexOutOfBounds { index: idx, dims: shape.dims().to_vec() });
            }
            if !v.is_finite() {
                return Err(CpError::NonFinite(k));
            }
            items.push((idx, v));
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));

        let mut coords = Vec::with_capacity(items.len() * order);
        let mut values: Vec<f64> = Vec::with_capacity(items.len());
        let mut last: Option<Vec<usize>> = None;
        for (idx, v) in items {
            if last.as_ref() == Some(&idx) {
                *values.last_mut().unwrap() += v;
            } else {
                coords.extend_from_slice(&idx);
                values.push(v);
                last = Some(idx);
            }
        }

        let mut out = Self { shape, coords: Vec::new(), values: Vec::new() };
        for (k, &v) in values.iter().enumerate() {
            if v != 0.0 {
                out.coords.extend_from_slice(&coords[k * order..(k + 1) * order]);
                out.values.push(v);
            }
        }
        Ok(out)
    }

    pub fn from_dense(t: &DenseTensor) -> Self {
        let shape = t.shape().clone();
        let mut idx = vec![0; shape.order()];
        let mut coords = Vec::new();
        let mut values = Vec::new();
        // Linear order is first-mode-fastest; collect then sort lexicographically.
        let mut items = Vec::new();
        for (off, &v) in t.values().iter().enumerate() {
            if v != 0.0 {
                shape.unravel(off, &mut idx);
                items.push((idx.clone(), v));
            }
        }
        items.sort_by(|a, b| a.0.cmp(&b.0));
        for (i, v) in items {
            coords.extend(i);
            values.push(v);
        }
        Self { shape, coords, values }
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut values = vec![0.0; self.shape.len()];
        for (idx, v) in self.iter() {
            values[self.shape.offset_unchecked(idx)] = v;
        }
        DenseTensor::from_parts_unchecked(self.shape.clone(), values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterates `(0-based coords, value)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        let order = self.shape.order();
        self.coords.chunks_exact(order).zip(self.values.iter().copied())
    }

    /// Value at a 0-based index (zero if not stored).
    pub fn get(&self, index: &[usize]) -> Result<f64> {
        self.shape.offset(index)?;
        let order = self.shape.order();
        let (mut lo, mut hi) = (0, self.nnz());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.coords[mid * order..(mid + 1) * order].cmp(index) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Ok(self.values[mid]),
            }
        }
        Ok(0.0)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}
