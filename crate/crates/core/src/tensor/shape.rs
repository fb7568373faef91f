use crate::error::{CpError, Result};

/// Mode sizes `(I₁, …, I_N)` of an N-way tensor.
///
/// Elements are linearized first-mode-fastest: the 0-based index
/// `(i₁, …, i_N)` lives at offset `i₁ + I₁·(i₂ + I₂·(i₃ + …))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
    len: usize,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(CpError::InvalidShape("tensor order must be at least 1".into()));
        }
        if let Some(n) = dims.iter().position(|&d| d == 0) {
            return Err(CpError::InvalidShape(format!("mode {n} has size 0")));
        }
        let len = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| CpError::InvalidShape(format!("element count of {dims:?} overflows")))?;
        Ok(Self { dims, len })
    }

    /// Order N.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    /// Total element count K.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Product of all mode sizes except `mode`.
    pub fn len_without(&self, mode: usize) -> usize {
        self.len / self.dims[mode]
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.order() {
            Ok(())
        } else {
            Err(CpError::ModeOutOfRange { mode, order: self.order() })
        }
    }

    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.order() || index.iter().zip(&self.dims).any(|(&i, &d)| i >= d) {
            return Err(CpError::IndexOutOfBounds { index: index.to_vec(), dims: self.dims.clone() });
        }
        Ok(self.offset_unchecked(index))
    }

    #[inline]
    pub(crate) fn offset_unchecked(&self, index: &[usize]) -> usize {
        index.iter().zip(&self.dims).rev().fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Inverse of [`Shape::offset`], writing into `index`.
    pub fn unravel(&self, mut offset: usize, index: &mut [usize]) {
        for (slot, &d) in index.iter_mut().zip(&self.dims) {
            *slot = offset % d;
            offset /= d;
        }
    }

    /// Column of element `index` in the mode-`mode` unfolding: the remaining
    /// modes in increasing order, lowest mode fastest.
    pub(crate) fn unfolding_column(&self, index: &[usize], mode: usize) -> usize {
        let mut col = 0;
        let mut stride = 1;
        for (k, (&i, &d)) in index.iter().zip(&self.dims).enumerate() {
            if k != mode {
                col += i * stride;
                stride *= d;
            }
        }
        col
    }
}
