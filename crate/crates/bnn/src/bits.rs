//! Bit-packed binary vectors and matrices. Convention: bit 1 encodes +1,
//! bit 0 encodes -1. Padding bits beyond the logical length are always zero;
//! every operation preserves that invariant so popcounts can run on whole
//! words with a single mask on the tail.

use crate::error::{BnnError, Result};

pub const WORD_BITS: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryVector {
    words: Vec<u64>,
    len: usize,
}

pub(crate) fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask of valid bits in the last word of a `len`-bit vector.
pub(crate) fn tail_mask(len: usize) -> u64 {
    let rem = len % WORD_BITS;
    if rem == 0 {
        u64::MAX
    } else {
        (1u64 << rem) - 1
    }
}

impl BinaryVector {
    pub fn zeros(len: usize) -> Self {
        BinaryVector {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        v
    }

    /// From +1/-1 values; zero counts as +1 (the global tie rule).
    pub fn from_signs(values: &[f32]) -> Self {
        let mut v = Self::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            if x >= 0.0 {
                v.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        if bit {
            self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
        } else {
            self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    /// Signed value at index i under the +1/-1 convention.
    pub fn sign(&self, i: usize) -> i32 {
        if self.get(i) {
            1
        } else {
            -1
        }
    }

    /// Format validation helper: padding bits beyond the logical length
    /// must be zero.
    pub fn padding_is_zero(&self) -> bool {
        match self.words.last() {
            Some(&w) => w & !tail_mask(self.len) == 0,
            None => true,
        }
    }
}

/// Count of positions where the two vectors agree (XNOR then popcount).
/// The identity 2*pc - n equals the +1/-1 dot product.
pub fn xnor_popcount(a: &BinaryVector, b: &BinaryVector) -> Result<u32> {
    if a.len != b.len {
        return Err(BnnError::LengthMismatch {
            expected: a.len,
            got: b.len,
        });
    }
    Ok(xnor_popcount_words(&a.words, &b.words, a.len))
}

pub(crate) fn xnor_popcount_words(a: &[u64], b: &[u64], len: usize) -> u32 {
    debug_assert_eq!(a.len(), b.len());
    let mut agree = 0u32;
    let last = a.len().saturating_sub(1);
    for (i, (&wa, &wb)) in a.iter().zip(b.iter()).enumerate() {
        let x = !(wa ^ wb);
        let mask = if i == last { tail_mask(len) } else { u64::MAX };
        agree += (x & mask).count_ones();
    }
    agree
}

/// Row-major packed bit matrix; each row padded to a word boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMatrix {
    words: Vec<u64>,
    rows: usize,
    cols: usize,
    words_per_row: usize,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let words_per_row = words_for(cols);
        BinaryMatrix {
            words: vec![0; rows * words_per_row],
            rows,
            cols,
            words_per_row,
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(BnnError::LengthMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                if b {
                    m.set(r, c, true);
                }
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn words_per_row(&self) -> usize {
        self.words_per_row
    }

    pub fn row_words(&self, row: usize) -> &[u64] {
        assert!(row < self.rows);
        &self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub(crate) fn row_words_mut(&mut self, row: usize) -> &mut [u64] {
        assert!(row < self.rows);
        &mut self.words[row * self.words_per_row..(row + 1) * self.words_per_row]
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols);
        self.words[row * self.words_per_row + col / WORD_BITS] >> (col % WORD_BITS) & 1 == 1
    }

    pub fn set(&mut self, row: usize, col: usize, bit: bool) {
        assert!(row < self.rows && col < self.cols);
        let w = &mut self.words[row * self.words_per_row + col / WORD_BITS];
        if bit {
            *w |= 1 << (col % WORD_BITS);
        } else {
            *w &= !(1 << (col % WORD_BITS));
        }
    }

    /// Flip every bit in one row (used when batch-norm folding flips the
    /// comparison direction of a neuron).
    pub fn complement_row(&mut self, row: usize) {
        let cols = self.cols;
        let words_per_row = self.words_per_row;
        let slice = self.row_words_mut(row);
        for (i, w) in slice.iter_mut().enumerate() {
            let mask = if i == words_per_row - 1 {
                tail_mask(cols)
            } else {
                u64::MAX
            };
            *w ^= mask;
        }
    }

    /// Copy one row out as a vector.
    pub fn row(&self, row: usize) -> BinaryVector {
        BinaryVector {
            words: self.row_words(row).to_vec(),
            len: self.cols,
        }
    }

    pub fn padding_is_zero(&self) -> bool {
        let mask = tail_mask(self.cols);
        (0..self.rows).all(|r| self.row_words(r).last().is_none_or(|&w| w & !mask == 0))
    }
}
