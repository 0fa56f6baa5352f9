//! Word-packed bit rows.

/// Number of `u64` words needed for `n` bits.
#[inline]
pub fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

#[inline]
pub fn get(row: &[u64], i: usize) -> bool {
    row[i >> 6] >> (i & 63) & 1 == 1
}

#[inline]
pub fn set(row: &mut [u64], i: usize) {
    row[i >> 6] |= 1u64 << (i & 63);
}

#[inline]
pub fn clear(row: &mut [u64], i: usize) {
    row[i >> 6] &= !(1u64 << (i & 63));
}

#[inline]
pub fn count(row: &[u64]) -> usize {
    row.iter().map(|w| w.count_ones() as usize).sum()
}

/// Indices of set bits, ascending.
pub fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(wi, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            }
        })
    })
}

/// A dense 0/1 matrix stored as word-aligned rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r * self.stride..(r + 1) * self.stride]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        get(self.row(r), c)
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize) {
        let s = self.stride;
        set(&mut self.data[r * s..(r + 1) * s], c);
    }

    pub fn clear(&mut self, r: usize, c: usize) {
        let s = self.stride;
        clear(&mut self.data[r * s..(r + 1) * s], c);
    }

    pub fn count_ones(&self) -> usize {
        count(&self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_ones() {
        let mut m = BitMatrix::new(3, 130);
        m.set(1, 0);
        m.set(1, 64);
        m.set(1, 129);
        assert!(m.get(1, 64));
        assert!(!m.get(0, 64));
        assert_eq!(ones(m.row(1)).collect::<Vec<_>>(), vec![0, 64, 129]);
        m.clear(1, 64);
        assert_eq!(m.count_ones(), 2);
    }
}
