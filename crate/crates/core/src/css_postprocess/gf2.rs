//! Dense GF(2) row operations on words of at most 64 bits (bit `i` of a
//! `u64` is coordinate `i`).

/// Reduced row echelon form; returns the nonzero rows and their pivot
/// columns.
pub(crate) fn rref(rows: &[u64], n: usize) -> (Vec<u64>, Vec<usize>) {
    let mut m: Vec<u64> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let bit = 1u64 << c;
        let Some(p) = (r..m.len()).find(|&i| m[i] & bit != 0) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i] & bit != 0 {
                m[i] ^= m[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.truncate(r);
    (m, pivots)
}

pub(crate) fn rank(rows: &[u64], n: usize) -> usize {
    rref(rows, n).1.len()
}

/// Basis of `{x : row·x = 0 for every row}`.
pub(crate) fn null_space(rows: &[u64], n: usize) -> Vec<u64> {
    let (m, pivots) = rref(rows, n);
    (0..n)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut x = 1u64 << free;
            for (row, &p) in m.iter().zip(&pivots) {
                if row >> free & 1 == 1 {
                    x |= 1u64 << p;
                }
            }
            x
        })
        .collect()
}

pub(crate) fn dot(a: u64, b: u64) -> u8 {
    ((a & b).count_ones() & 1) as u8
}

/// Incremental basis that remembers which input vectors each reduced row
/// is built from, so membership tests also yield coordinates.
#[derive(Debug, Clone, Default)]
pub(crate) struct TaggedBasis {
    rows: Vec<(u64, u64, u32)>,
}

impl TaggedBasis {
    /// Reduces `v`; returns the residual and the coordinate mask.
    pub(crate) fn reduce(&self, mut v: u64) -> (u64, u64) {
        let mut tag = 0;
        for &(row, row_tag, pivot) in &self.rows {
            if v >> pivot & 1 == 1 {
                v ^= row;
                tag ^= row_tag;
            }
        }
        (v, tag)
    }

    /// Adds `v` as basis vector number `self.len()`; false if dependent.
    pub(crate) fn push(&mut self, v: u64) -> bool {
        let index = self.rows.len();
        let (residual, tag) = self.reduce(v);
        if residual == 0 {
            return false;
        }
        self.rows
            .push((residual, tag ^ (1u64 << index), residual.trailing_zeros()));
        true
    }

    #[cfg(test)]
    pub(crate) fn contains(&self, v: u64) -> bool {
        self.reduce(v).0 == 0
    }
}
