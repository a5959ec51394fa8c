use crate::Complex64;
use rayon::prelude::*;

/// Rows per parallel block in matrix-vector products.
const ROW_BLOCK: usize = 1024;

/// Square complex matrix in compressed sparse row storage. Column indices are
/// sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Zero matrix with the given pattern (`rows[i]` sorted, unique).
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        let values = vec![Complex64::new(0.0, 0.0); col_idx.len()];
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from (row, col, value) triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut rows = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        let mut m = CsrMatrix::from_pattern(rows);
        for &(i, j, v) in triplets {
            *m.entry_mut(i, j).expect("pattern entry") += v;
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CsrMatrix::from_pattern((0..n).map(|i| vec![i]).collect());
        m.values.iter_mut().for_each(|v| *v = Complex64::new(1.0, 0.0));
        m
    }

    pub fn from_dense(a: &[Vec<Complex64>]) -> Self {
        let n = a.len();
        let mut triplets = Vec::new();
        for (i, row) in a.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != Complex64::new(0.0, 0.0) {
                    triplets.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(n, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> (&[usize], &mut [Complex64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &mut self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.position(i, j).map_or(Complex64::new(0.0, 0.0), |k| self.values[k])
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut Complex64> {
        self.position(i, j).map(move |k| &mut self.values[k])
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, parallel over row blocks.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        y.par_chunks_mut(ROW_BLOCK).enumerate().for_each(|(b, chunk)| {
            for (k, out) in chunk.iter_mut().enumerate() {
                let i = b * ROW_BLOCK + k;
                let (cols, vals) = self.row(i);
                let mut s = Complex64::new(0.0, 0.0);
                for (&j, &v) in cols.iter().zip(vals) {
                    s += v * x[j];
                }
                *out = s;
            }
        });
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `A - A^T`.
    pub fn asymmetry(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                s += (v - self.get(j, i)).norm_sqr();
            }
        }
        s.sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex64>> {
        let mut a = vec![vec![Complex64::new(0.0, 0.0); self.n]; self.n];
        for (i, row) in a.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                row[j] = v;
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, &[(0, 0, c(1.0, 0.0)), (0, 0, c(0.5, 1.0)), (1, 0, c(2.0, 0.0))]);
        assert_eq!(m.get(0, 0), c(1.5, 1.0));
        assert_eq!(m.get(1, 0), c(2.0, 0.0));
        assert_eq!(m.get(0, 1), c(0.0, 0.0));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matvec_matches_dense() {
        let a = vec![vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, 1.0), c(1.0, 0.0)]];
        let m = CsrMatrix::from_dense(&a);
        let y = m.matvec(&[c(1.0, 0.0), c(0.0, -1.0)]);
        assert_eq!(y, vec![c(3.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.to_dense(), a);
    }
}
