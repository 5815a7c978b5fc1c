//! Symmetric positive-definite banded storage with an in-place Cholesky factorisation.

use crate::error::{Error, Result};

/// Lower band of an SPD matrix: `data[i * (bw + 1) + (bw - (i - j))]` holds `A[i][j]`
/// for `i - bw <= j <= i`.
#[derive(Debug, Clone)]
pub(crate) struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    /// Adds `v` to `A[i][j]` (and implicitly `A[j][i]`).
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Factorises in place into L with A = L L^T.
    pub fn factor(mut self) -> Result<CholeskyBand> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Domain(format!(
                            "matrix not positive definite at row {i} (pivot {s:e})"
                        )));
                    }
                    let d = self.idx(i, i);
                    self.data[d] = s.sqrt();
                } else {
                    let d = self.data[self.idx(j, j)];
                    let k = self.idx(i, j);
                    self.data[k] = s / d;
                }
            }
        }
        Ok(CholeskyBand { inner: self })
    }
}

pub(crate) struct CholeskyBand {
    inner: BandedSpd,
}

impl CholeskyBand {
    pub fn solve(&self, b: &mut [f64]) {
        let m = &self.inner;
        let (n, bw) = (m.n, m.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= m.data[m.idx(i, k)] * b[k];
            }
            b[i] = s / m.data[m.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= m.data[m.idx(k, i)] * b[k];
            }
            b[i] = s / m.data[m.idx(i, i)];
        }
    }
}
